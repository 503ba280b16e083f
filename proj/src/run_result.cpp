#include "gestsel/run_result.hpp"

#include <algorithm>

#include "gestsel/error.hpp"
#include "gestsel/io.hpp"
#include "gestsel/text.hpp"

namespace gestsel {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string_view to_string(RecordStatus s) {
    switch (s) {
        case RecordStatus::Ok: return "ok";
        case RecordStatus::Refusal: return "refusal";
        case RecordStatus::Failed: return "failed";
    }
    return "?";
}

ordered_json plan_to_json(const ExamplePlan& plan) {
    ordered_json j;
    switch (plan.mode) {
        case PlanMode::PerCategoryK:
            j["mode"] = "per_category_k";
            j["k"] = plan.k;
            break;
        case PlanMode::LeaveOneOut: j["mode"] = "loo"; break;
        case PlanMode::ZeroShot: j["mode"] = "zero_shot"; break;
    }
    j["ordering"] = plan.ordering == ExampleOrdering::CorpusOrder ? "corpus" : "seeded_shuffle";
    j["grouping"] = plan.grouping == ExampleGrouping::Interleaved ? "interleaved" : "by_category";
    j["seed"] = plan.seed;
    return j;
}

ExamplePlan plan_from_json(const json& j) {
    ExamplePlan p;
    const auto mode = j.value("mode", "per_category_k");
    if (mode == "per_category_k") {
        p.mode = PlanMode::PerCategoryK;
        p.k = j.value("k", 2);
    } else if (mode == "loo" || mode == "leave_one_out") {
        p.mode = PlanMode::LeaveOneOut;
        p.k = 0;
    } else if (mode == "zero_shot" || mode == "zeroshot") {
        p.mode = PlanMode::ZeroShot;
        p.k = 0;
    } else {
        throw Error(ErrorKind::Config, "unknown plan mode '" + mode + "'");
    }
    const auto ordering = j.value("ordering", "corpus");
    if (ordering == "corpus") {
        p.ordering = ExampleOrdering::CorpusOrder;
    } else if (ordering == "seeded_shuffle" || ordering == "shuffle") {
        p.ordering = ExampleOrdering::SeededShuffle;
    } else {
        throw Error(ErrorKind::Config, "unknown ordering '" + ordering + "'");
    }
    const auto grouping = j.value("grouping", "interleaved");
    if (grouping == "interleaved") {
        p.grouping = ExampleGrouping::Interleaved;
    } else if (grouping == "by_category") {
        p.grouping = ExampleGrouping::ByCategory;
    } else {
        throw Error(ErrorKind::Config, "unknown grouping '" + grouping + "'");
    }
    p.seed = j.value("seed", static_cast<std::uint64_t>(0));
    return p;
}

ordered_json parsed_to_json(const ParsedSuggestion& p) {
    ordered_json j;
    j["is_refusal"] = p.is_refusal;
    auto arr = ordered_json::array();
    for (const auto& c : p.candidates) {
        ordered_json cj;
        cj["text"] = c.text;
        cj["category"] = c.category_guess ? json(to_string(*c.category_guess)) : json(nullptr);
        cj["palm"] = c.palm_guess ? json(to_string(*c.palm_guess)) : json(nullptr);
        cj["semantic"] = c.semantic_guess ? json(*c.semantic_guess) : json(nullptr);
        arr.push_back(std::move(cj));
    }
    j["candidates"] = std::move(arr);
    return j;
}

ordered_json verdict_to_json(const MatchVerdict& v) {
    ordered_json j;
    j["level"] = to_string(v.level);
    j["matched"] = v.matched;
    j["match_kind"] = to_string(v.match_kind);
    j["matched_candidate_index"] = v.matched_candidate_index ? json(*v.matched_candidate_index) : json(nullptr);
    return j;
}

namespace {

MatchVerdict verdict_from_json(const json& j) {
    MatchVerdict v;
    v.level = parse_spec_level(j.value("level", "category")).value_or(SpecLevel::Category);
    v.matched = j.value("matched", false);
    const auto kind = j.value("match_kind", "none");
    for (auto k : {MatchKind::Exact, MatchKind::SemanticPrefix, MatchKind::CompoundAny, MatchKind::None}) {
        if (kind == to_string(k)) v.match_kind = k;
    }
    if (j.contains("matched_candidate_index") && !j["matched_candidate_index"].is_null()) {
        v.matched_candidate_index = j["matched_candidate_index"].get<size_t>();
    }
    return v;
}

ParsedSuggestion parsed_from_json(const json& j, std::string raw) {
    ParsedSuggestion p;
    p.raw = std::move(raw);
    p.is_refusal = j.value("is_refusal", true);
    for (const auto& cj : j.value("candidates", json::array())) {
        CandidateLabel c;
        c.text = cj.value("text", "");
        if (cj.contains("category") && cj["category"].is_string()) c.category_guess = parse_category(cj["category"].get<std::string>());
        if (cj.contains("palm") && cj["palm"].is_string()) c.palm_guess = parse_palm(cj["palm"].get<std::string>());
        if (cj.contains("semantic") && cj["semantic"].is_string()) c.semantic_guess = cj["semantic"].get<std::string>();
        p.candidates.push_back(std::move(c));
    }
    return p;
}

}  // namespace

ordered_json record_to_json(const SuggestionRecord& r) {
    ordered_json j;
    j["run_id"] = r.run_id;
    j["target_id"] = r.target_id;
    j["model_name"] = r.model_name;
    j["spec_level"] = to_string(r.spec_level);
    j["plan"] = plan_to_json(r.plan);
    j["prompt_digest"] = r.prompt_digest;
    j["example_ids"] = r.example_ids;
    j["prompt"] = r.prompt;
    j["status"] = to_string(r.status);
    if (r.status == RecordStatus::Failed) {
        ordered_json e;
        e["class"] = r.error_class;
        e["message"] = r.error_message;
        j["error"] = std::move(e);
    } else {
        j["error"] = nullptr;
    }
    j["raw_response"] = r.raw_response;
    j["parsed"] = parsed_to_json(r.parsed);
    j["verdict_first"] = verdict_to_json(r.verdict_first);
    j["verdict_any"] = verdict_to_json(r.verdict_any);
    return j;
}

SuggestionRecord record_from_json(const json& j) {
    SuggestionRecord r;
    try {
        r.run_id = j.at("run_id").get<std::string>();
        r.target_id = j.at("target_id").get<std::string>();
        r.model_name = j.value("model_name", "");
        r.spec_level = parse_spec_level(j.value("spec_level", "category")).value_or(SpecLevel::Category);
        r.plan = plan_from_json(j.value("plan", json::object()));
        r.prompt_digest = j.value("prompt_digest", "");
        r.example_ids = j.value("example_ids", std::vector<std::string>{});
        r.prompt = j.value("prompt", "");
        const auto status = j.value("status", "failed");
        r.status = status == "ok" ? RecordStatus::Ok : status == "refusal" ? RecordStatus::Refusal : RecordStatus::Failed;
        if (j.contains("error") && j["error"].is_object()) {
            r.error_class = j["error"].value("class", "");
            r.error_message = j["error"].value("message", "");
        }
        r.raw_response = j.value("raw_response", "");
        r.parsed = parsed_from_json(j.value("parsed", json::object()), r.raw_response);
        r.verdict_first = verdict_from_json(j.value("verdict_first", json::object()));
        r.verdict_any = verdict_from_json(j.value("verdict_any", json::object()));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ManifestCorrupt, std::string("malformed record: ") + e.what());
    }
    return r;
}

std::string serialize_record(const SuggestionRecord& r) { return record_to_json(r).dump(2) + "\n"; }

RunResult load_run(const std::filesystem::path& run_dir) {
    const auto manifest_path = run_dir / "manifest.json";
    json m;
    try {
        m = json::parse(io::read_file(manifest_path));
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::ManifestCorrupt, manifest_path.string() + ": " + e.what());
    }
    RunResult run;
    try {
        run.run_id = m.at("run_id").get<std::string>();
        run.model_name = m.value("model_name", "");
        run.spec_level = parse_spec_level(m.value("spec_level", "category")).value_or(SpecLevel::Category);
        run.plan = plan_from_json(m.value("plan", json::object()));
        for (const auto& t : m.at("targets")) {
            const auto id = t.get<std::string>();
            const auto path = run_dir / "records" / (text::sanitize_component(id) + ".json");
            std::error_code ec;
            if (!std::filesystem::exists(path, ec)) continue;
            try {
                run.records.push_back(record_from_json(json::parse(io::read_file(path))));
            } catch (const json::parse_error& e) {
                throw Error(ErrorKind::ManifestCorrupt, path.string() + ": " + e.what());
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ManifestCorrupt, manifest_path.string() + ": " + e.what());
    }
    return run;
}

}  // namespace gestsel
