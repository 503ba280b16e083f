// Acceptance suite: one PASS/FAIL/SKIP line per criterion, exit status 1 on any FAIL.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gestsel/dictionary_matcher.hpp"
#include "gestsel/error.hpp"
#include "gestsel/evaluator.hpp"
#include "gestsel/experiment_runner.hpp"
#include "gestsel/io.hpp"
#include "gestsel/normalizer.hpp"
#include "gestsel/prompt_builder.hpp"
#include "gestsel/service.hpp"
#include "gestsel/text.hpp"
#include "test_support.hpp"

using namespace gestsel;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

enum class Outcome { Pass, Fail, Skip };

struct Result {
    Outcome outcome = Outcome::Fail;
    std::string detail;
};

Result pass(std::string d) { return {Outcome::Pass, std::move(d)}; }
Result fail(std::string d) { return {Outcome::Fail, std::move(d)}; }
Result skip(std::string d) { return {Outcome::Skip, std::move(d)}; }

int failures = 0;

void criterion(const std::string& name, double budget_s, const std::function<Result()>& body) {
    const auto t0 = Clock::now();
    Result r;
    try {
        r = body();
    } catch (const std::exception& e) {
        r = fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (r.outcome == Outcome::Pass && budget_s > 0 && secs > budget_s) {
        r = fail(r.detail + "; took " + std::to_string(secs) + " s, budget " + std::to_string(budget_s) + " s");
    }
    const char* tag = r.outcome == Outcome::Pass ? "PASS" : r.outcome == Outcome::Skip ? "SKIP" : "FAIL";
    if (r.outcome == Outcome::Fail) ++failures;
    std::printf("%s  %-34s %s [%.3f s]\n", tag, name.c_str(), r.detail.c_str(), secs);
    std::fflush(stdout);
}

const Corpus& reference() {
    static const Corpus c = load_corpus(testsupport::reference_corpus());
    return c;
}

// Independent cosine: long double accumulation, no shared code with the library.
double brute_cosine(const std::vector<double>& a, const std::vector<double>& b) {
    long double dot = 0, na = 0, nb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<long double>(a[i]) * b[i];
        na += static_cast<long double>(a[i]) * a[i];
        nb += static_cast<long double>(b[i]) * b[i];
    }
    return static_cast<double>(dot / (std::sqrt(na) * std::sqrt(nb)));
}

std::map<std::string, std::string> record_files(const std::filesystem::path& out) {
    std::map<std::string, std::string> files;
    for (const auto& e : std::filesystem::recursive_directory_iterator(out / "runs")) {
        if (!e.is_regular_file()) continue;
        const auto name = e.path().filename().string();
        if (name.ends_with(".timing.json")) continue;   // latency/timestamps are per execution
        files[std::filesystem::relative(e.path(), out).string()] = io::read_file(e.path());
    }
    return files;
}

ExperimentConfig reference_grid(const std::filesystem::path& out, ModelConfig model) {
    ExperimentConfig c;
    c.corpus_path = testsupport::reference_corpus();
    c.levels = {std::begin(kAllSpecLevels), std::end(kAllSpecLevels)};
    c.plans = {ExamplePlan::per_category(2), ExamplePlan::per_category(4), ExamplePlan::per_category(6),
               ExamplePlan::leave_one_out(), ExamplePlan::zero_shot()};
    c.models = {std::move(model)};
    c.output_dir = out;
    c.seed = 7;
    return c;
}

}  // namespace

int main() {
    criterion("corpus cardinalities", 1.0, [] {
        const auto s = compute_stats(load_corpus(testsupport::reference_corpus()));
        std::ostringstream d;
        d << s.n_annotations << "/" << s.n_categories << "/" << s.n_physical << "/" << s.n_semantic_gestures << "/"
          << s.n_semantic_descriptors;
        const bool ok = s.n_annotations == 37 && s.n_categories == 3 && s.n_physical == 6 && s.n_semantic_gestures == 17 &&
                        s.n_semantic_descriptors == 15;
        return ok ? pass(d.str() + " == 37/3/6/17/15") : fail(d.str() + " != 37/3/6/17/15");
    });

    criterion("chance baselines", 1.0, [] {
        const auto c = reference();
        std::vector<RunResult> runs;
        for (auto level : kAllSpecLevels) {
            RunResult r;
            r.run_id = std::string(to_string(level));
            r.model_name = "m";
            r.spec_level = level;
            r.plan = ExamplePlan::zero_shot();
            runs.push_back(r);
        }
        const auto j = report_to_json(build_eval_report(runs, c, {}, nullptr));
        const std::map<std::string, std::pair<int, std::string>> expect = {
            {"category", {3, "0.333"}}, {"physical", {6, "0.167"}}, {"semantic_gesture", {17, "0.059"}}, {"semantic_only", {15, "0.067"}}};
        std::string got;
        for (const auto& cell : j["accuracy_grid"]) {
            const auto level = cell["spec_level"].get<std::string>();
            const auto& ch = cell["chance"];
            const auto& [den, disp] = expect.at(level);
            if (ch["numerator"] != 1 || ch["denominator"] != den || ch["display"] != disp ||
                ch["value"].get<double>() != 1.0 / den) {
                return fail(level + ": got " + ch.dump());
            }
            got += "1/" + std::to_string(den) + "=" + disp + " ";
        }
        if (j["accuracy_grid"].size() != 4) return fail("expected four cells");
        return pass(got);
    });

    criterion("appropriateness replication", 1.0, [] {
        // Exhaustive search: which (similar, appropriate, inappropriate, none) over 37 round to the published figures?
        std::vector<std::array<int, 4>> hits;
        for (int a = 0; a <= 37; ++a)
            for (int b = 0; a + b <= 37; ++b)
                for (int c = 0; a + b + c <= 37; ++c) {
                    const int d = 37 - a - b - c;
                    if (text::percent_1dp(a / 37.0) == "43.2" && text::percent_1dp(b / 37.0) == "43.2" &&
                        text::percent_1dp(c / 37.0) == "13.5") {
                        hits.push_back({a, b, c, d});
                    }
                }
        if (hits.size() != 1) return fail("composition not unique: " + std::to_string(hits.size()));
        const auto labels = load_labels(testsupport::source_dir() / "data" / "fixtures" / "appropriateness_labels.json");
        std::map<AppropriatenessValue, int> counts;
        for (const auto& l : labels) ++counts[l.value];
        const std::array<int, 4> fixture = {counts[AppropriatenessValue::Similar], counts[AppropriatenessValue::DifferentAppropriate],
                                            counts[AppropriatenessValue::DifferentInappropriate],
                                            counts[AppropriatenessValue::NoGesture]};
        if (fixture != hits.front()) return fail("fixture composition differs from the unique solution");
        const auto f = appropriateness_report(labels);
        const auto s = text::percent_1dp(f.at(AppropriatenessValue::Similar));
        const auto da = text::percent_1dp(f.at(AppropriatenessValue::DifferentAppropriate));
        const auto di = text::percent_1dp(f.at(AppropriatenessValue::DifferentInappropriate));
        const std::string got = s + "/" + da + "/" + di;
        return got == "43.2/43.2/13.5" ? pass("16/16/5/0 of 37 -> " + got + "%") : fail("got " + got);
    });

    criterion("prompt fidelity", 1.0, [] {
        const auto& c = reference();
        const auto z = build_zeroshot(c, "g01");
        if (z.rendered != testsupport::golden("zeroshot_g01.txt")) return fail("zero-shot block differs");
        if (!z.rendered.ends_with("what gesture did he use?")) return fail("zero-shot closing missing");
        const auto f = build_fewshot(c, "g02", SpecLevel::Category, ExamplePlan::per_category(2));
        if (f.context_part != testsupport::golden("context.txt")) return fail("context statement differs");
        if (f.example_parts.empty() || f.example_parts.front() != testsupport::golden("fewshot_example_g01_category.txt")) {
            return fail("displayed example differs");
        }
        if (f.rendered != testsupport::golden("fewshot_k2_category_g02.txt")) return fail("full few-shot prompt differs");
        ProbeRequest r;
        r.kind = ProbeKind::OpaqueLabelCompletion;
        r.examples = {{"It is an important idea.", "lcg"}, {"It is a silly idea.", "ng"}, {"It is a big idea.", "lcg"}};
        r.utterance = "It is a excellent idea.";
        if (build_probe(r).rendered != testsupport::golden("opaque_probe.txt")) return fail("opaque probe differs");
        return pass("zero-shot, context, example, k2 prompt and opaque probe byte-identical");
    });

    criterion("semantic-prefix rule", 1.0, [] {
        const auto* neg = reference().find("g04");   // negative sweep
        GestureAnnotation inclusive_span = *reference().find("g06");
        if (neg->semantic_descriptor != "negative" || inclusive_span.semantic_descriptor != "inclusive" ||
            inclusive_span.category != GestureCategory::Span) {
            return fail("reference annotations changed");
        }
        const bool a = score(parse("negation sweep"), *neg, SpecLevel::SemanticGesture, ScoringPolicy::FirstCandidate).matched;
        const bool b = score(parse("inclusive sweep"), inclusive_span, SpecLevel::SemanticGesture, ScoringPolicy::FirstCandidate).matched;
        const bool c = score(parse("inclusive sweep"), inclusive_span, SpecLevel::SemanticOnly, ScoringPolicy::FirstCandidate).matched;
        if (a && !b && c) return pass("negation~negative sweep: match; inclusive sweep vs span: no match, semantic-only match");
        return fail("got " + std::to_string(a) + std::to_string(b) + std::to_string(c) + ", want 101");
    });

    criterion("replay determinism", 60.0, [] {
        testsupport::TempDir d("gestsel-accept");
        ModelConfig mock;
        mock.model_name = "mock-chat";
        mock.script_path = testsupport::source_dir() / "data" / "mock" / "gesture_script.json";
        mock.cache_dir = d / "cache";
        const auto first = run_experiment(reference_grid(d / "mock", mock));
        if (first.total_records() != 740 || first.total_failed() != 0) {
            return fail("mock run produced " + std::to_string(first.total_records()) + " records, " +
                        std::to_string(first.total_failed()) + " failed");
        }
        ModelConfig replay = mock;
        replay.provider = ProviderKind::Replay;
        replay.script_path.clear();
        ExperimentRunner runner(reference_grid(d / "replay", replay));
        const auto second = runner.run();
        if (runner.stats().provider_calls != 0) return fail("replay reached the provider");
        if (runner.stats().cache_hits != 740) return fail("replay cache hits " + std::to_string(runner.stats().cache_hits));
        const auto a = record_files(d / "mock");
        const auto b = record_files(d / "replay");
        size_t n_records = 0;
        for (const auto& [k, v] : a) n_records += k.find("records") != std::string::npos;
        if (n_records != 740) return fail("expected 740 record files, found " + std::to_string(n_records));
        if (a != b) return fail("record files differ between mock and replay");
        if (first.content_digest() != second.content_digest()) return fail("manifest digests differ");
        ModelConfig embed;
        embed.model_name = "hashed-embedder";
        Gateway e1(embed), e2(embed);
        const auto corpus = reference();
        const auto r1 = serialize_report(build_eval_report(load_runs(d / "mock"), corpus, {}, &e1));
        const auto r2 = serialize_report(build_eval_report(load_runs(d / "replay"), corpus, {}, &e2));
        if (r1 != r2) return fail("EvalReport differs");
        return pass("740 records and EvalReport byte-identical (" + std::to_string(a.size()) + " files compared)");
    });

    criterion("metric oracles", 0, [] {
        std::mt19937_64 rng(20260101);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_int_distribution<int> dims(1, 128);
        double worst = 0;
        for (int i = 0; i < 1000; ++i) {
            const int n = dims(rng);
            std::vector<double> a(n), b(n);
            for (auto& x : a) x = normal(rng) * 10;
            for (auto& x : b) x = normal(rng) * 10;
            worst = std::max(worst, std::abs(cosine(a, b) - brute_cosine(a, b)));
        }
        if (worst > 1e-9) return fail("cosine deviates by " + std::to_string(worst));

        static const std::vector<std::string> vocab = {
            "span", "sweep", "container", "sweep with palm facing down", "sweep with palm facing up",
            "sweep with palm facing in", "sweep with palm facing forward", "negative sweep", "inclusive span/sweep",
            "container, negative sweep", "no gesture", "I cannot determine the gesture.", "thumbs up gesture",
            "abstract container or temporal span", "upward sweep"};
        testsupport::TempDir d("gestsel-oracle");
        const auto& corpus = reference();
        std::map<std::string, size_t> truth_cat, truth_phys;
        for (const auto& a : corpus.annotations) {
            ++truth_cat[std::string(to_string(a.category))];
            ++truth_phys[a.physical.key()];
        }
        for (int run = 0; run < 100; ++run) {
            json cycle = json::array();
            const int len = 1 + static_cast<int>(rng() % 8);
            for (int i = 0; i < len; ++i) cycle.push_back(vocab[rng() % vocab.size()]);
            const auto script = d / ("s" + std::to_string(run) + ".json");
            testsupport::write(script, json{{"cycle", cycle}}.dump());
            ModelConfig m;
            m.model_name = "oracle-" + std::to_string(run);
            m.script_path = script;
            ExperimentConfig cfg;
            cfg.corpus_path = testsupport::reference_corpus();
            const auto level = run % 2 ? SpecLevel::PhysicalDescription : SpecLevel::Category;
            cfg.levels = {level};
            cfg.plans = {ExamplePlan::per_category(1 + static_cast<int>(rng() % 6))};
            cfg.models = {m};
            cfg.output_dir = d / ("run" + std::to_string(run));
            cfg.concurrency = 1;
            run_experiment(cfg);
            const auto runs = load_runs(cfg.output_dir);
            const auto cm = confusion(runs.at(0), corpus);
            const auto& truth = level == SpecLevel::Category ? truth_cat : truth_phys;
            for (size_t r = 0; r < cm.labels.size(); ++r) {
                size_t row = 0;
                for (auto x : cm.counts[r]) row += x;
                const auto it = truth.find(cm.labels[r]);
                if (row != (it == truth.end() ? 0 : it->second)) return fail("row " + cm.labels[r] + " not conserved in run " + std::to_string(run));
            }
            if (cm.total() != corpus.annotations.size()) return fail("confusion total off in run " + std::to_string(run));
            const auto cell = accuracy_table(runs, corpus).at(0);
            if (cell.accuracy_any < cell.accuracy_first) return fail("accuracy_any < accuracy_first in run " + std::to_string(run));
        }
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.2e", worst);
        return pass(std::string("1000 cosine pairs max |diff| ") + buf + "; 100 runs conserve rows, any >= first");
    });

    criterion("important-concept ordering", 30.0, [] {
        const char* url = std::getenv("GESTSEL_EMBED_BASE_URL");
        if (!url || !*url) return skip("set GESTSEL_EMBED_BASE_URL (and GESTSEL_EMBED_MODEL) to an embedding endpoint to run");
        ModelConfig m;
        m.provider = ProviderKind::OpenAICompatible;
        m.base_url = url;
        const char* model = std::getenv("GESTSEL_EMBED_MODEL");
        m.model_name = model && *model ? model : "bert-base-uncased";
        if (const char* key = std::getenv("GESTSEL_EMBED_API_KEY_ENV")) m.api_key_env = key;
        Gateway g(m);
        const auto ranked = rank_phrases("important concept", {"big idea", "great thought", "weak idea", "silly idea", "red napkin"}, g);
        std::map<std::string, size_t> pos;
        std::string order;
        for (size_t i = 0; i < ranked.size(); ++i) {
            pos[ranked[i].first] = i;
            order += ranked[i].first + "=" + text::fixed_3dp(ranked[i].second) + " ";
        }
        const bool top = std::max(pos["big idea"], pos["great thought"]) < std::min(pos["weak idea"], pos["silly idea"]);
        const bool bottom = std::max(pos["weak idea"], pos["silly idea"]) < pos["red napkin"];
        return top && bottom ? pass(order) : fail(order);
    });

    criterion("dictionary threshold law", 0, [] {
        std::mt19937_64 rng(424242);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        size_t checks = 0;
        for (int trial = 0; trial < 500; ++trial) {
            const int dim = 2 + static_cast<int>(rng() % 16);
            const int n = 1 + static_cast<int>(rng() % 12);
            std::vector<DictionaryEntry> dict;
            for (int i = 0; i < n; ++i) {
                DictionaryEntry e;
                e.entry_id = "e" + std::to_string(rng() % 50);   // duplicates exercise tie-breaking
                e.name = e.entry_id;
                std::vector<double> v(dim);
                for (auto& x : v) x = normal(rng);
                e.embedding = EmbeddingVector{v, "t"};
                dict.push_back(e);
            }
            std::vector<double> q(dim);
            for (auto& x : q) x = normal(rng);
            const EmbeddingVector qv{q, "t"};
            std::vector<double> ts(12);
            for (auto& t : ts) t = unit(rng);
            ts.push_back(0.0);
            ts.push_back(1.0);
            std::sort(ts.begin(), ts.end());
            std::optional<std::string> best;
            bool seen_novel = false;
            for (double t : ts) {
                const auto r = match_embedded("q", qv, dict, t);
                ++checks;
                if (!r.best) return fail("no best entry");
                if (best && *best != r.best->first) return fail("best entry depends on the threshold");
                best = r.best->first;
                const bool matched = r.decision == MatchDecision::Matched;
                if (matched != (r.best->second >= t)) return fail("decision disagrees with similarity vs threshold");
                if (seen_novel && matched) return fail("Matched above a threshold that was Novel");
                seen_novel = seen_novel || !matched;
            }
        }
        return pass(std::to_string(checks) + " decisions over 500 random dictionaries monotone in threshold");
    });

    std::printf("%s\n", failures == 0 ? "ALL PRIMARY CRITERIA PASSED (skips noted above)" : "SOME CRITERIA FAILED");
    return failures == 0 ? 0 : 1;
}
