#include "gestsel/prompt_builder.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <limits>
#include <map>
#include <random>

#include "gestsel/error.hpp"
#include "gestsel/io.hpp"
#include "gestsel/text.hpp"

namespace gestsel {

std::string_view to_string(SpecLevel level) {
    switch (level) {
        case SpecLevel::Category: return "category";
        case SpecLevel::PhysicalDescription: return "physical";
        case SpecLevel::SemanticGesture: return "semantic_gesture";
        case SpecLevel::SemanticOnly: return "semantic_only";
    }
    return "?";
}

std::optional<SpecLevel> parse_spec_level(std::string_view s) {
    const auto n = text::normalize_label(s);
    for (auto l : kAllSpecLevels) {
        if (n == to_string(l)) return l;
    }
    return std::nullopt;
}

std::string ExamplePlan::label() const {
    std::string out;
    switch (mode) {
        case PlanMode::PerCategoryK: out = "k" + std::to_string(k); break;
        case PlanMode::LeaveOneOut: out = "loo"; break;
        case PlanMode::ZeroShot: return "zeroshot";
    }
    if (ordering == ExampleOrdering::SeededShuffle) out += "-shuffle" + std::to_string(seed);
    if (grouping == ExampleGrouping::ByCategory) out += "-grouped";
    return out;
}

void check_plan(const ExamplePlan& plan, const Corpus& corpus) {
    if (plan.mode != PlanMode::PerCategoryK) return;
    if (plan.k < 1) throw Error(ErrorKind::InvalidPlan, "per-category k must be >= 1");
    std::map<GestureCategory, int> counts;
    for (const auto& a : corpus.annotations) ++counts[a.category];
    for (const auto& [cat, n] : counts) {
        if (plan.k > n) {
            throw Error(ErrorKind::InsufficientExamples, "category '" + std::string(to_string(cat)) + "' has " +
                                                             std::to_string(n) + " annotations, fewer than k=" +
                                                             std::to_string(plan.k));
        }
    }
}

const PromptTemplates& default_templates() {
    static const PromptTemplates t{};
    return t;
}

PromptTemplates load_templates(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(io::read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what(), -1, -1);
    }
    PromptTemplates t;
    auto pick = [&](const char* key, std::string& field) {
        if (auto it = j.find(key); it != j.end()) {
            if (!it->is_string()) throw Error(ErrorKind::Config, std::string("template '") + key + "' must be a string");
            field = it->get<std::string>();
        }
    };
    pick("fewshot_example", t.fewshot_example);
    pick("fewshot_target", t.fewshot_target);
    pick("zeroshot_target", t.zeroshot_target);
    pick("part_separator", t.part_separator);
    pick("zeroshot_separator", t.zeroshot_separator);
    pick("probe_explain", t.probe_explain);
    pick("probe_next", t.probe_next);
    pick("probe_visualize", t.probe_visualize);
    pick("probe_opaque_line", t.probe_opaque_line);
    return t;
}

std::string PromptBundle::digest() const { return text::sha256_hex(rendered); }

namespace {

std::string fill(std::string_view tmpl, const std::map<std::string_view, std::string_view>& slots) {
    std::string out;
    out.reserve(tmpl.size() + 64);
    size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            const auto close = tmpl.find('}', i);
            if (close != std::string_view::npos) {
                auto it = slots.find(tmpl.substr(i + 1, close - i - 1));
                if (it != slots.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(tmpl[i++]);
    }
    return out;
}

std::string render_example(const PromptTemplates& t, const GestureAnnotation& a, SpecLevel level) {
    const auto label = render_label(a, level);
    return fill(t.fewshot_example, {{"segment", a.segment_text}, {"trigger", a.trigger_phrase}, {"label", label}});
}

const GestureAnnotation& require_target(const Corpus& corpus, std::string_view target_id) {
    const auto* target = corpus.find(target_id);
    if (!target) throw Error(ErrorKind::UnknownTarget, "unknown target '" + std::string(target_id) + "'");
    return *target;
}

// Bounded draw by rejection so the sequence depends only on the mt19937_64 output stream.
size_t bounded(std::mt19937_64& rng, size_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do {
        v = rng();
    } while (v >= limit);
    return static_cast<size_t>(v % n);
}

template <class T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[bounded(rng, i)]);
}

std::string join_parts(const PromptBundle& b, std::string_view sep) {
    std::vector<std::string> parts;
    if (!b.context_part.empty()) parts.push_back(b.context_part);
    for (const auto& e : b.example_parts) parts.push_back(e);
    if (!b.target_part.empty()) parts.push_back(b.target_part);
    return text::join(parts, sep);
}

}  // namespace

std::string render_label(const GestureAnnotation& a, SpecLevel level) {
    const std::string category(to_string(a.category));
    switch (level) {
        case SpecLevel::Category: return category;
        case SpecLevel::PhysicalDescription:
            if (auto palm = a.physical.palm()) return category + " with palm facing " + std::string(to_string(*palm));
            return category;
        case SpecLevel::SemanticGesture: return a.semantic_descriptor + " " + category;
        case SpecLevel::SemanticOnly: return a.semantic_descriptor;
    }
    return category;
}

PromptBundle build_fewshot(const Corpus& corpus, std::string_view target_id, SpecLevel level, const ExamplePlan& plan,
                           const PromptTemplates& templates) {
    const auto& target = require_target(corpus, target_id);
    if (plan.mode == PlanMode::ZeroShot) throw Error(ErrorKind::InvalidPlan, "zero-shot plan passed to build_fewshot");
    check_plan(plan, corpus);

    std::vector<size_t> chosen;
    std::mt19937_64 rng(plan.seed);
    if (plan.mode == PlanMode::LeaveOneOut) {
        for (size_t i = 0; i < corpus.annotations.size(); ++i) {
            if (corpus.annotations[i].id != target.id) chosen.push_back(i);
        }
        if (plan.ordering == ExampleOrdering::SeededShuffle) seeded_shuffle(chosen, rng);
    } else {
        // Categories in order of first appearance, each a pool of non-target indices.
        std::vector<GestureCategory> order;
        std::map<GestureCategory, std::vector<size_t>> pools;
        for (size_t i = 0; i < corpus.annotations.size(); ++i) {
            const auto& a = corpus.annotations[i];
            if (!pools.count(a.category)) order.push_back(a.category);
            auto& pool = pools[a.category];
            if (a.id != target.id) pool.push_back(i);
        }
        for (auto cat : order) {
            auto& pool = pools[cat];
            if (plan.ordering == ExampleOrdering::SeededShuffle) seeded_shuffle(pool, rng);
            const size_t take = std::min(pool.size(), static_cast<size_t>(plan.k));
            chosen.insert(chosen.end(), pool.begin(), pool.begin() + static_cast<long>(take));
        }
        if (plan.grouping == ExampleGrouping::Interleaved) {
            if (plan.ordering == ExampleOrdering::SeededShuffle) {
                seeded_shuffle(chosen, rng);
            } else {
                std::sort(chosen.begin(), chosen.end());
            }
        }
    }
    if (plan.mode == PlanMode::LeaveOneOut && plan.grouping == ExampleGrouping::ByCategory) {
        std::vector<GestureCategory> order;
        for (const auto& a : corpus.annotations) {
            if (std::find(order.begin(), order.end(), a.category) == order.end()) order.push_back(a.category);
        }
        std::stable_sort(chosen.begin(), chosen.end(), [&](size_t x, size_t y) {
            auto rank = [&](size_t i) {
                return std::find(order.begin(), order.end(), corpus.annotations[i].category) - order.begin();
            };
            return rank(x) < rank(y);
        });
    }

    PromptBundle b;
    b.context_part = corpus.context_statement;
    b.target_id = target.id;
    b.spec_level = level;
    b.plan = plan;
    for (size_t i : chosen) {
        const auto& a = corpus.annotations[i];
        b.example_ids.push_back(a.id);
        b.example_parts.push_back(render_example(templates, a, level));
    }
    b.target_part = fill(templates.fewshot_target, {{"segment", target.segment_text}, {"trigger", target.trigger_phrase}});
    b.rendered = join_parts(b, templates.part_separator);
    return b;
}

PromptBundle build_zeroshot(const Corpus& corpus, std::string_view target_id, const PromptTemplates& templates) {
    const auto& target = require_target(corpus, target_id);
    PromptBundle b;
    b.context_part = corpus.context_statement;
    b.target_id = target.id;
    b.plan = ExamplePlan::zero_shot();
    b.target_part = fill(templates.zeroshot_target, {{"segment", target.segment_text}, {"trigger", target.trigger_phrase}});
    b.rendered = join_parts(b, templates.zeroshot_separator);
    return b;
}

PromptBundle build_prompt(const Corpus& corpus, std::string_view target_id, SpecLevel level, const ExamplePlan& plan,
                          const PromptTemplates& templates) {
    if (plan.mode == PlanMode::ZeroShot) {
        auto b = build_zeroshot(corpus, target_id, templates);
        b.spec_level = level;
        return b;
    }
    return build_fewshot(corpus, target_id, level, plan, templates);
}

PromptBundle build_probe(const ProbeRequest& request, const PromptTemplates& templates) {
    PromptBundle b;
    b.plan = ExamplePlan::zero_shot();
    const std::string label = request.gesture_label.value_or("");
    switch (request.kind) {
        case ProbeKind::ExplainGesture:
        case ProbeKind::NextGesture: {
            if (!request.gesture_label || text::trim(*request.gesture_label).empty()) {
                throw Error(ErrorKind::MissingGestureLabel, "this probe requires a gesture label");
            }
            const auto& tmpl = request.kind == ProbeKind::ExplainGesture ? templates.probe_explain : templates.probe_next;
            b.target_part = fill(tmpl, {{"context", request.context}, {"utterance", request.utterance}, {"label", label}});
            b.rendered = b.target_part;
            break;
        }
        case ProbeKind::Visualize: {
            b.context_part = request.context;
            b.target_part = templates.probe_visualize;
            b.rendered = join_parts(b, templates.part_separator);
            break;
        }
        case ProbeKind::OpaqueLabelCompletion: {
            auto sentence = [](std::string s) {
                s = text::trim(s);
                if (!s.empty() && s.back() != '.' && s.back() != '!' && s.back() != '?') s += '.';
                return s;
            };
            b.context_part = request.context;
            for (const auto& [utt, lab] : request.examples) {
                const auto u = sentence(utt);
                b.example_parts.push_back(fill(templates.probe_opaque_line, {{"utterance", u}, {"label", lab}}));
            }
            b.target_part = sentence(request.utterance);
            b.rendered = join_parts(b, "\n");
            break;
        }
    }
    return b;
}

}  // namespace gestsel
