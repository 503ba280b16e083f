#include "gestsel/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "gestsel/error.hpp"
#include "gestsel/io.hpp"
#include "gestsel/text.hpp"

namespace gestsel {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "vectors have dimensions " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw Error(ErrorKind::ZeroVector, "cosine of a zero vector is undefined");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) { return cosine(a.values, b.values); }

size_t unique_label_count(const CorpusStats& stats, SpecLevel level) {
    switch (level) {
        case SpecLevel::Category: return stats.n_categories;
        case SpecLevel::PhysicalDescription: return stats.n_physical;
        case SpecLevel::SemanticGesture: return stats.n_semantic_gestures;
        case SpecLevel::SemanticOnly: return stats.n_semantic_descriptors;
    }
    return 1;
}

namespace {

const GestureAnnotation& truth_for(const Corpus& corpus, const SuggestionRecord& r) {
    const auto* a = corpus.find(r.target_id);
    if (!a) throw Error(ErrorKind::MissingTarget, "record target '" + r.target_id + "' is not in corpus " + corpus.name);
    return *a;
}

double quantile(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) return 0.0;
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - static_cast<double>(lo));
}

}  // namespace

std::vector<AccuracyCell> accuracy_table(const std::vector<RunResult>& runs, const Corpus& corpus,
                                         ScoringPolicy /*policy*/, const NormalizerConfig& config) {
    const auto stats = compute_stats(corpus);
    std::vector<AccuracyCell> cells;
    for (const auto& run : runs) {
        const auto k_label = run.plan.label();
        auto it = std::find_if(cells.begin(), cells.end(), [&](const AccuracyCell& c) {
            return c.model_name == run.model_name && c.spec_level == run.spec_level && c.k_label == k_label;
        });
        if (it == cells.end()) {
            AccuracyCell cell;
            cell.model_name = run.model_name;
            cell.spec_level = run.spec_level;
            cell.k_label = k_label;
            cell.chance_denominator = unique_label_count(stats, run.spec_level);
            cell.chance = 1.0 / static_cast<double>(cell.chance_denominator);
            cells.push_back(cell);
            it = cells.end() - 1;
        }
        for (const auto& rec : run.records) {
            const auto& truth = truth_for(corpus, rec);
            if (!rec.completed()) {
                ++it->n_failed;
                continue;
            }
            const auto parsed = parse(rec.status == RecordStatus::Refusal ? std::string() : rec.raw_response, config);
            ++it->n;
            if (score(parsed, truth, run.spec_level, ScoringPolicy::FirstCandidate, config).matched) ++it->n_correct_first;
            if (score(parsed, truth, run.spec_level, ScoringPolicy::AnyCandidate, config).matched) ++it->n_correct_any;
        }
    }
    for (auto& c : cells) {
        if (c.n > 0) {
            c.accuracy_first = static_cast<double>(c.n_correct_first) / static_cast<double>(c.n);
            c.accuracy_any = static_cast<double>(c.n_correct_any) / static_cast<double>(c.n);
        }
    }
    return cells;
}

size_t ConfusionMatrix::total() const {
    size_t t = 0;
    for (const auto& row : counts) t += std::accumulate(row.begin(), row.end(), size_t{0});
    return t;
}

size_t ConfusionMatrix::at(std::string_view truth, std::string_view predicted) const {
    const auto r = std::find(labels.begin(), labels.end(), truth);
    if (r == labels.end()) return 0;
    size_t col;
    if (predicted == kUnparsedColumn) {
        col = labels.size();
    } else {
        const auto c = std::find(labels.begin(), labels.end(), predicted);
        if (c == labels.end()) return 0;
        col = static_cast<size_t>(c - labels.begin());
    }
    return counts[static_cast<size_t>(r - labels.begin())][col];
}

ConfusionMatrix confusion(const RunResult& run, const Corpus& corpus, const NormalizerConfig& config) {
    const bool physical = run.spec_level == SpecLevel::PhysicalDescription;
    if (!physical && run.spec_level != SpecLevel::Category) {
        throw Error(ErrorKind::WrongLevel, "confusion matrices need a category or physical level run, got " +
                                               std::string(to_string(run.spec_level)));
    }
    ConfusionMatrix m;
    if (physical) {
        for (const auto& g : all_physical_gestures()) m.labels.push_back(g.key());
    } else {
        for (auto c : kAllCategories) m.labels.emplace_back(to_string(c));
    }
    m.counts.assign(m.labels.size(), std::vector<size_t>(m.labels.size() + 1, 0));
    auto index_of = [&](const std::string& label) {
        return static_cast<size_t>(std::find(m.labels.begin(), m.labels.end(), label) - m.labels.begin());
    };
    for (const auto& rec : run.records) {
        const auto& truth = truth_for(corpus, rec);
        const size_t row = index_of(physical ? truth.physical.key() : std::string(to_string(truth.category)));
        size_t col = m.labels.size();
        if (rec.status == RecordStatus::Ok) {
            const auto parsed = parse(rec.raw_response, config);
            if (!parsed.is_refusal && parsed.candidates.front().category_guess) {
                const auto& cand = parsed.candidates.front();
                const auto cat = *cand.category_guess;
                if (!physical) {
                    col = index_of(std::string(to_string(cat)));
                } else if (cat != GestureCategory::Sweep) {
                    col = index_of(std::string(to_string(cat)));
                } else if (cand.palm_guess) {
                    col = index_of(PhysicalGesture::sweep(*cand.palm_guess).key());
                }
            }
        }
        ++m.counts[row][col];
    }
    return m;
}

CosineSummary cosine_report(const RunResult& run, const Corpus& corpus, Gateway& embedder) {
    if (run.records.empty()) throw Error(ErrorKind::EmptyRun, "run '" + run.run_id + "' has no records");
    CosineSummary s;
    s.run_id = run.run_id;
    s.spec_level = run.spec_level;
    s.k_label = run.plan.label();
    for (const auto& rec : run.records) {
        const auto& truth = truth_for(corpus, rec);
        if (!rec.completed()) {
            s.gaps.emplace_back(rec.target_id, rec.error_class.empty() ? "Failed" : rec.error_class);
            continue;
        }
        const auto parsed = parse(rec.raw_response);
        const auto suggestion = parsed.is_refusal ? text::trim(rec.raw_response) : parsed.candidates.front().text;
        if (suggestion.empty()) {
            s.gaps.emplace_back(rec.target_id, "NoSuggestionText");
            continue;
        }
        try {
            const auto v = embedder.embed({render_label(truth, run.spec_level), suggestion});
            s.values.emplace_back(rec.target_id, cosine(v[0], v[1]));
        } catch (const Error& e) {
            s.gaps.emplace_back(rec.target_id, std::string(e.kind_name()));
        }
    }
    std::vector<double> sorted;
    for (const auto& [id, v] : s.values) sorted.push_back(v);
    std::sort(sorted.begin(), sorted.end());
    if (!sorted.empty()) {
        s.min = sorted.front();
        s.max = sorted.back();
        s.q1 = quantile(sorted, 0.25);
        s.median = quantile(sorted, 0.5);
        s.q3 = quantile(sorted, 0.75);
        s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
    }
    return s;
}

std::string_view to_string(AppropriatenessValue v) {
    switch (v) {
        case AppropriatenessValue::Similar: return "similar";
        case AppropriatenessValue::DifferentAppropriate: return "different_appropriate";
        case AppropriatenessValue::DifferentInappropriate: return "different_inappropriate";
        case AppropriatenessValue::NoGesture: return "no_gesture";
    }
    return "?";
}

std::optional<AppropriatenessValue> parse_appropriateness(std::string_view s) {
    auto n = text::normalize_label(s);
    std::replace(n.begin(), n.end(), ' ', '_');
    for (auto v : kAllAppropriateness) {
        if (n == to_string(v)) return v;
    }
    return std::nullopt;
}

ordered_json label_to_json(const AppropriatenessLabel& l) {
    ordered_json j;
    j["run_id"] = l.run_id;
    j["target_id"] = l.target_id;
    j["label"] = to_string(l.value);
    j["rater"] = l.rater;
    j["note"] = l.note ? json(*l.note) : json(nullptr);
    j["status"] = l.status == LabelStatus::Final ? "final" : "proposed";
    return j;
}

AppropriatenessLabel label_from_json(const json& j) {
    AppropriatenessLabel l;
    try {
        const auto value = j.at("label").get<std::string>();
        auto parsed = parse_appropriateness(value);
        if (!parsed) throw Error(ErrorKind::Validation, "unknown appropriateness label '" + value + "'");
        l.value = *parsed;
        l.target_id = j.at("target_id").get<std::string>();
        l.run_id = j.value("run_id", "");
        l.rater = j.value("rater", "");
        if (j.contains("note") && j["note"].is_string()) l.note = j["note"].get<std::string>();
        l.status = j.value("status", "final") == "proposed" ? LabelStatus::Proposed : LabelStatus::Final;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Validation, std::string("label: ") + e.what());
    }
    return l;
}

namespace {

std::map<AppropriatenessValue, size_t> final_counts(const std::vector<AppropriatenessLabel>& labels) {
    std::set<std::pair<std::string, std::string>> seen;
    std::map<AppropriatenessValue, size_t> counts;
    for (auto v : kAllAppropriateness) counts[v] = 0;
    for (const auto& l : labels) {
        if (l.status != LabelStatus::Final) continue;
        if (!seen.emplace(l.run_id, l.target_id).second) {
            throw Error(ErrorKind::DuplicateFinalLabel,
                        "more than one final label for run '" + l.run_id + "' target '" + l.target_id + "'");
        }
        ++counts[l.value];
    }
    return counts;
}

}  // namespace

std::map<AppropriatenessValue, double> appropriateness_report(const std::vector<AppropriatenessLabel>& labels) {
    const auto counts = final_counts(labels);
    size_t total = 0;
    for (const auto& [v, n] : counts) total += n;
    std::map<AppropriatenessValue, double> out;
    if (total == 0) return out;
    for (const auto& [v, n] : counts) out[v] = static_cast<double>(n) / static_cast<double>(total);
    return out;
}

EvalReport build_eval_report(const std::vector<RunResult>& runs, const Corpus& corpus,
                             const std::vector<AppropriatenessLabel>& labels, Gateway* embedder,
                             ScoringPolicy policy) {
    EvalReport r;
    r.policy = policy;
    r.corpus_name = corpus.name;
    r.corpus_version = corpus.version;
    r.accuracy_grid = accuracy_table(runs, corpus, policy);
    for (const auto& run : runs) {
        r.run_ids.push_back(run.run_id);
        if (run.spec_level == SpecLevel::Category || run.spec_level == SpecLevel::PhysicalDescription) {
            r.confusions.emplace(run.run_id, confusion(run, corpus));
        }
        if (embedder && !run.records.empty()) r.cosine_summaries.push_back(cosine_report(run, corpus, *embedder));
    }
    r.appropriateness_counts = final_counts(labels);
    r.appropriateness = appropriateness_report(labels);
    return r;
}

ordered_json report_to_json(const EvalReport& report) {
    ordered_json j;
    ordered_json prov;
    prov["corpus_name"] = report.corpus_name;
    prov["corpus_version"] = report.corpus_version;
    prov["run_ids"] = report.run_ids;
    prov["scoring_policy"] = to_string(report.policy);
    j["provenance"] = std::move(prov);

    auto grid = ordered_json::array();
    for (const auto& c : report.accuracy_grid) {
        ordered_json cj;
        cj["model_name"] = c.model_name;
        cj["spec_level"] = to_string(c.spec_level);
        cj["k_label"] = c.k_label;
        cj["n"] = c.n;
        cj["n_failed"] = c.n_failed;
        cj["n_correct_first"] = c.n_correct_first;
        cj["n_correct_any"] = c.n_correct_any;
        cj["accuracy_first"] = c.accuracy_first;
        cj["accuracy_any"] = c.accuracy_any;
        ordered_json chance;
        chance["numerator"] = 1;
        chance["denominator"] = c.chance_denominator;
        chance["value"] = c.chance;
        chance["display"] = text::fixed_3dp(c.chance);
        cj["chance"] = std::move(chance);
        grid.push_back(std::move(cj));
    }
    j["accuracy_grid"] = std::move(grid);

    ordered_json conf = ordered_json::object();
    for (const auto& [run_id, m] : report.confusions) {
        ordered_json mj;
        mj["labels"] = m.labels;
        auto cols = m.labels;
        cols.emplace_back(kUnparsedColumn);
        mj["columns"] = cols;
        mj["counts"] = m.counts;
        conf[run_id] = std::move(mj);
    }
    j["confusion"] = std::move(conf);

    auto cos = ordered_json::array();
    for (const auto& s : report.cosine_summaries) {
        ordered_json sj;
        sj["run_id"] = s.run_id;
        sj["spec_level"] = to_string(s.spec_level);
        sj["k_label"] = s.k_label;
        sj["min"] = s.min;
        sj["q1"] = s.q1;
        sj["median"] = s.median;
        sj["q3"] = s.q3;
        sj["max"] = s.max;
        sj["mean"] = s.mean;
        auto values = ordered_json::array();
        for (const auto& [id, v] : s.values) values.push_back(ordered_json{{"target_id", id}, {"similarity", v}});
        sj["values"] = std::move(values);
        auto gaps = ordered_json::array();
        for (const auto& [id, e] : s.gaps) gaps.push_back(ordered_json{{"target_id", id}, {"error", e}});
        sj["gaps"] = std::move(gaps);
        cos.push_back(std::move(sj));
    }
    j["cosine_summary"] = std::move(cos);

    ordered_json app = ordered_json::object();
    for (auto v : kAllAppropriateness) {
        ordered_json aj;
        const auto count_it = report.appropriateness_counts.find(v);
        aj["count"] = count_it == report.appropriateness_counts.end() ? 0 : count_it->second;
        const auto it = report.appropriateness.find(v);
        if (it != report.appropriateness.end()) {
            aj["fraction"] = it->second;
            aj["percent"] = text::percent_1dp(it->second);
        } else {
            aj["fraction"] = nullptr;
            aj["percent"] = nullptr;
        }
        app[std::string(to_string(v))] = std::move(aj);
    }
    j["appropriateness"] = std::move(app);
    return j;
}

std::string serialize_report(const EvalReport& report) { return report_to_json(report).dump(2) + "\n"; }

namespace {

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string num(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

}  // namespace

std::string accuracy_csv(const EvalReport& report) {
    std::string out = "model_name,spec_level,k_label,n,n_failed,n_correct_first,n_correct_any,accuracy_first,accuracy_any,chance\n";
    for (const auto& c : report.accuracy_grid) {
        out += csv_field(c.model_name) + "," + std::string(to_string(c.spec_level)) + "," + c.k_label + "," +
               std::to_string(c.n) + "," + std::to_string(c.n_failed) + "," + std::to_string(c.n_correct_first) + "," +
               std::to_string(c.n_correct_any) + "," + num(c.accuracy_first) + "," + num(c.accuracy_any) + "," +
               num(c.chance) + "\n";
    }
    return out;
}

std::string confusion_csv(const ConfusionMatrix& m) {
    std::string out = "true\\predicted";
    for (const auto& l : m.labels) out += "," + l;
    out += "," + std::string(kUnparsedColumn) + "\n";
    for (size_t r = 0; r < m.labels.size(); ++r) {
        out += m.labels[r];
        for (auto v : m.counts[r]) out += "," + std::to_string(v);
        out += "\n";
    }
    return out;
}

std::string cosine_csv(const EvalReport& report) {
    std::string out = "run_id,spec_level,k_label,target_id,similarity\n";
    for (const auto& s : report.cosine_summaries) {
        for (const auto& [id, v] : s.values) {
            out += csv_field(s.run_id) + "," + std::string(to_string(s.spec_level)) + "," + s.k_label + "," +
                   csv_field(id) + "," + num(v) + "\n";
        }
    }
    return out;
}

std::string appropriateness_csv(const EvalReport& report) {
    std::string out = "label,count,fraction,percent\n";
    for (auto v : kAllAppropriateness) {
        const auto c = report.appropriateness_counts.count(v) ? report.appropriateness_counts.at(v) : 0;
        const auto it = report.appropriateness.find(v);
        out += std::string(to_string(v)) + "," + std::to_string(c) + "," +
               (it == report.appropriateness.end() ? std::string() : num(it->second)) + "," +
               (it == report.appropriateness.end() ? std::string() : text::percent_1dp(it->second)) + "\n";
    }
    return out;
}

void write_report_files(const EvalReport& report, const std::filesystem::path& dir) {
    io::write_file_atomic(dir / "report.json", serialize_report(report));
    io::write_file_atomic(dir / "accuracy.csv", accuracy_csv(report));
    io::write_file_atomic(dir / "cosine.csv", cosine_csv(report));
    io::write_file_atomic(dir / "appropriateness.csv", appropriateness_csv(report));
    for (const auto& [run_id, m] : report.confusions) {
        io::write_file_atomic(dir / ("confusion_" + text::sanitize_component(run_id) + ".csv"), confusion_csv(m));
    }
}

}  // namespace gestsel
