#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gestsel/corpus.hpp"
#include "gestsel/llm_gateway.hpp"
#include "gestsel/normalizer.hpp"
#include "gestsel/run_result.hpp"

namespace gestsel {

double cosine(std::span<const double> a, std::span<const double> b);
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

/// Number of distinct labels the corpus offers at `level`; chance is its reciprocal.
size_t unique_label_count(const CorpusStats& stats, SpecLevel level);

struct AccuracyCell {
    std::string model_name;
    SpecLevel spec_level = SpecLevel::Category;
    std::string k_label;
    size_t n = 0;
    size_t n_failed = 0;
    size_t n_correct_first = 0;
    size_t n_correct_any = 0;
    double accuracy_first = 0.0;
    double accuracy_any = 0.0;
    size_t chance_denominator = 1;
    double chance = 1.0;
};

/// Re-scores every completed record from its raw response; stored verdicts are not trusted.
std::vector<AccuracyCell> accuracy_table(const std::vector<RunResult>& runs, const Corpus& corpus,
                                         ScoringPolicy policy = ScoringPolicy::FirstCandidate,
                                         const NormalizerConfig& config = default_normalizer_config());

struct ConfusionMatrix {
    std::vector<std::string> labels;   // rows; columns are labels followed by "unparsed"
    std::vector<std::vector<size_t>> counts;

    size_t total() const;
    size_t at(std::string_view truth, std::string_view predicted) const;
};

inline constexpr std::string_view kUnparsedColumn = "unparsed";

/// Category or PhysicalDescription runs only; predictions come from the first candidate.
ConfusionMatrix confusion(const RunResult& run, const Corpus& corpus,
                          const NormalizerConfig& config = default_normalizer_config());

struct CosineSummary {
    std::string run_id;
    SpecLevel spec_level = SpecLevel::Category;
    std::string k_label;
    std::vector<std::pair<std::string, double>> values;      // (target_id, similarity)
    std::vector<std::pair<std::string, std::string>> gaps;   // (target_id, error class)
    double min = 0, q1 = 0, median = 0, q3 = 0, max = 0, mean = 0;
};

CosineSummary cosine_report(const RunResult& run, const Corpus& corpus, Gateway& embedder);

enum class AppropriatenessValue { Similar, DifferentAppropriate, DifferentInappropriate, NoGesture };
enum class LabelStatus { Proposed, Final };

inline constexpr AppropriatenessValue kAllAppropriateness[] = {
    AppropriatenessValue::Similar, AppropriatenessValue::DifferentAppropriate,
    AppropriatenessValue::DifferentInappropriate, AppropriatenessValue::NoGesture};

std::string_view to_string(AppropriatenessValue v);
std::optional<AppropriatenessValue> parse_appropriateness(std::string_view s);

struct AppropriatenessLabel {
    AppropriatenessValue value = AppropriatenessValue::Similar;
    std::string rater;
    std::string target_id;
    std::string run_id;
    std::optional<std::string> note;
    LabelStatus status = LabelStatus::Final;

    bool operator==(const AppropriatenessLabel&) const = default;
};

nlohmann::ordered_json label_to_json(const AppropriatenessLabel& l);
AppropriatenessLabel label_from_json(const nlohmann::json& j);

/// Fractions over Final labels; every value appears in the map. Empty map when
/// there are no Final labels. Throws DuplicateFinalLabel.
std::map<AppropriatenessValue, double> appropriateness_report(const std::vector<AppropriatenessLabel>& labels);

struct EvalReport {
    std::vector<AccuracyCell> accuracy_grid;
    std::map<std::string, ConfusionMatrix> confusions;   // keyed by run_id
    std::vector<CosineSummary> cosine_summaries;
    std::map<AppropriatenessValue, double> appropriateness;
    std::map<AppropriatenessValue, size_t> appropriateness_counts;
    std::string corpus_name;
    std::string corpus_version;
    std::vector<std::string> run_ids;
    ScoringPolicy policy = ScoringPolicy::FirstCandidate;
};

/// `embedder` may be null to skip cosine summaries.
EvalReport build_eval_report(const std::vector<RunResult>& runs, const Corpus& corpus,
                             const std::vector<AppropriatenessLabel>& labels, Gateway* embedder,
                             ScoringPolicy policy = ScoringPolicy::FirstCandidate);

nlohmann::ordered_json report_to_json(const EvalReport& report);
std::string serialize_report(const EvalReport& report);

std::string accuracy_csv(const EvalReport& report);
std::string confusion_csv(const ConfusionMatrix& m);
std::string cosine_csv(const EvalReport& report);
std::string appropriateness_csv(const EvalReport& report);

/// Writes report.json and one CSV per figure into `dir`.
void write_report_files(const EvalReport& report, const std::filesystem::path& dir);

}  // namespace gestsel
