#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gestsel/corpus.hpp"
#include "gestsel/prompt_builder.hpp"

namespace gestsel {

struct CandidateLabel {
    std::string text;
    std::optional<GestureCategory> category_guess;
    std::optional<PalmOrientation> palm_guess;
    std::optional<std::string> semantic_guess;

    bool operator==(const CandidateLabel&) const = default;
};

struct ParsedSuggestion {
    std::string raw;
    std::vector<CandidateLabel> candidates;
    bool is_refusal = true;

    bool operator==(const ParsedSuggestion&) const = default;
};

enum class MatchKind { Exact, SemanticPrefix, CompoundAny, None };
enum class ScoringPolicy { FirstCandidate, AnyCandidate };

std::string_view to_string(MatchKind kind);
std::string_view to_string(ScoringPolicy policy);
std::optional<ScoringPolicy> parse_scoring_policy(std::string_view s);

struct MatchVerdict {
    SpecLevel level = SpecLevel::Category;
    bool matched = false;
    MatchKind match_kind = MatchKind::None;
    std::optional<size_t> matched_candidate_index;
};

/// Keyword lists driving parse(). Defaults are compiled in; a structured-text
/// file can replace any list.
struct NormalizerConfig {
    std::vector<std::pair<std::string, GestureCategory>> category_keywords = {
        {"span", GestureCategory::Span},           {"spans", GestureCategory::Span},
        {"sweep", GestureCategory::Sweep},         {"sweeps", GestureCategory::Sweep},
        {"sweeping", GestureCategory::Sweep},      {"container", GestureCategory::Container},
        {"containers", GestureCategory::Container},
    };
    /// Multi-word phrases are matched on token boundaries, longest first.
    std::vector<std::pair<std::string, PalmOrientation>> palm_phrases = {
        {"palm facing up", PalmOrientation::Up},           {"palms facing up", PalmOrientation::Up},
        {"palm facing upward", PalmOrientation::Up},       {"palms facing upward", PalmOrientation::Up},
        {"palm facing down", PalmOrientation::Down},       {"palms facing down", PalmOrientation::Down},
        {"palm facing downward", PalmOrientation::Down},   {"palms facing downward", PalmOrientation::Down},
        {"palm facing in", PalmOrientation::In},           {"palms facing in", PalmOrientation::In},
        {"palm facing inward", PalmOrientation::In},       {"palms facing inward", PalmOrientation::In},
        {"palm facing forward", PalmOrientation::Forward}, {"palms facing forward", PalmOrientation::Forward},
        {"palm up", PalmOrientation::Up},                  {"palms up", PalmOrientation::Up},
        {"palm down", PalmOrientation::Down},              {"palms down", PalmOrientation::Down},
        {"palm in", PalmOrientation::In},                  {"palms in", PalmOrientation::In},
        {"palm forward", PalmOrientation::Forward},        {"palms forward", PalmOrientation::Forward},
        {"upward", PalmOrientation::Up},                   {"downward", PalmOrientation::Down},
        {"inward", PalmOrientation::In},
    };
    std::vector<std::string> refusal_phrases = {"no gesture", "did not use", "cannot determine"};
    std::vector<std::string> stopwords = {"a",    "an",  "the",     "he",       "she",  "they", "used", "use",  "uses",
                                          "with", "of",  "gesture", "gestures", "his",  "her",  "made", "make", "did",
                                          "is",   "was", "would",   "might",    "could", "likely", "probably", "following"};
    size_t semantic_prefix_length = 5;
};

const NormalizerConfig& default_normalizer_config();
NormalizerConfig load_normalizer_config(const std::filesystem::path& path);

ParsedSuggestion parse(std::string_view raw, const NormalizerConfig& config = default_normalizer_config());

/// Lowercased first `config.semantic_prefix_length` characters of the first token.
std::string semantic_key(std::string_view descriptor, const NormalizerConfig& config = default_normalizer_config());

MatchVerdict score(const ParsedSuggestion& suggestion, const GestureAnnotation& truth, SpecLevel level,
                   ScoringPolicy policy, const NormalizerConfig& config = default_normalizer_config());

}  // namespace gestsel
