#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gestsel/corpus.hpp"
#include "gestsel/llm_gateway.hpp"

namespace gestsel {

struct DictionaryEntry {
    std::string entry_id;
    std::string name;
    std::string description;
    std::optional<GestureCategory> category;
    std::optional<EmbeddingVector> embedding;
};

/// Text embedded for an entry: "name: description".
std::string entry_embedding_text(const DictionaryEntry& e);

std::vector<DictionaryEntry> load_dictionary(const std::filesystem::path& path);
std::vector<DictionaryEntry> parse_dictionary(std::string_view document);

inline constexpr double kDefaultMatchThreshold = 0.75;

enum class MatchDecision { Matched, Novel };

struct MatchResult {
    std::string query;
    std::optional<std::pair<std::string, double>> best;
    std::optional<std::pair<std::string, double>> runner_up;
    MatchDecision decision = MatchDecision::Novel;
    double threshold = kDefaultMatchThreshold;
};

/// Fills missing entry embeddings through `embedder`.
void ensure_embeddings(std::vector<DictionaryEntry>& dict, Gateway& embedder);

/// Best entry by cosine similarity, ties broken by ascending entry_id.
MatchResult match(const std::string& query, std::vector<DictionaryEntry>& dict, double threshold, Gateway& embedder);

/// Decision step alone, on precomputed embeddings.
MatchResult match_embedded(const std::string& query, const EmbeddingVector& query_embedding,
                           const std::vector<DictionaryEntry>& dict, double threshold);

/// Phrases sorted by descending similarity to `seed`; equal similarities keep input order.
std::vector<std::pair<std::string, double>> rank_phrases(const std::string& seed, const std::vector<std::string>& phrases,
                                                          Gateway& embedder);

}  // namespace gestsel
