#include "gestsel/dictionary_matcher.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <set>

#include "gestsel/error.hpp"
#include "gestsel/evaluator.hpp"
#include "gestsel/io.hpp"
#include "gestsel/text.hpp"

namespace gestsel {

using nlohmann::json;

std::string entry_embedding_text(const DictionaryEntry& e) { return e.name + ": " + e.description; }

std::vector<DictionaryEntry> parse_dictionary(std::string_view document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("dictionary: ") + e.what(), -1, -1);
    }
    const auto& entries = doc.is_array() ? doc : doc.value("entries", json::array());
    std::vector<DictionaryEntry> out;
    std::set<std::string> ids;
    long index = 0;
    for (const auto& e : entries) {
        DictionaryEntry d;
        try {
            d.entry_id = e.at("entry_id").get<std::string>();
            d.name = e.at("name").get<std::string>();
            d.description = e.at("description").get<std::string>();
            if (e.contains("category") && e["category"].is_string()) {
                d.category = parse_category(e["category"].get<std::string>());
                if (!d.category) throw ValidationError(d.entry_id, "category", "unknown category");
            }
        } catch (const json::exception& ex) {
            throw ParseError("dictionary entry " + std::to_string(index) + ": " + ex.what(), -1, index);
        }
        if (!ids.insert(d.entry_id).second) throw ValidationError(d.entry_id, "entry_id", "duplicate entry id");
        if (text::trim(d.description).empty()) throw ValidationError(d.entry_id, "description", "must be non-empty");
        out.push_back(std::move(d));
        ++index;
    }
    return out;
}

std::vector<DictionaryEntry> load_dictionary(const std::filesystem::path& path) {
    return parse_dictionary(io::read_file(path));
}

void ensure_embeddings(std::vector<DictionaryEntry>& dict, Gateway& embedder) {
    std::vector<std::string> texts;
    std::vector<size_t> missing;
    for (size_t i = 0; i < dict.size(); ++i) {
        if (!dict[i].embedding) {
            texts.push_back(entry_embedding_text(dict[i]));
            missing.push_back(i);
        }
    }
    if (texts.empty()) return;
    auto vectors = embedder.embed(texts);
    for (size_t k = 0; k < missing.size(); ++k) dict[missing[k]].embedding = std::move(vectors[k]);
}

MatchResult match_embedded(const std::string& query, const EmbeddingVector& query_embedding,
                           const std::vector<DictionaryEntry>& dict, double threshold) {
    if (dict.empty()) throw Error(ErrorKind::EmptyDictionary, "gesture dictionary is empty");
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error(ErrorKind::Config, "threshold must lie in [0, 1]");
    std::vector<std::pair<std::string, double>> scored;
    for (const auto& e : dict) {
        if (!e.embedding) throw Error(ErrorKind::Config, "entry '" + e.entry_id + "' has no embedding");
        scored.emplace_back(e.entry_id, cosine(query_embedding, *e.embedding));
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    MatchResult r;
    r.query = query;
    r.threshold = threshold;
    r.best = scored.front();
    if (scored.size() > 1) r.runner_up = scored[1];
    r.decision = r.best->second >= threshold ? MatchDecision::Matched : MatchDecision::Novel;
    return r;
}

MatchResult match(const std::string& query, std::vector<DictionaryEntry>& dict, double threshold, Gateway& embedder) {
    if (dict.empty()) throw Error(ErrorKind::EmptyDictionary, "gesture dictionary is empty");
    ensure_embeddings(dict, embedder);
    const auto q = embedder.embed({query});
    return match_embedded(query, q.front(), dict, threshold);
}

std::vector<std::pair<std::string, double>> rank_phrases(const std::string& seed, const std::vector<std::string>& phrases,
                                                          Gateway& embedder) {
    if (phrases.empty()) throw Error(ErrorKind::Config, "rank_phrases needs at least one phrase");
    std::vector<std::string> texts{seed};
    texts.insert(texts.end(), phrases.begin(), phrases.end());
    const auto vectors = embedder.embed(texts);
    std::vector<std::pair<std::string, double>> ranked;
    for (size_t i = 0; i < phrases.size(); ++i) ranked.emplace_back(phrases[i], cosine(vectors[0], vectors[i + 1]));
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    return ranked;
}

}  // namespace gestsel
