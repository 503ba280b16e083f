#include "gestsel/normalizer.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>

#include "gestsel/error.hpp"
#include "gestsel/io.hpp"
#include "gestsel/text.hpp"

namespace gestsel {

std::string_view to_string(MatchKind kind) {
    switch (kind) {
        case MatchKind::Exact: return "exact";
        case MatchKind::SemanticPrefix: return "semantic_prefix";
        case MatchKind::CompoundAny: return "compound_any";
        case MatchKind::None: return "none";
    }
    return "?";
}

std::string_view to_string(ScoringPolicy policy) {
    return policy == ScoringPolicy::FirstCandidate ? "first" : "any";
}

std::optional<ScoringPolicy> parse_scoring_policy(std::string_view s) {
    const auto n = text::normalize_label(s);
    if (n == "first" || n == "first_candidate") return ScoringPolicy::FirstCandidate;
    if (n == "any" || n == "any_candidate") return ScoringPolicy::AnyCandidate;
    return std::nullopt;
}

const NormalizerConfig& default_normalizer_config() {
    static const NormalizerConfig c{};
    return c;
}

NormalizerConfig load_normalizer_config(const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(io::read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what(), -1, -1);
    }
    NormalizerConfig c;
    auto strings = [&](const char* key) {
        std::vector<std::string> out;
        for (const auto& v : j.at(key)) out.push_back(text::normalize_label(v.get<std::string>()));
        return out;
    };
    try {
        if (j.contains("category_keywords")) {
            c.category_keywords.clear();
            for (const auto& [word, cat] : j["category_keywords"].items()) {
                auto parsed = parse_category(cat.get<std::string>());
                if (!parsed) throw Error(ErrorKind::Config, "unknown category for keyword '" + word + "'");
                c.category_keywords.emplace_back(text::normalize_label(word), *parsed);
            }
        }
        if (j.contains("palm_phrases")) {
            c.palm_phrases.clear();
            for (const auto& [phrase, palm] : j["palm_phrases"].items()) {
                auto parsed = parse_palm(palm.get<std::string>());
                if (!parsed) throw Error(ErrorKind::Config, "unknown palm orientation for phrase '" + phrase + "'");
                c.palm_phrases.emplace_back(text::normalize_label(phrase), *parsed);
            }
        }
        if (j.contains("refusal_phrases")) c.refusal_phrases = strings("refusal_phrases");
        if (j.contains("stopwords")) c.stopwords = strings("stopwords");
        if (j.contains("semantic_prefix_length")) c.semantic_prefix_length = j["semantic_prefix_length"].get<size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Config, path.string() + ": " + e.what());
    }
    return c;
}

namespace {

using Tokens = std::vector<std::string>;

bool is_separator(const std::string& tok) {
    return tok == "," || tok == ";" || tok == "." || tok == "or" || tok == "?" || tok == "!" || tok == ":";
}

// Lowercase and split into word tokens plus standalone separator tokens.
// Slashes stay inside tokens so "span/sweep" can be expanded later.
Tokens tokenize(std::string_view raw) {
    std::string cleaned;
    cleaned.reserve(raw.size() + 16);
    for (size_t i = 0; i < raw.size(); ++i) {
        const char c = raw[i];
        const auto u = static_cast<unsigned char>(c);
        if (u >= 0x80) {
            // Typographic quotes and dashes are punctuation; other UTF-8 is kept.
            if (raw.substr(i, 3) == "\xE2\x80\x9C" || raw.substr(i, 3) == "\xE2\x80\x9D" ||
                raw.substr(i, 3) == "\xE2\x80\x98" || raw.substr(i, 3) == "\xE2\x80\x94") {
                cleaned += ' ';
                i += 2;
            } else if (raw.substr(i, 3) == "\xE2\x80\x99") {
                cleaned += '\'';
                i += 2;
            } else {
                cleaned += c;
            }
            continue;
        }
        if (std::isalnum(u) || c == '/' || c == '-' || c == '\'') {
            cleaned += static_cast<char>(std::tolower(u));
        } else if (c == ',' || c == ';' || c == '.' || c == '?' || c == '!' || c == ':') {
            cleaned += ' ';
            cleaned += c;
            cleaned += ' ';
        } else {
            cleaned += ' ';
        }
    }
    Tokens toks;
    for (auto& w : text::split_words(cleaned)) {
        // Strip stray quotes/hyphens/slashes at token edges ("'span'").
        size_t b = 0, e = w.size();
        while (b < e && (w[b] == '\'' || w[b] == '-' || w[b] == '/')) ++b;
        while (e > b && (w[e - 1] == '\'' || w[e - 1] == '-' || w[e - 1] == '/')) --e;
        if (b < e) toks.push_back(w.substr(b, e - b));
    }
    return toks;
}

std::vector<Tokens> split_chunks(const Tokens& toks) {
    std::vector<Tokens> chunks(1);
    for (const auto& t : toks) {
        if (is_separator(t)) {
            if (!chunks.back().empty()) chunks.emplace_back();
        } else {
            chunks.back().push_back(t);
        }
    }
    if (chunks.back().empty()) chunks.pop_back();
    return chunks;
}

std::vector<std::string> split_slash(const std::string& tok) {
    std::vector<std::string> alts;
    std::string cur;
    for (char c : tok) {
        if (c == '/') {
            if (!cur.empty()) alts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) alts.push_back(cur);
    return alts;
}

// Cartesian product over slash alternatives, leftmost token varying slowest.
std::vector<Tokens> expand_compounds(const Tokens& chunk) {
    std::vector<Tokens> out(1);
    for (const auto& tok : chunk) {
        const auto alts = split_slash(tok);
        std::vector<Tokens> next;
        for (const auto& prefix : out) {
            for (const auto& alt : alts) {
                auto t = prefix;
                t.push_back(alt);
                next.push_back(std::move(t));
            }
        }
        out = std::move(next);
    }
    return out;
}

bool is_stopword(const std::string& tok, const NormalizerConfig& config) {
    return std::find(config.stopwords.begin(), config.stopwords.end(), tok) != config.stopwords.end();
}

CandidateLabel extract(const Tokens& toks, const NormalizerConfig& config) {
    CandidateLabel c;
    c.text = text::join(toks, " ");

    // Palm phrases, longest first, on token boundaries.
    std::vector<bool> palm_token(toks.size(), false);
    std::vector<std::pair<Tokens, PalmOrientation>> phrases;
    for (const auto& [phrase, palm] : config.palm_phrases) phrases.emplace_back(text::split_words(phrase), palm);
    std::stable_sort(phrases.begin(), phrases.end(),
                     [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
    for (const auto& [words, palm] : phrases) {
        if (words.empty() || words.size() > toks.size()) continue;
        for (size_t i = 0; i + words.size() <= toks.size(); ++i) {
            if (std::equal(words.begin(), words.end(), toks.begin() + static_cast<long>(i))) {
                if (!c.palm_guess) c.palm_guess = palm;
                for (size_t k = i; k < i + words.size(); ++k) palm_token[k] = true;
            }
        }
    }

    std::optional<size_t> cat_index;
    for (size_t i = 0; i < toks.size() && !cat_index; ++i) {
        if (palm_token[i]) continue;
        for (const auto& [word, cat] : config.category_keywords) {
            if (toks[i] == word) {
                c.category_guess = cat;
                cat_index = i;
                break;
            }
        }
    }

    Tokens semantic;
    if (cat_index) {
        for (size_t i = *cat_index; i-- > 0;) {
            if (palm_token[i] || is_stopword(toks[i], config)) break;
            semantic.insert(semantic.begin(), toks[i]);
        }
    } else {
        for (size_t i = 0; i < toks.size(); ++i) {
            if (!palm_token[i] && !is_stopword(toks[i], config)) semantic.push_back(toks[i]);
        }
    }
    if (!semantic.empty()) c.semantic_guess = text::join(semantic, " ");
    return c;
}

bool is_refusal_chunk(const Tokens& chunk, const NormalizerConfig& config) {
    const auto joined = " " + text::join(chunk, " ") + " ";
    for (const auto& phrase : config.refusal_phrases) {
        if (text::contains(joined, " " + phrase + " ")) return true;
    }
    return false;
}

}  // namespace

ParsedSuggestion parse(std::string_view raw, const NormalizerConfig& config) {
    ParsedSuggestion out;
    out.raw = std::string(raw);
    for (const auto& chunk : split_chunks(tokenize(raw))) {
        if (is_refusal_chunk(chunk, config)) continue;
        for (const auto& expanded : expand_compounds(chunk)) {
            if (expanded.empty()) continue;
            auto c = extract(expanded, config);
            // A chunk made only of filler words ("he used the following gesture") carries no label.
            if (!c.category_guess && !c.palm_guess && !c.semantic_guess) continue;
            out.candidates.push_back(std::move(c));
        }
    }
    out.is_refusal = out.candidates.empty();
    return out;
}

std::string semantic_key(std::string_view descriptor, const NormalizerConfig& config) {
    const auto words = text::split_words(text::to_lower(descriptor));
    if (words.empty()) throw Error(ErrorKind::EmptyDescriptor, "semantic descriptor is empty");
    const auto& first = words.front();
    // Count UTF-8 code points, not bytes.
    size_t chars = 0, end = 0;
    while (end < first.size() && chars < config.semantic_prefix_length) {
        ++end;
        while (end < first.size() && (static_cast<unsigned char>(first[end]) & 0xC0) == 0x80) ++end;
        ++chars;
    }
    return first.substr(0, end);
}

namespace {

std::optional<MatchKind> match_candidate(const CandidateLabel& c, const GestureAnnotation& truth, SpecLevel level,
                                         const NormalizerConfig& config) {
    const bool category_ok = c.category_guess == truth.category;
    auto semantic = [&]() -> std::optional<MatchKind> {
        if (!c.semantic_guess) return std::nullopt;
        if (semantic_key(*c.semantic_guess, config) != semantic_key(truth.semantic_descriptor, config)) {
            return std::nullopt;
        }
        return *c.semantic_guess == truth.semantic_descriptor ? MatchKind::Exact : MatchKind::SemanticPrefix;
    };
    switch (level) {
        case SpecLevel::Category:
            return category_ok ? std::optional(MatchKind::Exact) : std::nullopt;
        case SpecLevel::PhysicalDescription: {
            const auto palm = truth.physical.palm();
            const bool palm_ok = !palm || c.palm_guess == palm;
            return category_ok && palm_ok ? std::optional(MatchKind::Exact) : std::nullopt;
        }
        case SpecLevel::SemanticGesture:
            return category_ok ? semantic() : std::nullopt;
        case SpecLevel::SemanticOnly:
            return semantic();
    }
    return std::nullopt;
}

}  // namespace

MatchVerdict score(const ParsedSuggestion& suggestion, const GestureAnnotation& truth, SpecLevel level,
                   ScoringPolicy policy, const NormalizerConfig& config) {
    MatchVerdict v;
    v.level = level;
    if (suggestion.is_refusal || suggestion.candidates.empty()) return v;
    const size_t limit = policy == ScoringPolicy::FirstCandidate ? 1 : suggestion.candidates.size();
    for (size_t i = 0; i < limit; ++i) {
        if (auto kind = match_candidate(suggestion.candidates[i], truth, level, config)) {
            v.matched = true;
            v.match_kind = i > 0 ? MatchKind::CompoundAny : *kind;
            v.matched_candidate_index = i;
            return v;
        }
    }
    return v;
}

}  // namespace gestsel
