#include "gestsel/corpus.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <set>
#include <stdexcept>

#include "gestsel/error.hpp"
#include "gestsel/io.hpp"
#include "gestsel/text.hpp"

namespace gestsel {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string_view to_string(GestureCategory c) {
    switch (c) {
        case GestureCategory::Span: return "span";
        case GestureCategory::Container: return "container";
        case GestureCategory::Sweep: return "sweep";
    }
    return "?";
}

std::string_view to_string(PalmOrientation p) {
    switch (p) {
        case PalmOrientation::Up: return "up";
        case PalmOrientation::Down: return "down";
        case PalmOrientation::In: return "in";
        case PalmOrientation::Forward: return "forward";
    }
    return "?";
}

std::optional<GestureCategory> parse_category(std::string_view s) {
    const auto n = text::normalize_label(s);
    for (auto c : kAllCategories) {
        if (n == to_string(c)) return c;
    }
    return std::nullopt;
}

std::optional<PalmOrientation> parse_palm(std::string_view s) {
    const auto n = text::normalize_label(s);
    for (auto p : kAllPalms) {
        if (n == to_string(p)) return p;
    }
    return std::nullopt;
}

PhysicalGesture PhysicalGesture::make(GestureCategory category, std::optional<PalmOrientation> palm) {
    if ((category == GestureCategory::Sweep) != palm.has_value()) {
        throw std::invalid_argument("palm orientation must be present exactly for sweeps");
    }
    return PhysicalGesture(category, palm);
}

std::string PhysicalGesture::key() const {
    std::string k(to_string(category_));
    if (palm_) {
        k += "-";
        k += to_string(*palm_);
    }
    return k;
}

std::vector<PhysicalGesture> all_physical_gestures() {
    std::vector<PhysicalGesture> out{PhysicalGesture::span(), PhysicalGesture::container()};
    for (auto p : kAllPalms) out.push_back(PhysicalGesture::sweep(p));
    return out;
}

const GestureAnnotation* Corpus::find(std::string_view id) const {
    auto it = std::find_if(annotations.begin(), annotations.end(), [&](const auto& a) { return a.id == id; });
    return it == annotations.end() ? nullptr : &*it;
}

void validate(const Corpus& corpus) {
    std::set<std::string> seen;
    for (const auto& a : corpus.annotations) {
        if (a.id.empty()) throw ValidationError("<empty>", "id", "id must be non-empty");
        if (!seen.insert(a.id).second) throw ValidationError(a.id, "id", "duplicate id");
        if (a.trigger_phrase.empty()) throw ValidationError(a.id, "trigger_phrase", "must be non-empty");
        if (!text::contains(a.segment_text, a.trigger_phrase)) {
            throw ValidationError(a.id, "trigger_phrase", "'" + a.trigger_phrase + "' is not a substring of segment_text");
        }
        if (a.semantic_descriptor.empty()) throw ValidationError(a.id, "semantic_descriptor", "must be non-empty");
        if (a.semantic_descriptor != text::normalize_label(a.semantic_descriptor)) {
            throw ValidationError(a.id, "semantic_descriptor", "must be lowercase and single-spaced");
        }
        if (a.physical.category() != a.category) {
            throw ValidationError(a.id, "physical", "physical category disagrees with category");
        }
    }
}

namespace {

long line_of_offset(std::string_view doc, size_t offset) {
    offset = std::min(offset, doc.size());
    return 1 + static_cast<long>(std::count(doc.begin(), doc.begin() + static_cast<long>(offset), '\n'));
}

std::string require_string(const json& rec, const char* key, long index, std::string_view source) {
    auto it = rec.find(key);
    if (it == rec.end() || !it->is_string()) {
        throw ParseError(std::string(source) + ": record " + std::to_string(index) + ": missing string field '" + key +
                             "'",
                         -1, index);
    }
    return it->get<std::string>();
}

GestureAnnotation annotation_from_json(const json& rec, long index, std::string_view source) {
    if (!rec.is_object()) {
        throw ParseError(std::string(source) + ": record " + std::to_string(index) + " is not an object", -1, index);
    }
    GestureAnnotation a;
    a.id = text::trim(require_string(rec, "id", index, source));
    a.segment_text = require_string(rec, "segment_text", index, source);
    a.trigger_phrase = require_string(rec, "trigger_phrase", index, source);
    a.semantic_descriptor = text::normalize_label(require_string(rec, "semantic_descriptor", index, source));
    a.speaker = rec.value("speaker", "");
    a.context = rec.value("context", "");

    const auto cat_text = require_string(rec, "category", index, source);
    const auto cat = parse_category(cat_text);
    if (!cat) throw ValidationError(a.id, "category", "unknown category '" + cat_text + "'");
    a.category = *cat;

    std::optional<PalmOrientation> palm;
    GestureCategory phys_cat = a.category;
    if (auto it = rec.find("physical"); it != rec.end()) {
        if (!it->is_object()) {
            throw ParseError(std::string(source) + ": record " + std::to_string(index) + ": 'physical' must be an object",
                             -1, index);
        }
        if (auto c = it->find("category"); c != it->end() && c->is_string()) {
            auto parsed = parse_category(c->get<std::string>());
            if (!parsed) throw ValidationError(a.id, "physical", "unknown category '" + c->get<std::string>() + "'");
            phys_cat = *parsed;
        }
        if (auto p = it->find("palm_orientation"); p != it->end() && !p->is_null()) {
            if (!p->is_string()) throw ValidationError(a.id, "physical", "palm_orientation must be a string or null");
            palm = parse_palm(p->get<std::string>());
            if (!palm) throw ValidationError(a.id, "physical", "unknown palm orientation '" + p->get<std::string>() + "'");
        }
    }
    try {
        a.physical = PhysicalGesture::make(phys_cat, palm);
    } catch (const std::invalid_argument& e) {
        throw ValidationError(a.id, "physical", e.what());
    }
    return a;
}

ordered_json annotation_to_json(const GestureAnnotation& a) {
    ordered_json phys;
    phys["category"] = to_string(a.physical.category());
    if (auto p = a.physical.palm()) {
        phys["palm_orientation"] = to_string(*p);
    } else {
        phys["palm_orientation"] = nullptr;
    }
    ordered_json j;
    j["id"] = a.id;
    j["segment_text"] = a.segment_text;
    j["trigger_phrase"] = a.trigger_phrase;
    j["category"] = to_string(a.category);
    j["physical"] = std::move(phys);
    j["semantic_descriptor"] = a.semantic_descriptor;
    j["speaker"] = a.speaker;
    j["context"] = a.context;
    return j;
}

}  // namespace

Corpus parse_corpus(std::string_view document, std::string_view source) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string(source) + ": " + e.what(), line_of_offset(document, e.byte), -1);
    }
    if (!doc.is_object()) throw ParseError(std::string(source) + ": top level must be an object", 1, -1);
    Corpus c;
    c.name = doc.value("name", "");
    c.version = doc.value("version", "");
    c.context_statement = doc.value("context_statement", "");
    auto it = doc.find("annotations");
    if (it == doc.end() || !it->is_array()) {
        throw ParseError(std::string(source) + ": missing 'annotations' array", -1, -1);
    }
    long index = 0;
    for (const auto& rec : *it) c.annotations.push_back(annotation_from_json(rec, index++, source));
    validate(c);
    return c;
}

Corpus load_corpus(const std::filesystem::path& path) {
    return parse_corpus(io::read_file(path), path.string());
}

std::string serialize_corpus(const Corpus& corpus) {
    ordered_json j;
    j["name"] = corpus.name;
    j["version"] = corpus.version;
    j["context_statement"] = corpus.context_statement;
    auto arr = ordered_json::array();
    for (const auto& a : corpus.annotations) arr.push_back(annotation_to_json(a));
    j["annotations"] = std::move(arr);
    return j.dump(2) + "\n";
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    io::write_file_atomic(path, serialize_corpus(corpus));
}

namespace {

// RFC 4180 style: quoted fields may contain commas, doubled quotes and newlines.
std::vector<std::vector<std::string>> parse_csv(std::string_view csv) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool any = false;
    long line = 1;
    for (size_t i = 0; i < csv.size(); ++i) {
        const char c = csv[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < csv.size() && csv[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                quoted = true;
                any = true;
                break;
            case ',':
                row.push_back(std::move(field));
                field.clear();
                any = true;
                break;
            case '\r':
                break;
            case '\n':
                ++line;
                if (any || !field.empty()) {
                    row.push_back(std::move(field));
                    rows.push_back(std::move(row));
                }
                row.clear();
                field.clear();
                any = false;
                break;
            default:
                field.push_back(c);
                any = true;
        }
    }
    if (quoted) throw ParseError("csv: unterminated quoted field", line, static_cast<long>(rows.size()) - 1);
    if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

Corpus corpus_from_csv(std::string_view csv, std::string name, std::string version, std::string context_statement) {
    auto rows = parse_csv(csv);
    if (rows.empty()) throw ParseError("csv: missing header row", 1, -1);
    const auto& header = rows.front();
    auto column = [&](std::string_view col) -> long {
        for (size_t i = 0; i < header.size(); ++i) {
            if (text::trim(header[i]) == col) return static_cast<long>(i);
        }
        return -1;
    };
    static constexpr std::string_view kColumns[] = {"id",      "segment_text",        "trigger_phrase",
                                                    "category", "palm_orientation",    "semantic_descriptor",
                                                    "speaker",  "context"};
    for (auto col : kColumns) {
        const bool optional = col == "speaker" || col == "context" || col == "palm_orientation";
        if (!optional && column(col) < 0) throw ParseError("csv: missing column '" + std::string(col) + "'", 1, -1);
    }
    json records = json::array();
    for (size_t r = 1; r < rows.size(); ++r) {
        json rec = json::object();
        for (auto col : kColumns) {
            const long idx = column(col);
            if (idx < 0) continue;
            if (static_cast<size_t>(idx) >= rows[r].size()) {
                throw ParseError("csv: record " + std::to_string(r - 1) + " has too few fields", -1,
                                 static_cast<long>(r - 1));
            }
            rec[std::string(col)] = rows[r][static_cast<size_t>(idx)];
        }
        json phys = json::object();
        phys["category"] = rec["category"];
        const auto palm = text::trim(rec.value("palm_orientation", ""));
        phys["palm_orientation"] = palm.empty() ? json(nullptr) : json(palm);
        rec.erase("palm_orientation");
        rec["physical"] = std::move(phys);
        records.push_back(std::move(rec));
    }
    json doc;
    doc["name"] = std::move(name);
    doc["version"] = std::move(version);
    doc["context_statement"] = std::move(context_statement);
    doc["annotations"] = std::move(records);
    return parse_corpus(doc.dump(), "<csv>");
}

CorpusStats compute_stats(const Corpus& corpus) {
    if (corpus.annotations.empty()) throw Error(ErrorKind::EmptyCorpus, "corpus '" + corpus.name + "' is empty");
    CorpusStats s;
    std::set<GestureCategory> categories;
    std::set<std::string> physical;
    std::set<std::pair<std::string, GestureCategory>> semantic_gestures;
    std::set<std::string> descriptors;
    for (const auto& a : corpus.annotations) {
        const auto desc = text::normalize_label(a.semantic_descriptor);
        categories.insert(a.category);
        physical.insert(a.physical.key());
        semantic_gestures.emplace(desc, a.category);
        descriptors.insert(desc);
        ++s.per_category_counts[a.category];
    }
    s.n_annotations = corpus.annotations.size();
    s.n_categories = categories.size();
    s.n_physical = physical.size();
    s.n_semantic_gestures = semantic_gestures.size();
    s.n_semantic_descriptors = descriptors.size();
    return s;
}

}  // namespace gestsel
