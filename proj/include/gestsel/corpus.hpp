#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gestsel {

enum class GestureCategory { Span, Container, Sweep };
enum class PalmOrientation { Up, Down, In, Forward };

std::string_view to_string(GestureCategory c);
std::string_view to_string(PalmOrientation p);
std::optional<GestureCategory> parse_category(std::string_view s);
std::optional<PalmOrientation> parse_palm(std::string_view s);

inline constexpr GestureCategory kAllCategories[] = {GestureCategory::Span, GestureCategory::Container,
                                                    GestureCategory::Sweep};
inline constexpr PalmOrientation kAllPalms[] = {PalmOrientation::Up, PalmOrientation::Down, PalmOrientation::In,
                                               PalmOrientation::Forward};

/// Category plus motoric detail. Sweeps carry a palm orientation, other categories never do.
class PhysicalGesture {
public:
    static PhysicalGesture span() { return PhysicalGesture(GestureCategory::Span, std::nullopt); }
    static PhysicalGesture container() { return PhysicalGesture(GestureCategory::Container, std::nullopt); }
    static PhysicalGesture sweep(PalmOrientation palm) { return PhysicalGesture(GestureCategory::Sweep, palm); }

    /// Throws std::invalid_argument when the palm/category pairing is illegal.
    static PhysicalGesture make(GestureCategory category, std::optional<PalmOrientation> palm);

    GestureCategory category() const noexcept { return category_; }
    std::optional<PalmOrientation> palm() const noexcept { return palm_; }

    /// Stable key such as "span" or "sweep-down".
    std::string key() const;

    auto operator<=>(const PhysicalGesture&) const = default;

private:
    PhysicalGesture(GestureCategory c, std::optional<PalmOrientation> p) : category_(c), palm_(p) {}
    GestureCategory category_;
    std::optional<PalmOrientation> palm_;
};

/// Every constructible physical gesture, in a fixed order (6 values).
std::vector<PhysicalGesture> all_physical_gestures();

struct GestureAnnotation {
    std::string id;
    std::string segment_text;
    std::string trigger_phrase;
    GestureCategory category = GestureCategory::Span;
    PhysicalGesture physical = PhysicalGesture::span();
    std::string semantic_descriptor;
    std::string speaker;
    std::string context;

    bool operator==(const GestureAnnotation&) const = default;
};

struct Corpus {
    std::string name;
    std::string version;
    std::string context_statement;
    std::vector<GestureAnnotation> annotations;

    const GestureAnnotation* find(std::string_view id) const;
    bool operator==(const Corpus&) const = default;
};

struct CorpusStats {
    size_t n_annotations = 0;
    size_t n_categories = 0;
    size_t n_physical = 0;
    size_t n_semantic_gestures = 0;
    size_t n_semantic_descriptors = 0;
    std::map<GestureCategory, size_t> per_category_counts;
};

/// Throws ValidationError naming the first violating annotation and field.
void validate(const Corpus& corpus);

/// Parse a corpus document from memory; `source` names it in error messages.
Corpus parse_corpus(std::string_view document, std::string_view source = "<memory>");
Corpus load_corpus(const std::filesystem::path& path);

std::string serialize_corpus(const Corpus& corpus);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// Convert a flat comma-separated table (header row required) into a corpus.
/// Columns: id,segment_text,trigger_phrase,category,palm_orientation,semantic_descriptor,speaker,context
Corpus corpus_from_csv(std::string_view csv, std::string name, std::string version, std::string context_statement);

CorpusStats compute_stats(const Corpus& corpus);

}  // namespace gestsel
