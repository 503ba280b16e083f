#include <doctest.h>

#include "gestsel/error.hpp"
#include "gestsel/normalizer.hpp"
#include "test_support.hpp"

using namespace gestsel;

namespace {

GestureAnnotation truth(GestureCategory cat, std::optional<PalmOrientation> palm, const std::string& descriptor) {
    GestureAnnotation a;
    a.id = "x";
    a.segment_text = "x";
    a.trigger_phrase = "x";
    a.category = cat;
    a.physical = PhysicalGesture::make(cat, palm);
    a.semantic_descriptor = descriptor;
    return a;
}

const auto kNegativeSweep = truth(GestureCategory::Sweep, PalmOrientation::Down, "negative");
const auto kInclusiveSpan = truth(GestureCategory::Span, std::nullopt, "inclusive");

}  // namespace

TEST_SUITE("normalizer") {

TEST_CASE("semantic prefix rule") {
    const auto neg = score(parse("negation sweep"), kNegativeSweep, SpecLevel::SemanticGesture, ScoringPolicy::FirstCandidate);
    CHECK(neg.matched);
    CHECK(neg.match_kind == MatchKind::SemanticPrefix);
    const auto inc = parse("inclusive sweep");
    CHECK_FALSE(score(inc, kInclusiveSpan, SpecLevel::SemanticGesture, ScoringPolicy::FirstCandidate).matched);
    CHECK(score(inc, kInclusiveSpan, SpecLevel::SemanticOnly, ScoringPolicy::FirstCandidate).matched);
}

TEST_CASE("exact semantic gesture") {
    const auto v = score(parse("Negative sweep."), kNegativeSweep, SpecLevel::SemanticGesture, ScoringPolicy::FirstCandidate);
    CHECK(v.matched);
    CHECK(v.match_kind == MatchKind::Exact);
}

TEST_CASE("semantic_key takes the first five characters") {
    CHECK(semantic_key("negative") == "negat");
    CHECK(semantic_key("negation") == "negat");
    CHECK(semantic_key("inclusive") == "inclu");
    CHECK(semantic_key("big") == "big");
    CHECK_THROWS_AS(semantic_key("   "), Error);
}

TEST_CASE("slash alternatives expand left to right") {
    const auto p = parse("negative/negation span/sweep");
    REQUIRE(p.candidates.size() == 4);
    CHECK(p.candidates[0].text == "negative span");
    CHECK(p.candidates[1].text == "negative sweep");
    CHECK(p.candidates[2].text == "negation span");
    CHECK(p.candidates[3].text == "negation sweep");
    CHECK(p.candidates[3].category_guess == GestureCategory::Sweep);
}

TEST_CASE("comma and 'or' separate candidates") {
    const auto p = parse("temporal span, forward sweep or positive span");
    REQUIRE(p.candidates.size() == 3);
    CHECK(p.candidates[0].semantic_guess == "temporal");
    CHECK(p.candidates[1].category_guess == GestureCategory::Sweep);
    CHECK(p.candidates[2].semantic_guess == "positive");
}

TEST_CASE("palm orientation phrases") {
    auto p = parse("sweep with palm facing down");
    REQUIRE(p.candidates.size() == 1);
    CHECK(p.candidates[0].category_guess == GestureCategory::Sweep);
    CHECK(p.candidates[0].palm_guess == PalmOrientation::Down);
    p = parse("Sweep with palms facing upward");
    CHECK(p.candidates[0].palm_guess == PalmOrientation::Up);
    p = parse("forward sweep");
    CHECK_FALSE(p.candidates[0].palm_guess.has_value());
    CHECK(score(parse("sweep with palm facing down"), kNegativeSweep, SpecLevel::PhysicalDescription,
                ScoringPolicy::FirstCandidate).matched);
    CHECK_FALSE(score(parse("sweep with palm facing up"), kNegativeSweep, SpecLevel::PhysicalDescription,
                      ScoringPolicy::FirstCandidate).matched);
    CHECK_FALSE(score(parse("sweep"), kNegativeSweep, SpecLevel::PhysicalDescription, ScoringPolicy::FirstCandidate).matched);
}

TEST_CASE("span needs no palm at the physical level") {
    CHECK(score(parse("span"), kInclusiveSpan, SpecLevel::PhysicalDescription, ScoringPolicy::FirstCandidate).matched);
}

TEST_CASE("refusals parse to no candidates") {
    for (const char* s : {"", "   ", "No gesture.", "I cannot determine the gesture from the text."}) {
        const auto p = parse(s);
        CHECK(p.is_refusal);
        CHECK(p.candidates.empty());
        CHECK_FALSE(score(p, kNegativeSweep, SpecLevel::Category, ScoringPolicy::AnyCandidate).matched);
    }
}

TEST_CASE("free text with a category word still yields a candidate") {
    const auto p = parse("He likely used an open-palm sweep or a span gesture to emphasize the point.");
    REQUIRE(p.candidates.size() >= 2);
    CHECK(p.candidates[0].category_guess == GestureCategory::Sweep);
    CHECK(p.candidates[1].category_guess == GestureCategory::Span);
}

TEST_CASE("first versus any candidate") {
    const auto p = parse("container, negative sweep");
    const auto first = score(p, kNegativeSweep, SpecLevel::Category, ScoringPolicy::FirstCandidate);
    const auto any = score(p, kNegativeSweep, SpecLevel::Category, ScoringPolicy::AnyCandidate);
    CHECK_FALSE(first.matched);
    CHECK(any.matched);
    CHECK(any.match_kind == MatchKind::CompoundAny);
    CHECK(any.matched_candidate_index == 1);
}

TEST_CASE("semantic-only uses the descriptor alone") {
    CHECK(score(parse("positive"), truth(GestureCategory::Sweep, PalmOrientation::Up, "positive"), SpecLevel::SemanticOnly,
                ScoringPolicy::FirstCandidate).matched);
    CHECK_FALSE(score(parse("negative"), truth(GestureCategory::Sweep, PalmOrientation::Up, "positive"),
                      SpecLevel::SemanticOnly, ScoringPolicy::FirstCandidate).matched);
}

TEST_CASE("parse is total and stable on awkward input") {
    for (const char* s : {"////", ",,,;;", "or or or", "span/", "/sweep", "\xc3\xa9l\xc3\xa9gant sweep", "SPAN!!!"}) {
        const auto a = parse(s);
        const auto b = parse(s);
        CHECK(a == b);
    }
    CHECK(parse("SPAN!!!").candidates.at(0).category_guess == GestureCategory::Span);
}

TEST_CASE("keyword override file") {
    testsupport::TempDir d;
    testsupport::write(d / "n.json", R"({"category_keywords": {"span": "span", "stretch": "span", "container": "container", "sweep": "sweep"}})");
    const auto cfg = load_normalizer_config(d / "n.json");
    CHECK(parse("temporal stretch", cfg).candidates.at(0).category_guess == GestureCategory::Span);
    CHECK(parse("container", cfg).candidates.at(0).category_guess == GestureCategory::Container);
}

}

TEST_SUITE("normalizer") {

TEST_CASE("shipped keyword file equals the built-in defaults") {
    const auto cfg = load_normalizer_config(testsupport::source_dir() / "data" / "normalizer_keywords.json");
    const auto& def = default_normalizer_config();
    CHECK(cfg.category_keywords == def.category_keywords);
    CHECK(cfg.palm_phrases == def.palm_phrases);
    CHECK(cfg.refusal_phrases == def.refusal_phrases);
    CHECK(cfg.stopwords == def.stopwords);
    CHECK(cfg.semantic_prefix_length == def.semantic_prefix_length);
}

}
