#include <doctest.h>

#include "gestsel/corpus.hpp"
#include "gestsel/error.hpp"
#include "test_support.hpp"

using namespace gestsel;
using testsupport::TempDir;

TEST_SUITE("corpus") {

TEST_CASE("reference corpus cardinalities") {
    const auto c = load_corpus(testsupport::reference_corpus());
    const auto s = compute_stats(c);
    CHECK(s.n_annotations == 37);
    CHECK(s.n_categories == 3);
    CHECK(s.n_physical == 6);
    CHECK(s.n_semantic_gestures == 17);
    CHECK(s.n_semantic_descriptors == 15);
    size_t sum = 0;
    for (const auto& [cat, n] : s.per_category_counts) sum += n;
    CHECK(sum == 37);
    CHECK(c.context_statement == "Barrack Obama is giving a speech at the Democratic National Convention.");
}

TEST_CASE("physical gesture pairing rules") {
    CHECK(PhysicalGesture::sweep(PalmOrientation::Down).key() == "sweep-down");
    CHECK(PhysicalGesture::span().key() == "span");
    CHECK_THROWS_AS(PhysicalGesture::make(GestureCategory::Span, PalmOrientation::Up), std::invalid_argument);
    CHECK_THROWS_AS(PhysicalGesture::make(GestureCategory::Sweep, std::nullopt), std::invalid_argument);
    CHECK(all_physical_gestures().size() == 6);
}

TEST_CASE("trigger must occur in the segment") {
    try {
        load_corpus(testsupport::test_data("bad_trigger_corpus.json"));
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.id() == "t2");
        CHECK(e.field() == "trigger_phrase");
    }
}

TEST_CASE("syntax errors report the line") {
    const std::string doc = "{\n  \"name\": \"x\",\n  \"annotations\": [\n    oops\n  ]\n}";
    try {
        parse_corpus(doc);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 4);
    }
}

TEST_CASE("missing field reports the record index") {
    const std::string doc = R"({"name":"x","annotations":[
      {"id":"a","segment_text":"all of it","trigger_phrase":"all","category":"span","semantic_descriptor":"inclusive"},
      {"id":"b","segment_text":"none"}]})";
    try {
        parse_corpus(doc);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.record() == 1);
    }
}

TEST_CASE("duplicate ids and uppercase descriptors are rejected") {
    auto c = load_corpus(testsupport::test_data("tiny_corpus.json"));
    auto dup = c;
    dup.annotations[1].id = dup.annotations[0].id;
    CHECK_THROWS_AS(validate(dup), ValidationError);
    auto upper = c;
    upper.annotations[0].semantic_descriptor = "Temporal";
    CHECK_THROWS_AS(validate(upper), ValidationError);
}

TEST_CASE("serialize then parse is the identity") {
    const auto c = load_corpus(testsupport::reference_corpus());
    const auto text = serialize_corpus(c);
    CHECK(parse_corpus(text) == c);
    CHECK(serialize_corpus(parse_corpus(text)) == text);
    TempDir d;
    save_corpus(c, d / "c.json");
    CHECK(load_corpus(d / "c.json") == c);
}

TEST_CASE("CSV import with quoted fields") {
    const std::string csv =
        "id,segment_text,trigger_phrase,category,palm_orientation,semantic_descriptor,speaker,context\n"
        "a,\"We waited, all summer.\",all summer,span,,temporal,S,\n"
        "b,\"Not \"\"that\"\" one\",\"\"\"that\"\"\",sweep,down,negative,S,\n";
    const auto c = corpus_from_csv(csv, "csv", "0.1", "Someone is talking.");
    REQUIRE(c.annotations.size() == 2);
    CHECK(c.annotations[0].segment_text == "We waited, all summer.");
    CHECK(c.annotations[1].trigger_phrase == "\"that\"");
    CHECK(c.annotations[1].physical == PhysicalGesture::sweep(PalmOrientation::Down));
}

TEST_CASE("CSV missing column") {
    CHECK_THROWS_AS(corpus_from_csv("id,segment_text\n", "x", "1", "c"), ParseError);
}

TEST_CASE("empty corpus has no stats") {
    Corpus c;
    c.name = "empty";
    try {
        compute_stats(c);
        FAIL("expected EmptyCorpus");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EmptyCorpus);
    }
}

TEST_CASE("find by id") {
    const auto c = load_corpus(testsupport::test_data("tiny_corpus.json"));
    REQUIRE(c.find("t2") != nullptr);
    CHECK(c.find("t2")->semantic_descriptor == "negative");
    CHECK(c.find("zz") == nullptr);
}

}
