#include <doctest.h>

#include "gestsel/text.hpp"

using namespace gestsel::text;

TEST_SUITE("text") {

TEST_CASE("normalize_label lowercases and collapses whitespace") {
    CHECK(normalize_label("  Negative   Sweep\t") == "negative sweep");
    CHECK(normalize_label("") == "");
}

TEST_CASE("split_words and join") {
    const auto w = split_words(" a  bc\nd ");
    REQUIRE(w.size() == 3);
    CHECK(w[1] == "bc");
    CHECK(join(w, "-") == "a-bc-d");
}

TEST_CASE("sanitize_component keeps path-safe characters only") {
    CHECK(sanitize_component("gpt-4") == "gpt-4");
    CHECK(sanitize_component("org/model:v1") == "org_model_v1");
    CHECK(sanitize_component("..") == "_..");
    CHECK(sanitize_component("") == "_");
}

TEST_CASE("sha256 of known inputs") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("percent_1dp rounds half up") {
    CHECK(percent_1dp(16.0 / 37.0) == "43.2");
    CHECK(percent_1dp(5.0 / 37.0) == "13.5");
    CHECK(percent_1dp(0.0005) == "0.1");
    CHECK(percent_1dp(1.0) == "100.0");
    CHECK(fixed_3dp(1.0 / 3.0) == "0.333");
    CHECK(fixed_3dp(1.0 / 6.0) == "0.167");
}

}
