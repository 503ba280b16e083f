#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "gestsel/error.hpp"
#include "gestsel/prompt_builder.hpp"
#include "test_support.hpp"

using namespace gestsel;

namespace {

const Corpus& reference() {
    static const Corpus c = load_corpus(testsupport::reference_corpus());
    return c;
}

std::vector<ExamplePlan> all_plans() {
    std::vector<ExamplePlan> plans = {ExamplePlan::per_category(2), ExamplePlan::per_category(4),
                                      ExamplePlan::per_category(6), ExamplePlan::leave_one_out()};
    auto shuffled = ExamplePlan::per_category(4);
    shuffled.ordering = ExampleOrdering::SeededShuffle;
    shuffled.seed = 99;
    plans.push_back(shuffled);
    auto grouped = ExamplePlan::per_category(2);
    grouped.grouping = ExampleGrouping::ByCategory;
    plans.push_back(grouped);
    return plans;
}

}  // namespace

TEST_SUITE("prompt_builder") {

TEST_CASE("zero-shot prompt for the 76 days target matches the displayed block") {
    const auto b = build_zeroshot(reference(), "g01");
    CHECK(b.rendered == testsupport::golden("zeroshot_g01.txt"));
    CHECK(b.example_ids.empty());
    CHECK(b.rendered.ends_with("what gesture did he use?"));
}

TEST_CASE("few-shot parts match the displayed context and example") {
    const auto b = build_fewshot(reference(), "g02", SpecLevel::Category, ExamplePlan::per_category(2));
    CHECK(b.context_part == testsupport::golden("context.txt"));
    REQUIRE(!b.example_parts.empty());
    CHECK(b.example_ids.front() == "g01");
    CHECK(b.example_parts.front() == testsupport::golden("fewshot_example_g01_category.txt"));
    CHECK(b.rendered == testsupport::golden("fewshot_k2_category_g02.txt"));
    CHECK(b.target_part.ends_with("he used the following gesture: "));
}

TEST_CASE("rendered is the parts joined by blank lines") {
    const auto b = build_fewshot(reference(), "g10", SpecLevel::PhysicalDescription, ExamplePlan::per_category(4));
    std::string expect = b.context_part;
    for (const auto& p : b.example_parts) expect += "\n\n" + p;
    expect += "\n\n" + b.target_part;
    CHECK(b.rendered == expect);
}

TEST_CASE("labels at each level") {
    const auto* g04 = reference().find("g04");
    REQUIRE(g04 != nullptr);
    CHECK(render_label(*g04, SpecLevel::Category) == "sweep");
    CHECK(render_label(*g04, SpecLevel::PhysicalDescription) == "sweep with palm facing down");
    CHECK(render_label(*g04, SpecLevel::SemanticGesture) == "negative sweep");
    CHECK(render_label(*g04, SpecLevel::SemanticOnly) == "negative");
    const auto* g01 = reference().find("g01");
    CHECK(render_label(*g01, SpecLevel::PhysicalDescription) == "span");
}

TEST_CASE("target is never an example and counts follow the plan") {
    const auto& c = reference();
    const auto stats = compute_stats(c);
    for (const auto& plan : all_plans()) {
        for (const auto& a : c.annotations) {
            const auto b = build_fewshot(c, a.id, SpecLevel::SemanticGesture, plan);
            CHECK(std::find(b.example_ids.begin(), b.example_ids.end(), a.id) == b.example_ids.end());
            const std::set<std::string> unique(b.example_ids.begin(), b.example_ids.end());
            CHECK(unique.size() == b.example_ids.size());
            if (plan.mode == PlanMode::LeaveOneOut) {
                CHECK(b.example_ids.size() == c.annotations.size() - 1);
            } else {
                size_t expect = 0;
                for (const auto& [cat, n] : stats.per_category_counts) {
                    const size_t pool = cat == a.category ? n - 1 : n;
                    expect += std::min<size_t>(pool, static_cast<size_t>(plan.k));
                }
                CHECK(b.example_ids.size() == expect);
            }
        }
    }
}

TEST_CASE("every example carries exactly its own label") {
    const auto& c = reference();
    for (auto level : kAllSpecLevels) {
        const auto b = build_fewshot(c, "g12", level, ExamplePlan::per_category(4));
        REQUIRE(b.example_parts.size() == b.example_ids.size());
        for (size_t i = 0; i < b.example_ids.size(); ++i) {
            const auto label = render_label(*c.find(b.example_ids[i]), level);
            CHECK(b.example_parts[i].ends_with("he used the following gesture: \"" + label + "\"."));
            CHECK(b.example_parts[i].find("gesture: \"") == b.example_parts[i].rfind("gesture: \""));
        }
    }
}

TEST_CASE("zero-shot prompts differ only in the quoted strings") {
    const auto a = build_zeroshot(reference(), "g01");
    const auto b = build_zeroshot(reference(), "g03");
    const auto* g01 = reference().find("g01");
    const auto* g03 = reference().find("g03");
    auto blank = [](std::string s, const GestureAnnotation& x) {
        s.replace(s.find(x.segment_text), x.segment_text.size(), "<S>");
        s.replace(s.rfind(x.trigger_phrase), x.trigger_phrase.size(), "<T>");
        return s;
    };
    CHECK(blank(a.rendered, *g01) == blank(b.rendered, *g03));
}

TEST_CASE("per-category k picks the first k of each category in corpus order") {
    const auto b = build_fewshot(reference(), "g01", SpecLevel::Category, ExamplePlan::per_category(2));
    CHECK(b.example_ids == std::vector<std::string>{"g02", "g03", "g04", "g06", "g07", "g08"});
}

TEST_CASE("determinism") {
    for (const auto& plan : all_plans()) {
        const auto a = build_fewshot(reference(), "g20", SpecLevel::SemanticOnly, plan);
        const auto b = build_fewshot(reference(), "g20", SpecLevel::SemanticOnly, plan);
        CHECK(a.rendered == b.rendered);
        CHECK(a.digest() == b.digest());
    }
}

TEST_CASE("seeded shuffle permutes the same examples") {
    auto plan = ExamplePlan::per_category(4);
    const auto base = build_fewshot(reference(), "g05", SpecLevel::Category, plan);
    plan.ordering = ExampleOrdering::SeededShuffle;
    plan.seed = 1;
    const auto s1 = build_fewshot(reference(), "g05", SpecLevel::Category, plan);
    plan.seed = 2;
    const auto s2 = build_fewshot(reference(), "g05", SpecLevel::Category, plan);
    auto per_category = [](const PromptBundle& b) {
        std::map<GestureCategory, int> n;
        for (const auto& id : b.example_ids) ++n[reference().find(id)->category];
        return n;
    };
    CHECK(s1.example_ids.size() == base.example_ids.size());
    CHECK(s2.example_ids.size() == base.example_ids.size());
    CHECK(per_category(s1) == per_category(base));
    CHECK(per_category(s2) == per_category(base));
    CHECK(s1.example_ids != s2.example_ids);
    CHECK(build_fewshot(reference(), "g05", SpecLevel::Category, plan).example_ids == s2.example_ids);
}

TEST_CASE("grouped examples are contiguous per category") {
    auto plan = ExamplePlan::per_category(4);
    plan.grouping = ExampleGrouping::ByCategory;
    const auto b = build_fewshot(reference(), "g05", SpecLevel::Category, plan);
    std::vector<GestureCategory> cats;
    for (const auto& id : b.example_ids) cats.push_back(reference().find(id)->category);
    size_t changes = 0;
    for (size_t i = 1; i < cats.size(); ++i) changes += cats[i] != cats[i - 1];
    CHECK(changes == 2);
}

TEST_CASE("plan labels") {
    CHECK(ExamplePlan::per_category(4).label() == "k4");
    CHECK(ExamplePlan::leave_one_out().label() == "loo");
    CHECK(ExamplePlan::zero_shot().label() == "zeroshot");
}

TEST_CASE("insufficient examples") {
    const auto mini = load_corpus(testsupport::test_data("mini_corpus.json"));
    CHECK_NOTHROW(check_plan(ExamplePlan::per_category(2), mini));
    try {
        check_plan(ExamplePlan::per_category(3), mini);
        FAIL("expected InsufficientExamples");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InsufficientExamples);
    }
    CHECK_THROWS_AS(check_plan(ExamplePlan::per_category(0), mini), Error);
}

TEST_CASE("unknown target") {
    try {
        build_fewshot(reference(), "nope", SpecLevel::Category, ExamplePlan::per_category(2));
        FAIL("expected UnknownTarget");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::UnknownTarget);
    }
}

TEST_CASE("build_prompt dispatches on the plan mode") {
    CHECK(build_prompt(reference(), "g01", SpecLevel::Category, ExamplePlan::zero_shot()).rendered ==
          testsupport::golden("zeroshot_g01.txt"));
}

TEST_CASE("opaque label probe") {
    ProbeRequest r;
    r.kind = ProbeKind::OpaqueLabelCompletion;
    r.examples = {{"It is an important idea.", "lcg"}, {"It is a silly idea.", "ng"}, {"It is a big idea.", "lcg"}};
    r.utterance = "It is a excellent idea.";
    CHECK(build_probe(r).rendered == testsupport::golden("opaque_probe.txt"));
    r.utterance = "It is a excellent idea";
    CHECK(build_probe(r).rendered == testsupport::golden("opaque_probe.txt"));
}

TEST_CASE("explanation and next-gesture probes") {
    ProbeRequest r;
    r.kind = ProbeKind::ExplainGesture;
    r.context = "A clinician is talking to a client.";
    r.utterance = "\"anything\"";
    r.gesture_label = "container gesture";
    CHECK(build_probe(r).rendered ==
          "A clinician is talking to a client. She used a container gesture when she said \"anything\".");
    r.kind = ProbeKind::NextGesture;
    r.utterance = "besides what your husband wants";
    CHECK(build_probe(r).rendered == "A clinician is talking to a client. To illustrate \"besides what your husband "
                                     "wants\", what gesture might she use after the container gesture.");
    r.kind = ProbeKind::Visualize;
    CHECK(build_probe(r).rendered == "A clinician is talking to a client.\n\nCan you visualize it in some way?");
    r.context.clear();
    CHECK(build_probe(r).rendered == "Can you visualize it in some way?");
    r.context = "A clinician is talking to a client.";
    r.kind = ProbeKind::ExplainGesture;
    r.gesture_label.reset();
    CHECK_THROWS_AS(build_probe(r), Error);
}

TEST_CASE("template override file") {
    testsupport::TempDir d;
    testsupport::write(d / "t.json", R"({"zeroshot_target": "Q: {trigger}?"})");
    const auto t = load_templates(d / "t.json");
    CHECK(t.fewshot_example == default_templates().fewshot_example);
    const auto b = build_zeroshot(reference(), "g01", t);
    CHECK(b.rendered == testsupport::golden("context.txt") + " Q: these next 76 days?");
}

}

TEST_SUITE("prompt_builder") {

TEST_CASE("one per category: the two other annotations, in order") {
    const auto tiny = load_corpus(testsupport::test_data("tiny_corpus.json"));
    const auto b = build_fewshot(tiny, "t1", SpecLevel::Category, ExamplePlan::per_category(1));
    CHECK(b.example_ids == std::vector<std::string>{"t2", "t3"});
}

}
