#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gestsel/corpus.hpp"

namespace gestsel {

enum class SpecLevel { Category, PhysicalDescription, SemanticGesture, SemanticOnly };

inline constexpr SpecLevel kAllSpecLevels[] = {SpecLevel::Category, SpecLevel::PhysicalDescription,
                                              SpecLevel::SemanticGesture, SpecLevel::SemanticOnly};

/// "category", "physical", "semantic_gesture", "semantic_only".
std::string_view to_string(SpecLevel level);
std::optional<SpecLevel> parse_spec_level(std::string_view s);

enum class PlanMode { PerCategoryK, LeaveOneOut, ZeroShot };
enum class ExampleOrdering { CorpusOrder, SeededShuffle };
enum class ExampleGrouping { Interleaved, ByCategory };

struct ExamplePlan {
    PlanMode mode = PlanMode::PerCategoryK;
    int k = 2;
    std::uint64_t seed = 0;
    ExampleOrdering ordering = ExampleOrdering::CorpusOrder;
    ExampleGrouping grouping = ExampleGrouping::Interleaved;

    static ExamplePlan per_category(int k) { return ExamplePlan{PlanMode::PerCategoryK, k}; }
    static ExamplePlan leave_one_out() { return ExamplePlan{PlanMode::LeaveOneOut, 0}; }
    static ExamplePlan zero_shot() { return ExamplePlan{PlanMode::ZeroShot, 0}; }

    /// "k2", "k4", "loo", "zeroshot"; seeded/grouped variants get a suffix.
    std::string label() const;

    bool operator==(const ExamplePlan&) const = default;
};

/// Throws Error(InvalidPlan) when k < 1 or k exceeds the smallest category count.
void check_plan(const ExamplePlan& plan, const Corpus& corpus);

/// Slots: {segment}, {trigger}, {label}, {context}, {utterance}.
struct PromptTemplates {
    std::string fewshot_example = "He said \"{segment}\" When he said \"{trigger}\", he used the following gesture: \"{label}\".";
    std::string fewshot_target = "He said \"{segment}\" When he said \"{trigger}\", he used the following gesture: ";
    std::string zeroshot_target = "He said \"{segment}\" When he said \"{trigger}\", what gesture did he use?";
    std::string part_separator = "\n\n";
    std::string zeroshot_separator = " ";
    std::string probe_explain = "{context} She used a {label} when she said {utterance}.";
    std::string probe_next = "{context} To illustrate \"{utterance}\", what gesture might she use after the {label}.";
    std::string probe_visualize = "Can you visualize it in some way?";
    std::string probe_opaque_line = "{utterance} {label}";

    bool operator==(const PromptTemplates&) const = default;
};

const PromptTemplates& default_templates();

/// Reads a structured-text override file; keys absent from it keep their defaults.
PromptTemplates load_templates(const std::filesystem::path& path);

struct PromptBundle {
    std::string context_part;
    std::vector<std::string> example_parts;
    std::string target_part;
    std::string target_id;
    SpecLevel spec_level = SpecLevel::Category;
    ExamplePlan plan;
    std::vector<std::string> example_ids;
    std::string rendered;

    std::string digest() const;
};

enum class ProbeKind { ExplainGesture, NextGesture, Visualize, OpaqueLabelCompletion };

struct ProbeRequest {
    ProbeKind kind = ProbeKind::ExplainGesture;
    std::string context;
    std::string utterance;
    std::optional<std::string> gesture_label;
    /// (utterance, label) lines for OpaqueLabelCompletion.
    std::vector<std::pair<std::string, std::string>> examples;
};

std::string render_label(const GestureAnnotation& a, SpecLevel level);

PromptBundle build_fewshot(const Corpus& corpus, std::string_view target_id, SpecLevel level, const ExamplePlan& plan,
                           const PromptTemplates& templates = default_templates());

PromptBundle build_zeroshot(const Corpus& corpus, std::string_view target_id,
                            const PromptTemplates& templates = default_templates());

/// Dispatches on plan.mode (ZeroShot ignores `level` for the prompt text but records it).
PromptBundle build_prompt(const Corpus& corpus, std::string_view target_id, SpecLevel level, const ExamplePlan& plan,
                          const PromptTemplates& templates = default_templates());

PromptBundle build_probe(const ProbeRequest& request, const PromptTemplates& templates = default_templates());

}  // namespace gestsel
