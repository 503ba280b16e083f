#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gestsel/normalizer.hpp"
#include "gestsel/prompt_builder.hpp"

namespace gestsel {

enum class RecordStatus { Ok, Refusal, Failed };

std::string_view to_string(RecordStatus s);

/// Outcome for one target in one run. Only deterministic fields live here;
/// timing data is kept in a sidecar so replayed records compare byte-for-byte.
struct SuggestionRecord {
    std::string run_id;
    std::string target_id;
    std::string model_name;
    SpecLevel spec_level = SpecLevel::Category;
    ExamplePlan plan;
    std::string prompt_digest;
    std::string prompt;
    std::vector<std::string> example_ids;
    RecordStatus status = RecordStatus::Failed;
    std::string error_class;
    std::string error_message;
    std::string raw_response;
    ParsedSuggestion parsed;
    MatchVerdict verdict_first;
    MatchVerdict verdict_any;

    bool completed() const noexcept { return status != RecordStatus::Failed; }
};

struct RunResult {
    std::string run_id;
    SpecLevel spec_level = SpecLevel::Category;
    ExamplePlan plan;
    std::string model_name;
    std::vector<SuggestionRecord> records;
};

nlohmann::ordered_json plan_to_json(const ExamplePlan& plan);
ExamplePlan plan_from_json(const nlohmann::json& j);

nlohmann::ordered_json parsed_to_json(const ParsedSuggestion& p);
nlohmann::ordered_json verdict_to_json(const MatchVerdict& v);

nlohmann::ordered_json record_to_json(const SuggestionRecord& r);
SuggestionRecord record_from_json(const nlohmann::json& j);
std::string serialize_record(const SuggestionRecord& r);

/// Reads runs/<run_id>/manifest.json and every records/<target_id>.json below it.
RunResult load_run(const std::filesystem::path& run_dir);

}  // namespace gestsel
