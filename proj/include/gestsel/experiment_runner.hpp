#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gestsel/corpus.hpp"
#include "gestsel/llm_gateway.hpp"
#include "gestsel/normalizer.hpp"
#include "gestsel/prompt_builder.hpp"
#include "gestsel/run_result.hpp"

namespace gestsel {

struct ExperimentConfig {
    std::filesystem::path corpus_path;
    std::vector<SpecLevel> levels;
    std::vector<ExamplePlan> plans;   // PlanMode::ZeroShot denotes the zero-shot cell
    std::vector<ModelConfig> models;
    ScoringPolicy scoring_policy = ScoringPolicy::FirstCandidate;
    std::filesystem::path output_dir;
    std::uint64_t seed = 0;
    size_t concurrency = 4;
    std::filesystem::path templates_path;   // optional override file

    /// Throws Error(Config) unless there is at least one level, plan and model.
    void check() const;

    nlohmann::ordered_json to_json() const;
    /// Relative paths are resolved against `base_dir`.
    static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
};

ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct RunEntry {
    std::string run_id;
    std::string model_name;
    SpecLevel spec_level = SpecLevel::Category;
    ExamplePlan plan;
    std::vector<std::pair<std::string, std::string>> digests;   // (target_id, prompt_digest)
    size_t n_completed = 0;
    size_t n_failed = 0;
};

struct RunManifest {
    ExperimentConfig config;
    std::string corpus_name;
    std::string corpus_version;
    std::vector<RunEntry> runs;
    std::string started_at;
    std::string finished_at;
    std::vector<std::string> assumptions;

    size_t total_records() const;
    size_t total_failed() const;

    nlohmann::ordered_json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
    /// Digest over every run's (target, prompt digest, status) list; excludes instants.
    std::string content_digest() const;
};

std::string make_run_id(const ModelConfig& model, SpecLevel level, const ExamplePlan& plan);

std::filesystem::path manifest_path(const std::filesystem::path& output_dir);
std::filesystem::path run_dir(const std::filesystem::path& output_dir, std::string_view run_id);
std::filesystem::path record_path(const std::filesystem::path& output_dir, std::string_view run_id,
                                  std::string_view target_id);

RunManifest load_manifest(const std::filesystem::path& path);

/// Owns one Gateway per model so call counts can be inspected after a run.
class ExperimentRunner {
public:
    explicit ExperimentRunner(ExperimentConfig config);
    ~ExperimentRunner();

    RunManifest run();

    /// Re-attempts only records of `manifest` that are missing or failed.
    RunManifest resume(const RunManifest& manifest);

    /// Totals over every gateway this runner created.
    GatewayStats stats() const;

    const ExperimentConfig& config() const noexcept { return config_; }

private:
    RunManifest execute(bool skip_completed);
    Gateway& gateway_for(size_t model_index);

    ExperimentConfig config_;
    std::vector<std::unique_ptr<Gateway>> gateways_;
};

RunManifest run_experiment(const ExperimentConfig& config);
/// `model_overrides` replace snapshot model configs that share their model_name
/// (e.g. switching a finished mock run to Replay).
RunManifest resume(const RunManifest& manifest, const std::vector<ModelConfig>& model_overrides = {});

/// All runs listed in the experiment manifest under `output_dir`.
std::vector<RunResult> load_runs(const std::filesystem::path& output_dir);

}  // namespace gestsel
