#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "gestsel/corpus.hpp"
#include "gestsel/evaluator.hpp"
#include "gestsel/experiment_runner.hpp"

namespace httplib {
class Server;
}

namespace gestsel {

std::filesystem::path labels_path(const std::filesystem::path& output_dir, std::string_view run_id);
std::vector<AppropriatenessLabel> load_labels(const std::filesystem::path& path);
void save_labels(const std::vector<AppropriatenessLabel>& labels, const std::filesystem::path& path);

/// Labels of one run, persisted in runs/<run_id>/labels.json.
class LabelStore {
public:
    LabelStore(std::filesystem::path output_dir, std::string run_id);

    std::vector<AppropriatenessLabel> all() const;

    /// A Final label for a target that already has one is refused with
    /// DuplicateFinalLabel unless `adjudicated`; an adjudicated label demotes
    /// the earlier Finals to Proposed.
    AppropriatenessLabel add(AppropriatenessLabel label, bool adjudicated);

private:
    std::filesystem::path path_;
    std::string run_id_;
    mutable std::mutex mutex_;
};

struct ServiceConfig {
    std::filesystem::path output_dir;
    std::filesystem::path corpus_path;   // empty: the corpus named in the experiment manifest
    std::string host = "127.0.0.1";
    int port = 8080;                     // 0 picks a free port
};

/// JSON API consumed by the review UI.
class ReviewService {
public:
    explicit ReviewService(ServiceConfig config);
    ~ReviewService();

    /// Binds and serves on a background thread. Throws Error(PortInUse).
    void start();
    /// Binds and serves on the calling thread until stop().
    void serve_forever();
    void stop();

    int port() const noexcept { return bound_port_; }

private:
    void bind();
    void install_routes();
    LabelStore& store_for(const std::string& run_id);
    const Corpus& corpus();
    RunResult run(const std::string& run_id);

    ServiceConfig config_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int bound_port_ = -1;
    std::mutex mutex_;
    std::optional<Corpus> corpus_;
    std::map<std::string, std::unique_ptr<LabelStore>> stores_;
};

}  // namespace gestsel
