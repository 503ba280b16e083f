#include "gestsel/experiment_runner.hpp"

#include <algorithm>
#include <atomic>
#include <ctime>
#include <mutex>
#include <thread>

#include "gestsel/error.hpp"
#include "gestsel/io.hpp"
#include "gestsel/text.hpp"

namespace gestsel {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const auto t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    if (p.empty()) return {};
    std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

void ExperimentConfig::check() const {
    if (levels.empty()) throw Error(ErrorKind::Config, "experiment needs at least one spec level");
    if (plans.empty()) throw Error(ErrorKind::Config, "experiment needs at least one example plan");
    if (models.empty()) throw Error(ErrorKind::Config, "experiment needs at least one model");
    if (corpus_path.empty()) throw Error(ErrorKind::Config, "experiment needs a corpus_path");
    if (output_dir.empty()) throw Error(ErrorKind::Config, "experiment needs an output_dir");
    if (concurrency < 1) throw Error(ErrorKind::Config, "concurrency must be >= 1");
    for (const auto& m : models) m.check();
}

ordered_json ExperimentConfig::to_json() const {
    ordered_json j;
    j["corpus_path"] = corpus_path.string();
    auto lv = ordered_json::array();
    for (auto l : levels) lv.push_back(to_string(l));
    j["levels"] = std::move(lv);
    auto pl = ordered_json::array();
    for (const auto& p : plans) pl.push_back(plan_to_json(p));
    j["plans"] = std::move(pl);
    auto md = ordered_json::array();
    for (const auto& m : models) md.push_back(m.to_json());
    j["models"] = std::move(md);
    j["scoring_policy"] = to_string(scoring_policy);
    j["output_dir"] = output_dir.string();
    j["seed"] = seed;
    j["concurrency"] = concurrency;
    if (!templates_path.empty()) j["templates"] = templates_path.string();
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
    ExperimentConfig c;
    try {
        c.corpus_path = resolve(base_dir, j.at("corpus_path").get<std::string>());
        c.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());
        c.seed = j.value("seed", static_cast<std::uint64_t>(0));
        c.concurrency = j.value("concurrency", static_cast<size_t>(4));
        c.templates_path = resolve(base_dir, j.value("templates", ""));
        const auto policy = parse_scoring_policy(j.value("scoring_policy", "first"));
        if (!policy) throw Error(ErrorKind::Config, "unknown scoring_policy");
        c.scoring_policy = *policy;
        for (const auto& l : j.at("levels")) {
            auto level = parse_spec_level(l.get<std::string>());
            if (!level) throw Error(ErrorKind::Config, "unknown spec level '" + l.get<std::string>() + "'");
            c.levels.push_back(*level);
        }
        for (const auto& p : j.at("plans")) {
            auto plan = plan_from_json(p);
            if (!p.contains("seed")) plan.seed = c.seed;
            c.plans.push_back(plan);
        }
        for (auto m : j.at("models")) {
            for (const char* key : {"script", "cache_dir"}) {
                if (m.contains(key)) m[key] = resolve(base_dir, m[key].get<std::string>()).string();
            }
            c.models.push_back(ModelConfig::from_json(m));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Config, std::string("experiment config: ") + e.what());
    }
    c.check();
    return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(io::read_file(path));
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Config, path.string() + ": " + e.what());
    }
    return ExperimentConfig::from_json(j, path.parent_path());
}

size_t RunManifest::total_records() const {
    size_t n = 0;
    for (const auto& r : runs) n += r.n_completed + r.n_failed;
    return n;
}

size_t RunManifest::total_failed() const {
    size_t n = 0;
    for (const auto& r : runs) n += r.n_failed;
    return n;
}

ordered_json RunManifest::to_json() const {
    ordered_json j;
    j["config"] = config.to_json();
    j["corpus_name"] = corpus_name;
    j["corpus_version"] = corpus_version;
    j["started_at"] = started_at;
    j["finished_at"] = finished_at;
    j["assumptions"] = assumptions;
    auto runs_j = ordered_json::array();
    for (const auto& r : runs) {
        ordered_json rj;
        rj["run_id"] = r.run_id;
        rj["model_name"] = r.model_name;
        rj["spec_level"] = to_string(r.spec_level);
        rj["plan"] = plan_to_json(r.plan);
        rj["n_completed"] = r.n_completed;
        rj["n_failed"] = r.n_failed;
        auto d = ordered_json::array();
        for (const auto& [target, digest] : r.digests) d.push_back(ordered_json{{"target_id", target}, {"digest", digest}});
        rj["digests"] = std::move(d);
        runs_j.push_back(std::move(rj));
    }
    j["runs"] = std::move(runs_j);
    return j;
}

RunManifest RunManifest::from_json(const json& j) {
    RunManifest m;
    try {
        // Paths in the snapshot were already resolved when it was written.
        m.config = ExperimentConfig::from_json(j.at("config"));
        m.corpus_name = j.value("corpus_name", "");
        m.corpus_version = j.value("corpus_version", "");
        m.started_at = j.value("started_at", "");
        m.finished_at = j.value("finished_at", "");
        m.assumptions = j.value("assumptions", std::vector<std::string>{});
        for (const auto& rj : j.at("runs")) {
            RunEntry r;
            r.run_id = rj.at("run_id").get<std::string>();
            r.model_name = rj.value("model_name", "");
            r.spec_level = parse_spec_level(rj.value("spec_level", "category")).value_or(SpecLevel::Category);
            r.plan = plan_from_json(rj.value("plan", json::object()));
            r.n_completed = rj.value("n_completed", static_cast<size_t>(0));
            r.n_failed = rj.value("n_failed", static_cast<size_t>(0));
            for (const auto& d : rj.value("digests", json::array())) {
                r.digests.emplace_back(d.at("target_id").get<std::string>(), d.value("digest", ""));
            }
            m.runs.push_back(std::move(r));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ManifestCorrupt, std::string("manifest: ") + e.what());
    } catch (const Error& e) {
        throw Error(ErrorKind::ManifestCorrupt, std::string("manifest: ") + e.what());
    }
    return m;
}

std::string RunManifest::content_digest() const {
    std::string acc;
    for (const auto& r : runs) {
        acc += r.run_id + "\n";
        for (const auto& [t, d] : r.digests) acc += t + " " + d + "\n";
        acc += std::to_string(r.n_completed) + "/" + std::to_string(r.n_failed) + "\n";
    }
    return text::sha256_hex(acc);
}

std::string make_run_id(const ModelConfig& model, SpecLevel level, const ExamplePlan& plan) {
    return text::sanitize_component(model.model_name + "__" + std::string(to_string(level)) + "__" + plan.label());
}

std::filesystem::path manifest_path(const std::filesystem::path& output_dir) { return output_dir / "manifest.json"; }

std::filesystem::path run_dir(const std::filesystem::path& output_dir, std::string_view run_id) {
    return output_dir / "runs" / std::string(run_id);
}

std::filesystem::path record_path(const std::filesystem::path& output_dir, std::string_view run_id,
                                  std::string_view target_id) {
    return run_dir(output_dir, run_id) / "records" / (text::sanitize_component(target_id) + ".json");
}

RunManifest load_manifest(const std::filesystem::path& path) {
    std::string body;
    try {
        body = io::read_file(path);
    } catch (const Error&) {
        throw Error(ErrorKind::ManifestCorrupt, "cannot read manifest " + path.string());
    }
    try {
        return RunManifest::from_json(json::parse(body));
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::ManifestCorrupt, path.string() + ": " + e.what());
    }
}

ExperimentRunner::ExperimentRunner(ExperimentConfig config) : config_(std::move(config)) {
    config_.check();
    gateways_.resize(config_.models.size());
}

ExperimentRunner::~ExperimentRunner() = default;

Gateway& ExperimentRunner::gateway_for(size_t model_index) {
    auto& g = gateways_[model_index];
    if (!g) g = std::make_unique<Gateway>(config_.models[model_index]);
    return *g;
}

GatewayStats ExperimentRunner::stats() const {
    GatewayStats total;
    for (const auto& g : gateways_) {
        if (!g) continue;
        const auto s = g->stats();
        total.provider_calls += s.provider_calls;
        total.cache_hits += s.cache_hits;
        total.cache_writes += s.cache_writes;
    }
    return total;
}

RunManifest ExperimentRunner::run() { return execute(false); }

RunManifest ExperimentRunner::resume(const RunManifest& manifest) {
    if (manifest.config.output_dir != config_.output_dir) {
        throw Error(ErrorKind::Config, "manifest output_dir differs from runner config");
    }
    return execute(true);
}

RunManifest ExperimentRunner::execute(bool skip_completed) {
    const auto corpus = load_corpus(config_.corpus_path);
    const auto templates = config_.templates_path.empty() ? default_templates() : load_templates(config_.templates_path);
    for (const auto& plan : config_.plans) check_plan(plan, corpus);

    RunManifest manifest;
    manifest.config = config_;
    manifest.corpus_name = corpus.name;
    manifest.corpus_version = corpus.version;
    manifest.started_at = utc_now();
    manifest.assumptions = {
        "one independent single-message completion per target; no shared conversation",
        "leave-one-out uses every annotation except the target",
        "examples interleaved in corpus order unless the plan says otherwise",
    };

    std::optional<Error> first_error;
    size_t succeeded = 0;

    for (size_t mi = 0; mi < config_.models.size(); ++mi) {
        const auto& model = config_.models[mi];
        for (auto level : config_.levels) {
            for (const auto& plan : config_.plans) {
                RunEntry entry;
                entry.run_id = make_run_id(model, level, plan);
                entry.model_name = model.model_name;
                entry.spec_level = level;
                entry.plan = plan;

                ordered_json run_m;
                run_m["run_id"] = entry.run_id;
                run_m["model_name"] = model.model_name;
                run_m["spec_level"] = to_string(level);
                run_m["plan"] = plan_to_json(plan);
                run_m["scoring_policy"] = to_string(config_.scoring_policy);
                run_m["corpus_name"] = corpus.name;
                run_m["corpus_version"] = corpus.version;
                auto targets = ordered_json::array();
                for (const auto& a : corpus.annotations) targets.push_back(a.id);
                run_m["targets"] = std::move(targets);
                io::write_file_atomic(run_dir(config_.output_dir, entry.run_id) / "manifest.json", run_m.dump(2) + "\n");

                const size_t n = corpus.annotations.size();
                std::vector<SuggestionRecord> records(n);
                std::atomic<size_t> next{0};
                std::mutex err_mutex;
                auto worker = [&] {
                    for (size_t i = next++; i < n; i = next++) {
                        const auto& target = corpus.annotations[i];
                        const auto path = record_path(config_.output_dir, entry.run_id, target.id);
                        if (skip_completed) {
                            std::error_code ec;
                            if (std::filesystem::exists(path, ec)) {
                                try {
                                    auto existing = record_from_json(json::parse(io::read_file(path)));
                                    if (existing.completed()) {
                                        records[i] = std::move(existing);
                                        continue;
                                    }
                                } catch (const std::exception&) {
                                    // Unreadable record: redo it.
                                }
                            }
                        }
                        SuggestionRecord rec;
                        rec.run_id = entry.run_id;
                        rec.target_id = target.id;
                        rec.model_name = model.model_name;
                        rec.spec_level = level;
                        rec.plan = plan;
                        ordered_json timing;
                        try {
                            const auto bundle = build_prompt(corpus, target.id, level, plan, templates);
                            rec.prompt = bundle.rendered;
                            rec.prompt_digest = bundle.digest();
                            rec.example_ids = bundle.example_ids;
                            try {
                                const auto completion = gateway_for(mi).complete(bundle);
                                rec.raw_response = completion.raw_response;
                                rec.status = RecordStatus::Ok;
                                timing["latency_ms"] = completion.latency.count();
                                timing["retrieved_from_cache"] = completion.retrieved_from_cache;
                                timing["timestamp"] = utc_now();
                            } catch (const Error& e) {
                                if (e.kind() != ErrorKind::ProviderRefusal) throw;
                                rec.status = RecordStatus::Refusal;
                                rec.raw_response.clear();
                            }
                            rec.parsed = parse(rec.raw_response);
                            rec.verdict_first = score(rec.parsed, target, level, ScoringPolicy::FirstCandidate);
                            rec.verdict_any = score(rec.parsed, target, level, ScoringPolicy::AnyCandidate);
                        } catch (const Error& e) {
                            rec.status = RecordStatus::Failed;
                            rec.error_class = std::string(e.kind_name());
                            rec.error_message = e.what();
                            rec.parsed = parse("");
                            rec.verdict_first.level = rec.verdict_any.level = level;
                            std::lock_guard lock(err_mutex);
                            if (!first_error) first_error = e;
                        }
                        io::write_file_atomic(path, serialize_record(rec));
                        if (!timing.empty()) {
                            auto tpath = path;
                            tpath.replace_extension(".timing.json");
                            io::write_file_atomic(tpath, timing.dump(2) + "\n");
                        }
                        records[i] = std::move(rec);
                    }
                };
                if (gateway_for(mi).config().provider == ProviderKind::Mock && config_.concurrency == 1) {
                    worker();
                } else {
                    std::vector<std::thread> pool;
                    const size_t threads = std::min(config_.concurrency, std::max<size_t>(n, 1));
                    for (size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
                    for (auto& t : pool) t.join();
                }
                for (const auto& rec : records) {
                    entry.digests.emplace_back(rec.target_id, rec.prompt_digest);
                    if (rec.completed()) {
                        ++entry.n_completed;
                        ++succeeded;
                    } else {
                        ++entry.n_failed;
                    }
                }
                manifest.runs.push_back(std::move(entry));
            }
        }
    }
    manifest.finished_at = utc_now();
    io::write_file_atomic(manifest_path(config_.output_dir), manifest.to_json().dump(2) + "\n");
    if (succeeded == 0 && first_error) {
        throw Error(first_error->kind(), std::string("no record succeeded; first failure: ") + first_error->what());
    }
    return manifest;
}

RunManifest run_experiment(const ExperimentConfig& config) {
    ExperimentRunner runner(config);
    return runner.run();
}

RunManifest resume(const RunManifest& manifest, const std::vector<ModelConfig>& model_overrides) {
    auto cfg = manifest.config;
    for (const auto& o : model_overrides) {
        for (auto& m : cfg.models) {
            if (m.model_name == o.model_name) m = o;
        }
    }
    ExperimentRunner runner(cfg);
    return runner.resume(manifest);
}

std::vector<RunResult> load_runs(const std::filesystem::path& output_dir) {
    const auto manifest = load_manifest(manifest_path(output_dir));
    std::vector<RunResult> runs;
    for (const auto& r : manifest.runs) runs.push_back(load_run(run_dir(output_dir, r.run_id)));
    return runs;
}

}  // namespace gestsel
