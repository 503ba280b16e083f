#include "gestsel/service.hpp"

#include <httplib.h>

#include "gestsel/error.hpp"
#include "gestsel/io.hpp"
#include "gestsel/text.hpp"

namespace gestsel {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::filesystem::path labels_path(const std::filesystem::path& output_dir, std::string_view run_id) {
    return run_dir(output_dir, run_id) / "labels.json";
}

std::vector<AppropriatenessLabel> load_labels(const std::filesystem::path& path) {
    std::vector<AppropriatenessLabel> out;
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return out;
    json j;
    try {
        j = json::parse(io::read_file(path));
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
    }
    const json& arr = j.is_object() ? j.at("labels") : j;
    if (!arr.is_array()) throw Error(ErrorKind::Parse, path.string() + ": expected an array of labels");
    for (const auto& l : arr) out.push_back(label_from_json(l));
    return out;
}

void save_labels(const std::vector<AppropriatenessLabel>& labels, const std::filesystem::path& path) {
    auto arr = ordered_json::array();
    for (const auto& l : labels) arr.push_back(label_to_json(l));
    io::write_file_atomic(path, ordered_json{{"labels", std::move(arr)}}.dump(2) + "\n");
}

LabelStore::LabelStore(std::filesystem::path output_dir, std::string run_id)
    : path_(labels_path(output_dir, run_id)), run_id_(std::move(run_id)) {}

std::vector<AppropriatenessLabel> LabelStore::all() const {
    std::lock_guard lock(mutex_);
    return load_labels(path_);
}

AppropriatenessLabel LabelStore::add(AppropriatenessLabel label, bool adjudicated) {
    std::lock_guard lock(mutex_);
    auto labels = load_labels(path_);
    label.run_id = run_id_;
    if (label.status == LabelStatus::Final) {
        for (auto& l : labels) {
            if (l.target_id != label.target_id || l.status != LabelStatus::Final) continue;
            if (!adjudicated) {
                throw Error(ErrorKind::DuplicateFinalLabel,
                            "target '" + label.target_id + "' already has a final label by '" + l.rater + "'");
            }
            l.status = LabelStatus::Proposed;
        }
    }
    labels.push_back(label);
    save_labels(labels, path_);
    return label;
}

namespace {

int http_status_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::UnknownTarget:
        case ErrorKind::MissingTarget:
        case ErrorKind::ManifestCorrupt:
        case ErrorKind::Io: return 404;
        case ErrorKind::DuplicateFinalLabel: return 409;
        case ErrorKind::Validation:
        case ErrorKind::Parse:
        case ErrorKind::Usage: return 400;
        default: return 500;
    }
}

void send_json(httplib::Response& res, const ordered_json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(2) + "\n", "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
    send_json(res, ordered_json{{"error", {{"code", code}, {"message", message}}}}, status);
}

template <class F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const Error& e) {
            send_error(res, http_status_for(e.kind()), e.kind_name(), e.what());
        } catch (const json::exception& e) {
            send_error(res, 400, "ValidationError", e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, "InternalError", e.what());
        }
    };
}

}  // namespace

ReviewService::ReviewService(ServiceConfig config)
    : config_(std::move(config)), server_(std::make_unique<httplib::Server>()) {
    install_routes();
}

ReviewService::~ReviewService() { stop(); }

const Corpus& ReviewService::corpus() {
    std::lock_guard lock(mutex_);
    if (!corpus_) {
        auto path = config_.corpus_path;
        if (path.empty()) path = load_manifest(manifest_path(config_.output_dir)).config.corpus_path;
        corpus_ = load_corpus(path);
    }
    return *corpus_;
}

RunResult ReviewService::run(const std::string& run_id) {
    // Ids come from the URL; refuse anything that would leave runs/.
    if (run_id.empty() || text::sanitize_component(run_id) != run_id) {
        throw Error(ErrorKind::UnknownTarget, "unknown run '" + run_id + "'");
    }
    const auto dir = run_dir(config_.output_dir, run_id);
    std::error_code ec;
    if (!std::filesystem::exists(dir / "manifest.json", ec)) throw Error(ErrorKind::UnknownTarget, "unknown run '" + run_id + "'");
    return load_run(dir);
}

LabelStore& ReviewService::store_for(const std::string& run_id) {
    std::lock_guard lock(mutex_);
    auto& slot = stores_[run_id];
    if (!slot) slot = std::make_unique<LabelStore>(config_.output_dir, run_id);
    return *slot;
}

void ReviewService::install_routes() {
    auto& s = *server_;
    // Default options add SO_REUSEPORT, which would let a second server share the port.
    s.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof yes);
    });
    s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Headers", "Content-Type"},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    s.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    s.Get("/api/corpus", guarded([this](const httplib::Request&, httplib::Response& res) {
        send_json(res, ordered_json::parse(serialize_corpus(corpus())));
    }));

    s.Get("/api/runs", guarded([this](const httplib::Request&, httplib::Response& res) {
        const auto m = load_manifest(manifest_path(config_.output_dir)).to_json();
        auto runs = ordered_json::array();
        for (const auto& r : m["runs"]) {
            ordered_json e = r;
            e.erase("digests");
            runs.push_back(std::move(e));
        }
        send_json(res, ordered_json{{"runs", std::move(runs)}});
    }));

    s.Get(R"(/api/runs/([^/]+)/records)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto r = run(req.matches[1]);
        auto arr = ordered_json::array();
        for (const auto& rec : r.records) arr.push_back(record_to_json(rec));
        send_json(res, ordered_json{{"run_id", r.run_id}, {"records", std::move(arr)}});
    }));

    s.Get(R"(/api/runs/([^/]+)/report)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        const auto r = run(id);
        const auto report = build_eval_report({r}, corpus(), store_for(id).all(), nullptr);
        send_json(res, report_to_json(report));
    }));

    s.Get(R"(/api/runs/([^/]+)/items)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        const auto r = run(id);
        const auto& c = corpus();
        const auto labels = store_for(id).all();
        auto items = ordered_json::array();
        for (const auto& rec : r.records) {
            const auto* a = c.find(rec.target_id);
            ordered_json item;
            item["target_id"] = rec.target_id;
            item["segment_text"] = a ? a->segment_text : "";
            item["trigger_phrase"] = a ? a->trigger_phrase : "";
            item["truth"] = a ? render_label(*a, r.spec_level) : "";
            item["status"] = to_string(rec.status);
            item["suggestion"] = rec.raw_response;
            auto ls = ordered_json::array();
            for (const auto& l : labels) {
                if (l.target_id == rec.target_id) ls.push_back(label_to_json(l));
            }
            item["labels"] = std::move(ls);
            items.push_back(std::move(item));
        }
        send_json(res, ordered_json{{"run_id", id}, {"spec_level", to_string(r.spec_level)}, {"items", std::move(items)}});
    }));

    s.Get(R"(/api/runs/([^/]+)/labels)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        run(id);
        auto arr = ordered_json::array();
        for (const auto& l : store_for(id).all()) arr.push_back(label_to_json(l));
        send_json(res, ordered_json{{"labels", std::move(arr)}});
    }));

    s.Post(R"(/api/runs/([^/]+)/labels)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        const auto r = run(id);
        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::parse_error& e) {
            throw Error(ErrorKind::Validation, std::string("body: ") + e.what());
        }
        if (!body.is_object()) throw Error(ErrorKind::Validation, "body must be an object");
        auto label = label_from_json(body);
        if (label.rater.empty()) throw ValidationError(label.target_id, "rater", "must not be empty");
        const bool known = std::any_of(r.records.begin(), r.records.end(),
                                       [&](const SuggestionRecord& rec) { return rec.target_id == label.target_id; });
        if (!known) throw Error(ErrorKind::UnknownTarget, "run '" + id + "' has no target '" + label.target_id + "'");
        const bool adjudicated = body.value("adjudicated", false);
        send_json(res, label_to_json(store_for(id).add(std::move(label), adjudicated)), 201);
    }));
}

void ReviewService::bind() {
    if (bound_port_ >= 0) return;
    if (config_.port == 0) {
        bound_port_ = server_->bind_to_any_port(config_.host);
    } else if (server_->bind_to_port(config_.host, config_.port)) {
        bound_port_ = config_.port;
    }
    if (bound_port_ <= 0) {
        bound_port_ = -1;
        throw Error(ErrorKind::PortInUse, "cannot bind " + config_.host + ":" + std::to_string(config_.port));
    }
}

void ReviewService::start() {
    bind();
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

void ReviewService::serve_forever() {
    bind();
    server_->listen_after_bind();
}

void ReviewService::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace gestsel
