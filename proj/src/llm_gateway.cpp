#include "gestsel/llm_gateway.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "gestsel/error.hpp"
#include "gestsel/io.hpp"
#include "gestsel/text.hpp"

namespace gestsel {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string_view to_string(ProviderKind kind) {
    switch (kind) {
        case ProviderKind::OpenAICompatible: return "openai";
        case ProviderKind::Mock: return "mock";
        case ProviderKind::Replay: return "replay";
    }
    return "?";
}

void ModelConfig::check() const {
    if (!(temperature >= 0.0)) throw Error(ErrorKind::Config, "temperature must be >= 0");
    if (model_name.empty()) throw Error(ErrorKind::Config, "model_name must be set");
    if (max_retries < 0) throw Error(ErrorKind::Config, "max_retries must be >= 0");
    if (max_in_flight < 1) throw Error(ErrorKind::Config, "max_in_flight must be >= 1");
    if (provider == ProviderKind::OpenAICompatible && base_url.empty()) {
        throw Error(ErrorKind::Config, "openai provider requires base_url");
    }
    if (provider == ProviderKind::Replay && cache_dir.empty()) {
        throw Error(ErrorKind::Config, "replay provider requires cache_dir");
    }
}

ordered_json ModelConfig::to_json() const {
    ordered_json j;
    j["provider"] = to_string(provider);
    j["model_name"] = model_name;
    j["temperature"] = temperature;
    j["max_tokens"] = max_tokens ? json(*max_tokens) : json(nullptr);
    if (!base_url.empty()) j["base_url"] = base_url;
    if (!script_path.empty()) j["script"] = script_path.string();
    if (!cache_dir.empty()) j["cache_dir"] = cache_dir.string();
    j["request_timeout_ms"] = request_timeout.count();
    j["max_retries"] = max_retries;
    j["api_key_env"] = api_key_env;
    return j;
}

ModelConfig ModelConfig::from_json(const json& j) {
    ModelConfig c;
    try {
        const auto provider = text::normalize_label(j.value("provider", "mock"));
        if (provider == "openai" || provider == "openai_compatible") {
            c.provider = ProviderKind::OpenAICompatible;
        } else if (provider == "mock") {
            c.provider = ProviderKind::Mock;
        } else if (provider == "replay") {
            c.provider = ProviderKind::Replay;
        } else {
            throw Error(ErrorKind::Config, "unknown provider '" + provider + "'");
        }
        c.model_name = j.value("model_name", c.model_name);
        c.temperature = j.value("temperature", 0.0);
        if (j.contains("max_tokens") && !j["max_tokens"].is_null()) c.max_tokens = j["max_tokens"].get<int>();
        c.base_url = j.value("base_url", "");
        c.script_path = j.value("script", "");
        c.cache_dir = j.value("cache_dir", "");
        c.request_timeout = std::chrono::milliseconds(j.value("request_timeout_ms", 60000));
        c.max_retries = j.value("max_retries", 3);
        c.backoff_base = std::chrono::milliseconds(j.value("backoff_base_ms", 500));
        c.api_key_env = j.value("api_key_env", "OPENAI_API_KEY");
        c.force_refresh = j.value("force_refresh", false);
        c.max_in_flight = j.value("max_in_flight", static_cast<size_t>(4));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Config, std::string("model config: ") + e.what());
    }
    c.check();
    return c;
}

std::vector<double> hashed_embedding(std::string_view input, size_t dimension) {
    std::vector<double> v(dimension, 0.0);
    auto add = [&](std::string_view feature, double weight) {
        std::uint64_t h = 1469598103934665603ULL;
        for (unsigned char c : feature) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        const double sign = (h >> 63) ? -1.0 : 1.0;
        v[static_cast<size_t>(h % dimension)] += sign * weight;
    };
    std::string cleaned;
    for (char c : text::to_lower(input)) {
        cleaned.push_back(std::isalnum(static_cast<unsigned char>(c)) || static_cast<unsigned char>(c) >= 0x80 ? c : ' ');
    }
    for (const auto& w : text::split_words(cleaned)) {
        add("w:" + w, 1.0);
        const std::string padded = "#" + w + "#";
        for (size_t i = 0; i + 3 <= padded.size(); ++i) add("t:" + padded.substr(i, 3), 0.5);
    }
    if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) v[0] = 1.0;
    return v;
}

std::string embedding_digest(std::string_view text_value) {
    return text::sha256_hex("embedding\n" + std::string(text_value));
}

std::filesystem::path ResponseCache::entry_dir(std::string_view model_name, std::string_view digest) const {
    return root_ / text::sanitize_component(model_name) / std::string(digest);
}

std::optional<std::string> ResponseCache::read_response(std::string_view model_name, std::string_view digest) const {
    const auto path = entry_dir(model_name, digest) / "response.json";
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return std::nullopt;
    return io::read_file(path);
}

bool ResponseCache::write(std::string_view model_name, std::string_view digest, std::string_view request_body,
                          std::string_view response_body) {
    std::lock_guard lock(write_mutex_);
    const auto dir = entry_dir(model_name, digest);
    std::error_code ec;
    if (std::filesystem::exists(dir / "response.json", ec)) return false;
    io::write_file_atomic(dir / "request.json", request_body);
    io::write_file_atomic(dir / "response.json", response_body);
    return true;
}

// ---------------------------------------------------------------------------

class Provider {
public:
    virtual ~Provider() = default;
    /// `endpoint` is "chat/completions" or "embeddings". Returns the response body.
    virtual std::string post(const std::string& endpoint, const std::string& body) = 0;
};

namespace {

bool retryable(const Error& e) { return e.kind() == ErrorKind::Transport || e.kind() == ErrorKind::RateLimited; }

ordered_json chat_response_body(const std::string& model, const std::string& content, std::string_view finish) {
    ordered_json msg;
    msg["role"] = "assistant";
    msg["content"] = content;
    ordered_json choice;
    choice["index"] = 0;
    choice["message"] = std::move(msg);
    choice["finish_reason"] = finish;
    ordered_json j;
    j["object"] = "chat.completion";
    j["model"] = model;
    j["choices"] = ordered_json::array({std::move(choice)});
    return j;
}

class MockProvider final : public Provider {
public:
    explicit MockProvider(const ModelConfig& cfg) : model_(cfg.model_name) {
        if (!cfg.script_path.empty()) {
            try {
                script_ = json::parse(io::read_file(cfg.script_path));
            } catch (const json::parse_error& e) {
                throw Error(ErrorKind::Config, cfg.script_path.string() + ": " + e.what());
            }
        } else {
            script_ = json::object();
        }
        dimension_ = script_.value("embedding_dimension", static_cast<size_t>(256));
        if (dimension_ == 0) throw Error(ErrorKind::Config, "mock embedding_dimension must be >= 1");
    }

    std::string post(const std::string& endpoint, const std::string& body) override {
        // Failure counters are shared by concurrent callers.
        std::lock_guard lock(mutex_);
        const auto request = json::parse(body);
        if (endpoint == "embeddings") return embeddings(request);
        return chat(request);
    }

private:
    std::string chat(const json& request) {
        const auto prompt = request.at("messages").at(0).at("content").get<std::string>();
        const auto digest = text::sha256_hex(prompt);
        std::string content;
        bool found = false;
        if (auto it = script_.find("completions"); it != script_.end() && it->contains(digest)) {
            content = (*it)[digest].get<std::string>();
            found = true;
        }
        if (!found) {
            const auto last_break = prompt.rfind("\n\n");
            const std::string_view target =
                last_break == std::string::npos ? std::string_view(prompt) : std::string_view(prompt).substr(last_break + 2);
            size_t index = 0;
            for (const auto& rule : script_.value("rules", json::array())) {
                const auto needle = rule.value("contains", "");
                const auto scope = rule.value("in", "target");
                const std::string_view hay = scope == "prompt" ? std::string_view(prompt) : target;
                if (!needle.empty() && !text::contains(hay, needle)) {
                    ++index;
                    continue;
                }
                if (rule.contains("error")) {
                    const int fail_times = rule.value("fail_times", -1);
                    int& seen = failures_[index];
                    if (fail_times < 0 || seen < fail_times) {
                        ++seen;
                        const auto kind = rule["error"].get<std::string>();
                        if (kind == "rate_limited") throw RateLimitedError("mock: rate limited", rule.value("retry_after", 0.0));
                        if (kind == "refusal") return chat_response_body(model_, "", "content_filter").dump();
                        throw Error(ErrorKind::Transport, "mock: injected transport failure");
                    }
                    ++index;
                    continue;
                }
                content = rule.value("response", "");
                found = true;
                break;
            }
        }
        if (!found) {
            if (auto cycle = script_.find("cycle"); cycle != script_.end() && cycle->is_array() && !cycle->empty()) {
                const auto pick = std::stoull(digest.substr(0, 12), nullptr, 16) % cycle->size();
                content = (*cycle)[pick].get<std::string>();
            } else {
                content = script_.value("default", std::string("span"));
            }
        }
        return chat_response_body(model_, content, "stop").dump();
    }

    std::string embeddings(const json& request) {
        const auto& input = request.at("input");
        std::vector<std::string> texts;
        if (input.is_string()) {
            texts.push_back(input.get<std::string>());
        } else {
            for (const auto& t : input) texts.push_back(t.get<std::string>());
        }
        ordered_json data = ordered_json::array();
        for (size_t i = 0; i < texts.size(); ++i) {
            std::vector<double> v;
            if (auto it = script_.find("embeddings"); it != script_.end() && it->contains(texts[i])) {
                v = (*it)[texts[i]].get<std::vector<double>>();
            } else {
                v = hashed_embedding(texts[i], dimension_);
            }
            ordered_json item;
            item["object"] = "embedding";
            item["index"] = i;
            item["embedding"] = v;
            data.push_back(std::move(item));
        }
        ordered_json j;
        j["object"] = "list";
        j["model"] = model_;
        j["data"] = std::move(data);
        return j.dump();
    }

    std::string model_;
    json script_;
    size_t dimension_ = 256;
    std::map<size_t, int> failures_;
    std::mutex mutex_;
};

class HttpProvider final : public Provider {
public:
    explicit HttpProvider(const ModelConfig& cfg) : cfg_(cfg) {
        const auto& url = cfg.base_url;
        const auto scheme_end = url.find("://");
        const size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
        const auto path_start = url.find('/', host_start);
        origin_ = url.substr(0, path_start);
        prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
        while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
        if (const char* key = std::getenv(cfg.api_key_env.c_str())) api_key_ = key;
    }

    std::string post(const std::string& endpoint, const std::string& body) override {
        httplib::Client client(origin_);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg_.request_timeout).count();
        client.set_connection_timeout(static_cast<time_t>(std::max<long long>(1, secs)), 0);
        client.set_read_timeout(static_cast<time_t>(std::max<long long>(1, secs)), 0);
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
        auto res = client.Post(prefix_ + "/" + endpoint, headers, body, "application/json");
        if (!res) throw Error(ErrorKind::Transport, "POST " + origin_ + prefix_ + "/" + endpoint + ": " +
                                                        httplib::to_string(res.error()));
        if (res->status == 429) {
            double retry_after = -1.0;
            if (res->has_header("Retry-After")) retry_after = std::atof(res->get_header_value("Retry-After").c_str());
            throw RateLimitedError("provider rate limited the request", retry_after);
        }
        if (res->status >= 500) throw Error(ErrorKind::Transport, "provider returned HTTP " + std::to_string(res->status));
        if (res->status >= 400) {
            // Client errors are not retried.
            throw Error(ErrorKind::Config, "provider rejected request with HTTP " + std::to_string(res->status) + ": " +
                                               res->body.substr(0, 200));
        }
        return res->body;
    }

private:
    ModelConfig cfg_;
    std::string origin_;
    std::string prefix_;
    std::string api_key_;
};

std::string extract_chat_content(const std::string& body) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Transport, std::string("unparseable chat response: ") + e.what());
    }
    const auto& choices = j.value("choices", json::array());
    if (choices.empty()) throw Error(ErrorKind::ProviderRefusal, "response has no choices");
    const auto& choice = choices.at(0);
    const auto& msg = choice.value("message", json::object());
    const auto content = msg.contains("content") && msg["content"].is_string() ? msg["content"].get<std::string>() : "";
    if (text::trim(content).empty()) {
        throw Error(ErrorKind::ProviderRefusal,
                    "empty or blocked response (finish_reason=" + choice.value("finish_reason", std::string("?")) + ")");
    }
    return content;
}

std::vector<double> extract_embedding(const std::string& body) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Transport, std::string("unparseable embedding response: ") + e.what());
    }
    const auto& data = j.value("data", json::array());
    if (data.empty()) throw Error(ErrorKind::Transport, "embedding response has no data");
    const auto& item = data.at(0);
    std::vector<double> v;
    const auto& emb = item.at("embedding");
    if (!emb.empty() && emb.at(0).is_array()) {
        // Token-level vectors: mean-pool over all returned (non-padding) tokens.
        const size_t dim = emb.at(0).size();
        v.assign(dim, 0.0);
        for (const auto& tok : emb) {
            if (tok.size() != dim) throw Error(ErrorKind::DimensionMismatch, "token vectors differ in dimension");
            for (size_t d = 0; d < dim; ++d) v[d] += tok[d].get<double>();
        }
        for (auto& x : v) x /= static_cast<double>(emb.size());
    } else {
        v = emb.get<std::vector<double>>();
    }
    if (v.empty()) throw Error(ErrorKind::DimensionMismatch, "empty embedding vector");
    for (double x : v) {
        if (!std::isfinite(x)) throw Error(ErrorKind::Transport, "embedding contains non-finite values");
    }
    return v;
}

}  // namespace

Gateway::Gateway(ModelConfig config)
    : config_(std::move(config)),
      in_flight_(static_cast<std::ptrdiff_t>(std::clamp<size_t>(config_.max_in_flight, 1, 1024))) {
    config_.check();
    switch (config_.provider) {
        case ProviderKind::Mock: provider_ = std::make_unique<MockProvider>(config_); break;
        case ProviderKind::OpenAICompatible: provider_ = std::make_unique<HttpProvider>(config_); break;
        case ProviderKind::Replay: break;
    }
    if (!config_.cache_dir.empty()) cache_ = std::make_unique<ResponseCache>(config_.cache_dir);
}

Gateway::~Gateway() = default;

GatewayStats Gateway::stats() const {
    return GatewayStats{provider_calls_.load(), cache_hits_.load(), cache_writes_.load()};
}

std::string Gateway::chat_request_body(std::string_view rendered_prompt) const {
    ordered_json message;
    message["role"] = "user";
    message["content"] = std::string(rendered_prompt);
    ordered_json j;
    j["model"] = config_.model_name;
    j["messages"] = ordered_json::array({std::move(message)});
    j["temperature"] = config_.temperature;
    if (config_.max_tokens) j["max_tokens"] = *config_.max_tokens;
    return j.dump();
}

std::string Gateway::fetch(const std::string& kind, const std::string& digest, const std::string& request_body,
                           bool& from_cache) {
    from_cache = false;
    if (cache_ && (config_.provider == ProviderKind::Replay || !config_.force_refresh)) {
        if (auto hit = cache_->read_response(config_.model_name, digest)) {
            ++cache_hits_;
            from_cache = true;
            return *hit;
        }
    }
    if (config_.provider == ProviderKind::Replay) {
        throw Error(ErrorKind::CacheMiss, "no cached " + kind + " response for " + config_.model_name + "/" + digest);
    }
    const std::string endpoint = kind == "embedding" ? "embeddings" : "chat/completions";
    std::string body;
    for (int attempt = 0;; ++attempt) {
        try {
            in_flight_.acquire();
            struct Release {
                std::counting_semaphore<1024>& s;
                ~Release() { s.release(); }
            } release{in_flight_};
            ++provider_calls_;
            body = provider_->post(endpoint, request_body);
            break;
        } catch (const Error& e) {
            if (!retryable(e) || attempt >= config_.max_retries) throw;
            std::chrono::milliseconds wait = config_.backoff_base * (1LL << std::min(attempt, 16));
            if (const auto* rl = dynamic_cast<const RateLimitedError*>(&e); rl && rl->retry_after() >= 0) {
                wait = std::max(wait, std::chrono::milliseconds(static_cast<long long>(rl->retry_after() * 1000)));
            }
            std::this_thread::sleep_for(wait);
        }
    }
    if (cache_ && cache_->write(config_.model_name, digest, request_body, body)) ++cache_writes_;
    return body;
}

CompletionRecord Gateway::complete(const PromptBundle& bundle) { return complete_text(bundle.rendered); }

CompletionRecord Gateway::complete_text(std::string_view rendered_prompt) {
    const auto start = std::chrono::steady_clock::now();
    CompletionRecord rec;
    rec.prompt_digest = text::sha256_hex(rendered_prompt);
    rec.model_name = config_.model_name;
    rec.timestamp = std::chrono::system_clock::now();
    bool from_cache = false;
    const auto body = fetch("chat", rec.prompt_digest, chat_request_body(rendered_prompt), from_cache);
    rec.retrieved_from_cache = from_cache;
    rec.latency = std::chrono::steady_clock::now() - start;
    rec.raw_response = extract_chat_content(body);
    return rec;
}

EmbeddingVector Gateway::embed_one(const std::string& text_value) {
    const auto key = config_.model_name + '\n' + text_value;
    {
        std::lock_guard lock(memo_mutex_);
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    }
    ordered_json req;
    req["model"] = config_.model_name;
    req["input"] = ordered_json::array({text_value});
    bool from_cache = false;
    const auto body = fetch("embedding", embedding_digest(text_value), req.dump(), from_cache);
    EmbeddingVector v{extract_embedding(body), config_.model_name};
    std::lock_guard lock(memo_mutex_);
    return memo_.emplace(key, std::move(v)).first->second;
}

std::vector<EmbeddingVector> Gateway::embed(const std::vector<std::string>& texts) {
    if (texts.empty()) throw Error(ErrorKind::Config, "embed requires at least one text");
    for (const auto& t : texts) {
        if (text::trim(t).empty()) throw Error(ErrorKind::Config, "embed texts must be non-empty");
    }
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    for (const auto& v : out) {
        if (v.dimension() != out.front().dimension()) {
            throw Error(ErrorKind::DimensionMismatch, "provider returned embeddings of differing dimension");
        }
    }
    return out;
}

}  // namespace gestsel
