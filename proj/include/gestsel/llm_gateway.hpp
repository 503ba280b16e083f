#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gestsel/prompt_builder.hpp"

namespace gestsel {

enum class ProviderKind { OpenAICompatible, Mock, Replay };

std::string_view to_string(ProviderKind kind);

struct ModelConfig {
    ProviderKind provider = ProviderKind::Mock;
    std::string base_url;                  // OpenAICompatible
    std::filesystem::path script_path;     // Mock; empty means built-in defaults
    std::filesystem::path cache_dir;       // Replay reads it; other providers write through it when set
    std::string model_name = "mock";
    double temperature = 0.0;
    std::optional<int> max_tokens;
    std::chrono::milliseconds request_timeout{60000};
    int max_retries = 3;
    std::chrono::milliseconds backoff_base{500};
    std::string api_key_env = "OPENAI_API_KEY";
    bool force_refresh = false;
    size_t max_in_flight = 4;

    /// Throws Error(Config) on a negative temperature or unusable provider fields.
    void check() const;

    nlohmann::ordered_json to_json() const;
    static ModelConfig from_json(const nlohmann::json& j);
};

struct CompletionRecord {
    std::string prompt_digest;
    std::string raw_response;
    std::string model_name;
    std::chrono::duration<double, std::milli> latency{0};
    bool retrieved_from_cache = false;
    std::chrono::system_clock::time_point timestamp;
};

struct EmbeddingVector {
    std::vector<double> values;
    std::string model_name;

    size_t dimension() const noexcept { return values.size(); }
    bool operator==(const EmbeddingVector&) const = default;
};

struct GatewayStats {
    size_t provider_calls = 0;   // requests that reached the provider (live or mock), including retries
    size_t cache_hits = 0;
    size_t cache_writes = 0;
};

/// Deterministic hashed bag of words and character trigrams; the mock
/// provider's fallback for unscripted text.
std::vector<double> hashed_embedding(std::string_view text, size_t dimension);

/// Content-addressed response store: <root>/<model>/<digest>/{request,response}.json.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path root) : root_(std::move(root)) {}

    std::filesystem::path entry_dir(std::string_view model_name, std::string_view digest) const;
    std::optional<std::string> read_response(std::string_view model_name, std::string_view digest) const;
    /// Existing entries are never overwritten.
    bool write(std::string_view model_name, std::string_view digest, std::string_view request_body,
               std::string_view response_body);

    const std::filesystem::path& root() const noexcept { return root_; }

private:
    std::filesystem::path root_;
    std::mutex write_mutex_;
};

std::string embedding_digest(std::string_view text);

class Provider;

/// Uniform access to chat completion and embedding endpoints for one ModelConfig.
/// Safe to call concurrently; at most config.max_in_flight requests are in flight.
class Gateway {
public:
    explicit Gateway(ModelConfig config);
    ~Gateway();
    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    CompletionRecord complete(const PromptBundle& bundle);
    CompletionRecord complete_text(std::string_view rendered_prompt);

    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts);

    GatewayStats stats() const;
    const ModelConfig& config() const noexcept { return config_; }

    /// Chat request body exactly as sent on the wire.
    std::string chat_request_body(std::string_view rendered_prompt) const;

private:
    std::string fetch(const std::string& kind, const std::string& digest, const std::string& request_body,
                      bool& from_cache);
    EmbeddingVector embed_one(const std::string& text);

    ModelConfig config_;
    std::unique_ptr<Provider> provider_;
    std::unique_ptr<ResponseCache> cache_;
    std::counting_semaphore<1024> in_flight_;
    std::atomic<size_t> provider_calls_{0};
    std::atomic<size_t> cache_hits_{0};
    std::atomic<size_t> cache_writes_{0};
    mutable std::mutex memo_mutex_;
    std::map<std::string, EmbeddingVector> memo_;
};

}  // namespace gestsel
