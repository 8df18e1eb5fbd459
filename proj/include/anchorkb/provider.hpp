#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "anchorkb/conversation.hpp"

namespace anchorkb {

// One fixture subdirectory and one instruction template per mode.
enum class ModeTag { entity, event, topic_id, topic_summary, profile_summary, triple };

std::string_view mode_tag_name(ModeTag mode);
ModeTag mode_for_batch(BatchKind kind);

struct UsageRecord {
    std::uint64_t prompt_chars = 0;
    std::uint64_t response_chars = 0;
    std::uint64_t approx_tokens = 0;  // ceil((prompt_chars + response_chars) / 4)
    std::uint64_t wall_ms = 0;

    UsageRecord& operator+=(const UsageRecord& other);
};

UsageRecord make_usage(std::uint64_t prompt_chars, std::uint64_t response_chars,
                       std::uint64_t wall_ms);

struct CompletionRequest {
    ModeTag mode = ModeTag::entity;
    std::string prompt;
    // Inclusive utterance range the prompt was rendered from. Keys the
    // recorded fixture under the mock provider; -1 for requests that are
    // not batch-scoped (summary modes).
    std::int64_t seq_start = -1;
    std::int64_t seq_end = -1;
};

struct CompletionResult {
    std::string text;
    UsageRecord usage;
};

class Provider {
public:
    virtual ~Provider() = default;
    virtual CompletionResult complete(const CompletionRequest& request) = 0;
    virtual std::string_view name() const = 0;
    // True when repeated identical requests yield byte-identical results
    // and carry no wall-clock usage. Drives reproducible manifest fields.
    virtual bool deterministic() const = 0;
};

// Replays recorded completions from <fixture_dir>/<mode>/<start>-<end>.json.
// The file content is the raw completion text. Summary modes are computed
// from templates without a provider round trip, so requesting them here is
// a programming error.
class MockProvider : public Provider {
public:
    explicit MockProvider(std::string fixture_dir);

    CompletionResult complete(const CompletionRequest& request) override;
    std::string_view name() const override { return "mock"; }
    bool deterministic() const override { return true; }

    std::string fixture_path(const CompletionRequest& request) const;

private:
    std::string fixture_dir_;
};

struct ProviderConfig {
    std::string endpoint;     // e.g. http://localhost:8080/v1/chat/completions
    std::string model;
    std::string api_key_env;  // name of the env var holding the bearer token
};

ProviderConfig load_provider_config(const std::string& path);

// Chat-completions client with bounded retries: one initial attempt plus up
// to three retries with 1s/2s/4s backoff. Retries cover connection failures,
// HTTP 429/5xx and unparseable response bodies; other HTTP errors fail fast.
class RemoteProvider : public Provider {
public:
    using HeaderList = std::vector<std::pair<std::string, std::string>>;
    // Returns (status, body); status <= 0 means the connection failed.
    using Transport =
        std::function<std::pair<int, std::string>(const std::string& url, const std::string& body,
                                                  const HeaderList& headers)>;
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    explicit RemoteProvider(ProviderConfig config);
    RemoteProvider(ProviderConfig config, Transport transport, Sleeper sleeper);

    CompletionResult complete(const CompletionRequest& request) override;
    std::string_view name() const override { return "remote"; }
    bool deterministic() const override { return false; }

    static constexpr int kMaxRetries = 3;

private:
    ProviderConfig config_;
    Transport transport_;
    Sleeper sleeper_;
};

}  // namespace anchorkb
