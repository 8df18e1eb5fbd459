#include "anchorkb/provider.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "anchorkb/errors.hpp"

namespace anchorkb {

std::string_view mode_tag_name(ModeTag mode) {
    switch (mode) {
        case ModeTag::entity: return "entity";
        case ModeTag::event: return "event";
        case ModeTag::topic_id: return "topic_id";
        case ModeTag::topic_summary: return "topic_summary";
        case ModeTag::profile_summary: return "profile_summary";
        case ModeTag::triple: return "triple";
    }
    return "entity";
}

ModeTag mode_for_batch(BatchKind kind) {
    switch (kind) {
        case BatchKind::entity: return ModeTag::entity;
        case BatchKind::event: return ModeTag::event;
        case BatchKind::topic: return ModeTag::topic_id;
        case BatchKind::triple: return ModeTag::triple;
    }
    return ModeTag::entity;
}

UsageRecord& UsageRecord::operator+=(const UsageRecord& other) {
    prompt_chars += other.prompt_chars;
    response_chars += other.response_chars;
    approx_tokens += other.approx_tokens;
    wall_ms += other.wall_ms;
    return *this;
}

UsageRecord make_usage(std::uint64_t prompt_chars, std::uint64_t response_chars,
                       std::uint64_t wall_ms) {
    UsageRecord usage;
    usage.prompt_chars = prompt_chars;
    usage.response_chars = response_chars;
    usage.approx_tokens = (prompt_chars + response_chars + 3) / 4;
    usage.wall_ms = wall_ms;
    return usage;
}

MockProvider::MockProvider(std::string fixture_dir) : fixture_dir_(std::move(fixture_dir)) {}

std::string MockProvider::fixture_path(const CompletionRequest& request) const {
    return fixture_dir_ + "/" + std::string(mode_tag_name(request.mode)) + "/" +
           std::to_string(request.seq_start) + "-" + std::to_string(request.seq_end) + ".json";
}

CompletionResult MockProvider::complete(const CompletionRequest& request) {
    if (request.mode == ModeTag::topic_summary || request.mode == ModeTag::profile_summary) {
        throw std::invalid_argument(
            "summary completions are template-derived and never reach the mock provider");
    }
    if (request.seq_start < 0 || request.seq_end < request.seq_start) {
        throw std::invalid_argument("mock completion requires a valid utterance range");
    }
    std::string path = fixture_path(request);
    std::ifstream in(path);
    if (!in) {
        throw TransportError("no recorded completion at " + path, 1);
    }
    std::ostringstream body;
    body << in.rdbuf();
    CompletionResult result;
    result.text = body.str();
    result.usage = make_usage(request.prompt.size(), result.text.size(), 0);
    return result;
}

ProviderConfig load_provider_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open provider config: " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError("provider config is not valid JSON: " + std::string(e.what()));
    }
    if (!doc.is_object() || !doc.contains("endpoint") || !doc["endpoint"].is_string()) {
        throw SchemaError("provider config requires a string 'endpoint'");
    }
    ProviderConfig config;
    config.endpoint = doc["endpoint"].get<std::string>();
    if (doc.contains("model") && doc["model"].is_string()) {
        config.model = doc["model"].get<std::string>();
    }
    if (doc.contains("api_key_env") && doc["api_key_env"].is_string()) {
        config.api_key_env = doc["api_key_env"].get<std::string>();
    }
    return config;
}

namespace {

struct ParsedUrl {
    std::string scheme_host;  // scheme://host[:port]
    std::string path;
};

ParsedUrl split_endpoint(const std::string& endpoint) {
    auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) {
        throw SchemaError("endpoint must start with http:// or https://");
    }
    auto path_start = endpoint.find('/', scheme_end + 3);
    ParsedUrl url;
    if (path_start == std::string::npos) {
        url.scheme_host = endpoint;
        url.path = "/";
    } else {
        url.scheme_host = endpoint.substr(0, path_start);
        url.path = endpoint.substr(path_start);
    }
    return url;
}

std::pair<int, std::string> http_post(const std::string& endpoint, const std::string& body,
                                      const RemoteProvider::HeaderList& headers) {
    ParsedUrl url = split_endpoint(endpoint);
    httplib::Client client(url.scheme_host);
    client.set_connection_timeout(30, 0);
    client.set_read_timeout(120, 0);
    httplib::Headers request_headers;
    for (const auto& [key, value] : headers) request_headers.emplace(key, value);
    auto response = client.Post(url.path, request_headers, body, "application/json");
    if (!response) return {0, ""};
    return {response->status, response->body};
}

}  // namespace

RemoteProvider::RemoteProvider(ProviderConfig config)
    : RemoteProvider(std::move(config), http_post,
                     [](std::chrono::milliseconds delay) { std::this_thread::sleep_for(delay); }) {}

RemoteProvider::RemoteProvider(ProviderConfig config, Transport transport, Sleeper sleeper)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      sleeper_(std::move(sleeper)) {}

CompletionResult RemoteProvider::complete(const CompletionRequest& request) {
    nlohmann::json body_doc = {
        {"model", config_.model},
        {"temperature", 0},
        {"messages", nlohmann::json::array({nlohmann::json{{"role", "user"},
                                                           {"content", request.prompt}}})},
    };
    std::string body = body_doc.dump();

    HeaderList headers;
    if (!config_.api_key_env.empty()) {
        if (const char* key = std::getenv(config_.api_key_env.c_str())) {
            headers.emplace_back("Authorization", std::string("Bearer ") + key);
        }
    }

    std::string last_failure = "no attempts made";
    for (int attempt = 0; attempt <= kMaxRetries; ++attempt) {
        if (attempt > 0) {
            sleeper_(std::chrono::milliseconds(1000) * (1 << (attempt - 1)));
        }
        auto started = std::chrono::steady_clock::now();
        auto [status, response_body] = transport_(config_.endpoint, body, headers);
        auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - started);

        if (status <= 0) {
            last_failure = "connection failed";
            continue;
        }
        bool retryable_status = status == 429 || status >= 500;
        if (status != 200) {
            last_failure = "HTTP status " + std::to_string(status);
            if (retryable_status) continue;
            throw TransportError("completion request rejected: " + last_failure, attempt + 1);
        }

        nlohmann::json doc = nlohmann::json::parse(response_body, nullptr, false);
        if (doc.is_discarded()) {
            last_failure = "response body is not valid JSON";
            continue;
        }
        const auto* content = static_cast<const nlohmann::json*>(nullptr);
        if (doc.contains("choices") && doc["choices"].is_array() && !doc["choices"].empty()) {
            const auto& first = doc["choices"][0];
            if (first.contains("message") && first["message"].contains("content") &&
                first["message"]["content"].is_string()) {
                content = &first["message"]["content"];
            }
        }
        if (content == nullptr) {
            last_failure = "response lacks choices[0].message.content";
            continue;
        }

        CompletionResult result;
        result.text = content->get<std::string>();
        result.usage = make_usage(request.prompt.size(), result.text.size(),
                                  static_cast<std::uint64_t>(elapsed.count()));
        return result;
    }
    throw TransportError("completion failed after " + std::to_string(kMaxRetries + 1) +
                             " attempts: " + last_failure,
                         kMaxRetries + 1);
}

}  // namespace anchorkb
