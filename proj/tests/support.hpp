#pragma once

// Shared helpers for the unit and acceptance binaries. Kept free of any
// test-framework dependency so both executables can include it.

#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "anchorkb/conversation.hpp"
#include "anchorkb/kb.hpp"
#include "anchorkb/provider.hpp"
#include "anchorkb/text.hpp"

namespace testsupport {

inline std::filesystem::path repo_path(const std::string& rel) {
    return std::filesystem::path(ANCHORKB_REPO_DIR) / rel;
}

inline std::string cli_path() { return ANCHORKB_CLI; }

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

// Unique scratch directory, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<unsigned> counter{0};
        std::random_device rd;
        std::ostringstream name;
        name << "anchorkb-test-" << ::getpid() << "-" << rd() << "-" << counter++;
        path_ = std::filesystem::temp_directory_path() / name.str();
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string str(const std::string& rel = "") const {
        return rel.empty() ? path_.string() : (path_ / rel).string();
    }

private:
    std::filesystem::path path_;
};

inline bool files_identical(const std::filesystem::path& a, const std::filesystem::path& b) {
    return read_file(a) == read_file(b);
}

// Same file names, each byte-identical. Non-recursive.
inline bool dirs_identical(const std::filesystem::path& a, const std::filesystem::path& b) {
    std::set<std::string> names_a;
    std::set<std::string> names_b;
    for (const auto& entry : std::filesystem::directory_iterator(a)) {
        names_a.insert(entry.path().filename().string());
    }
    for (const auto& entry : std::filesystem::directory_iterator(b)) {
        names_b.insert(entry.path().filename().string());
    }
    if (names_a != names_b) return false;
    for (const auto& name : names_a) {
        if (!files_identical(a / name, b / name)) return false;
    }
    return true;
}

struct CommandResult {
    int exit_code = -1;
    std::string output;
};

// Runs a shell command, capturing stdout and stderr together.
inline CommandResult run_command(const std::string& command) {
    CommandResult result;
    std::string wrapped = command + " 2>&1";
    FILE* pipe = ::popen(wrapped.c_str(), "r");
    if (!pipe) throw std::runtime_error("popen failed for: " + command);
    char buffer[4096];
    std::size_t n = 0;
    while ((n = std::fread(buffer, 1, sizeof buffer, pipe)) > 0) {
        result.output.append(buffer, n);
    }
    int status = ::pclose(pipe);
    if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
    return result;
}

// Serves canned completion text keyed by "<mode>/<start>-<end>". A missing
// key is a defect in the test itself, not in the code under test.
class ScriptedProvider : public anchorkb::Provider {
public:
    explicit ScriptedProvider(std::map<std::string, std::string> responses)
        : responses_(std::move(responses)) {}

    static std::string key(anchorkb::ModeTag mode, std::int64_t start, std::int64_t end) {
        return std::string(anchorkb::mode_tag_name(mode)) + "/" + std::to_string(start) + "-" +
               std::to_string(end);
    }

    anchorkb::CompletionResult complete(const anchorkb::CompletionRequest& request) override {
        auto it = responses_.find(key(request.mode, request.seq_start, request.seq_end));
        if (it == responses_.end()) {
            throw std::logic_error("no scripted response for " +
                                   key(request.mode, request.seq_start, request.seq_end));
        }
        return {it->second, anchorkb::make_usage(request.prompt.size(), it->second.size(), 0)};
    }
    std::string_view name() const override { return "scripted"; }
    bool deterministic() const override { return true; }

private:
    std::map<std::string, std::string> responses_;
};

// Deterministic value pools for generated inputs.
inline const std::vector<std::string>& name_pool() {
    static const std::vector<std::string> pool = {"Ava",  "Ben",  "Cleo", "Dev",
                                                  "Mira", "Noor", "Tess", "Yuri"};
    return pool;
}

inline const std::vector<std::string>& word_pool() {
    static const std::vector<std::string> pool = {
        "garden", "rocket",  "harbor", "violin", "recipe", "ledger", "canyon",
        "marble", "lantern", "compass", "meadow", "anvil",  "breeze", "cinder",
        "dune",   "ember",   "fjord",  "grove",  "inlet",  "jetty"};
    return pool;
}

template <typename T>
const T& pick(std::mt19937_64& rng, const std::vector<T>& pool) {
    std::uniform_int_distribution<std::size_t> dist(0, pool.size() - 1);
    return pool[dist(rng)];
}

inline int pick_int(std::mt19937_64& rng, int lo, int hi) {
    std::uniform_int_distribution<int> dist(lo, hi);
    return dist(rng);
}

inline double pick_real(std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    return dist(rng);
}

inline std::string sentence(std::mt19937_64& rng, int min_words, int max_words) {
    int count = pick_int(rng, min_words, max_words);
    std::vector<std::string> words;
    words.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) words.push_back(pick(rng, word_pool()));
    return anchorkb::join(words, " ");
}

inline anchorkb::Conversation random_conversation(std::mt19937_64& rng, std::size_t count) {
    anchorkb::Conversation conv;
    conv.conversation_id = "conv-" + std::to_string(rng() % 100000);
    int session = 1;
    int remaining = pick_int(rng, 3, 6);
    std::int64_t day = 19400 + pick_int(rng, 0, 400);
    for (std::size_t i = 0; i < count; ++i) {
        if (remaining == 0) {
            ++session;
            remaining = pick_int(rng, 3, 6);
            day += pick_int(rng, 1, 20);
        }
        --remaining;
        anchorkb::Utterance u;
        u.seq_id = static_cast<std::int64_t>(i);
        u.speaker = pick(rng, name_pool());
        u.content = sentence(rng, 3, 9);
        u.session_id = "s" + std::to_string(session);
        auto date = anchorkb::civil_from_days(day);
        char buf[32];
        std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", date.year, date.month, date.day);
        u.timestamp = buf;
        if (pick_int(rng, 0, 1) == 1) {
            std::snprintf(buf, sizeof buf, " %02d:%02d", pick_int(rng, 0, 23),
                          pick_int(rng, 0, 59));
            u.timestamp += buf;
        }
        conv.utterances.push_back(std::move(u));
    }
    return conv;
}

inline std::int64_t random_seq_in(std::mt19937_64& rng, const anchorkb::Batch& batch) {
    return batch.start_seq +
           pick_int(rng, 0, static_cast<int>(batch.end_seq - batch.start_seq));
}

inline std::string random_entity_payload(std::mt19937_64& rng, const anchorkb::Batch& batch) {
    static const std::vector<std::string> types = {"person", "concept",  "task",        "event",
                                                   "item",   "location", "organization", "other"};
    static const std::vector<std::string> attr_keys = {"role", "hobby", "city", "project"};
    static const std::vector<std::string> rel_types = {"works_with", "friend_of", "owner_of"};

    nlohmann::json entities = nlohmann::json::array();
    int count = pick_int(rng, 0, 3);
    for (int i = 0; i < count; ++i) {
        nlohmann::json entity = nlohmann::json::object();
        entity["source_id"] = random_seq_in(rng, batch);
        entity["entity_name"] = pick(rng, name_pool());
        if (pick_int(rng, 0, 3) > 0) entity["entity_type"] = pick(rng, types);
        int attr_count = pick_int(rng, 0, 2);
        if (attr_count > 0) {
            nlohmann::json attrs = nlohmann::json::object();
            for (int a = 0; a < attr_count; ++a) attrs[pick(rng, attr_keys)] = sentence(rng, 1, 2);
            entity["attributes"] = attrs;
        }
        if (pick_int(rng, 0, 4) == 0) {
            nlohmann::json rel = nlohmann::json::object();
            rel["target"] = pick(rng, name_pool());
            rel["relation"] = pick(rng, rel_types);
            entity["relations"] = nlohmann::json::array({rel});
        }
        if (pick_int(rng, 0, 5) == 0) {
            nlohmann::json change = nlohmann::json::object();
            change["attribute"] = pick(rng, attr_keys);
            change["from"] = "";
            change["to"] = sentence(rng, 1, 2);
            entity["status_changes"] = nlohmann::json::array({change});
        }
        entities.push_back(std::move(entity));
    }
    nlohmann::json doc;
    doc["entities"] = std::move(entities);
    return doc.dump();
}

inline std::string random_event_payload(std::mt19937_64& rng, const anchorkb::Batch& batch) {
    static const std::vector<std::string> types = {"action", "experience", "state_change",
                                                   "plan",   "routine",    "social",
                                                   "achievement", "other"};
    static const std::vector<std::string> importances = {"high", "medium", "low"};
    static const std::vector<std::string> absolutes = {"2023-05-01", "May 1, 2023", "2023-06-10"};
    static const std::vector<std::string> relatives = {"today", "yesterday"};
    static const std::vector<std::string> places = {"the lab", "the park", "the studio"};

    nlohmann::json events = nlohmann::json::array();
    int count = pick_int(rng, 0, 3);
    for (int i = 0; i < count; ++i) {
        nlohmann::json event = nlohmann::json::object();
        event["source_id"] = random_seq_in(rng, batch);
        event["description"] = sentence(rng, 3, 8);
        nlohmann::json who = nlohmann::json::array();
        int who_count = pick_int(rng, 1, 2);
        for (int w = 0; w < who_count; ++w) who.push_back(pick(rng, name_pool()));
        event["who"] = std::move(who);
        event["what"] = sentence(rng, 2, 5);
        switch (pick_int(rng, 0, 4)) {
            case 1: event["when"] = {{"absolute", pick(rng, absolutes)}}; break;
            case 2: event["when"] = {{"relative", pick(rng, relatives)}}; break;
            case 3: event["when"] = {{"recurrence", "every friday"}}; break;
            case 4: event["when"] = {{"duration", "two weeks"}}; break;
            default: break;
        }
        if (pick_int(rng, 0, 1) == 1) event["where"] = pick(rng, places);
        if (pick_int(rng, 0, 3) == 0) event["outcome"] = sentence(rng, 2, 4);
        event["event_type"] = pick(rng, types);
        event["importance"] = pick(rng, importances);
        events.push_back(std::move(event));
    }
    nlohmann::json doc;
    doc["events"] = std::move(events);
    return doc.dump();
}

inline std::string random_topic_payload(std::mt19937_64& rng, const anchorkb::Batch& batch) {
    std::vector<std::int64_t> seqs;
    for (const auto& u : batch.utterances) seqs.push_back(u.seq_id);
    std::shuffle(seqs.begin(), seqs.end(), rng);

    nlohmann::json topics = nlohmann::json::array();
    std::size_t cursor = 0;
    int cluster_count = pick_int(rng, 1, 3);
    for (int c = 0; c < cluster_count && cursor < seqs.size(); ++c) {
        std::size_t take = static_cast<std::size_t>(
            pick_int(rng, 1, static_cast<int>(seqs.size() - cursor)));
        nlohmann::json topic = nlohmann::json::object();
        topic["topic_label"] = pick(rng, word_pool()) + " talk";
        topic["topic_keywords"] =
            nlohmann::json::array({pick(rng, word_pool()), pick(rng, word_pool())});
        nlohmann::json indices = nlohmann::json::array();
        for (std::size_t i = cursor; i < cursor + take; ++i) indices.push_back(seqs[i]);
        // Double assignments and out-of-batch references are valid inputs
        // the store must tolerate, so inject them now and then.
        if (cursor > 0 && pick_int(rng, 0, 3) == 0) indices.push_back(seqs[0]);
        if (pick_int(rng, 0, 5) == 0) indices.push_back(batch.end_seq + 50);
        topic["utterance_indices"] = std::move(indices);
        topics.push_back(std::move(topic));
        cursor += take;
    }
    nlohmann::json doc;
    doc["topics"] = std::move(topics);
    return doc.dump();
}

struct ScriptedBuild {
    anchorkb::Conversation conv;
    std::map<std::string, std::string> responses;
};

// A random conversation plus matching extraction payloads for every batch
// the build will request, so build_kb can run end to end offline.
inline ScriptedBuild make_scripted_build(std::mt19937_64& rng, std::size_t utterance_count,
                                         const anchorkb::BuildConfig& config) {
    ScriptedBuild out;
    out.conv = random_conversation(rng, utterance_count);
    for (const auto& batch :
         anchorkb::make_batches(out.conv, anchorkb::BatchKind::entity, config.batch_entity, 0.0)) {
        out.responses[ScriptedProvider::key(anchorkb::ModeTag::entity, batch.start_seq,
                                            batch.end_seq)] = random_entity_payload(rng, batch);
    }
    for (const auto& batch :
         anchorkb::make_batches(out.conv, anchorkb::BatchKind::event, config.batch_event, 0.0)) {
        out.responses[ScriptedProvider::key(anchorkb::ModeTag::event, batch.start_seq,
                                            batch.end_seq)] = random_event_payload(rng, batch);
    }
    for (const auto& batch : anchorkb::make_batches(out.conv, anchorkb::BatchKind::topic,
                                                    config.batch_topic, config.topic_overlap)) {
        out.responses[ScriptedProvider::key(anchorkb::ModeTag::topic_id, batch.start_seq,
                                            batch.end_seq)] = random_topic_payload(rng, batch);
    }
    return out;
}

}  // namespace testsupport
