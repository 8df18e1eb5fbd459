#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "anchorkb/entity_store.hpp"
#include "anchorkb/event_store.hpp"
#include "anchorkb/provider.hpp"
#include "anchorkb/topic_store.hpp"

namespace anchorkb {

struct BuildConfig {
    std::size_t batch_entity = 60;
    std::size_t batch_event = 60;
    std::size_t batch_topic = 150;
    double topic_overlap = 0.2;
    double dedup_tau = 0.6;
    std::int64_t cooccurrence_threshold = 3;
};

struct Manifest {
    std::string format_version = "1.0";
    std::string conversation_id;
    std::string build_mode = "default";  // default | parallel | triple
    std::string created_at;
    std::uint64_t utterance_count = 0;
    std::int64_t min_seq = 0;
    std::int64_t max_seq = 0;
    BuildConfig config;
};

// The portable bundle: three anchor stores plus manifest and usage totals.
struct AnchorKB {
    Manifest manifest;
    EntityStore entities;
    EventStore events;
    TopicStore topics;
    UsageRecord usage;

    bool consolidated() const { return entities.consolidated() && topics.merged(); }
};

// Serialized file layout inside a knowledge-base directory.
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kEntitiesFile = "entities.json";
inline constexpr const char* kEventsFile = "events.json";
inline constexpr const char* kTracesFile = "traces.json";
inline constexpr const char* kTopicsFile = "topics.json";
inline constexpr const char* kUsageFile = "usage.json";

nlohmann::json manifest_to_json(const Manifest& manifest);
Manifest manifest_from_json(const nlohmann::json& doc);
nlohmann::json profile_to_json(const EntityProfile& profile);
EntityProfile profile_from_json(const nlohmann::json& doc);
nlohmann::json event_to_json(const EventTuple& event);
EventTuple event_from_json(const nlohmann::json& doc);
nlohmann::json trace_to_json(const TemporalTrace& trace);
TemporalTrace trace_from_json(const nlohmann::json& doc);
nlohmann::json cluster_to_json(const TopicCluster& cluster);
TopicCluster cluster_from_json(const nlohmann::json& doc);
nlohmann::json usage_to_json(const UsageRecord& usage);
UsageRecord usage_from_json(const nlohmann::json& doc);

// Writes the six files with 2-space indentation and sorted keys, making
// byte-level comparison meaningful. Refuses unconsolidated bases.
void save_kb(const AnchorKB& kb, const std::string& dir);

// Loads and validates: the format major version must match, and every
// cross-file reference (trace membership both ways, every recorded seq_id)
// is checked. All broken references are reported in one ValidationError.
AnchorKB load_kb(const std::string& dir);

// Structural equality through the serialized form.
bool kb_equal(const AnchorKB& a, const AnchorKB& b);

}  // namespace anchorkb
