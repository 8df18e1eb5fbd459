#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "anchorkb/conversation.hpp"
#include "anchorkb/extraction.hpp"

namespace anchorkb {

struct AttributeValue {
    std::string value;
    double confidence = 0.0;
    std::vector<std::int64_t> evidence_seq_ids;
};

// One row per value that lost a confidence comparison: either a held value
// that was replaced, or incoming evidence that failed to displace the
// current value.
struct ArchivedAttribute {
    std::string key;
    std::string old_value;
    double old_confidence = 0.0;
    std::int64_t superseded_at_seq = 0;
};

struct Relation {
    std::string source;
    std::string target;
    std::string relation_type;
    bool inferred = false;
};

struct TimelineEntry {
    std::string description;
    std::string timestamp;
    std::int64_t seq_id = 0;
    std::string kind;  // "status_change" or "event_mention"
};

struct EntityProfile {
    std::string canonical_name;
    std::string entity_type = "other";
    std::map<std::string, AttributeValue> attributes;  // keys lowercased
    std::vector<ArchivedAttribute> attribute_history;
    std::vector<Relation> relations;
    std::vector<TimelineEntry> timeline;
    std::map<std::string, std::int64_t> co_occurrences;  // other canonical name -> count
    std::string summary;
};

using ProfileSummarizer = std::function<std::string(const EntityProfile&)>;

struct EntityMatch {
    const EntityProfile* profile;
    std::size_t score;
};

class EntityStore {
public:
    static constexpr double kDefaultObservationConfidence = 0.6;
    // Status transitions are treated as high-importance evidence and carry
    // enough weight to displace a default-confidence value.
    static constexpr double kStatusObservationConfidence = 0.8;
    static constexpr std::int64_t kDefaultCooccurrenceThreshold = 3;

    // c' = 1 - (1 - c)(1 - c_obs)
    static double accumulate_confidence(double existing, double observation);

    void merge_extraction(const std::vector<ExtractedEntity>& batch, const SeqIndex& index);

    bool has_profile(const std::string& name) const;
    const EntityProfile* find(const std::string& name) const;

    // Appends an event-mention timeline entry; no-op (returns false) when
    // the entity has no profile.
    bool add_event_mention(const std::string& name, const std::string& description,
                           const std::string& timestamp, std::int64_t seq_id);

    // Relation dedup, timeline ordering, co-occurrence relation inference
    // and summary generation. Idempotent.
    void consolidate(std::int64_t cooccurrence_threshold, const ProfileSummarizer& summarizer);
    bool consolidated() const { return consolidated_; }

    static std::string template_summary(const EntityProfile& profile);

    // Token-overlap match over name, attribute values and summary. Only
    // positive scores qualify; ordered by score desc, canonical name asc.
    std::vector<EntityMatch> native_match(const std::string& query, std::size_t cap) const;

    const std::map<std::string, EntityProfile>& profiles() const { return profiles_; }
    std::size_t size() const { return profiles_.size(); }

    // Reconstructs a store from persisted profiles.
    static EntityStore from_profiles(std::vector<EntityProfile> profiles, bool consolidated);

private:
    EntityProfile& find_or_create(const std::string& name);
    void apply_attribute(EntityProfile& profile, const std::string& key, const std::string& value,
                         std::int64_t seq_id, double observation);

    std::map<std::string, EntityProfile> profiles_;  // key: lowercased canonical name
    bool consolidated_ = false;
};

}  // namespace anchorkb
