#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace anchorkb {

struct ExtractedRelation {
    std::string target;
    std::string relation;
};

struct ExtractedStatusChange {
    std::string attribute;
    std::string from;  // empty when the old value was unknown
    std::string to;
};

struct ExtractedEntity {
    std::int64_t source_id = 0;
    std::string entity_name;
    std::string entity_type;
    std::vector<std::pair<std::string, std::string>> attributes;  // key-sorted
    std::vector<ExtractedRelation> relations;
    std::vector<ExtractedStatusChange> status_changes;
};

struct ExtractedWhen {
    std::optional<std::string> absolute;
    std::optional<std::string> relative;
    std::optional<std::string> duration;
    std::optional<std::string> recurrence;
};

struct ExtractedEvent {
    std::int64_t source_id = 0;
    std::string description;
    std::vector<std::string> who;
    std::string what;
    ExtractedWhen when;
    std::optional<std::string> where;
    std::optional<std::string> outcome;
    std::string event_type;
    std::string importance;
};

struct ExtractedTopic {
    std::string label;
    std::vector<std::string> keywords;
    std::vector<std::int64_t> utterance_indices;
};

struct TripleExtraction {
    std::vector<ExtractedEntity> entities;
    std::vector<ExtractedEvent> events;
    std::vector<ExtractedTopic> topics;
};

struct ExtractedTopicSummary {
    std::string narrative;
    std::vector<std::string> key_facts;
    std::vector<std::string> participants;
    std::string temporal_span;
    std::string sentiment;
    std::string importance;
    std::vector<std::string> extra_keywords;
};

// Removes a surrounding markdown code fence if present; otherwise returns
// the trimmed input unchanged.
std::string strip_code_fence(std::string_view raw);

// Parsers are lenient about unknown fields and scalar types but strict about
// the pieces downstream merging depends on: a malformed JSON body raises
// ExtractionParseError (carrying the raw text), a missing required key or a
// wrongly-typed required field raises SchemaError.
std::vector<ExtractedEntity> parse_entities(const std::string& raw);
std::vector<ExtractedEvent> parse_events(const std::string& raw);
std::vector<ExtractedTopic> parse_topics(const std::string& raw);
TripleExtraction parse_triple(const std::string& raw);
ExtractedTopicSummary parse_topic_summary(const std::string& raw);
std::string parse_profile_summary(const std::string& raw);

}  // namespace anchorkb
