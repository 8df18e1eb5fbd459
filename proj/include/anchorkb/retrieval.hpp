#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "anchorkb/embedding.hpp"
#include "anchorkb/kb.hpp"

namespace anchorkb {

struct RetrievalConfig {
    std::size_t k_entity = 5;
    std::size_t k_event = 5;
    std::size_t k_topic = 5;
    double sigma = 0.25;             // minimum cosine similarity kept
    std::size_t candidate_cap = 50;  // native-match candidates per module
    std::size_t temporal_reserved = 2;
};

enum class TemporalKind { absolute, relative, recurrence };

struct TemporalExpression {
    TemporalKind kind = TemporalKind::absolute;
    // absolute: "YYYY-MM-DD", "YYYY-MM" or "YYYY" at matched granularity;
    // relative: underscore-joined phrase ("last_year", "3_days_ago");
    // recurrence: "every:<unit>".
    std::string normalized;
    std::size_t position = 0;
    std::string raw;
};

// Scans left to right with longer/more-specific patterns taking precedence;
// an accepted match masks its span from later patterns, so the year inside
// "1 May, 2022" is not reported twice. Results are ordered by position.
std::vector<TemporalExpression> detect_temporal(const std::string& query);

// Normalization used on event-side WhenSpec fields before comparison.
std::string normalize_absolute(const std::string& text);
std::string normalize_relative(const std::string& text);
std::string normalize_recurrence(const std::string& text);

// True when any detected expression matches the event's when fields.
// Absolute expressions compare by calendar prefix at the coarser of the two
// granularities; day-level relative cues (today/yesterday/tomorrow and the
// month/year neighbors) resolve against recorded_at before comparison.
bool when_matches(const EventTuple& event, const std::vector<TemporalExpression>& expressions);

struct Candidate {
    std::string id;  // tie-break key, unique per module
    std::string text;
};

struct RankedItem {
    std::size_t index = 0;  // position in the candidate list
    double similarity = 0.0;
};

// Cosine rerank: embeds the query once, scores every candidate, drops
// entries below sigma, orders by similarity desc with id asc tie-break,
// truncates to k.
std::vector<RankedItem> rerank(const std::string& query, const std::vector<Candidate>& candidates,
                               std::size_t k, double sigma, const Embedder& embedder);

struct EventCandidate {
    const EventTuple* event = nullptr;
    std::string id;
    std::string text;
};

struct SelectedEvent {
    std::size_t index = 0;
    double similarity = 0.0;
    bool temporal_reserved = false;
};

// Event selection with temporal preservation: when the query carries
// temporal expressions, up to cfg.temporal_reserved slots go to the
// highest-similarity when-matching events regardless of sigma; remaining
// slots are filled by plain rerank over the rest.
std::vector<SelectedEvent> select_events_with_preservation(
    const std::string& query, const std::vector<EventCandidate>& candidates,
    const RetrievalConfig& cfg, const Embedder& embedder);

// Compact text representations embedded for reranking.
std::string entity_compact_text(const EntityProfile& profile);
std::string event_compact_text(const EventTuple& event);
std::string topic_compact_text(const TopicCluster& cluster);

struct ScoredEntity {
    EntityProfile profile;
    double similarity = 0.0;
};

struct ScoredEvent {
    EventTuple event;
    double similarity = 0.0;
    bool temporal_reserved = false;
};

struct ScoredTopic {
    TopicCluster cluster;
    double similarity = 0.0;
};

struct AnchorSelection {
    std::vector<ScoredEntity> entities;
    std::vector<ScoredEvent> events;
    std::vector<ScoredTopic> topics;
};

// Native match (capped) then embedding rerank per module; events go through
// temporal preservation. Requires a consolidated knowledge base.
AnchorSelection select_anchors(const AnchorKB& kb, const std::string& query,
                               const RetrievalConfig& cfg, const Embedder& embedder);

}  // namespace anchorkb
