#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "anchorkb/conversation.hpp"
#include "anchorkb/extraction.hpp"

namespace anchorkb {

struct WhenSpec {
    std::optional<std::string> absolute;
    std::optional<std::string> relative;
    std::optional<std::string> duration;
    std::optional<std::string> recurrence;

    bool empty() const { return !absolute && !relative && !duration && !recurrence; }
};

struct EventTuple {
    std::string event_id;
    std::vector<std::string> who;
    std::string what;
    WhenSpec when;
    std::optional<std::string> where;
    std::optional<std::string> outcome;
    std::string description;
    std::string event_type = "other";
    std::string importance = "medium";
    std::int64_t source_seq_id = 0;
    std::string recorded_at;
    std::optional<std::string> trace_id;
};

struct TemporalTrace {
    std::string trace_id;
    std::string title;
    std::vector<std::string> event_ids;  // chronological
    std::set<std::string> participants;  // lowercased
    std::set<std::string> keywords;      // content words
};

class EventStore {
public:
    static constexpr double kDefaultDedupThreshold = 0.6;

    // Stable across merges: derived from the first-seen source seq and the
    // original what field.
    static std::string make_event_id(std::int64_t source_seq_id, const std::string& what);

    // Mean of four [0,1] components: who Jaccard, what content-word Jaccard,
    // normalized-when equality, normalized-where equality. Absent operands
    // contribute 0 (Jaccard of two empty sets included).
    static double dedup_score(const EventTuple& a, const EventTuple& b);

    static EventTuple from_extraction(const ExtractedEvent& extracted, const SeqIndex& index);

    // Dedup-merges against stored events (strictly above tau merges into the
    // best match, ties to the lowest source seq) or appends and links the
    // event into a temporal trace. Returns the index of the surviving event.
    std::size_t add_event(EventTuple event, double tau);

    const std::vector<EventTuple>& events() const { return events_; }
    const std::vector<TemporalTrace>& traces() const { return traces_; }
    const EventTuple* find_event(const std::string& event_id) const;
    const TemporalTrace* find_trace(const std::string& trace_id) const;

    struct Match {
        const EventTuple* event;
        std::size_t score;
    };
    // Token-overlap match over participants, what and description content
    // words. Ordered by score desc, event_id asc.
    std::vector<Match> native_match(const std::string& query, std::size_t cap) const;

    static EventStore from_parts(std::vector<EventTuple> events,
                                 std::vector<TemporalTrace> traces);

private:
    void link_to_trace(std::size_t event_index);
    void absorb_into_trace(TemporalTrace& trace, const EventTuple& event);
    void sort_trace_members(TemporalTrace& trace);

    std::vector<EventTuple> events_;
    std::vector<TemporalTrace> traces_;
};

}  // namespace anchorkb
