#include "anchorkb/event_store.hpp"

#include <algorithm>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include "anchorkb/errors.hpp"
#include "anchorkb/text.hpp"

namespace anchorkb {

namespace {

const std::set<std::string>& known_event_types() {
    static const std::set<std::string> types = {"action", "experience", "state_change",
                                                "plan",   "routine",    "social",
                                                "achievement", "other"};
    return types;
}

std::string normalize_event_type(const std::string& raw) {
    std::string lowered = to_lower(trim(raw));
    if (known_event_types().count(lowered)) return lowered;
    return "other";
}

std::string normalize_importance(const std::string& raw) {
    std::string lowered = to_lower(trim(raw));
    if (lowered == "high" || lowered == "low") return lowered;
    return "medium";
}

std::set<std::string> who_set(const EventTuple& event) {
    std::set<std::string> out;
    for (const auto& name : event.who) out.insert(to_lower(trim(name)));
    return out;
}

std::string normalize_field(const std::optional<std::string>& field) {
    if (!field) return "";
    return to_lower(trim(*field));
}

// Absolute cues compare as calendar days when both sides parse; otherwise
// as normalized strings.
bool absolute_equal(const std::string& a, const std::string& b) {
    auto da = parse_date(a);
    auto db = parse_date(b);
    if (da && db) return *da == *db;
    return to_lower(trim(a)) == to_lower(trim(b));
}

bool when_equal(const WhenSpec& a, const WhenSpec& b) {
    if (a.empty() && b.empty()) return false;
    if (a.absolute.has_value() != b.absolute.has_value()) return false;
    if (a.absolute && !absolute_equal(*a.absolute, *b.absolute)) return false;
    if (normalize_field(a.relative) != normalize_field(b.relative)) return false;
    if (normalize_field(a.duration) != normalize_field(b.duration)) return false;
    if (normalize_field(a.recurrence) != normalize_field(b.recurrence)) return false;
    return true;
}

bool where_equal(const EventTuple& a, const EventTuple& b) {
    if (!a.where || !b.where) return false;
    return normalize_field(a.where) == normalize_field(b.where);
}

// Longer-string-wins completeness rule for one optional field.
void take_more_complete(std::optional<std::string>& held,
                        const std::optional<std::string>& incoming) {
    if (!incoming) return;
    if (!held || incoming->size() > held->size()) held = incoming;
}

void take_more_complete(std::string& held, const std::string& incoming) {
    if (incoming.size() > held.size()) held = incoming;
}

std::int64_t event_time_key(const EventTuple& event) {
    if (auto seconds = parse_timestamp_seconds(event.recorded_at)) return *seconds;
    return std::numeric_limits<std::int64_t>::max();
}

}  // namespace

std::string EventStore::make_event_id(std::int64_t source_seq_id, const std::string& what) {
    std::uint64_t hash = fnv1a64(std::to_string(source_seq_id) + "|" + what);
    std::ostringstream out;
    out << "ev-" << std::hex << std::setw(16) << std::setfill('0') << hash;
    return out.str();
}

double EventStore::dedup_score(const EventTuple& a, const EventTuple& b) {
    double who_term = jaccard(who_set(a), who_set(b));
    double what_term = jaccard(content_word_set(a.what), content_word_set(b.what));
    double when_term = when_equal(a.when, b.when) ? 1.0 : 0.0;
    double where_term = where_equal(a, b) ? 1.0 : 0.0;
    return (who_term + what_term + when_term + where_term) / 4.0;
}

EventTuple EventStore::from_extraction(const ExtractedEvent& extracted, const SeqIndex& index) {
    const Utterance& source = index.require(extracted.source_id, "event extraction");
    EventTuple event;
    std::set<std::string> seen_names;
    for (const auto& name : extracted.who) {
        std::string trimmed = trim(name);
        if (trimmed.empty()) continue;
        if (seen_names.insert(to_lower(trimmed)).second) event.who.push_back(trimmed);
    }
    event.what = trim(extracted.what);
    event.when.absolute = extracted.when.absolute;
    event.when.relative = extracted.when.relative;
    event.when.duration = extracted.when.duration;
    event.when.recurrence = extracted.when.recurrence;
    event.where = extracted.where;
    event.outcome = extracted.outcome;
    event.description = trim(extracted.description);
    event.event_type = normalize_event_type(extracted.event_type);
    event.importance = normalize_importance(extracted.importance);
    event.source_seq_id = extracted.source_id;
    event.recorded_at = source.timestamp;
    event.event_id = make_event_id(event.source_seq_id, event.what);
    return event;
}

std::size_t EventStore::add_event(EventTuple event, double tau) {
    std::size_t best_index = events_.size();
    double best_score = 0.0;
    for (std::size_t i = 0; i < events_.size(); ++i) {
        double score = dedup_score(events_[i], event);
        bool better = score > best_score;
        bool tied = score == best_score && best_index < events_.size() &&
                    events_[i].source_seq_id < events_[best_index].source_seq_id;
        if (better || tied) {
            best_score = score;
            best_index = i;
        }
    }

    if (best_index < events_.size() && best_score > tau) {
        EventTuple& held = events_[best_index];
        std::set<std::string> held_names = who_set(held);
        for (const auto& name : event.who) {
            if (held_names.insert(to_lower(trim(name))).second) held.who.push_back(trim(name));
        }
        take_more_complete(held.what, event.what);
        take_more_complete(held.description, event.description);
        take_more_complete(held.when.absolute, event.when.absolute);
        take_more_complete(held.when.relative, event.when.relative);
        take_more_complete(held.when.duration, event.when.duration);
        take_more_complete(held.when.recurrence, event.when.recurrence);
        take_more_complete(held.where, event.where);
        take_more_complete(held.outcome, event.outcome);
        if (held.trace_id) {
            for (auto& trace : traces_) {
                if (trace.trace_id == *held.trace_id) {
                    absorb_into_trace(trace, held);
                    break;
                }
            }
        }
        return best_index;
    }

    events_.push_back(std::move(event));
    link_to_trace(events_.size() - 1);
    return events_.size() - 1;
}

void EventStore::absorb_into_trace(TemporalTrace& trace, const EventTuple& event) {
    auto names = who_set(event);
    trace.participants.insert(names.begin(), names.end());
    auto words = content_word_set(event.what);
    trace.keywords.insert(words.begin(), words.end());
}

void EventStore::sort_trace_members(TemporalTrace& trace) {
    std::map<std::string, const EventTuple*> lookup;
    for (const auto& ev : events_) lookup[ev.event_id] = &ev;
    std::stable_sort(trace.event_ids.begin(), trace.event_ids.end(),
                     [&lookup](const std::string& a, const std::string& b) {
                         const EventTuple* ea = lookup.at(a);
                         const EventTuple* eb = lookup.at(b);
                         auto ka = event_time_key(*ea);
                         auto kb = event_time_key(*eb);
                         if (ka != kb) return ka < kb;
                         return ea->source_seq_id < eb->source_seq_id;
                     });
}

void EventStore::link_to_trace(std::size_t event_index) {
    EventTuple& event = events_[event_index];
    std::set<std::string> names = who_set(event);
    std::set<std::string> words = content_word_set(event.what);

    for (auto& trace : traces_) {
        bool shares_participant =
            std::any_of(names.begin(), names.end(),
                        [&trace](const std::string& n) { return trace.participants.count(n); });
        bool shares_keyword =
            std::any_of(words.begin(), words.end(),
                        [&trace](const std::string& w) { return trace.keywords.count(w); });
        if (shares_participant || shares_keyword) {
            event.trace_id = trace.trace_id;
            trace.event_ids.push_back(event.event_id);
            absorb_into_trace(trace, event);
            sort_trace_members(trace);
            return;
        }
    }

    TemporalTrace trace;
    trace.trace_id = "trace-" + std::to_string(traces_.size());
    std::string lead = event.who.empty() ? "unknown" : event.who.front();
    std::vector<std::string> title_words = content_words(event.what);
    if (title_words.size() > 2) title_words.resize(2);
    trace.title = lead + "'s " + join(title_words, " ") + " trace";
    trace.event_ids.push_back(event.event_id);
    absorb_into_trace(trace, event);
    event.trace_id = trace.trace_id;
    traces_.push_back(std::move(trace));
}

const EventTuple* EventStore::find_event(const std::string& event_id) const {
    for (const auto& event : events_) {
        if (event.event_id == event_id) return &event;
    }
    return nullptr;
}

const TemporalTrace* EventStore::find_trace(const std::string& trace_id) const {
    for (const auto& trace : traces_) {
        if (trace.trace_id == trace_id) return &trace;
    }
    return nullptr;
}

std::vector<EventStore::Match> EventStore::native_match(const std::string& query,
                                                        std::size_t cap) const {
    std::set<std::string> query_tokens = token_set(query);
    std::vector<Match> matches;
    for (const auto& event : events_) {
        std::set<std::string> event_tokens;
        for (const auto& name : event.who) {
            auto toks = token_set(name);
            event_tokens.insert(toks.begin(), toks.end());
        }
        auto what_words = content_word_set(event.what);
        event_tokens.insert(what_words.begin(), what_words.end());
        auto desc_words = content_word_set(event.description);
        event_tokens.insert(desc_words.begin(), desc_words.end());

        std::size_t overlap = 0;
        for (const auto& token : query_tokens) overlap += event_tokens.count(token);
        if (overlap > 0) matches.push_back({&event, overlap});
    }
    std::stable_sort(matches.begin(), matches.end(), [](const Match& a, const Match& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.event->event_id < b.event->event_id;
    });
    if (matches.size() > cap) matches.resize(cap);
    return matches;
}

EventStore EventStore::from_parts(std::vector<EventTuple> events,
                                  std::vector<TemporalTrace> traces) {
    EventStore store;
    store.events_ = std::move(events);
    store.traces_ = std::move(traces);
    return store;
}

}  // namespace anchorkb
