#include "anchorkb/retrieval.hpp"

#include <algorithm>
#include <cstdio>
#include <regex>
#include <set>

#include "anchorkb/errors.hpp"
#include "anchorkb/text.hpp"

namespace anchorkb {

namespace {

const std::set<std::string>& weekday_units() {
    static const std::set<std::string> units = {"monday",   "tuesday", "wednesday", "thursday",
                                                "friday",   "saturday", "sunday"};
    return units;
}

const std::set<std::string>& recurrence_units() {
    static const std::set<std::string> units = {"day",     "week",    "month",   "year",
                                                "weekend", "morning", "afternoon", "evening",
                                                "night"};
    return units;
}

std::string format_date(const CivilDate& d) {
    char buffer[16];
    std::snprintf(buffer, sizeof(buffer), "%04d-%02d-%02d", d.year, d.month, d.day);
    return buffer;
}

std::string format_month(int year, int month) {
    char buffer[12];
    std::snprintf(buffer, sizeof(buffer), "%04d-%02d", year, month);
    return buffer;
}

std::string underscore_join(const std::string& text) {
    return join(tokenize(text), "_");
}

// Singularizes weekday plurals; other units pass through.
std::string normalize_recurrence_unit(const std::string& unit) {
    std::string lowered = to_lower(trim(unit));
    if (lowered.size() > 1 && lowered.back() == 's') {
        std::string singular = lowered.substr(0, lowered.size() - 1);
        if (weekday_units().count(singular)) return singular;
    }
    return lowered;
}

bool valid_recurrence_unit(const std::string& unit) {
    std::string normalized = normalize_recurrence_unit(unit);
    return recurrence_units().count(normalized) || weekday_units().count(normalized);
}

bool is_calendar_form(const std::string& text) {
    static const std::regex shape(R"(^\d{4}(-\d{2}(-\d{2})?)?$)");
    return std::regex_match(text, shape);
}

bool calendar_prefix_match(const std::string& a, const std::string& b) {
    if (!is_calendar_form(a) || !is_calendar_form(b)) return false;
    if (a.size() <= b.size()) return b.compare(0, a.size(), a) == 0;
    return a.compare(0, b.size(), b) == 0;
}

struct SpanHit {
    std::size_t start = 0;
    std::size_t end = 0;
    TemporalExpression expr;
};

bool overlaps(const std::vector<SpanHit>& accepted, std::size_t start, std::size_t end) {
    for (const auto& hit : accepted) {
        if (start < hit.end && hit.start < end) return true;
    }
    return false;
}

// Runs one pattern over the text, calling `build` for every regex hit;
// `build` returns false to reject a candidate (e.g. a word that is not a
// month name), which leaves the span unmasked for later patterns.
template <typename Builder>
void scan_pattern(const std::string& lowered, const std::string& original,
                  const std::regex& pattern, std::vector<SpanHit>& accepted,
                  const Builder& build) {
    auto begin = std::sregex_iterator(lowered.begin(), lowered.end(), pattern);
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
        const std::smatch& match = *it;
        std::size_t start = static_cast<std::size_t>(match.position(0));
        std::size_t end = start + static_cast<std::size_t>(match.length(0));
        if (overlaps(accepted, start, end)) continue;
        TemporalExpression expr;
        if (!build(match, expr)) continue;
        expr.position = start;
        expr.raw = original.substr(start, end - start);
        accepted.push_back({start, end, std::move(expr)});
    }
}

}  // namespace

std::vector<TemporalExpression> detect_temporal(const std::string& query) {
    static const std::regex iso_date(R"(\b(\d{4})-(\d{1,2})-(\d{1,2})\b)");
    static const std::regex textual_mdy(
        R"(\b([a-z]+)\s+(\d{1,2})(?:st|nd|rd|th)?\s*,?\s+(\d{4})\b)");
    static const std::regex textual_dmy(
        R"(\b(\d{1,2})(?:st|nd|rd|th)?\s+([a-z]+)\s*,?\s+(\d{4})\b)");
    static const std::regex units_ago(R"(\b(\d+)\s+(day|week|month)s?\s+ago\b)");
    static const std::regex iso_month(R"(\b(\d{4})-(\d{1,2})\b)");
    static const std::regex textual_month_year(R"(\b([a-z]+)\s*,?\s+(\d{4})\b)");
    static const std::regex recurrence(R"(\bevery\s+([a-z]+)\b)");
    static const std::regex relative_word(R"(\b(today|yesterday|tomorrow|recently)\b)");
    static const std::regex relative_phrase(
        R"(\b(last|this|next)\s+(week|month|year|weekend|summer|winter|spring|fall)\b)");
    static const std::regex bare_year(R"(\b((?:19|20)\d{2})\b)");

    std::string lowered = to_lower(query);
    std::vector<SpanHit> accepted;

    scan_pattern(lowered, query, iso_date, accepted,
                 [](const std::smatch& m, TemporalExpression& expr) {
                     CivilDate d{std::stoi(m[1]), std::stoi(m[2]), std::stoi(m[3])};
                     if (!parse_date(m[0].str())) return false;
                     expr.kind = TemporalKind::absolute;
                     expr.normalized = format_date(d);
                     return true;
                 });
    scan_pattern(lowered, query, textual_mdy, accepted,
                 [](const std::smatch& m, TemporalExpression& expr) {
                     auto month = parse_month_name(m[1].str());
                     if (!month) return false;
                     CivilDate d{std::stoi(m[3]), *month, std::stoi(m[2])};
                     if (!parse_date(m[1].str() + " " + m[2].str() + " " + m[3].str())) {
                         return false;
                     }
                     expr.kind = TemporalKind::absolute;
                     expr.normalized = format_date(d);
                     return true;
                 });
    scan_pattern(lowered, query, textual_dmy, accepted,
                 [](const std::smatch& m, TemporalExpression& expr) {
                     auto month = parse_month_name(m[2].str());
                     if (!month) return false;
                     CivilDate d{std::stoi(m[3]), *month, std::stoi(m[1])};
                     if (!parse_date(m[1].str() + " " + m[2].str() + " " + m[3].str())) {
                         return false;
                     }
                     expr.kind = TemporalKind::absolute;
                     expr.normalized = format_date(d);
                     return true;
                 });
    scan_pattern(lowered, query, units_ago, accepted,
                 [](const std::smatch& m, TemporalExpression& expr) {
                     expr.kind = TemporalKind::relative;
                     expr.normalized = underscore_join(m[0].str());
                     return true;
                 });
    scan_pattern(lowered, query, iso_month, accepted,
                 [](const std::smatch& m, TemporalExpression& expr) {
                     int month = std::stoi(m[2]);
                     if (month < 1 || month > 12) return false;
                     expr.kind = TemporalKind::absolute;
                     expr.normalized = format_month(std::stoi(m[1]), month);
                     return true;
                 });
    scan_pattern(lowered, query, textual_month_year, accepted,
                 [](const std::smatch& m, TemporalExpression& expr) {
                     auto month = parse_month_name(m[1].str());
                     if (!month) return false;
                     expr.kind = TemporalKind::absolute;
                     expr.normalized = format_month(std::stoi(m[2]), *month);
                     return true;
                 });
    scan_pattern(lowered, query, recurrence, accepted,
                 [](const std::smatch& m, TemporalExpression& expr) {
                     if (!valid_recurrence_unit(m[1].str())) return false;
                     expr.kind = TemporalKind::recurrence;
                     expr.normalized = "every:" + normalize_recurrence_unit(m[1].str());
                     return true;
                 });
    scan_pattern(lowered, query, relative_word, accepted,
                 [](const std::smatch& m, TemporalExpression& expr) {
                     expr.kind = TemporalKind::relative;
                     expr.normalized = m[1].str();
                     return true;
                 });
    scan_pattern(lowered, query, relative_phrase, accepted,
                 [](const std::smatch& m, TemporalExpression& expr) {
                     expr.kind = TemporalKind::relative;
                     expr.normalized = underscore_join(m[0].str());
                     return true;
                 });
    scan_pattern(lowered, query, bare_year, accepted,
                 [](const std::smatch& m, TemporalExpression& expr) {
                     expr.kind = TemporalKind::absolute;
                     expr.normalized = m[1].str();
                     return true;
                 });

    std::sort(accepted.begin(), accepted.end(),
              [](const SpanHit& a, const SpanHit& b) { return a.start < b.start; });
    std::vector<TemporalExpression> out;
    out.reserve(accepted.size());
    for (auto& hit : accepted) out.push_back(std::move(hit.expr));
    return out;
}

std::string normalize_absolute(const std::string& text) {
    std::string trimmed = trim(text);
    if (auto date = parse_date(trimmed)) return format_date(*date);

    static const std::regex iso_month(R"(^(\d{4})-(\d{1,2})$)");
    std::smatch match;
    if (std::regex_match(trimmed, match, iso_month)) {
        int month = std::stoi(match[2]);
        if (month >= 1 && month <= 12) return format_month(std::stoi(match[1]), month);
    }
    std::string lowered = to_lower(trimmed);
    static const std::regex textual_month_year(R"(^([a-z]+)\s*,?\s+(\d{4})$)");
    if (std::regex_match(lowered, match, textual_month_year)) {
        if (auto month = parse_month_name(match[1].str())) {
            return format_month(std::stoi(match[2]), *month);
        }
    }
    static const std::regex year_only(R"(^((?:19|20)\d{2})$)");
    if (std::regex_match(lowered, match, year_only)) return match[1].str();
    return lowered;
}

std::string normalize_relative(const std::string& text) {
    std::string lowered = to_lower(trim(text));
    static const std::regex units_ago(R"(\b(\d+)\s+(day|week|month)s?\s+ago\b)");
    static const std::regex relative_word(R"(\b(today|yesterday|tomorrow|recently)\b)");
    static const std::regex relative_phrase(
        R"(\b(last|this|next)\s+(week|month|year|weekend|summer|winter|spring|fall)\b)");
    std::smatch match;
    if (std::regex_search(lowered, match, units_ago)) return underscore_join(match[0].str());
    if (std::regex_search(lowered, match, relative_word)) return match[1].str();
    if (std::regex_search(lowered, match, relative_phrase)) return underscore_join(match[0].str());
    return underscore_join(lowered);
}

std::string normalize_recurrence(const std::string& text) {
    std::string lowered = to_lower(trim(text));
    static const std::regex every_unit(R"(^every\s+([a-z]+)$)");
    std::smatch match;
    if (std::regex_match(lowered, match, every_unit)) {
        if (valid_recurrence_unit(match[1].str())) {
            return "every:" + normalize_recurrence_unit(match[1].str());
        }
    }
    if (valid_recurrence_unit(lowered)) return "every:" + normalize_recurrence_unit(lowered);
    return "";
}

namespace {

// Day-granularity relatives and calendar-neighbor phrases resolve against
// the event's recording date; week/weekend/season phrases have no stable
// calendar form and stay unresolved.
std::optional<std::string> resolve_relative(const std::string& normalized,
                                            const std::string& recorded_at) {
    auto date = parse_date(recorded_at);
    if (!date) return std::nullopt;
    std::int64_t day = days_from_civil(*date);

    if (normalized == "today") return format_date(*date);
    if (normalized == "yesterday") return format_date(civil_from_days(day - 1));
    if (normalized == "tomorrow") return format_date(civil_from_days(day + 1));

    auto shift_month = [&](int delta) {
        int month_index = date->year * 12 + (date->month - 1) + delta;
        return format_month(month_index / 12, month_index % 12 + 1);
    };
    if (normalized == "this_month") return shift_month(0);
    if (normalized == "last_month") return shift_month(-1);
    if (normalized == "next_month") return shift_month(1);
    if (normalized == "this_year") return std::to_string(date->year);
    if (normalized == "last_year") return std::to_string(date->year - 1);
    if (normalized == "next_year") return std::to_string(date->year + 1);
    return std::nullopt;
}

}  // namespace

bool when_matches(const EventTuple& event, const std::vector<TemporalExpression>& expressions) {
    for (const auto& expr : expressions) {
        switch (expr.kind) {
            case TemporalKind::absolute: {
                if (event.when.absolute) {
                    std::string normalized = normalize_absolute(*event.when.absolute);
                    if (calendar_prefix_match(normalized, expr.normalized)) return true;
                } else if (event.when.relative) {
                    std::string normalized = normalize_relative(*event.when.relative);
                    auto resolved = resolve_relative(normalized, event.recorded_at);
                    if (resolved && calendar_prefix_match(*resolved, expr.normalized)) return true;
                }
                break;
            }
            case TemporalKind::relative: {
                if (event.when.relative &&
                    normalize_relative(*event.when.relative) == expr.normalized) {
                    return true;
                }
                break;
            }
            case TemporalKind::recurrence: {
                if (event.when.recurrence &&
                    normalize_recurrence(*event.when.recurrence) == expr.normalized) {
                    return true;
                }
                break;
            }
        }
    }
    return false;
}

std::vector<RankedItem> rerank(const std::string& query, const std::vector<Candidate>& candidates,
                               std::size_t k, double sigma, const Embedder& embedder) {
    std::vector<double> query_vec = embedder.embed(query);
    std::vector<RankedItem> ranked;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        double similarity = dot(query_vec, embedder.embed(candidates[i].text));
        if (similarity >= sigma) ranked.push_back({i, similarity});
    }
    std::sort(ranked.begin(), ranked.end(),
              [&candidates](const RankedItem& a, const RankedItem& b) {
                  if (a.similarity != b.similarity) return a.similarity > b.similarity;
                  return candidates[a.index].id < candidates[b.index].id;
              });
    if (ranked.size() > k) ranked.resize(k);
    return ranked;
}

std::vector<SelectedEvent> select_events_with_preservation(
    const std::string& query, const std::vector<EventCandidate>& candidates,
    const RetrievalConfig& cfg, const Embedder& embedder) {
    std::vector<double> query_vec = embedder.embed(query);
    std::vector<double> similarities(candidates.size(), 0.0);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        similarities[i] = dot(query_vec, embedder.embed(candidates[i].text));
    }

    auto by_rank = [&](std::size_t a, std::size_t b) {
        if (similarities[a] != similarities[b]) return similarities[a] > similarities[b];
        return candidates[a].id < candidates[b].id;
    };

    std::vector<TemporalExpression> expressions = detect_temporal(query);
    std::vector<std::size_t> reserved;
    if (!expressions.empty() && cfg.temporal_reserved > 0) {
        std::vector<std::size_t> matching;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (when_matches(*candidates[i].event, expressions)) matching.push_back(i);
        }
        std::sort(matching.begin(), matching.end(), by_rank);
        std::size_t slots = std::min<std::size_t>(cfg.temporal_reserved, cfg.k_event);
        if (matching.size() > slots) matching.resize(slots);
        reserved = std::move(matching);
    }

    std::set<std::size_t> reserved_set(reserved.begin(), reserved.end());
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (reserved_set.count(i)) continue;
        if (similarities[i] >= cfg.sigma) pool.push_back(i);
    }
    std::sort(pool.begin(), pool.end(), by_rank);
    std::size_t remaining = cfg.k_event - reserved.size();
    if (pool.size() > remaining) pool.resize(remaining);

    std::vector<SelectedEvent> out;
    out.reserve(reserved.size() + pool.size());
    for (std::size_t index : reserved) out.push_back({index, similarities[index], true});
    for (std::size_t index : pool) out.push_back({index, similarities[index], false});
    return out;
}

std::string entity_compact_text(const EntityProfile& profile) {
    if (!profile.summary.empty()) return profile.summary;
    return EntityStore::template_summary(profile);
}

std::string event_compact_text(const EventTuple& event) {
    std::vector<std::string> parts;
    if (!event.description.empty()) parts.push_back(event.description);
    if (event.when.absolute) parts.push_back(*event.when.absolute);
    if (event.when.relative) parts.push_back(*event.when.relative);
    if (event.when.duration) parts.push_back(*event.when.duration);
    if (event.when.recurrence) parts.push_back(*event.when.recurrence);
    return join(parts, " ");
}

std::string topic_compact_text(const TopicCluster& cluster) {
    std::string first_sentence;
    if (cluster.summary) {
        const std::string& narrative = cluster.summary->narrative;
        std::size_t period = narrative.find(". ");
        first_sentence =
            period == std::string::npos ? narrative : narrative.substr(0, period + 1);
    }
    std::vector<std::string> keywords = cluster.keywords;
    std::sort(keywords.begin(), keywords.end());

    std::vector<std::string> parts;
    parts.push_back(cluster.label);
    if (!first_sentence.empty()) parts.push_back(first_sentence);
    if (!keywords.empty()) parts.push_back(join(keywords, " "));
    return join(parts, " ");
}

AnchorSelection select_anchors(const AnchorKB& kb, const std::string& query,
                               const RetrievalConfig& cfg, const Embedder& embedder) {
    if (!kb.consolidated()) {
        throw StateError("knowledge base must be consolidated before retrieval");
    }

    AnchorSelection selection;

    auto entity_matches = kb.entities.native_match(query, cfg.candidate_cap);
    std::vector<Candidate> entity_candidates;
    entity_candidates.reserve(entity_matches.size());
    for (const auto& match : entity_matches) {
        entity_candidates.push_back(
            {match.profile->canonical_name, entity_compact_text(*match.profile)});
    }
    for (const auto& item : rerank(query, entity_candidates, cfg.k_entity, cfg.sigma, embedder)) {
        selection.entities.push_back({*entity_matches[item.index].profile, item.similarity});
    }

    auto event_matches = kb.events.native_match(query, cfg.candidate_cap);
    std::vector<EventCandidate> event_candidates;
    event_candidates.reserve(event_matches.size());
    for (const auto& match : event_matches) {
        event_candidates.push_back(
            {match.event, match.event->event_id, event_compact_text(*match.event)});
    }
    for (const auto& item :
         select_events_with_preservation(query, event_candidates, cfg, embedder)) {
        selection.events.push_back(
            {*event_candidates[item.index].event, item.similarity, item.temporal_reserved});
    }

    auto topic_matches = kb.topics.native_match(query, cfg.candidate_cap);
    std::vector<Candidate> topic_candidates;
    topic_candidates.reserve(topic_matches.size());
    for (const auto& match : topic_matches) {
        topic_candidates.push_back({match.cluster->label + "/" + match.cluster->topic_id,
                                    topic_compact_text(*match.cluster)});
    }
    for (const auto& item : rerank(query, topic_candidates, cfg.k_topic, cfg.sigma, embedder)) {
        selection.topics.push_back({*topic_matches[item.index].cluster, item.similarity});
    }
    return selection;
}

}  // namespace anchorkb
