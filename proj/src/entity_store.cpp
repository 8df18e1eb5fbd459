#include "anchorkb/entity_store.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <tuple>

#include "anchorkb/errors.hpp"
#include "anchorkb/text.hpp"

namespace anchorkb {

namespace {

const std::set<std::string>& known_entity_types() {
    static const std::set<std::string> types = {"person", "concept",  "task",         "event",
                                                "item",   "location", "organization", "other"};
    return types;
}

std::string normalize_entity_type(const std::string& raw) {
    std::string lowered = to_lower(trim(raw));
    if (known_entity_types().count(lowered)) return lowered;
    return "other";
}

bool equal_ci(const std::string& a, const std::string& b) {
    return to_lower(trim(a)) == to_lower(trim(b));
}

// Sort key that places parseable timestamps chronologically and pushes
// unparseable ones to the end, where seq order decides.
std::int64_t timeline_sort_key(const TimelineEntry& entry) {
    if (auto seconds = parse_timestamp_seconds(entry.timestamp)) return *seconds;
    return std::numeric_limits<std::int64_t>::max();
}

bool relation_exists_between(const EntityProfile& a, const EntityProfile& b) {
    auto matches = [](const Relation& rel, const std::string& x, const std::string& y) {
        std::string src = to_lower(trim(rel.source));
        std::string dst = to_lower(trim(rel.target));
        return (src == x && dst == y) || (src == y && dst == x);
    };
    std::string name_a = to_lower(a.canonical_name);
    std::string name_b = to_lower(b.canonical_name);
    for (const auto& rel : a.relations) {
        if (matches(rel, name_a, name_b)) return true;
    }
    for (const auto& rel : b.relations) {
        if (matches(rel, name_a, name_b)) return true;
    }
    return false;
}

}  // namespace

double EntityStore::accumulate_confidence(double existing, double observation) {
    return 1.0 - (1.0 - existing) * (1.0 - observation);
}

EntityProfile& EntityStore::find_or_create(const std::string& name) {
    std::string trimmed = trim(name);
    std::string key = to_lower(trimmed);
    auto [it, inserted] = profiles_.try_emplace(key);
    if (inserted) {
        it->second.canonical_name = trimmed;
    }
    return it->second;
}

bool EntityStore::has_profile(const std::string& name) const {
    return profiles_.count(to_lower(trim(name))) > 0;
}

const EntityProfile* EntityStore::find(const std::string& name) const {
    auto it = profiles_.find(to_lower(trim(name)));
    return it == profiles_.end() ? nullptr : &it->second;
}

void EntityStore::apply_attribute(EntityProfile& profile, const std::string& key,
                                  const std::string& value, std::int64_t seq_id,
                                  double observation) {
    std::string attr_key = to_lower(trim(key));
    std::string attr_value = trim(value);
    if (attr_key.empty() || attr_value.empty()) return;

    auto it = profile.attributes.find(attr_key);
    if (it == profile.attributes.end()) {
        profile.attributes[attr_key] = AttributeValue{attr_value, observation, {seq_id}};
        return;
    }
    AttributeValue& held = it->second;
    if (equal_ci(held.value, attr_value)) {
        held.confidence = accumulate_confidence(held.confidence, observation);
        if (std::find(held.evidence_seq_ids.begin(), held.evidence_seq_ids.end(), seq_id) ==
            held.evidence_seq_ids.end()) {
            held.evidence_seq_ids.push_back(seq_id);
        }
        return;
    }
    if (observation > held.confidence) {
        profile.attribute_history.push_back(
            {attr_key, held.value, held.confidence, seq_id});
        held = AttributeValue{attr_value, observation, {seq_id}};
    } else {
        profile.attribute_history.push_back({attr_key, attr_value, observation, seq_id});
    }
}

void EntityStore::merge_extraction(const std::vector<ExtractedEntity>& batch,
                                   const SeqIndex& index) {
    // source_id -> distinct entity keys named in that utterance
    std::map<std::int64_t, std::set<std::string>> names_by_seq;

    for (const auto& extracted : batch) {
        const Utterance& source = index.require(extracted.source_id, "entity extraction");
        if (trim(extracted.entity_name).empty()) continue;

        EntityProfile& profile = find_or_create(extracted.entity_name);
        std::string profile_key = to_lower(profile.canonical_name);
        names_by_seq[extracted.source_id].insert(profile_key);

        if (profile.entity_type == "other" && !trim(extracted.entity_type).empty()) {
            profile.entity_type = normalize_entity_type(extracted.entity_type);
        }

        for (const auto& [key, value] : extracted.attributes) {
            apply_attribute(profile, key, value, extracted.source_id,
                            kDefaultObservationConfidence);
        }

        for (const auto& rel : extracted.relations) {
            std::string target = trim(rel.target);
            std::string type = trim(rel.relation);
            if (target.empty() || type.empty()) continue;
            if (to_lower(target) == profile_key) continue;
            profile.relations.push_back({profile.canonical_name, target, type, false});
        }

        for (const auto& change : extracted.status_changes) {
            std::string from = trim(change.from);
            TimelineEntry entry;
            entry.description = trim(change.attribute) + ": " + (from.empty() ? "-" : from) +
                                " -> " + trim(change.to);
            entry.timestamp = source.timestamp;
            entry.seq_id = extracted.source_id;
            entry.kind = "status_change";
            profile.timeline.push_back(std::move(entry));
            apply_attribute(profile, change.attribute, change.to, extracted.source_id,
                            kStatusObservationConfidence);
        }
    }

    for (const auto& [seq_id, keys] : names_by_seq) {
        for (auto a = keys.begin(); a != keys.end(); ++a) {
            for (auto b = std::next(a); b != keys.end(); ++b) {
                EntityProfile& pa = profiles_.at(*a);
                EntityProfile& pb = profiles_.at(*b);
                pa.co_occurrences[pb.canonical_name] += 1;
                pb.co_occurrences[pa.canonical_name] += 1;
            }
        }
    }
    consolidated_ = false;
}

bool EntityStore::add_event_mention(const std::string& name, const std::string& description,
                                    const std::string& timestamp, std::int64_t seq_id) {
    auto it = profiles_.find(to_lower(trim(name)));
    if (it == profiles_.end()) return false;
    it->second.timeline.push_back({description, timestamp, seq_id, "event_mention"});
    consolidated_ = false;
    return true;
}

void EntityStore::consolidate(std::int64_t cooccurrence_threshold,
                              const ProfileSummarizer& summarizer) {
    for (auto& [key, profile] : profiles_) {
        std::set<std::tuple<std::string, std::string, std::string>> seen;
        std::vector<Relation> deduped;
        for (const auto& rel : profile.relations) {
            auto dedup_key = std::make_tuple(to_lower(trim(rel.source)), to_lower(trim(rel.target)),
                                             to_lower(trim(rel.relation_type)));
            if (seen.insert(dedup_key).second) deduped.push_back(rel);
        }
        profile.relations = std::move(deduped);

        std::stable_sort(profile.timeline.begin(), profile.timeline.end(),
                         [](const TimelineEntry& a, const TimelineEntry& b) {
                             auto ka = timeline_sort_key(a);
                             auto kb = timeline_sort_key(b);
                             if (ka != kb) return ka < kb;
                             return a.seq_id < b.seq_id;
                         });
    }

    // Frequent co-occurrence with no recorded relation in either direction
    // becomes an inferred link, stored on the lexicographically smaller name.
    for (auto& [key, profile] : profiles_) {
        for (const auto& [other_name, count] : profile.co_occurrences) {
            std::string other_key = to_lower(other_name);
            if (other_key <= key) continue;
            if (count < cooccurrence_threshold) continue;
            auto other_it = profiles_.find(other_key);
            if (other_it == profiles_.end()) continue;
            if (relation_exists_between(profile, other_it->second)) continue;
            profile.relations.push_back(
                {profile.canonical_name, other_it->second.canonical_name, "associated_with", true});
        }
    }

    for (auto& [key, profile] : profiles_) {
        profile.summary = summarizer(profile);
    }
    consolidated_ = true;
}

std::string EntityStore::template_summary(const EntityProfile& profile) {
    std::string text = profile.canonical_name + " (" + profile.entity_type + ")";

    std::vector<std::pair<std::string, const AttributeValue*>> ordered;
    ordered.reserve(profile.attributes.size());
    for (const auto& [key, value] : profile.attributes) ordered.emplace_back(key, &value);
    std::stable_sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
        if (a.second->confidence != b.second->confidence) {
            return a.second->confidence > b.second->confidence;
        }
        return a.first < b.first;
    });

    std::vector<std::string> attr_parts;
    for (const auto& [key, value] : ordered) attr_parts.push_back(key + "=" + value->value);
    std::vector<std::string> rel_parts;
    for (const auto& rel : profile.relations) {
        rel_parts.push_back(rel.relation_type + " " + rel.target);
    }

    if (!attr_parts.empty()) text += ": " + join(attr_parts, "; ");
    if (!rel_parts.empty()) {
        text += attr_parts.empty() ? ": " : "; ";
        text += "relations: " + join(rel_parts, ", ");
    }
    return text;
}

std::vector<EntityMatch> EntityStore::native_match(const std::string& query,
                                                   std::size_t cap) const {
    std::set<std::string> query_tokens = token_set(query);
    std::vector<EntityMatch> matches;
    for (const auto& [key, profile] : profiles_) {
        std::set<std::string> profile_tokens = token_set(profile.canonical_name);
        for (const auto& [attr_key, value] : profile.attributes) {
            auto value_tokens = token_set(value.value);
            profile_tokens.insert(value_tokens.begin(), value_tokens.end());
        }
        auto summary_tokens = token_set(profile.summary);
        profile_tokens.insert(summary_tokens.begin(), summary_tokens.end());

        std::size_t overlap = 0;
        for (const auto& token : query_tokens) overlap += profile_tokens.count(token);
        if (overlap > 0) matches.push_back({&profile, overlap});
    }
    std::stable_sort(matches.begin(), matches.end(), [](const EntityMatch& a, const EntityMatch& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.profile->canonical_name < b.profile->canonical_name;
    });
    if (matches.size() > cap) matches.resize(cap);
    return matches;
}

EntityStore EntityStore::from_profiles(std::vector<EntityProfile> profiles, bool consolidated) {
    EntityStore store;
    for (auto& profile : profiles) {
        std::string key = to_lower(trim(profile.canonical_name));
        if (key.empty()) throw SchemaError("persisted profile lacks a canonical_name");
        if (!store.profiles_.emplace(key, std::move(profile)).second) {
            throw SchemaError("duplicate persisted profile: " + key);
        }
    }
    store.consolidated_ = consolidated;
    return store;
}

}  // namespace anchorkb
