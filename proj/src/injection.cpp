#include "anchorkb/injection.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "anchorkb/errors.hpp"
#include "anchorkb/prompts.hpp"
#include "anchorkb/text.hpp"

namespace anchorkb {

namespace {

void push_unique(std::vector<std::string>& list, std::set<std::string>& seen, std::string text) {
    text = trim(text);
    if (text.empty()) return;
    if (seen.insert(text).second) list.push_back(std::move(text));
}

// Attribute ordering used by both query expansion and the entity line:
// confidence descending, key ascending.
std::vector<std::pair<std::string, const AttributeValue*>> ordered_attributes(
    const EntityProfile& profile) {
    std::vector<std::pair<std::string, const AttributeValue*>> ordered;
    ordered.reserve(profile.attributes.size());
    for (const auto& [key, value] : profile.attributes) ordered.emplace_back(key, &value);
    std::stable_sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
        if (a.second->confidence != b.second->confidence) {
            return a.second->confidence > b.second->confidence;
        }
        return a.first < b.first;
    });
    return ordered;
}

const std::optional<std::string>* first_when_field(const WhenSpec& when) {
    if (when.absolute) return &when.absolute;
    if (when.relative) return &when.relative;
    if (when.duration) return &when.duration;
    if (when.recurrence) return &when.recurrence;
    return nullptr;
}

std::string or_dash(const std::string& text) { return text.empty() ? "-" : text; }

std::string or_dash(const std::optional<std::string>& text) {
    return text && !text->empty() ? *text : "-";
}

std::string single_line(std::string text) {
    std::replace(text.begin(), text.end(), '\n', ' ');
    std::replace(text.begin(), text.end(), '\r', ' ');
    return text;
}

std::string replace_placeholder(std::string text, const std::string& placeholder,
                                const std::string& value) {
    std::size_t pos = 0;
    while ((pos = text.find(placeholder, pos)) != std::string::npos) {
        text.replace(pos, placeholder.size(), value);
        pos += value.size();
    }
    return text;
}

}  // namespace

ModuleQueries generate_module_queries(const AnchorSelection& selection) {
    ModuleQueries queries;
    std::set<std::string> seen_topic;
    std::set<std::string> seen_entity;
    std::set<std::string> seen_event;

    for (const auto& scored : selection.topics) {
        const TopicCluster& cluster = scored.cluster;
        if (cluster.summary) {
            for (const auto& fact : cluster.summary->key_facts) {
                push_unique(queries.topic, seen_topic, fact);
            }
            for (const auto& participant : cluster.summary->participants) {
                push_unique(queries.topic, seen_topic, participant + " " + cluster.label);
            }
        }
    }

    for (const auto& scored : selection.entities) {
        const EntityProfile& profile = scored.profile;
        for (const auto& [key, value] : ordered_attributes(profile)) {
            push_unique(queries.entity, seen_entity,
                        profile.canonical_name + " " + value->value);
        }
        for (const auto& rel : profile.relations) {
            push_unique(queries.entity, seen_entity,
                        profile.canonical_name + " " + rel.relation_type + " " + rel.target);
        }
    }

    for (const auto& scored : selection.events) {
        const EventTuple& event = scored.event;
        std::string participants = join(event.who, " ");
        std::string base = trim(participants + " " + event.what);
        push_unique(queries.event, seen_event, base);
        if (const auto* when_field = first_when_field(event.when)) {
            push_unique(queries.event, seen_event, base + " " + **when_field);
        }
    }
    return queries;
}

ExpandedQuerySet round_robin_merge(const ModuleQueries& queries, std::size_t budget) {
    struct ModuleCursor {
        const std::vector<std::string>* list;
        std::size_t next = 0;
        const char* tag;
    };
    ModuleCursor cursors[3] = {
        {&queries.topic, 0, "topic"},
        {&queries.entity, 0, "entity"},
        {&queries.event, 0, "event"},
    };

    ExpandedQuerySet out;
    std::set<std::string> seen;
    bool any_left = true;
    while (out.queries.size() < budget && any_left) {
        any_left = false;
        for (auto& cursor : cursors) {
            if (out.queries.size() >= budget) break;
            // Duplicates are dropped without consuming budget, so keep
            // drawing from this module until it emits or runs dry.
            while (cursor.next < cursor.list->size()) {
                const std::string& candidate = (*cursor.list)[cursor.next++];
                if (seen.insert(candidate).second) {
                    out.queries.push_back(candidate);
                    out.provenance.emplace_back(cursor.tag);
                    break;
                }
            }
            if (cursor.next < cursor.list->size()) any_left = true;
        }
    }
    return out;
}

std::vector<RetrievedEntry> merge_retrieval(const std::vector<RetrievedEntry>& original,
                                            const std::vector<RetrievedEntry>& expanded,
                                            std::size_t replace_count) {
    if (replace_count > original.size()) {
        throw std::invalid_argument("replace_count exceeds the original retrieval size");
    }

    // Indices of originals, lowest similarity first (ties: earlier index
    // dropped first).
    std::vector<std::size_t> by_similarity(original.size());
    for (std::size_t i = 0; i < original.size(); ++i) by_similarity[i] = i;
    std::stable_sort(by_similarity.begin(), by_similarity.end(),
                     [&original](std::size_t a, std::size_t b) {
                         return original[a].similarity < original[b].similarity;
                     });

    std::vector<bool> removed(original.size(), false);
    std::vector<std::size_t> removed_order;  // lowest first
    for (std::size_t i = 0; i < replace_count; ++i) {
        removed[by_similarity[i]] = true;
        removed_order.push_back(by_similarity[i]);
    }

    std::set<std::string> present;
    std::vector<RetrievedEntry> survivors;
    for (std::size_t i = 0; i < original.size(); ++i) {
        if (removed[i]) continue;
        RetrievedEntry entry = original[i];
        entry.source = "original";
        present.insert(entry.text);
        survivors.push_back(std::move(entry));
    }

    std::vector<std::size_t> expanded_order(expanded.size());
    for (std::size_t i = 0; i < expanded.size(); ++i) expanded_order[i] = i;
    std::stable_sort(expanded_order.begin(), expanded_order.end(),
                     [&expanded](std::size_t a, std::size_t b) {
                         return expanded[a].similarity > expanded[b].similarity;
                     });

    std::size_t inserted = 0;
    for (std::size_t index : expanded_order) {
        if (inserted == replace_count) break;
        if (!present.insert(expanded[index].text).second) continue;
        RetrievedEntry entry = expanded[index];
        entry.source = "expanded";
        survivors.push_back(std::move(entry));
        ++inserted;
    }

    // Fewer usable expanded entries than slots: restore the best of the
    // dropped originals to conserve the retrieval-set size.
    std::size_t shortfall = replace_count - inserted;
    for (std::size_t i = 0; i < shortfall; ++i) {
        std::size_t index = removed_order[removed_order.size() - 1 - i];
        RetrievedEntry entry = original[index];
        entry.source = "original";
        survivors.push_back(std::move(entry));
    }

    std::stable_sort(survivors.begin(), survivors.end(),
                     [](const RetrievedEntry& a, const RetrievedEntry& b) {
                         return a.similarity > b.similarity;
                     });
    return survivors;
}

InjectionContext format_injection(const AnchorSelection& selection) {
    InjectionContext ctx;

    std::vector<std::string> topic_lines;
    for (const auto& scored : selection.topics) {
        const TopicCluster& cluster = scored.cluster;
        std::string participants = "-";
        std::string span = "-";
        std::string narrative = "-";
        std::string facts = "-";
        if (cluster.summary) {
            if (!cluster.summary->participants.empty()) {
                participants = join(cluster.summary->participants, ",");
            }
            span = or_dash(cluster.summary->temporal_span);
            narrative = or_dash(single_line(cluster.summary->narrative));
            std::vector<std::string> fact_list = cluster.summary->key_facts;
            if (fact_list.size() > 5) fact_list.resize(5);
            for (auto& fact : fact_list) fact = single_line(fact);
            if (!fact_list.empty()) facts = join(fact_list, "; ");
        }
        std::vector<std::string> keywords = cluster.keywords;
        std::sort(keywords.begin(), keywords.end());
        std::string kw = keywords.empty() ? "-" : join(keywords, ",");

        topic_lines.push_back("- " + cluster.label + " | participants: " + participants +
                              " | span: " + span + " | " + narrative + " | facts: " + facts +
                              " | kw: " + kw);
    }
    ctx.topic_block = topic_lines.empty() ? "None available." : join(topic_lines, "\n");

    std::vector<std::string> entity_lines;
    for (const auto& scored : selection.entities) {
        const EntityProfile& profile = scored.profile;
        std::vector<std::string> attr_parts;
        for (const auto& [key, value] : ordered_attributes(profile)) {
            attr_parts.push_back(key + "=" + value->value);
        }
        std::vector<std::string> rel_parts;
        for (const auto& rel : profile.relations) {
            if (rel_parts.size() == 5) break;
            rel_parts.push_back(rel.relation_type + " " + rel.target);
        }
        std::vector<std::string> timeline_parts;
        std::size_t first_timeline =
            profile.timeline.size() > 5 ? profile.timeline.size() - 5 : 0;
        for (std::size_t i = first_timeline; i < profile.timeline.size(); ++i) {
            timeline_parts.push_back(profile.timeline[i].timestamp + " " +
                                     single_line(profile.timeline[i].description));
        }

        entity_lines.push_back(
            "- " + profile.canonical_name + " [" + profile.entity_type + "] | attrs: " +
            (attr_parts.empty() ? "-" : join(attr_parts, "; ")) + " | rel: " +
            (rel_parts.empty() ? "-" : join(rel_parts, "; ")) + " | timeline: " +
            (timeline_parts.empty() ? "-" : join(timeline_parts, "; ")) + " | " +
            single_line(profile.summary));
    }
    ctx.entity_block = entity_lines.empty() ? "None available." : join(entity_lines, "\n");

    std::vector<std::string> event_lines;
    for (const auto& scored : selection.events) {
        const EventTuple& event = scored.event;
        std::string when = "abs=" + or_dash(event.when.absolute) + ";rel=" +
                           or_dash(event.when.relative) + ";dur=" +
                           or_dash(event.when.duration) + ";rec=" +
                           or_dash(event.when.recurrence);
        event_lines.push_back(
            "- [" + event.event_type + "/" + event.importance + "] " +
            or_dash(single_line(event.description)) + " | Who: " +
            (event.who.empty() ? "-" : join(event.who, ",")) + " | What: " +
            or_dash(single_line(event.what)) + " | When: " + when + " | Where: " +
            or_dash(event.where) + " | Outcome: " + or_dash(event.outcome) + " | at " +
            or_dash(event.recorded_at) + " | trace " + or_dash(event.trace_id));
    }
    ctx.event_block = event_lines.empty() ? "None available." : join(event_lines, "\n");

    return ctx;
}

SpeakerMemories load_memories(const std::string& path) {
    SpeakerMemories memories;
    if (path.empty() || !std::filesystem::exists(path)) return memories;
    std::ifstream in(path);
    if (!in) throw IoError("cannot open memories file: " + path);
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw SchemaError("memories file must be a JSON object: " + path);
    }
    auto take = [&doc](const char* key, std::string& out) {
        auto it = doc.find(key);
        if (it != doc.end() && it->is_string()) out = it->get<std::string>();
    };
    take("speaker_1_name", memories.speaker_1_name);
    take("speaker_1_memories", memories.speaker_1_memories);
    take("speaker_2_name", memories.speaker_2_name);
    take("speaker_2_memories", memories.speaker_2_memories);
    return memories;
}

std::string assemble_prompt(const std::string& question, const SpeakerMemories& memories,
                            const InjectionContext& ctx) {
    if (trim(question).empty()) throw std::invalid_argument("question must be non-empty");
    std::string prompt(answer_template());
    prompt = replace_placeholder(prompt, "{speaker_1_name}", memories.speaker_1_name);
    prompt = replace_placeholder(prompt, "{speaker_1_memories}", memories.speaker_1_memories);
    prompt = replace_placeholder(prompt, "{speaker_2_name}", memories.speaker_2_name);
    prompt = replace_placeholder(prompt, "{speaker_2_memories}", memories.speaker_2_memories);
    prompt = replace_placeholder(prompt, "{topic_context}", ctx.topic_block);
    prompt = replace_placeholder(prompt, "{entity_context}", ctx.entity_block);
    prompt = replace_placeholder(prompt, "{event_context}", ctx.event_block);
    prompt = replace_placeholder(prompt, "{question}", question);
    return prompt;
}

}  // namespace anchorkb
