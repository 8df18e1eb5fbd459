#include "anchorkb/extraction.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "anchorkb/errors.hpp"
#include "anchorkb/text.hpp"

namespace anchorkb {

namespace {

using nlohmann::json;

std::string scalar_to_string(const json& value) {
    if (value.is_string()) return value.get<std::string>();
    if (value.is_null()) return "";
    return value.dump();
}

std::optional<std::string> optional_string(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    std::string text = trim(scalar_to_string(*it));
    if (text.empty()) return std::nullopt;
    return text;
}

std::vector<std::string> string_list(const json& value) {
    std::vector<std::string> out;
    if (!value.is_array()) return out;
    for (const auto& item : value) {
        std::string text = trim(scalar_to_string(item));
        if (!text.empty()) out.push_back(std::move(text));
    }
    return out;
}

json parse_body(const std::string& raw) {
    std::string text = strip_code_fence(raw);
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded()) {
        throw ExtractionParseError("completion is not valid JSON", raw);
    }
    if (!doc.is_object()) {
        throw ExtractionParseError("completion must be a JSON object", raw);
    }
    return doc;
}

const json& require_array(const json& doc, const char* key) {
    auto it = doc.find(key);
    if (it == doc.end()) {
        throw SchemaError(std::string("completion lacks required key '") + key + "'");
    }
    if (!it->is_array()) {
        throw SchemaError(std::string("completion key '") + key + "' must be an array");
    }
    return *it;
}

std::int64_t require_source_id(const json& obj, const char* context) {
    auto it = obj.find("source_id");
    if (it == obj.end() || !it->is_number_integer()) {
        throw SchemaError(std::string(context) + " entry lacks an integer 'source_id'");
    }
    return it->get<std::int64_t>();
}

ExtractedEntity entity_from_json(const json& obj) {
    ExtractedEntity entity;
    entity.source_id = require_source_id(obj, "entity");
    auto name = optional_string(obj, "entity_name");
    if (!name) throw SchemaError("entity entry lacks a non-empty 'entity_name'");
    entity.entity_name = *name;
    entity.entity_type = optional_string(obj, "entity_type").value_or("");

    if (auto it = obj.find("attributes"); it != obj.end() && it->is_object()) {
        for (const auto& [key, value] : it->items()) {
            std::string text = trim(scalar_to_string(value));
            std::string attr_key = trim(key);
            if (!attr_key.empty() && !text.empty()) {
                entity.attributes.emplace_back(std::move(attr_key), std::move(text));
            }
        }
        std::sort(entity.attributes.begin(), entity.attributes.end());
    }

    if (auto it = obj.find("relations"); it != obj.end() && it->is_array()) {
        for (const auto& rel : *it) {
            if (!rel.is_object()) continue;
            auto target = optional_string(rel, "target");
            auto relation = optional_string(rel, "relation");
            if (target && relation) {
                entity.relations.push_back({*target, *relation});
            }
        }
    }

    if (auto it = obj.find("status_changes"); it != obj.end() && it->is_array()) {
        for (const auto& change : *it) {
            if (!change.is_object()) continue;
            auto attribute = optional_string(change, "attribute");
            auto to = optional_string(change, "to");
            if (attribute && to) {
                entity.status_changes.push_back(
                    {*attribute, optional_string(change, "from").value_or(""), *to});
            }
        }
    }
    return entity;
}

ExtractedEvent event_from_json(const json& obj) {
    ExtractedEvent event;
    event.source_id = require_source_id(obj, "event");
    event.description = optional_string(obj, "description").value_or("");
    if (auto it = obj.find("who"); it != obj.end()) event.who = string_list(*it);
    event.what = optional_string(obj, "what").value_or("");
    if (event.who.empty() && event.description.empty()) {
        throw SchemaError("event entry needs a non-empty 'who' or 'description'");
    }
    if (auto it = obj.find("when"); it != obj.end() && it->is_object()) {
        event.when.absolute = optional_string(*it, "absolute");
        event.when.relative = optional_string(*it, "relative");
        event.when.duration = optional_string(*it, "duration");
        event.when.recurrence = optional_string(*it, "recurrence");
    }
    event.where = optional_string(obj, "where");
    event.outcome = optional_string(obj, "outcome");
    event.event_type = optional_string(obj, "event_type").value_or("");
    event.importance = optional_string(obj, "importance").value_or("");
    return event;
}

ExtractedTopic topic_from_json(const json& obj) {
    ExtractedTopic topic;
    auto label = optional_string(obj, "topic_label");
    if (!label) throw SchemaError("topic entry lacks a non-empty 'topic_label'");
    topic.label = *label;
    if (auto it = obj.find("topic_keywords"); it != obj.end()) {
        topic.keywords = string_list(*it);
    }
    auto indices = obj.find("utterance_indices");
    if (indices == obj.end() || !indices->is_array()) {
        throw SchemaError("topic entry lacks an 'utterance_indices' array");
    }
    for (const auto& item : *indices) {
        if (!item.is_number_integer()) {
            throw SchemaError("topic 'utterance_indices' must hold integers");
        }
        topic.utterance_indices.push_back(item.get<std::int64_t>());
    }
    return topic;
}

}  // namespace

std::string strip_code_fence(std::string_view raw) {
    std::string text = trim(raw);
    if (text.size() < 3 || text.compare(0, 3, "```") != 0) return text;
    size_t first_newline = text.find('\n');
    if (first_newline == std::string::npos) return text;
    size_t body_start = first_newline + 1;
    size_t fence_close = text.rfind("```");
    if (fence_close == std::string::npos || fence_close < body_start) return text;
    return trim(std::string_view(text).substr(body_start, fence_close - body_start));
}

std::vector<ExtractedEntity> parse_entities(const std::string& raw) {
    json doc = parse_body(raw);
    std::vector<ExtractedEntity> out;
    for (const auto& item : require_array(doc, "entities")) {
        if (!item.is_object()) throw SchemaError("entity entry must be an object");
        out.push_back(entity_from_json(item));
    }
    return out;
}

std::vector<ExtractedEvent> parse_events(const std::string& raw) {
    json doc = parse_body(raw);
    std::vector<ExtractedEvent> out;
    for (const auto& item : require_array(doc, "events")) {
        if (!item.is_object()) throw SchemaError("event entry must be an object");
        out.push_back(event_from_json(item));
    }
    return out;
}

std::vector<ExtractedTopic> parse_topics(const std::string& raw) {
    json doc = parse_body(raw);
    std::vector<ExtractedTopic> out;
    for (const auto& item : require_array(doc, "topics")) {
        if (!item.is_object()) throw SchemaError("topic entry must be an object");
        out.push_back(topic_from_json(item));
    }
    return out;
}

TripleExtraction parse_triple(const std::string& raw) {
    json doc = parse_body(raw);
    TripleExtraction out;
    for (const auto& item : require_array(doc, "entities")) {
        if (!item.is_object()) throw SchemaError("entity entry must be an object");
        out.entities.push_back(entity_from_json(item));
    }
    for (const auto& item : require_array(doc, "events")) {
        if (!item.is_object()) throw SchemaError("event entry must be an object");
        out.events.push_back(event_from_json(item));
    }
    for (const auto& item : require_array(doc, "topics")) {
        if (!item.is_object()) throw SchemaError("topic entry must be an object");
        out.topics.push_back(topic_from_json(item));
    }
    return out;
}

ExtractedTopicSummary parse_topic_summary(const std::string& raw) {
    json doc = parse_body(raw);
    ExtractedTopicSummary summary;
    auto narrative = optional_string(doc, "narrative");
    if (!narrative) throw SchemaError("topic summary lacks a non-empty 'narrative'");
    summary.narrative = *narrative;
    if (auto it = doc.find("key_facts"); it != doc.end()) summary.key_facts = string_list(*it);
    if (auto it = doc.find("participants"); it != doc.end()) {
        summary.participants = string_list(*it);
    }
    summary.temporal_span = optional_string(doc, "temporal_span").value_or("");
    summary.sentiment = optional_string(doc, "sentiment").value_or("neutral");
    summary.importance = optional_string(doc, "importance").value_or("medium");
    if (auto it = doc.find("keywords"); it != doc.end()) {
        summary.extra_keywords = string_list(*it);
    }
    return summary;
}

std::string parse_profile_summary(const std::string& raw) {
    json doc = parse_body(raw);
    auto summary = optional_string(doc, "summary");
    if (!summary) throw SchemaError("profile summary lacks a non-empty 'summary'");
    return *summary;
}

}  // namespace anchorkb
