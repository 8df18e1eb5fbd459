#include "anchorkb/kb.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "anchorkb/errors.hpp"
#include "anchorkb/text.hpp"

namespace anchorkb {

namespace {

using nlohmann::json;

json optional_to_json(const std::optional<std::string>& value) {
    if (!value) return nullptr;
    return *value;
}

std::optional<std::string> optional_from_json(const json& doc, const char* key) {
    auto it = doc.find(key);
    if (it == doc.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw SchemaError(std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

std::string string_field(const json& doc, const char* key, const char* context) {
    auto it = doc.find(key);
    if (it == doc.end() || !it->is_string()) {
        throw SchemaError(std::string(context) + ": missing or non-string field '" + key + "'");
    }
    return it->get<std::string>();
}

std::int64_t int_field(const json& doc, const char* key, const char* context) {
    auto it = doc.find(key);
    if (it == doc.end() || !it->is_number_integer()) {
        throw SchemaError(std::string(context) + ": missing or non-integer field '" + key + "'");
    }
    return it->get<std::int64_t>();
}

double double_field(const json& doc, const char* key, const char* context) {
    auto it = doc.find(key);
    if (it == doc.end() || !it->is_number()) {
        throw SchemaError(std::string(context) + ": missing or non-numeric field '" + key + "'");
    }
    return it->get<double>();
}

std::vector<std::string> string_array(const json& doc, const char* key, const char* context) {
    auto it = doc.find(key);
    if (it == doc.end() || !it->is_array()) {
        throw SchemaError(std::string(context) + ": missing or non-array field '" + key + "'");
    }
    std::vector<std::string> out;
    for (const auto& item : *it) {
        if (!item.is_string()) {
            throw SchemaError(std::string(context) + ": '" + key + "' must hold strings");
        }
        out.push_back(item.get<std::string>());
    }
    return out;
}

std::vector<std::int64_t> int_array(const json& doc, const char* key, const char* context) {
    auto it = doc.find(key);
    if (it == doc.end() || !it->is_array()) {
        throw SchemaError(std::string(context) + ": missing or non-array field '" + key + "'");
    }
    std::vector<std::int64_t> out;
    for (const auto& item : *it) {
        if (!item.is_number_integer()) {
            throw SchemaError(std::string(context) + ": '" + key + "' must hold integers");
        }
        out.push_back(item.get<std::int64_t>());
    }
    return out;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open knowledge-base file: " + path);
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw SchemaError("not valid JSON: " + path);
    return doc;
}

void write_json_file(const std::string& path, const json& doc) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write knowledge-base file: " + path);
    out << doc.dump(2) << "\n";
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace

json manifest_to_json(const Manifest& manifest) {
    return json{
        {"format_version", manifest.format_version},
        {"conversation_id", manifest.conversation_id},
        {"build_mode", manifest.build_mode},
        {"created_at", manifest.created_at},
        {"utterance_count", manifest.utterance_count},
        {"min_seq", manifest.min_seq},
        {"max_seq", manifest.max_seq},
        {"config",
         json{
             {"batch_entity", manifest.config.batch_entity},
             {"batch_event", manifest.config.batch_event},
             {"batch_topic", manifest.config.batch_topic},
             {"topic_overlap", manifest.config.topic_overlap},
             {"dedup_tau", manifest.config.dedup_tau},
             {"cooccurrence_threshold", manifest.config.cooccurrence_threshold},
         }},
    };
}

Manifest manifest_from_json(const json& doc) {
    Manifest manifest;
    manifest.format_version = string_field(doc, "format_version", "manifest");
    manifest.conversation_id = string_field(doc, "conversation_id", "manifest");
    manifest.build_mode = string_field(doc, "build_mode", "manifest");
    manifest.created_at = string_field(doc, "created_at", "manifest");
    manifest.utterance_count =
        static_cast<std::uint64_t>(int_field(doc, "utterance_count", "manifest"));
    manifest.min_seq = int_field(doc, "min_seq", "manifest");
    manifest.max_seq = int_field(doc, "max_seq", "manifest");
    auto config_it = doc.find("config");
    if (config_it == doc.end() || !config_it->is_object()) {
        throw SchemaError("manifest: missing 'config' object");
    }
    const json& config = *config_it;
    manifest.config.batch_entity =
        static_cast<std::size_t>(int_field(config, "batch_entity", "manifest.config"));
    manifest.config.batch_event =
        static_cast<std::size_t>(int_field(config, "batch_event", "manifest.config"));
    manifest.config.batch_topic =
        static_cast<std::size_t>(int_field(config, "batch_topic", "manifest.config"));
    manifest.config.topic_overlap = double_field(config, "topic_overlap", "manifest.config");
    manifest.config.dedup_tau = double_field(config, "dedup_tau", "manifest.config");
    manifest.config.cooccurrence_threshold =
        int_field(config, "cooccurrence_threshold", "manifest.config");
    return manifest;
}

json profile_to_json(const EntityProfile& profile) {
    json attributes = json::object();
    for (const auto& [key, value] : profile.attributes) {
        attributes[key] = json{
            {"value", value.value},
            {"confidence", value.confidence},
            {"evidence_seq_ids", value.evidence_seq_ids},
        };
    }
    json history = json::array();
    for (const auto& archived : profile.attribute_history) {
        history.push_back(json{
            {"key", archived.key},
            {"old_value", archived.old_value},
            {"old_confidence", archived.old_confidence},
            {"superseded_at_seq", archived.superseded_at_seq},
        });
    }
    json relations = json::array();
    for (const auto& rel : profile.relations) {
        relations.push_back(json{
            {"source", rel.source},
            {"target", rel.target},
            {"relation_type", rel.relation_type},
            {"inferred", rel.inferred},
        });
    }
    json timeline = json::array();
    for (const auto& entry : profile.timeline) {
        timeline.push_back(json{
            {"description", entry.description},
            {"timestamp", entry.timestamp},
            {"seq_id", entry.seq_id},
            {"kind", entry.kind},
        });
    }
    json co_occurrences = json::object();
    for (const auto& [name, count] : profile.co_occurrences) co_occurrences[name] = count;

    return json{
        {"canonical_name", profile.canonical_name},
        {"entity_type", profile.entity_type},
        {"attributes", attributes},
        {"attribute_history", history},
        {"relations", relations},
        {"timeline", timeline},
        {"co_occurrences", co_occurrences},
        {"summary", profile.summary},
    };
}

EntityProfile profile_from_json(const json& doc) {
    EntityProfile profile;
    profile.canonical_name = string_field(doc, "canonical_name", "profile");
    profile.entity_type = string_field(doc, "entity_type", "profile");
    profile.summary = string_field(doc, "summary", "profile");

    auto attrs_it = doc.find("attributes");
    if (attrs_it == doc.end() || !attrs_it->is_object()) {
        throw SchemaError("profile: missing 'attributes' object");
    }
    for (const auto& [key, value] : attrs_it->items()) {
        AttributeValue attr;
        attr.value = string_field(value, "value", "attribute");
        attr.confidence = double_field(value, "confidence", "attribute");
        attr.evidence_seq_ids = int_array(value, "evidence_seq_ids", "attribute");
        profile.attributes[key] = std::move(attr);
    }

    auto history_it = doc.find("attribute_history");
    if (history_it == doc.end() || !history_it->is_array()) {
        throw SchemaError("profile: missing 'attribute_history' array");
    }
    for (const auto& item : *history_it) {
        ArchivedAttribute archived;
        archived.key = string_field(item, "key", "attribute_history");
        archived.old_value = string_field(item, "old_value", "attribute_history");
        archived.old_confidence = double_field(item, "old_confidence", "attribute_history");
        archived.superseded_at_seq = int_field(item, "superseded_at_seq", "attribute_history");
        profile.attribute_history.push_back(std::move(archived));
    }

    auto relations_it = doc.find("relations");
    if (relations_it == doc.end() || !relations_it->is_array()) {
        throw SchemaError("profile: missing 'relations' array");
    }
    for (const auto& item : *relations_it) {
        Relation rel;
        rel.source = string_field(item, "source", "relation");
        rel.target = string_field(item, "target", "relation");
        rel.relation_type = string_field(item, "relation_type", "relation");
        auto inferred_it = item.find("inferred");
        if (inferred_it == item.end() || !inferred_it->is_boolean()) {
            throw SchemaError("relation: missing boolean 'inferred'");
        }
        rel.inferred = inferred_it->get<bool>();
        profile.relations.push_back(std::move(rel));
    }

    auto timeline_it = doc.find("timeline");
    if (timeline_it == doc.end() || !timeline_it->is_array()) {
        throw SchemaError("profile: missing 'timeline' array");
    }
    for (const auto& item : *timeline_it) {
        TimelineEntry entry;
        entry.description = string_field(item, "description", "timeline");
        entry.timestamp = string_field(item, "timestamp", "timeline");
        entry.seq_id = int_field(item, "seq_id", "timeline");
        entry.kind = string_field(item, "kind", "timeline");
        profile.timeline.push_back(std::move(entry));
    }

    auto co_it = doc.find("co_occurrences");
    if (co_it == doc.end() || !co_it->is_object()) {
        throw SchemaError("profile: missing 'co_occurrences' object");
    }
    for (const auto& [name, count] : co_it->items()) {
        if (!count.is_number_integer()) {
            throw SchemaError("profile: co-occurrence counts must be integers");
        }
        profile.co_occurrences[name] = count.get<std::int64_t>();
    }
    return profile;
}

json event_to_json(const EventTuple& event) {
    return json{
        {"event_id", event.event_id},
        {"who", event.who},
        {"what", event.what},
        {"when",
         json{
             {"absolute", optional_to_json(event.when.absolute)},
             {"relative", optional_to_json(event.when.relative)},
             {"duration", optional_to_json(event.when.duration)},
             {"recurrence", optional_to_json(event.when.recurrence)},
         }},
        {"where", optional_to_json(event.where)},
        {"outcome", optional_to_json(event.outcome)},
        {"description", event.description},
        {"event_type", event.event_type},
        {"importance", event.importance},
        {"source_seq_id", event.source_seq_id},
        {"recorded_at", event.recorded_at},
        {"trace_id", optional_to_json(event.trace_id)},
    };
}

EventTuple event_from_json(const json& doc) {
    EventTuple event;
    event.event_id = string_field(doc, "event_id", "event");
    event.who = string_array(doc, "who", "event");
    event.what = string_field(doc, "what", "event");
    auto when_it = doc.find("when");
    if (when_it == doc.end() || !when_it->is_object()) {
        throw SchemaError("event: missing 'when' object");
    }
    event.when.absolute = optional_from_json(*when_it, "absolute");
    event.when.relative = optional_from_json(*when_it, "relative");
    event.when.duration = optional_from_json(*when_it, "duration");
    event.when.recurrence = optional_from_json(*when_it, "recurrence");
    event.where = optional_from_json(doc, "where");
    event.outcome = optional_from_json(doc, "outcome");
    event.description = string_field(doc, "description", "event");
    event.event_type = string_field(doc, "event_type", "event");
    event.importance = string_field(doc, "importance", "event");
    event.source_seq_id = int_field(doc, "source_seq_id", "event");
    event.recorded_at = string_field(doc, "recorded_at", "event");
    event.trace_id = optional_from_json(doc, "trace_id");
    return event;
}

json trace_to_json(const TemporalTrace& trace) {
    return json{
        {"trace_id", trace.trace_id},
        {"title", trace.title},
        {"event_ids", trace.event_ids},
        {"participants", trace.participants},
        {"keywords", trace.keywords},
    };
}

TemporalTrace trace_from_json(const json& doc) {
    TemporalTrace trace;
    trace.trace_id = string_field(doc, "trace_id", "trace");
    trace.title = string_field(doc, "title", "trace");
    trace.event_ids = string_array(doc, "event_ids", "trace");
    auto participants = string_array(doc, "participants", "trace");
    trace.participants = {participants.begin(), participants.end()};
    auto keywords = string_array(doc, "keywords", "trace");
    trace.keywords = {keywords.begin(), keywords.end()};
    return trace;
}

json cluster_to_json(const TopicCluster& cluster) {
    json summary = nullptr;
    if (cluster.summary) {
        summary = json{
            {"narrative", cluster.summary->narrative},
            {"key_facts", cluster.summary->key_facts},
            {"participants", cluster.summary->participants},
            {"temporal_span", cluster.summary->temporal_span},
            {"sentiment", cluster.summary->sentiment},
            {"importance", cluster.summary->importance},
            {"extra_keywords", cluster.summary->extra_keywords},
        };
    }
    return json{
        {"topic_id", cluster.topic_id},
        {"label", cluster.label},
        {"keywords", cluster.keywords},
        {"utterance_seq_ids", cluster.utterance_seq_ids},
        {"summary", summary},
    };
}

TopicCluster cluster_from_json(const json& doc) {
    TopicCluster cluster;
    cluster.topic_id = string_field(doc, "topic_id", "topic");
    cluster.label = string_field(doc, "label", "topic");
    cluster.keywords = string_array(doc, "keywords", "topic");
    cluster.utterance_seq_ids = int_array(doc, "utterance_seq_ids", "topic");
    auto summary_it = doc.find("summary");
    if (summary_it == doc.end()) throw SchemaError("topic: missing 'summary'");
    if (!summary_it->is_null()) {
        TopicSummary summary;
        summary.narrative = string_field(*summary_it, "narrative", "topic summary");
        summary.key_facts = string_array(*summary_it, "key_facts", "topic summary");
        summary.participants = string_array(*summary_it, "participants", "topic summary");
        summary.temporal_span = string_field(*summary_it, "temporal_span", "topic summary");
        summary.sentiment = string_field(*summary_it, "sentiment", "topic summary");
        summary.importance = string_field(*summary_it, "importance", "topic summary");
        summary.extra_keywords = string_array(*summary_it, "extra_keywords", "topic summary");
        cluster.summary = std::move(summary);
    }
    return cluster;
}

json usage_to_json(const UsageRecord& usage) {
    return json{
        {"prompt_chars", usage.prompt_chars},
        {"response_chars", usage.response_chars},
        {"approx_tokens", usage.approx_tokens},
        {"wall_ms", usage.wall_ms},
    };
}

UsageRecord usage_from_json(const json& doc) {
    UsageRecord usage;
    usage.prompt_chars = static_cast<std::uint64_t>(int_field(doc, "prompt_chars", "usage"));
    usage.response_chars = static_cast<std::uint64_t>(int_field(doc, "response_chars", "usage"));
    usage.approx_tokens = static_cast<std::uint64_t>(int_field(doc, "approx_tokens", "usage"));
    usage.wall_ms = static_cast<std::uint64_t>(int_field(doc, "wall_ms", "usage"));
    return usage;
}

void save_kb(const AnchorKB& kb, const std::string& dir) {
    if (!kb.consolidated()) {
        throw StateError("knowledge base must be consolidated before saving");
    }
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create knowledge-base directory: " + dir);

    write_json_file(dir + "/" + kManifestFile, manifest_to_json(kb.manifest));

    json profiles = json::array();
    for (const auto& [key, profile] : kb.entities.profiles()) {
        profiles.push_back(profile_to_json(profile));
    }
    write_json_file(dir + "/" + kEntitiesFile, json{{"profiles", profiles}});

    json events = json::array();
    for (const auto& event : kb.events.events()) events.push_back(event_to_json(event));
    write_json_file(dir + "/" + kEventsFile, json{{"events", events}});

    json traces = json::array();
    for (const auto& trace : kb.events.traces()) traces.push_back(trace_to_json(trace));
    write_json_file(dir + "/" + kTracesFile, json{{"traces", traces}});

    json topics = json::array();
    for (const auto& cluster : kb.topics.clusters()) topics.push_back(cluster_to_json(cluster));
    write_json_file(dir + "/" + kTopicsFile, json{{"topics", topics}});

    write_json_file(dir + "/" + kUsageFile, usage_to_json(kb.usage));
}

namespace {

int parse_major_version(const std::string& version) {
    size_t dot = version.find('.');
    std::string major = dot == std::string::npos ? version : version.substr(0, dot);
    try {
        return std::stoi(major);
    } catch (const std::exception&) {
        throw VersionError("unparseable format_version: " + version);
    }
}

void check_seq(std::int64_t seq, const Manifest& manifest, const std::string& what,
               std::vector<std::string>& problems) {
    if (seq < manifest.min_seq || seq > manifest.max_seq) {
        problems.push_back(what + " references out-of-range seq_id " + std::to_string(seq));
    }
}

}  // namespace

AnchorKB load_kb(const std::string& dir) {
    if (!std::filesystem::exists(dir)) {
        throw IoError("knowledge-base directory does not exist: " + dir);
    }

    AnchorKB kb;
    kb.manifest = manifest_from_json(read_json_file(dir + "/" + kManifestFile));
    int major = parse_major_version(kb.manifest.format_version);
    if (major != 1) {
        throw VersionError("unsupported knowledge-base format major version " +
                           std::to_string(major) + " (expected 1)");
    }

    json entities_doc = read_json_file(dir + "/" + kEntitiesFile);
    auto profiles_it = entities_doc.find("profiles");
    if (profiles_it == entities_doc.end() || !profiles_it->is_array()) {
        throw SchemaError("entities file: missing 'profiles' array");
    }
    std::vector<EntityProfile> profiles;
    for (const auto& item : *profiles_it) profiles.push_back(profile_from_json(item));
    kb.entities = EntityStore::from_profiles(std::move(profiles), true);

    json events_doc = read_json_file(dir + "/" + kEventsFile);
    auto events_it = events_doc.find("events");
    if (events_it == events_doc.end() || !events_it->is_array()) {
        throw SchemaError("events file: missing 'events' array");
    }
    std::vector<EventTuple> events;
    for (const auto& item : *events_it) events.push_back(event_from_json(item));

    json traces_doc = read_json_file(dir + "/" + kTracesFile);
    auto traces_it = traces_doc.find("traces");
    if (traces_it == traces_doc.end() || !traces_it->is_array()) {
        throw SchemaError("traces file: missing 'traces' array");
    }
    std::vector<TemporalTrace> traces;
    for (const auto& item : *traces_it) traces.push_back(trace_from_json(item));
    kb.events = EventStore::from_parts(std::move(events), std::move(traces));

    json topics_doc = read_json_file(dir + "/" + kTopicsFile);
    auto topics_it = topics_doc.find("topics");
    if (topics_it == topics_doc.end() || !topics_it->is_array()) {
        throw SchemaError("topics file: missing 'topics' array");
    }
    std::vector<TopicCluster> clusters;
    for (const auto& item : *topics_it) clusters.push_back(cluster_from_json(item));
    kb.topics = TopicStore::from_clusters(std::move(clusters), true);

    kb.usage = usage_from_json(read_json_file(dir + "/" + kUsageFile));

    // Referential integrity, collected exhaustively before throwing.
    std::vector<std::string> problems;
    std::map<std::string, const TemporalTrace*> trace_by_id;
    for (const auto& trace : kb.events.traces()) trace_by_id[trace.trace_id] = &trace;
    std::map<std::string, const EventTuple*> event_by_id;
    for (const auto& event : kb.events.events()) event_by_id[event.event_id] = &event;

    for (const auto& event : kb.events.events()) {
        check_seq(event.source_seq_id, kb.manifest, "event " + event.event_id, problems);
        if (event.trace_id) {
            auto it = trace_by_id.find(*event.trace_id);
            if (it == trace_by_id.end()) {
                problems.push_back("event " + event.event_id + " references missing trace " +
                                   *event.trace_id);
            } else if (std::find(it->second->event_ids.begin(), it->second->event_ids.end(),
                                 event.event_id) == it->second->event_ids.end()) {
                problems.push_back("trace " + *event.trace_id + " does not list member event " +
                                   event.event_id);
            }
        }
    }
    for (const auto& trace : kb.events.traces()) {
        for (const auto& event_id : trace.event_ids) {
            auto it = event_by_id.find(event_id);
            if (it == event_by_id.end()) {
                problems.push_back("trace " + trace.trace_id + " references missing event " +
                                   event_id);
            } else if (!it->second->trace_id || *it->second->trace_id != trace.trace_id) {
                problems.push_back("event " + event_id + " does not point back to trace " +
                                   trace.trace_id);
            }
        }
    }
    for (const auto& [key, profile] : kb.entities.profiles()) {
        for (const auto& [attr_key, attr] : profile.attributes) {
            for (std::int64_t seq : attr.evidence_seq_ids) {
                check_seq(seq, kb.manifest,
                          "profile " + profile.canonical_name + " attribute " + attr_key,
                          problems);
            }
        }
        for (const auto& archived : profile.attribute_history) {
            check_seq(archived.superseded_at_seq, kb.manifest,
                      "profile " + profile.canonical_name + " history " + archived.key, problems);
        }
        for (const auto& entry : profile.timeline) {
            check_seq(entry.seq_id, kb.manifest,
                      "profile " + profile.canonical_name + " timeline", problems);
        }
    }
    for (const auto& cluster : kb.topics.clusters()) {
        for (std::int64_t seq : cluster.utterance_seq_ids) {
            check_seq(seq, kb.manifest, "topic " + cluster.topic_id, problems);
        }
    }

    if (!problems.empty()) {
        throw ValidationError("knowledge base failed validation with " +
                                  std::to_string(problems.size()) + " broken reference(s)",
                              std::move(problems));
    }
    return kb;
}

bool kb_equal(const AnchorKB& a, const AnchorKB& b) {
    if (manifest_to_json(a.manifest) != manifest_to_json(b.manifest)) return false;
    if (usage_to_json(a.usage) != usage_to_json(b.usage)) return false;

    auto profiles_json = [](const AnchorKB& kb) {
        json out = json::array();
        for (const auto& [key, profile] : kb.entities.profiles()) {
            out.push_back(profile_to_json(profile));
        }
        return out;
    };
    auto events_json = [](const AnchorKB& kb) {
        json out = json::array();
        for (const auto& event : kb.events.events()) out.push_back(event_to_json(event));
        return out;
    };
    auto traces_json = [](const AnchorKB& kb) {
        json out = json::array();
        for (const auto& trace : kb.events.traces()) out.push_back(trace_to_json(trace));
        return out;
    };
    auto topics_json = [](const AnchorKB& kb) {
        json out = json::array();
        for (const auto& cluster : kb.topics.clusters()) out.push_back(cluster_to_json(cluster));
        return out;
    };
    return profiles_json(a) == profiles_json(b) && events_json(a) == events_json(b) &&
           traces_json(a) == traces_json(b) && topics_json(a) == topics_json(b);
}

}  // namespace anchorkb
