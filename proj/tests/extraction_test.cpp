#include <doctest.h>

#include "anchorkb/errors.hpp"
#include "anchorkb/extraction.hpp"

using namespace anchorkb;

TEST_CASE("strip_code_fence") {
    CHECK(strip_code_fence("{\"a\":1}") == "{\"a\":1}");
    CHECK(strip_code_fence("```json\n{\"a\":1}\n```") == "{\"a\":1}");
    CHECK(strip_code_fence("```\n{\"a\":1}\n```") == "{\"a\":1}");
    CHECK(strip_code_fence("  {\"a\":1}  ") == "{\"a\":1}");
}

TEST_CASE("parse_entities reads the full record") {
    std::string raw = R"({"entities":[{
        "source_id": 6,
        "entity_name": "Caroline",
        "entity_type": "person",
        "attributes": {"occupation": "student", "city": "Boston"},
        "relations": [{"target": "MedLLM", "relation": "developer_of"}],
        "status_changes": [{"attribute": "occupation", "from": "student", "to": "AI researcher"}]
    }]})";
    auto entities = parse_entities(raw);
    REQUIRE(entities.size() == 1);
    const auto& entity = entities[0];
    CHECK(entity.source_id == 6);
    CHECK(entity.entity_name == "Caroline");
    CHECK(entity.entity_type == "person");
    REQUIRE(entity.attributes.size() == 2);
    CHECK(entity.attributes[0].first == "city");
    CHECK(entity.attributes[1].first == "occupation");
    CHECK(entity.attributes[1].second == "student");
    REQUIRE(entity.relations.size() == 1);
    CHECK(entity.relations[0].target == "MedLLM");
    CHECK(entity.relations[0].relation == "developer_of");
    REQUIRE(entity.status_changes.size() == 1);
    CHECK(entity.status_changes[0].to == "AI researcher");
}

TEST_CASE("parse_entities works inside a code fence") {
    auto entities =
        parse_entities("```json\n{\"entities\":[{\"source_id\":1,\"entity_name\":\"Ben\"}]}\n```");
    REQUIRE(entities.size() == 1);
    CHECK(entities[0].entity_name == "Ben");
}

TEST_CASE("parse_entities error handling") {
    CHECK_THROWS_AS(parse_entities("not json at all"), ExtractionParseError);
    CHECK_THROWS_AS(parse_entities("[1,2,3]"), ExtractionParseError);
    CHECK_THROWS_AS(parse_entities("{}"), SchemaError);
    CHECK_THROWS_AS(parse_entities(R"({"entities":[{"entity_name":"x"}]})"), SchemaError);
    CHECK_THROWS_AS(parse_entities(R"({"entities":[{"source_id":1,"entity_name":""}]})"),
                    SchemaError);
    CHECK_THROWS_AS(parse_entities(R"({"entities":[{"source_id":1}]})"), SchemaError);

    try {
        parse_entities("{broken");
        FAIL("expected ExtractionParseError");
    } catch (const ExtractionParseError& err) {
        CHECK(err.raw == "{broken");
    }
}

TEST_CASE("parse_events requires a seq reference and some substance") {
    std::string raw = R"({"events":[{
        "source_id": 4,
        "description": "MedLLM hallucinated a dosage during a demo at the lab",
        "who": ["Caroline"],
        "what": "MedLLM hallucinated a dosage in a demo",
        "when": {"relative": "yesterday"},
        "where": "the lab",
        "event_type": "experience",
        "importance": "high"
    }]})";
    auto events = parse_events(raw);
    REQUIRE(events.size() == 1);
    CHECK(events[0].source_id == 4);
    CHECK(events[0].who == std::vector<std::string>{"Caroline"});
    CHECK(events[0].when.relative == "yesterday");
    CHECK_FALSE(events[0].when.absolute.has_value());
    CHECK(events[0].where == "the lab");
    CHECK_FALSE(events[0].outcome.has_value());

    CHECK_THROWS_AS(parse_events(R"({"events":[{"who":["A"],"what":"x"}]})"), SchemaError);
    CHECK_THROWS_AS(parse_events(R"({"events":[{"source_id":1}]})"), SchemaError);

    // Either a participant list or a description is enough.
    CHECK(parse_events(R"({"events":[{"source_id":1,"description":"d"}]})").size() == 1);
    CHECK(parse_events(R"({"events":[{"source_id":1,"who":["A"]}]})").size() == 1);
}

TEST_CASE("parse_topics validates utterance index types") {
    std::string raw = R"({"topics":[{
        "topic_id": 2,
        "topic_label": "Painting hobby",
        "topic_keywords": ["painting", "class"],
        "utterance_indices": [1, 2, 3]
    }]})";
    auto topics = parse_topics(raw);
    REQUIRE(topics.size() == 1);
    CHECK(topics[0].label == "Painting hobby");
    CHECK(topics[0].keywords == std::vector<std::string>{"painting", "class"});
    CHECK(topics[0].utterance_indices == std::vector<std::int64_t>{1, 2, 3});

    CHECK_THROWS_AS(parse_topics(R"({"topics":[{"topic_label":"x"}]})"), SchemaError);
    CHECK_THROWS_AS(
        parse_topics(R"({"topics":[{"topic_label":"x","utterance_indices":["one"]}]})"),
        SchemaError);
    CHECK_THROWS_AS(parse_topics(R"({"topics":[{"utterance_indices":[1]}]})"), SchemaError);
}

TEST_CASE("parse_triple splits the three sections") {
    std::string raw = R"({
        "entities": [{"source_id": 1, "entity_name": "Ben"}],
        "events": [{"source_id": 1, "who": ["Ben"], "what": "fixed the telescope"}],
        "topics": [{"topic_label": "repairs", "utterance_indices": [1]}]
    })";
    TripleExtraction triple = parse_triple(raw);
    CHECK(triple.entities.size() == 1);
    CHECK(triple.events.size() == 1);
    CHECK(triple.topics.size() == 1);

    CHECK_THROWS_AS(parse_triple(R"({"entities":[],"events":[]})"), SchemaError);
}

TEST_CASE("parse_topic_summary fills defaults") {
    ExtractedTopicSummary summary = parse_topic_summary(R"({
        "narrative": "Two friends discuss a model fix.",
        "key_facts": ["the fix worked"],
        "participants": ["Caroline", "Melanie"],
        "temporal_span": "2023-05-20 to 2023-06-02"
    })");
    CHECK(summary.narrative == "Two friends discuss a model fix.");
    CHECK(summary.key_facts == std::vector<std::string>{"the fix worked"});
    CHECK(summary.sentiment == "neutral");
    CHECK(summary.importance == "medium");

    ExtractedTopicSummary tagged = parse_topic_summary(
        R"({"narrative":"n","sentiment":"positive","importance":"high"})");
    CHECK(tagged.sentiment == "positive");
    CHECK(tagged.importance == "high");
}

TEST_CASE("parse_profile_summary requires the summary field") {
    CHECK(parse_profile_summary(R"({"summary":"Caroline is an AI researcher."})") ==
          "Caroline is an AI researcher.");
    CHECK_THROWS_AS(parse_profile_summary(R"({"text":"x"})"), SchemaError);
    CHECK_THROWS_AS(parse_profile_summary("glob"), ExtractionParseError);
}
