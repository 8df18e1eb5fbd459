#include <doctest.h>

#include <random>

#include "anchorkb/entity_store.hpp"
#include "anchorkb/errors.hpp"
#include "anchorkb/kb.hpp"
#include "support.hpp"

using namespace anchorkb;

namespace {

Conversation tiny_conversation(std::size_t count) {
    Conversation conv;
    conv.conversation_id = "tiny";
    for (std::size_t i = 0; i < count; ++i) {
        Utterance u;
        u.seq_id = static_cast<std::int64_t>(i);
        u.speaker = i % 2 == 0 ? "Ava" : "Ben";
        u.content = "line " + std::to_string(i);
        u.session_id = "s1";
        u.timestamp = "2023-05-" + std::string(i + 1 < 10 ? "0" : "") + std::to_string(i + 1);
        conv.utterances.push_back(std::move(u));
    }
    return conv;
}

ExtractedEntity entity(std::int64_t seq, const std::string& name, const std::string& type = "",
                       std::vector<std::pair<std::string, std::string>> attrs = {}) {
    ExtractedEntity e;
    e.source_id = seq;
    e.entity_name = name;
    e.entity_type = type;
    e.attributes = std::move(attrs);
    return e;
}

}  // namespace

TEST_CASE("accumulate_confidence is noisy-or") {
    CHECK(EntityStore::accumulate_confidence(0.6, 0.6) == doctest::Approx(0.84));
    CHECK(EntityStore::accumulate_confidence(0.0, 0.5) == doctest::Approx(0.5));
    CHECK(EntityStore::accumulate_confidence(1.0, 0.3) == doctest::Approx(1.0));
    CHECK(EntityStore::accumulate_confidence(0.84, 0.6) == doctest::Approx(0.936));
}

TEST_CASE("merge_extraction creates profiles keyed case-insensitively") {
    Conversation conv = tiny_conversation(4);
    SeqIndex index(conv);
    EntityStore store;
    store.merge_extraction({entity(0, "  Ava ", "person", {{"Hobby", " painting "}})}, index);

    REQUIRE(store.size() == 1);
    const EntityProfile* profile = store.find("ava");
    REQUIRE(profile != nullptr);
    CHECK(profile->canonical_name == "Ava");
    CHECK(profile->entity_type == "person");
    REQUIRE(profile->attributes.count("hobby") == 1);
    const AttributeValue& hobby = profile->attributes.at("hobby");
    CHECK(hobby.value == "painting");
    CHECK(hobby.confidence == doctest::Approx(0.6));
    CHECK(hobby.evidence_seq_ids == std::vector<std::int64_t>{0});

    CHECK(store.has_profile("AVA"));
    CHECK_FALSE(store.has_profile("ben"));
    CHECK_THROWS_AS(store.merge_extraction({entity(99, "Ghost")}, index), SchemaError);
}

TEST_CASE("repeated same-value evidence accumulates confidence once per seq") {
    Conversation conv = tiny_conversation(4);
    SeqIndex index(conv);
    EntityStore store;
    store.merge_extraction({entity(0, "Ava", "person", {{"hobby", "painting"}})}, index);
    store.merge_extraction({entity(2, "Ava", "", {{"hobby", "Painting"}})}, index);

    const AttributeValue& hobby = store.find("ava")->attributes.at("hobby");
    CHECK(hobby.value == "painting");
    CHECK(hobby.confidence == doctest::Approx(0.84));
    CHECK(hobby.evidence_seq_ids == std::vector<std::int64_t>{0, 2});

    // The same seq again raises confidence but cannot add duplicate evidence.
    store.merge_extraction({entity(2, "Ava", "", {{"hobby", "painting"}})}, index);
    CHECK(store.find("ava")->attributes.at("hobby").evidence_seq_ids ==
          std::vector<std::int64_t>{0, 2});
}

TEST_CASE("weaker conflicting evidence is archived without replacing the value") {
    Conversation conv = tiny_conversation(4);
    SeqIndex index(conv);
    EntityStore store;
    store.merge_extraction({entity(0, "Ava", "", {{"city", "Boston"}})}, index);
    store.merge_extraction({entity(1, "Ava", "", {{"city", "Denver"}})}, index);

    const EntityProfile* profile = store.find("ava");
    CHECK(profile->attributes.at("city").value == "Boston");
    REQUIRE(profile->attribute_history.size() == 1);
    CHECK(profile->attribute_history[0].key == "city");
    CHECK(profile->attribute_history[0].old_value == "Denver");
    CHECK(profile->attribute_history[0].old_confidence == doctest::Approx(0.6));
    CHECK(profile->attribute_history[0].superseded_at_seq == 1);
}

TEST_CASE("status changes displace default-confidence values and log the timeline") {
    Conversation conv = tiny_conversation(4);
    SeqIndex index(conv);
    EntityStore store;
    store.merge_extraction({entity(0, "Ava", "person", {{"occupation", "student"}})}, index);

    ExtractedEntity change = entity(2, "Ava");
    change.status_changes.push_back({"occupation", "student", "AI researcher"});
    store.merge_extraction({change}, index);

    const EntityProfile* profile = store.find("ava");
    CHECK(profile->attributes.at("occupation").value == "AI researcher");
    CHECK(profile->attributes.at("occupation").confidence == doctest::Approx(0.8));
    CHECK(profile->attributes.at("occupation").evidence_seq_ids == std::vector<std::int64_t>{2});

    REQUIRE(profile->attribute_history.size() == 1);
    CHECK(profile->attribute_history[0].old_value == "student");
    CHECK(profile->attribute_history[0].old_confidence == doctest::Approx(0.6));
    CHECK(profile->attribute_history[0].superseded_at_seq == 2);

    REQUIRE(profile->timeline.size() == 1);
    CHECK(profile->timeline[0].description == "occupation: student -> AI researcher");
    CHECK(profile->timeline[0].kind == "status_change");
    CHECK(profile->timeline[0].seq_id == 2);
    CHECK(profile->timeline[0].timestamp == "2023-05-03");
}

TEST_CASE("status change with unknown prior renders a dash") {
    Conversation conv = tiny_conversation(2);
    SeqIndex index(conv);
    EntityStore store;
    ExtractedEntity change = entity(1, "Ben");
    change.status_changes.push_back({"mood", "", "cheerful"});
    store.merge_extraction({change}, index);
    CHECK(store.find("ben")->timeline[0].description == "mood: - -> cheerful");
}

TEST_CASE("entity type upgrades only from other") {
    Conversation conv = tiny_conversation(4);
    SeqIndex index(conv);
    EntityStore store;
    store.merge_extraction({entity(0, "Nova")}, index);
    CHECK(store.find("nova")->entity_type == "other");

    store.merge_extraction({entity(1, "Nova", "Concept")}, index);
    CHECK(store.find("nova")->entity_type == "concept");

    store.merge_extraction({entity(2, "Nova", "task")}, index);
    CHECK(store.find("nova")->entity_type == "concept");

    store.merge_extraction({entity(0, "Blob", "starship")}, index);
    CHECK(store.find("blob")->entity_type == "other");
}

TEST_CASE("self-loop relations are dropped and duplicates collapse on consolidate") {
    Conversation conv = tiny_conversation(2);
    SeqIndex index(conv);
    EntityStore store;
    ExtractedEntity e = entity(0, "Ava");
    e.relations.push_back({"AVA", "knows"});
    e.relations.push_back({"Ben", "works_with"});
    e.relations.push_back({"ben", "Works_With"});
    store.merge_extraction({e}, index);

    store.consolidate(3, EntityStore::template_summary);
    const EntityProfile* profile = store.find("ava");
    REQUIRE(profile->relations.size() == 1);
    CHECK(profile->relations[0].target == "Ben");
    CHECK(profile->relations[0].relation_type == "works_with");
    CHECK_FALSE(profile->relations[0].inferred);
}

TEST_CASE("co-occurrence counts accumulate per utterance and infer relations at the threshold") {
    Conversation conv = tiny_conversation(6);
    SeqIndex index(conv);
    EntityStore store;
    for (std::int64_t seq : {0, 1, 2}) {
        store.merge_extraction({entity(seq, "Mira"), entity(seq, "Atlas")}, index);
    }

    const EntityProfile* mira = store.find("mira");
    CHECK(mira->co_occurrences.at("Atlas") == 3);
    CHECK(store.find("atlas")->co_occurrences.at("Mira") == 3);

    SUBCASE("count at the threshold infers associated_with on the smaller key") {
        store.consolidate(3, EntityStore::template_summary);
        const EntityProfile* atlas = store.find("atlas");
        REQUIRE(atlas->relations.size() == 1);
        CHECK(atlas->relations[0].relation_type == "associated_with");
        CHECK(atlas->relations[0].target == "Mira");
        CHECK(atlas->relations[0].inferred);
        CHECK(store.find("mira")->relations.empty());
    }

    SUBCASE("a higher threshold blocks the inference") {
        store.consolidate(4, EntityStore::template_summary);
        CHECK(store.find("atlas")->relations.empty());
        CHECK(store.find("mira")->relations.empty());
    }

    SUBCASE("an explicit relation in either direction blocks the inference") {
        ExtractedEntity e = entity(3, "Mira");
        e.relations.push_back({"Atlas", "mentor_of"});
        store.merge_extraction({e}, index);
        store.consolidate(3, EntityStore::template_summary);
        const EntityProfile* atlas = store.find("atlas");
        CHECK(atlas->relations.empty());
        REQUIRE(store.find("mira")->relations.size() == 1);
        CHECK(store.find("mira")->relations[0].relation_type == "mentor_of");
    }
}

TEST_CASE("two mentions in one utterance count once") {
    Conversation conv = tiny_conversation(2);
    SeqIndex index(conv);
    EntityStore store;
    store.merge_extraction(
        {entity(0, "Mira"), entity(0, "Atlas"), entity(0, "Mira", "person")}, index);
    CHECK(store.find("mira")->co_occurrences.at("Atlas") == 1);
}

TEST_CASE("add_event_mention appends to existing profiles only") {
    Conversation conv = tiny_conversation(2);
    SeqIndex index(conv);
    EntityStore store;
    store.merge_extraction({entity(0, "Ava")}, index);

    CHECK(store.add_event_mention("ava", "won the regatta", "2023-05-02", 1));
    CHECK_FALSE(store.add_event_mention("stranger", "x", "2023-05-02", 1));
    const EntityProfile* profile = store.find("ava");
    REQUIRE(profile->timeline.size() == 1);
    CHECK(profile->timeline[0].kind == "event_mention");
    CHECK(profile->timeline[0].description == "won the regatta");
}

TEST_CASE("consolidate orders the timeline chronologically with unparseable stamps last") {
    Conversation conv = tiny_conversation(6);
    SeqIndex index(conv);
    EntityStore store;
    store.merge_extraction({entity(0, "Ava")}, index);
    store.add_event_mention("Ava", "third", "2023-05-09", 5);
    store.add_event_mention("Ava", "second", "2023-05-04", 3);
    store.add_event_mention("Ava", "vague", "sometime", 1);
    store.add_event_mention("Ava", "first", "2023-05-04", 2);

    store.consolidate(3, EntityStore::template_summary);
    const auto& timeline = store.find("ava")->timeline;
    REQUIRE(timeline.size() == 4);
    CHECK(timeline[0].description == "first");
    CHECK(timeline[1].description == "second");
    CHECK(timeline[2].description == "third");
    CHECK(timeline[3].description == "vague");
}

TEST_CASE("template_summary formats attributes by confidence then key") {
    EntityProfile profile;
    profile.canonical_name = "Caroline";
    profile.entity_type = "person";
    CHECK(EntityStore::template_summary(profile) == "Caroline (person)");

    profile.attributes["occupation"] = {"AI researcher", 0.8, {12}};
    profile.attributes["hobby"] = {"chess", 0.6, {3}};
    CHECK(EntityStore::template_summary(profile) ==
          "Caroline (person): occupation=AI researcher; hobby=chess");

    profile.relations.push_back({"Caroline", "MedLLM", "developer_of", false});
    CHECK(EntityStore::template_summary(profile) ==
          "Caroline (person): occupation=AI researcher; hobby=chess; relations: developer_of "
          "MedLLM");

    EntityProfile bare;
    bare.canonical_name = "KG";
    bare.entity_type = "concept";
    bare.relations.push_back({"KG", "MedLLM", "associated_with", true});
    CHECK(EntityStore::template_summary(bare) == "KG (concept): relations: associated_with MedLLM");
}

TEST_CASE("native_match scores token overlap and breaks ties by name") {
    Conversation conv = tiny_conversation(4);
    SeqIndex index(conv);
    EntityStore store;
    store.merge_extraction({entity(0, "Harbor", "location", {{"kind", "fishing port"}}),
                            entity(1, "Beacon", "item", {{"kind", "harbor light"}}),
                            entity(2, "Meadow", "location")},
                           index);
    store.consolidate(3, EntityStore::template_summary);

    auto matches = store.native_match("harbor light", 10);
    REQUIRE(matches.size() == 2);
    CHECK(matches[0].profile->canonical_name == "Beacon");
    CHECK(matches[0].score == 2);
    CHECK(matches[1].profile->canonical_name == "Harbor");

    CHECK(store.native_match("submarine", 10).empty());
    CHECK(store.native_match("harbor light", 1).size() == 1);

    auto tied = store.native_match("location", 10);
    REQUIRE(tied.size() == 2);
    CHECK(tied[0].profile->canonical_name == "Harbor");
    CHECK(tied[1].profile->canonical_name == "Meadow");
}

TEST_CASE("consolidate is idempotent on randomized stores") {
    std::mt19937_64 rng(20230520);
    for (int trial = 0; trial < 25; ++trial) {
        Conversation conv = testsupport::random_conversation(rng, 12);
        SeqIndex index(conv);
        EntityStore store;
        for (int batch = 0; batch < 3; ++batch) {
            std::vector<ExtractedEntity> extracted;
            int count = testsupport::pick_int(rng, 1, 5);
            for (int i = 0; i < count; ++i) {
                ExtractedEntity e = entity(testsupport::pick_int(rng, 0, 11),
                                           testsupport::pick(rng, testsupport::name_pool()));
                if (testsupport::pick_int(rng, 0, 1)) {
                    e.attributes.emplace_back("role", testsupport::sentence(rng, 1, 2));
                }
                if (testsupport::pick_int(rng, 0, 4) == 0) {
                    e.relations.push_back(
                        {testsupport::pick(rng, testsupport::name_pool()), "works_with"});
                }
                extracted.push_back(std::move(e));
            }
            store.merge_extraction(extracted, index);
        }

        store.consolidate(3, EntityStore::template_summary);
        nlohmann::json first = nlohmann::json::array();
        for (const auto& [key, profile] : store.profiles()) first.push_back(profile_to_json(profile));

        store.consolidate(3, EntityStore::template_summary);
        nlohmann::json second = nlohmann::json::array();
        for (const auto& [key, profile] : store.profiles()) second.push_back(profile_to_json(profile));

        CHECK(first == second);
    }
}

TEST_CASE("from_profiles validates names") {
    EntityProfile good;
    good.canonical_name = "Ava";
    EntityStore store = EntityStore::from_profiles({good}, true);
    CHECK(store.consolidated());
    CHECK(store.find("ava") != nullptr);

    EntityProfile blank;
    CHECK_THROWS_AS(EntityStore::from_profiles({blank}, true), SchemaError);
    CHECK_THROWS_AS(EntityStore::from_profiles({good, good}, true), SchemaError);
}
