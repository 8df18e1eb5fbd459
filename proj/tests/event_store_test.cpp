#include <doctest.h>

#include "anchorkb/errors.hpp"
#include "anchorkb/event_store.hpp"
#include "anchorkb/text.hpp"
#include "support.hpp"

using namespace anchorkb;

namespace {

EventTuple make_event(std::int64_t seq, std::vector<std::string> who, std::string what,
                      std::string recorded_at = "2023-05-20") {
    EventTuple e;
    e.who = std::move(who);
    e.what = std::move(what);
    e.source_seq_id = seq;
    e.recorded_at = std::move(recorded_at);
    e.event_id = EventStore::make_event_id(seq, e.what);
    return e;
}

Conversation two_line_conversation() {
    Conversation conv;
    conv.conversation_id = "pair";
    Utterance a;
    a.seq_id = 0;
    a.speaker = "Ava";
    a.content = "hello";
    a.session_id = "s1";
    a.timestamp = "2023-05-20";
    Utterance b = a;
    b.seq_id = 1;
    b.speaker = "Ben";
    b.timestamp = "2023-05-21 09:30";
    conv.utterances = {a, b};
    return conv;
}

}  // namespace

TEST_CASE("make_event_id is a stable hash of seq and what") {
    std::string id = EventStore::make_event_id(4, "demoed MedLLM");
    CHECK(id.size() == 19);
    CHECK(id.rfind("ev-", 0) == 0);
    CHECK(id == EventStore::make_event_id(4, "demoed MedLLM"));
    CHECK(id != EventStore::make_event_id(5, "demoed MedLLM"));
    CHECK(id != EventStore::make_event_id(4, "demoed medllm"));

    std::uint64_t hash = fnv1a64("4|demoed MedLLM");
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    CHECK(id == std::string("ev-") + buf);
}

TEST_CASE("from_extraction normalizes fields and stamps the source utterance") {
    Conversation conv = two_line_conversation();
    SeqIndex index(conv);

    ExtractedEvent raw;
    raw.source_id = 1;
    raw.who = {" Ava ", "ava", "", "Ben"};
    raw.what = "  planned the trip  ";
    raw.description = " They planned it. ";
    raw.event_type = "Social";
    raw.importance = "HIGH";
    raw.when.relative = "today";

    EventTuple event = EventStore::from_extraction(raw, index);
    CHECK(event.who == std::vector<std::string>{"Ava", "Ben"});
    CHECK(event.what == "planned the trip");
    CHECK(event.description == "They planned it.");
    CHECK(event.event_type == "social");
    CHECK(event.importance == "high");
    CHECK(event.recorded_at == "2023-05-21 09:30");
    CHECK(event.source_seq_id == 1);
    CHECK(event.event_id == EventStore::make_event_id(1, "planned the trip"));

    raw.event_type = "launch";
    raw.importance = "urgent";
    EventTuple other = EventStore::from_extraction(raw, index);
    CHECK(other.event_type == "other");
    CHECK(other.importance == "medium");

    raw.source_id = 7;
    CHECK_THROWS_AS(EventStore::from_extraction(raw, index), SchemaError);
}

TEST_CASE("dedup_score averages four components") {
    EventTuple a = make_event(0, {"Ava"}, "planned the harbor trip");
    EventTuple b = make_event(1, {"ava"}, "planned the harbor trip today");
    a.when.absolute = "2023-05-01";
    b.when.absolute = "May 1, 2023";
    a.where = "the lab";
    b.where = " The Lab ";
    // who 1, what 3/4, when 1, where 1
    CHECK(EventStore::dedup_score(a, b) == doctest::Approx(0.9375));
    CHECK(EventStore::dedup_score(b, a) == doctest::Approx(0.9375));

    EventTuple c = make_event(2, {"Ben"}, "violin recital");
    CHECK(EventStore::dedup_score(a, c) == doctest::Approx(0.0));
}

TEST_CASE("dedup_score when component compares normalized cues") {
    EventTuple a = make_event(0, {"Ava"}, "x");
    EventTuple b = make_event(1, {"Ava"}, "x");

    SUBCASE("two empty when specs do not count as equal") {
        CHECK(EventStore::dedup_score(a, b) == doctest::Approx(0.5));
    }
    SUBCASE("absolute presence must match on both sides") {
        a.when.absolute = "2023-05-01";
        b.when.relative = "today";
        CHECK(EventStore::dedup_score(a, b) == doctest::Approx(0.5));
    }
    SUBCASE("relative cues compare case-insensitively") {
        a.when.relative = "Today";
        b.when.relative = " today ";
        CHECK(EventStore::dedup_score(a, b) == doctest::Approx(0.75));
    }
    SUBCASE("unparseable absolutes fall back to string comparison") {
        a.when.absolute = "Next Spring";
        b.when.absolute = "next spring";
        CHECK(EventStore::dedup_score(a, b) == doctest::Approx(0.75));
        b.when.absolute = "next winter";
        CHECK(EventStore::dedup_score(a, b) == doctest::Approx(0.5));
    }
    SUBCASE("a missing where never matches") {
        a.where = "the lab";
        CHECK(EventStore::dedup_score(a, b) == doctest::Approx(0.5));
    }
}

TEST_CASE("add_event appends below the threshold and merges above it") {
    EventStore store;
    EventTuple first = make_event(0, {"Ava"}, "rocket launch");
    first.description = "short";
    first.when.relative = "today";
    CHECK(store.add_event(first, 0.6) == 0);

    // who 1, what 1, when 1, where 0 -> 0.75
    EventTuple dup = make_event(3, {"ava", "Ben"}, "rocket launch");
    dup.description = "a longer write-up";
    dup.when.relative = "today";
    dup.where = "the pad";
    dup.outcome = "success";
    CHECK(store.add_event(dup, 0.6) == 0);

    REQUIRE(store.events().size() == 1);
    const EventTuple& held = store.events()[0];
    CHECK(held.who == std::vector<std::string>{"Ava", "Ben"});
    CHECK(held.description == "a longer write-up");
    CHECK(held.where == "the pad");
    CHECK(held.outcome == "success");
    CHECK(held.source_seq_id == 0);
    CHECK(held.event_id == EventStore::make_event_id(0, "rocket launch"));

    REQUIRE(store.traces().size() == 1);
    CHECK(store.traces()[0].participants == std::set<std::string>{"ava", "ben"});

    // who 1, what 1, when 0, where 0 -> exactly 0.5, below tau
    EventTuple near = make_event(5, {"Ava", "Ben"}, "rocket launch");
    CHECK(store.add_event(near, 0.6) == 1);
    CHECK(store.events().size() == 2);
}

TEST_CASE("equal-length incoming values never displace held ones") {
    EventStore store;
    EventTuple first = make_event(0, {"Ava"}, "rocket launch");
    first.when.relative = "today";
    first.outcome = "won";
    store.add_event(first, 0.6);

    EventTuple dup = make_event(1, {"Ava"}, "rocket launch");
    dup.when.relative = "today";
    dup.outcome = "ok!";
    store.add_event(dup, 0.6);

    REQUIRE(store.events().size() == 1);
    CHECK(store.events()[0].outcome == "won");
}

TEST_CASE("merge ties resolve to the lowest source seq") {
    EventStore store;
    EventTuple late = make_event(5, {"Ava"}, "rocket launch");
    late.when.relative = "today";
    late.where = "the lab";
    EventTuple early = make_event(1, {"Ben"}, "harbor trip");
    early.when.relative = "today";
    early.where = "the lab";
    CHECK(store.add_event(late, 0.6) == 0);
    CHECK(store.add_event(early, 0.6) == 1);
    REQUIRE(store.events().size() == 2);

    // Scores 0.625 against both stored events.
    EventTuple incoming = make_event(9, {"Ava", "Ben"}, "");
    incoming.when.relative = "today";
    incoming.where = "the lab";
    CHECK(store.add_event(incoming, 0.6) == 1);
    CHECK(store.events().size() == 2);
    CHECK(store.events()[1].who == std::vector<std::string>{"Ben", "Ava"});
}

TEST_CASE("events link into traces by participant or keyword") {
    EventStore store;
    store.add_event(make_event(1, {"Melanie"}, "attends painting class"), 0.6);
    store.add_event(make_event(4, {"Caroline"}, "demo at the lab"), 0.6);

    REQUIRE(store.traces().size() == 2);
    CHECK(store.traces()[0].trace_id == "trace-0");
    CHECK(store.traces()[0].title == "Melanie's attends painting trace");
    CHECK(store.traces()[1].title == "Caroline's demo lab trace");
    CHECK(store.events()[0].trace_id == "trace-0");
    CHECK(store.events()[1].trace_id == "trace-1");

    store.add_event(make_event(8, {"melanie"}, "bought groceries"), 0.6);
    CHECK(store.events()[2].trace_id == "trace-0");

    store.add_event(make_event(9, {"Noor"}, "finished the painting"), 0.6);
    CHECK(store.events()[3].trace_id == "trace-0");
    CHECK(store.traces()[0].participants == std::set<std::string>{"melanie", "noor"});
    CHECK(store.traces()[0].keywords.count("painting") == 1);
    CHECK(store.traces().size() == 2);

    store.add_event(make_event(11, {}, "stargazing session"), 0.6);
    CHECK(store.traces()[2].title == "unknown's stargazing session trace");
}

TEST_CASE("trace members stay chronological with unparseable stamps last") {
    EventStore store;
    store.add_event(make_event(2, {"Ava"}, "first step", "2023-05-20"), 0.6);
    store.add_event(make_event(4, {"Ava"}, "second step", "2023-05-18"), 0.6);
    store.add_event(make_event(6, {"Ava"}, "third step", "soon"), 0.6);
    store.add_event(make_event(5, {"Ava"}, "fourth step", "soon"), 0.6);

    REQUIRE(store.traces().size() == 1);
    CHECK(store.traces()[0].event_ids ==
          std::vector<std::string>{EventStore::make_event_id(4, "second step"),
                                   EventStore::make_event_id(2, "first step"),
                                   EventStore::make_event_id(5, "fourth step"),
                                   EventStore::make_event_id(6, "third step")});
}

TEST_CASE("find helpers resolve ids") {
    EventStore store;
    store.add_event(make_event(1, {"Ava"}, "harbor trip"), 0.6);
    const EventTuple& held = store.events()[0];
    CHECK(store.find_event(held.event_id) == &held);
    CHECK(store.find_event("ev-missing") == nullptr);
    CHECK(store.find_trace("trace-0") == &store.traces()[0]);
    CHECK(store.find_trace("trace-9") == nullptr);
}

TEST_CASE("native_match scores participants and content words") {
    EventStore store;
    EventTuple a = make_event(1, {"Ava"}, "harbor trip");
    a.description = "Ava sailed out to the harbor.";
    EventTuple b = make_event(2, {"Ben"}, "violin recital");
    b.description = "A recital in the park.";
    store.add_event(a, 0.6);
    store.add_event(b, 0.6);

    auto matches = store.native_match("harbor recital", 10);
    REQUIRE(matches.size() == 2);
    // One point per distinct matching token regardless of field repeats.
    CHECK(matches[0].score == 1);
    CHECK(matches[1].score == 1);
    CHECK(matches[0].event->event_id < matches[1].event->event_id);

    auto ava = store.native_match("ava harbor", 10);
    REQUIRE(ava.size() == 1);
    CHECK(ava[0].score == 2);
    CHECK(ava[0].event->what == "harbor trip");

    CHECK(store.native_match("nothing matches here", 10).empty());
    CHECK(store.native_match("harbor recital", 1).size() == 1);
}

TEST_CASE("from_parts restores stored events and traces") {
    EventStore original;
    original.add_event(make_event(1, {"Ava"}, "harbor trip"), 0.6);
    EventStore restored =
        EventStore::from_parts(original.events(), original.traces());
    CHECK(restored.events().size() == 1);
    CHECK(restored.traces().size() == 1);
    CHECK(restored.events()[0].event_id == original.events()[0].event_id);
}
