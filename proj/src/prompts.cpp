#include "anchorkb/prompts.hpp"

#include <stdexcept>

#include "anchorkb/entity_store.hpp"
#include "anchorkb/text.hpp"
#include "anchorkb/topic_store.hpp"

namespace anchorkb {

namespace {

constexpr std::string_view kEntityTemplate =
    R"PROMPT(You are an Entity Extraction and Profiling Assistant.
Your task is to identify **all notable entities** mentioned in the conversation segments and extract structured profile information for each entity.

An entity is any object with persistence and importance, including:
- People: speakers, third parties mentioned by name or role
- Concepts/Topics: "reinforcement learning", "carbon neutrality", "risk management"
- Tasks/Projects: "write quarterly report", "develop XX module"
- Items/Events: "a specific book", "last week's team meeting"
- Locations/Organizations: "New York", "Google", "local hospital"

For each entity you identify, extract:
1. entity_name: A canonical, normalized name
2. entity_type: One of [person, concept, task, event, item, location, organization, other]
3. attributes: Key-value pairs of properties discovered in this segment
4. relations: Connections to other entities found in this segment
5. status_changes: Any state transitions observed
6. source_id: The sequence_number of the message where this entity info was found

Input format:
--- Topic X ---
[timestamp, weekday] source_id.SpeakerName: message
...

Output format (JSON):
{
  "entities": [
    {
      "source_id": <int>,
      "entity_name": "<canonical name>",
      "entity_type": "<type>",
      "attributes": { "<key>": "<value>", ... },
      "relations": [
        {"target": "<other entity name>", "relation": "<relationship type>"}
      ],
      "status_changes": [
        {"attribute": "<attr name>", "from": "<old value or null>", "to": "<new value>"}
      ]
    }
  ]
}

Important instructions:
1. Process messages strictly in ascending source_id order.
2. Extract ALL entities, even minor ones.
3. If the same entity appears in multiple messages, create separate entries (they will be merged later).
4. For people: always include their relationship to the speaker if mentioned.
5. For events: include temporal information (when it happened/will happen).
6. Preserve specific details: full names, exact dates, specific locations.
7. Do NOT invent information not present in the text.)PROMPT";

constexpr std::string_view kEventTemplate =
    R"PROMPT(You are a **Structured Event Tuple Extractor**.

Your job is to read conversation segments and extract every notable event as a
**structured event tuple** with five canonical fields:
    (Who, What, When, Where, Outcome)

- Who: All participants / actors involved (list of names).
- What: The core action or verb phrase that defines the event.
- When: Temporal information - extract ALL available cues:
   absolute date/time, relative reference, duration, recurrence
- Where: Location or spatial context (if mentioned).
- Outcome: Result, consequence, state change, or next step (if mentioned).

Additionally, for each event, provide:
- description: A concise 1-2 sentence summary.
- event_type: One of [action, experience, state_change, plan, routine, social, achievement, other]
- importance: high | medium | low

Input format:
--- Topic X ---
[timestamp, weekday] source_id.SpeakerName: message
...

Output format (strict JSON):
{
  "events": [
    {
      "source_id": <int>,
      "description": "<concise 1-2 sentence summary>",
      "who": ["<person1>", "<person2>"],
      "what": "<core action / verb phrase>",
      "when": {
        "absolute": "<exact date/time or null>",
        "relative": "<relative reference or null>",
        "duration": "<duration or null>",
        "recurrence": "<recurrence pattern or null>"
      },
      "where": "<location or null>",
      "outcome": "<result / consequence or null>",
      "event_type": "<type>",
      "importance": "<high|medium|low>"
    }
  ]
}

IMPORTANT RULES:
1. Process messages strictly in ascending source_id order.
2. Extract ALL events (completeness > precision).
3. Preserve EXACT temporal details.
4. If the same event spans multiple messages, produce ONE entry.
5. For plans / future events, use event_type="plan".
6. For recurring activities, use event_type="routine".
7. Do NOT invent information absent from the text.)PROMPT";

constexpr std::string_view kTopicTemplate =
    R"PROMPT(You are a **Conversation Topic Identifier**.

Your job is to read a sequence of conversation utterances and assign each
utterance to a **topic**. Utterances about the same subject/theme should share
the same topic label, even if they are separated by other utterances.

Input format:
Each utterance is numbered sequentially:
[session_id, timestamp] seq_id. SpeakerName: message

Output format (strict JSON):
{
  "topics": [
    {
      "topic_id": <int>,
      "topic_label": "<short descriptive label, 3-8 words>",
      "topic_keywords": ["<kw1>", "<kw2>", "<kw3>"],
      "utterance_indices": [<seq_id_1>, <seq_id_2>, ...]
    }
  ]
}

RULES:
1. Every utterance MUST be assigned to exactly one topic.
2. Use descriptive, specific topic labels.
3. If the same subject is discussed in different sessions, they belong to the SAME topic.
4. Greetings, small talk -> "Casual conversation / greetings" topic.
5. A topic should have at least 2 utterances.
6. Aim for 5-15 topics per conversation.
7. Order topics by their first appearance in the conversation.)PROMPT";

constexpr std::string_view kTripleTemplate =
    R"PROMPT(You are a **Combined Entity, Event, and Topic Extractor**.

Your task is to read conversation segments and extract THREE types of information
in a SINGLE pass:

## Part 1: ENTITIES
Identify **all notable entities** mentioned in the conversation.
For each entity extract: entity_name, entity_type, attributes, relations, status_changes, source_id.

## Part 2: EVENTS
Extract every notable event as a **structured event tuple**:
who, what, when (absolute/relative/duration/recurrence), where, outcome, description, event_type, importance.

## Part 3: TOPIC ASSIGNMENTS
Assign each utterance to a **semantic topic**.
For each topic: topic_id, topic_label, topic_keywords, utterance_indices.

Input format:
--- Topic X ---
[timestamp, weekday] source_id.SpeakerName: message
...

Output format (strict JSON):
{
  "entities": [
    {"source_id": <int>, "entity_name": "...", "entity_type": "...",
     "attributes": {...}, "relations": [...], "status_changes": [...]}
  ],
  "events": [
    {"source_id": <int>, "description": "...", "who": [...], "what": "...",
     "when": {"absolute": ..., "relative": ..., "duration": ..., "recurrence": ...},
     "where": "...", "outcome": "...", "event_type": "...", "importance": "..."}
  ],
  "topics": [
    {"topic_id": <int>, "topic_label": "...", "topic_keywords": [...], "utterance_indices": [...]}
  ]
}

IMPORTANT RULES:
1. Process messages strictly in ascending source_id order.
2. Extract ALL entities and events.
3. Every utterance MUST be assigned to exactly one topic.
4. The output MUST contain "entities", "events", and "topics".
5. Do NOT invent information not present in the text.)PROMPT";

constexpr std::string_view kTopicSummaryTemplate =
    R"PROMPT(You are a Conversation Topic Summarizer.

Your job is to read all utterances belonging to one conversation topic and
produce a structured summary of that topic.

Output format (strict JSON):
{
  "narrative": "<2-4 sentence narrative summary of the topic>",
  "key_facts": ["<fact 1>", "<fact 2>", ...],
  "participants": ["<name 1>", "<name 2>", ...],
  "temporal_span": "<earliest mention> to <latest mention>",
  "sentiment": "<positive|neutral|negative>",
  "importance": "<high|medium|low>",
  "keywords": ["<extra keyword 1>", ...]
}

RULES:
1. Base the summary only on the utterances provided.
2. Keep key_facts short, specific and self-contained.
3. Use exact dates from the utterance timestamps where possible.
4. Do NOT invent information not present in the text.)PROMPT";

constexpr std::string_view kProfileSummaryTemplate =
    R"PROMPT(You are an Entity Profile Summarizer.

Your job is to compress one structured entity profile into a single
natural-language summary sentence (at most 40 words) that preserves the most
important attributes and relations.

Output format (strict JSON):
{
  "summary": "<one sentence>"
}

RULES:
1. Mention the entity name and type.
2. Prefer high-confidence attributes over low-confidence ones.
3. Include relations when they carry information.
4. Do NOT invent information not present in the profile.)PROMPT";

constexpr std::string_view kAnswerTemplate =
    R"PROMPT(You are an intelligent memory assistant tasked with retrieving
accurate information from conversation memories.

# CONTEXT:
You have access to memories from two speakers in a conversation.
These memories contain timestamped information that may be relevant.

You also have access to THREE additional structured knowledge sources:

1. **Topic Summaries** -- high-level summaries of conversation topics
2. **Entity Profiles** -- structured information about key entities
3. **Structured Event Tuples & Traces** -- (Who, What, When, Where, Outcome)

# INSTRUCTIONS:
1. Carefully analyze all provided memories from both speakers
2. Pay special attention to timestamps to determine the answer
3. Use Topic Summaries for the BIG PICTURE
4. Use Entity Profiles for entity-specific details
5. Use Structured Event Tuples for precise temporal information
6. Cross-reference across ALL sources for the most complete answer
7. If memories contain contradictory information, prioritize the most recent
8. Convert relative time references to specific dates
9. Focus only on the content of the memories
10. The answer should be less than 5-6 words.

# APPROACH (Think step by step):
1. First, examine all memories related to the question
2. Examine timestamps and content carefully
3. Check Topic Summaries for relevant high-level context
4. Check Entity Profiles for structured information
5. Check Event Tuples and Traces for temporal details
6. Synthesize information from all sources
7. Formulate a precise, concise answer based solely on the evidence

Memories for user {speaker_1_name}:
{speaker_1_memories}

Memories for user {speaker_2_name}:
{speaker_2_memories}

Topic Summaries:
{topic_context}

Entity Profiles:
{entity_context}

Structured Event Tuples & Traces:
{event_context}

Question: {question}

Answer:)PROMPT";

}  // namespace

std::string_view prompt_template(BatchKind kind) {
    switch (kind) {
        case BatchKind::entity: return kEntityTemplate;
        case BatchKind::event: return kEventTemplate;
        case BatchKind::topic: return kTopicTemplate;
        case BatchKind::triple: return kTripleTemplate;
    }
    return kEntityTemplate;
}

std::string_view topic_summary_template() { return kTopicSummaryTemplate; }
std::string_view profile_summary_template() { return kProfileSummaryTemplate; }
std::string_view answer_template() { return kAnswerTemplate; }

std::string format_transcript_line(const Utterance& u) {
    std::string stamp = "[" + u.timestamp;
    if (auto date = parse_date(u.timestamp)) {
        stamp += ", ";
        stamp += weekday_name(*date);
    }
    stamp += "]";
    return stamp + " " + std::to_string(u.seq_id) + "." + u.speaker + ": " + u.content;
}

std::string format_topic_line(const Utterance& u) {
    return "[" + u.session_id + ", " + u.timestamp + "] " + std::to_string(u.seq_id) + ". " +
           u.speaker + ": " + u.content;
}

std::string render_prompt(const Batch& batch) {
    if (batch.utterances.empty()) throw std::invalid_argument("cannot render an empty batch");

    std::string body;
    if (batch.kind == BatchKind::topic) {
        for (const auto& u : batch.utterances) body += format_topic_line(u) + "\n";
    } else {
        // Sessions act as the segment boundaries the template's input
        // format describes.
        int segment = 0;
        std::string current_session;
        for (const auto& u : batch.utterances) {
            if (segment == 0 || u.session_id != current_session) {
                ++segment;
                current_session = u.session_id;
                body += "--- Topic " + std::to_string(segment) + " ---\n";
            }
            body += format_transcript_line(u) + "\n";
        }
    }
    return std::string(prompt_template(batch.kind)) + "\n\n" + body;
}

std::string render_topic_summary_prompt(const TopicCluster& cluster,
                                        const std::vector<Utterance>& members) {
    std::string body = "Topic: " + cluster.label + "\n";
    if (!cluster.keywords.empty()) body += "Keywords: " + join(cluster.keywords, ", ") + "\n";
    for (const auto& u : members) body += format_topic_line(u) + "\n";
    return std::string(kTopicSummaryTemplate) + "\n\n" + body;
}

std::string render_profile_summary_prompt(const EntityProfile& profile) {
    std::string body = "Entity: " + profile.canonical_name + " (" + profile.entity_type + ")\n";
    if (!profile.attributes.empty()) {
        body += "Attributes:\n";
        for (const auto& [key, value] : profile.attributes) {
            body += "  " + key + " = " + value.value + " (confidence " +
                    std::to_string(value.confidence) + ")\n";
        }
    }
    if (!profile.relations.empty()) {
        body += "Relations:\n";
        for (const auto& rel : profile.relations) {
            body += "  " + rel.relation_type + " " + rel.target + "\n";
        }
    }
    return std::string(kProfileSummaryTemplate) + "\n\n" + body;
}

}  // namespace anchorkb
