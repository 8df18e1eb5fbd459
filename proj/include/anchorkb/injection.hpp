#pragma once

#include <string>
#include <vector>

#include "anchorkb/retrieval.hpp"

namespace anchorkb {

struct ModuleQueries {
    std::vector<std::string> topic;
    std::vector<std::string> entity;
    std::vector<std::string> event;
};

// Composes candidate retrieval queries from a selection. Entity queries
// pair the name with each attribute value (confidence descending) and each
// relation; event queries are "<participants> <what>" plus a variant with
// the first present when field; topic queries are the key facts followed by
// "<participant> <label>" pairs. Each module list is deduplicated in order.
ModuleQueries generate_module_queries(const AnchorSelection& selection);

struct ExpandedQuerySet {
    std::vector<std::string> queries;
    std::vector<std::string> provenance;  // parallel: "topic" | "entity" | "event"
};

// One query per module per round, fixed topic -> entity -> event order,
// skipping exhausted modules. Globally deduplicated: a repeated string is
// dropped without consuming budget.
ExpandedQuerySet round_robin_merge(const ModuleQueries& queries, std::size_t budget);

struct RetrievedEntry {
    std::string text;
    double similarity = 0.0;
    std::string source = "original";  // "original" | "expanded"
};

// Host-side retrieval-set replacement: drops the replace_count
// lowest-similarity originals in favor of the highest-similarity expanded
// entries (deduplicated by exact text). When fewer expanded entries survive
// dedup, the best of the dropped originals are restored, so the output
// length always equals the input length. Result is sorted by similarity
// descending.
std::vector<RetrievedEntry> merge_retrieval(const std::vector<RetrievedEntry>& original,
                                            const std::vector<RetrievedEntry>& expanded,
                                            std::size_t replace_count);

struct InjectionContext {
    std::string topic_block;
    std::string entity_block;
    std::string event_block;
};

// Renders the three context blocks, one line per anchor, in the fixed
// formats the answer prompt embeds. Empty selections yield the literal
// block "None available.".
InjectionContext format_injection(const AnchorSelection& selection);

struct SpeakerMemories {
    std::string speaker_1_name = "speaker_1";
    std::string speaker_1_memories;
    std::string speaker_2_name = "speaker_2";
    std::string speaker_2_memories;
};

// Reads a JSON file with the four speaker fields; a missing file yields
// defaults so the prompt stays well-formed without host data.
SpeakerMemories load_memories(const std::string& path);

// Fills the answer-generation template: host memories first, then the
// three anchor blocks, then the question.
std::string assemble_prompt(const std::string& question, const SpeakerMemories& memories,
                            const InjectionContext& ctx);

}  // namespace anchorkb
