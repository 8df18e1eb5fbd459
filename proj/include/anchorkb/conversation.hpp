#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace anchorkb {

struct Utterance {
    std::int64_t seq_id = 0;
    std::string speaker;
    std::string content;
    std::string session_id;
    std::string timestamp;
};

struct Conversation {
    std::string conversation_id;
    std::vector<Utterance> utterances;
};

// What a batch is being cut for. Batch sizing differs per kind and the
// provider uses the kind to choose a prompt template.
enum class BatchKind { entity, event, topic, triple };

std::string_view batch_kind_name(BatchKind kind);

struct Batch {
    BatchKind kind = BatchKind::entity;
    std::int64_t start_seq = 0;  // inclusive
    std::int64_t end_seq = 0;    // inclusive
    std::vector<Utterance> utterances;
};

Conversation parse_conversation(const nlohmann::json& doc);
Conversation load_conversation(const std::string& path);

// Seq-id lookup shared by the merge paths. Extractions referencing a seq_id
// outside the conversation are schema violations, detected through find().
class SeqIndex {
public:
    explicit SeqIndex(const Conversation& conv);

    const Utterance* find(std::int64_t seq_id) const;
    // Throws SchemaError when the seq_id is unknown.
    const Utterance& require(std::int64_t seq_id, const char* context) const;
    std::int64_t min_seq() const { return min_seq_; }
    std::int64_t max_seq() const { return max_seq_; }

private:
    std::map<std::int64_t, const Utterance*> by_seq_;
    std::int64_t min_seq_ = 0;
    std::int64_t max_seq_ = 0;
};

// Fixed-size windows over the utterance list. Entity/event/triple batches
// are disjoint; topic batches overlap by `overlap_fraction` of their size
// (stride = floor(size * (1 - overlap))). The final batch is short rather
// than padded. Asking for overlap so large that the stride reaches zero is
// rejected.
std::vector<Batch> make_batches(const Conversation& conv, BatchKind kind,
                                std::size_t batch_size, double overlap_fraction);

}  // namespace anchorkb
