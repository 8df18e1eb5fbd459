#include "anchorkb/conversation.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "anchorkb/errors.hpp"

namespace anchorkb {

std::string_view batch_kind_name(BatchKind kind) {
    switch (kind) {
        case BatchKind::entity: return "entity";
        case BatchKind::event: return "event";
        case BatchKind::topic: return "topic";
        case BatchKind::triple: return "triple";
    }
    return "entity";
}

namespace {

std::string require_string(const nlohmann::json& obj, const char* key, size_t index) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) {
        throw SchemaError("utterance " + std::to_string(index) +
                          ": missing or non-string field '" + key + "'");
    }
    return it->get<std::string>();
}

}  // namespace

Conversation parse_conversation(const nlohmann::json& doc) {
    if (!doc.is_object()) throw SchemaError("conversation document must be a JSON object");
    Conversation conv;
    auto id_it = doc.find("conversation_id");
    if (id_it == doc.end() || !id_it->is_string()) {
        throw SchemaError("missing or non-string field 'conversation_id'");
    }
    conv.conversation_id = id_it->get<std::string>();

    auto utt_it = doc.find("utterances");
    if (utt_it == doc.end() || !utt_it->is_array()) {
        throw SchemaError("missing or non-array field 'utterances'");
    }
    if (utt_it->empty()) throw EmptyInputError("conversation has no utterances");

    size_t with_seq = 0;
    for (size_t i = 0; i < utt_it->size(); ++i) {
        const auto& item = (*utt_it)[i];
        if (!item.is_object()) {
            throw SchemaError("utterance " + std::to_string(i) + " is not an object");
        }
        Utterance u;
        u.speaker = require_string(item, "speaker", i);
        u.content = require_string(item, "content", i);
        u.session_id = require_string(item, "session_id", i);
        u.timestamp = require_string(item, "timestamp", i);
        auto seq_it = item.find("seq_id");
        if (seq_it != item.end() && !seq_it->is_null()) {
            if (!seq_it->is_number_integer()) {
                throw SchemaError("utterance " + std::to_string(i) +
                                  ": 'seq_id' must be an integer");
            }
            u.seq_id = seq_it->get<std::int64_t>();
            ++with_seq;
        } else {
            u.seq_id = static_cast<std::int64_t>(i);
        }
        conv.utterances.push_back(std::move(u));
    }

    if (with_seq != 0 && with_seq != conv.utterances.size()) {
        throw SchemaError("'seq_id' must be present on all utterances or on none");
    }
    if (with_seq == conv.utterances.size()) {
        for (size_t i = 1; i < conv.utterances.size(); ++i) {
            if (conv.utterances[i].seq_id <= conv.utterances[i - 1].seq_id) {
                throw SchemaError("'seq_id' values must be strictly increasing (index " +
                                  std::to_string(i) + ")");
            }
        }
    }
    return conv;
}

Conversation load_conversation(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open conversation file: " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError("conversation file is not valid JSON: " + std::string(e.what()));
    }
    return parse_conversation(doc);
}

SeqIndex::SeqIndex(const Conversation& conv) {
    if (conv.utterances.empty()) throw EmptyInputError("cannot index an empty conversation");
    for (const auto& u : conv.utterances) by_seq_[u.seq_id] = &u;
    min_seq_ = by_seq_.begin()->first;
    max_seq_ = by_seq_.rbegin()->first;
}

const Utterance* SeqIndex::find(std::int64_t seq_id) const {
    auto it = by_seq_.find(seq_id);
    return it == by_seq_.end() ? nullptr : it->second;
}

const Utterance& SeqIndex::require(std::int64_t seq_id, const char* context) const {
    const Utterance* u = find(seq_id);
    if (u == nullptr) {
        throw SchemaError(std::string(context) + " references unknown seq_id " +
                          std::to_string(seq_id));
    }
    return *u;
}

std::vector<Batch> make_batches(const Conversation& conv, BatchKind kind,
                                std::size_t batch_size, double overlap_fraction) {
    if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
    if (overlap_fraction < 0.0 || overlap_fraction >= 1.0) {
        throw std::invalid_argument("overlap_fraction must lie in [0, 1)");
    }
    if (conv.utterances.empty()) throw EmptyInputError("cannot batch an empty conversation");

    bool overlapping = kind == BatchKind::topic;
    std::size_t stride = batch_size;
    if (overlapping) {
        stride = static_cast<std::size_t>(
            std::floor(static_cast<double>(batch_size) * (1.0 - overlap_fraction)));
        if (stride == 0) {
            throw std::invalid_argument("overlap_fraction leaves an empty stride");
        }
    }

    const std::size_t n = conv.utterances.size();
    std::vector<Batch> batches;
    std::size_t start = 0;
    while (true) {
        std::size_t end = std::min(start + batch_size, n);
        Batch b;
        b.kind = kind;
        b.start_seq = conv.utterances[start].seq_id;
        b.end_seq = conv.utterances[end - 1].seq_id;
        b.utterances.assign(conv.utterances.begin() + static_cast<std::ptrdiff_t>(start),
                            conv.utterances.begin() + static_cast<std::ptrdiff_t>(end));
        batches.push_back(std::move(b));
        if (start + batch_size >= n) break;
        start += stride;
    }
    return batches;
}

}  // namespace anchorkb
