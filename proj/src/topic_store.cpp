#include "anchorkb/topic_store.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "anchorkb/errors.hpp"
#include "anchorkb/text.hpp"

namespace anchorkb {

namespace {

std::set<std::string> keyword_set(const TopicCluster& cluster) {
    return {cluster.keywords.begin(), cluster.keywords.end()};
}

std::size_t shared_members(const TopicCluster& a, const TopicCluster& b) {
    std::vector<std::int64_t> shared;
    std::set_intersection(a.utterance_seq_ids.begin(), a.utterance_seq_ids.end(),
                          b.utterance_seq_ids.begin(), b.utterance_seq_ids.end(),
                          std::back_inserter(shared));
    return shared.size();
}

void append_keywords(std::vector<std::string>& held, const std::vector<std::string>& incoming) {
    std::set<std::string> seen(held.begin(), held.end());
    for (const auto& keyword : incoming) {
        if (seen.insert(keyword).second) held.push_back(keyword);
    }
}

void merge_members(std::vector<std::int64_t>& held, const std::vector<std::int64_t>& incoming) {
    std::vector<std::int64_t> merged;
    std::set_union(held.begin(), held.end(), incoming.begin(), incoming.end(),
                   std::back_inserter(merged));
    held = std::move(merged);
}

// Orders raw timestamp strings chronologically when both parse, otherwise
// lexicographically.
bool timestamp_less(const std::string& a, const std::string& b) {
    auto ta = parse_timestamp_seconds(a);
    auto tb = parse_timestamp_seconds(b);
    if (ta && tb) return *ta < *tb;
    return a < b;
}

}  // namespace

void TopicStore::identify_batch(const std::vector<ExtractedTopic>& extracted, const Batch& batch,
                                int batch_index) {
    std::set<std::int64_t> batch_seqs;
    for (const auto& u : batch.utterances) batch_seqs.insert(u.seq_id);

    std::set<std::int64_t> assigned;
    for (const auto& topic : extracted) {
        std::vector<std::int64_t> members;
        for (std::int64_t seq : topic.utterance_indices) {
            if (!batch_seqs.count(seq)) continue;
            if (!assigned.insert(seq).second) continue;
            members.push_back(seq);
        }
        if (members.empty()) continue;
        std::sort(members.begin(), members.end());

        TopicCluster cluster;
        cluster.topic_id = "topic-" + std::to_string(next_id_++);
        cluster.label = trim(topic.label);
        for (const auto& keyword : topic.keywords) {
            std::string lowered = to_lower(trim(keyword));
            if (!lowered.empty() &&
                std::find(cluster.keywords.begin(), cluster.keywords.end(), lowered) ==
                    cluster.keywords.end()) {
                cluster.keywords.push_back(lowered);
            }
        }
        cluster.utterance_seq_ids = std::move(members);
        cluster.batch_index = batch_index;
        clusters_.push_back(std::move(cluster));
    }

    std::vector<std::int64_t> leftovers;
    for (std::int64_t seq : batch_seqs) {
        if (!assigned.count(seq)) leftovers.push_back(seq);
    }
    if (!leftovers.empty()) {
        TopicCluster cluster;
        cluster.topic_id = "topic-" + std::to_string(next_id_++);
        cluster.label = "unassigned";
        cluster.keywords = {"unassigned"};
        cluster.utterance_seq_ids = std::move(leftovers);
        cluster.batch_index = batch_index;
        clusters_.push_back(std::move(cluster));
    }
    merged_ = false;
}

void TopicStore::merge_batches() {
    // Repeated absorb-and-restart reaches the transitive closure: a merge
    // can raise keyword overlap with a third cluster, so one pass is not
    // enough for idempotence.
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < clusters_.size() && !changed; ++i) {
            for (std::size_t j = i + 1; j < clusters_.size() && !changed; ++j) {
                const TopicCluster& a = clusters_[i];
                const TopicCluster& b = clusters_[j];
                bool keyword_match =
                    jaccard(keyword_set(a), keyword_set(b)) >= kKeywordJaccardThreshold;
                bool member_match = shared_members(a, b) >= kSharedUtteranceThreshold;
                if (!keyword_match && !member_match) continue;

                append_keywords(clusters_[i].keywords, clusters_[j].keywords);
                merge_members(clusters_[i].utterance_seq_ids, clusters_[j].utterance_seq_ids);
                clusters_[i].batch_index = std::min(a.batch_index, b.batch_index);
                clusters_.erase(clusters_.begin() + static_cast<std::ptrdiff_t>(j));
                changed = true;
            }
        }
    }

    std::set<std::int64_t> claimed;
    for (auto& cluster : clusters_) {
        std::vector<std::int64_t> exclusive;
        for (std::int64_t seq : cluster.utterance_seq_ids) {
            if (claimed.insert(seq).second) exclusive.push_back(seq);
        }
        cluster.utterance_seq_ids = std::move(exclusive);
    }
    std::erase_if(clusters_, [](const TopicCluster& c) { return c.utterance_seq_ids.empty(); });
    merged_ = true;
}

void TopicStore::summarize_all(const Conversation& conv, const TopicSummarizer& summarizer) {
    if (!merged_) throw StateError("topic clusters must be merged before summarization");
    std::map<std::int64_t, const Utterance*> by_seq;
    for (const auto& u : conv.utterances) by_seq[u.seq_id] = &u;

    for (auto& cluster : clusters_) {
        std::vector<Utterance> members;
        for (std::int64_t seq : cluster.utterance_seq_ids) {
            auto it = by_seq.find(seq);
            if (it != by_seq.end()) members.push_back(*it->second);
        }
        cluster.summary = summarizer(cluster, members);
    }
}

TopicSummary TopicStore::template_summary(const TopicCluster& cluster,
                                          const std::vector<Utterance>& members) {
    std::set<std::string> sessions;
    std::set<std::string> speakers;
    std::string earliest;
    std::string latest;
    for (const auto& u : members) {
        sessions.insert(u.session_id);
        speakers.insert(u.speaker);
        if (earliest.empty() || timestamp_less(u.timestamp, earliest)) earliest = u.timestamp;
        if (latest.empty() || timestamp_less(latest, u.timestamp)) latest = u.timestamp;
    }
    std::vector<std::string> session_list(sessions.begin(), sessions.end());
    std::vector<std::string> speaker_list(speakers.begin(), speakers.end());

    TopicSummary summary;
    summary.narrative = cluster.label + ": " + std::to_string(members.size()) +
                        " utterances across sessions " + join(session_list, ",") +
                        "; participants " + join(speaker_list, ",");
    summary.key_facts = {summary.narrative};
    summary.participants = speaker_list;
    summary.temporal_span = earliest + " to " + latest;
    summary.sentiment = "neutral";
    summary.importance = "medium";
    return summary;
}

std::vector<TopicStore::Match> TopicStore::native_match(const std::string& query,
                                                        std::size_t cap) const {
    std::set<std::string> query_tokens = token_set(query);
    std::vector<Match> matches;
    for (const auto& cluster : clusters_) {
        std::set<std::string> cluster_tokens = token_set(cluster.label);
        for (const auto& keyword : cluster.keywords) {
            auto toks = token_set(keyword);
            cluster_tokens.insert(toks.begin(), toks.end());
        }
        if (cluster.summary) {
            for (const auto& fact : cluster.summary->key_facts) {
                auto toks = token_set(fact);
                cluster_tokens.insert(toks.begin(), toks.end());
            }
        }
        std::size_t overlap = 0;
        for (const auto& token : query_tokens) overlap += cluster_tokens.count(token);
        if (overlap > 0) matches.push_back({&cluster, overlap});
    }
    std::stable_sort(matches.begin(), matches.end(), [](const Match& a, const Match& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.cluster->label < b.cluster->label;
    });
    if (matches.size() > cap) matches.resize(cap);
    return matches;
}

TopicStore TopicStore::from_clusters(std::vector<TopicCluster> clusters, bool merged) {
    TopicStore store;
    store.clusters_ = std::move(clusters);
    store.merged_ = merged;
    store.next_id_ = static_cast<int>(store.clusters_.size());
    return store;
}

}  // namespace anchorkb
