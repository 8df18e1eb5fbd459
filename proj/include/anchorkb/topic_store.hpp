#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "anchorkb/conversation.hpp"
#include "anchorkb/extraction.hpp"

namespace anchorkb {

struct TopicSummary {
    std::string narrative;
    std::vector<std::string> key_facts;
    std::vector<std::string> participants;
    std::string temporal_span;
    std::string sentiment = "neutral";
    std::string importance = "medium";
    std::vector<std::string> extra_keywords;
};

struct TopicCluster {
    std::string topic_id;  // "topic-<n>", creation order
    std::string label;
    std::vector<std::string> keywords;             // lowercased, first-seen order
    std::vector<std::int64_t> utterance_seq_ids;   // ascending
    std::optional<TopicSummary> summary;
    int batch_index = 0;  // transient; drives merge precedence
};

using TopicSummarizer =
    std::function<TopicSummary(const TopicCluster&, const std::vector<Utterance>&)>;

class TopicStore {
public:
    static constexpr double kKeywordJaccardThreshold = 0.5;
    static constexpr std::size_t kSharedUtteranceThreshold = 2;

    // Per-batch identification: filters assignments to the batch's own
    // utterances, gives the first listed cluster precedence on double
    // assignments, and sweeps whatever remains unassigned into a synthetic
    // "unassigned" cluster so every batch utterance lands somewhere.
    void identify_batch(const std::vector<ExtractedTopic>& extracted, const Batch& batch,
                        int batch_index);

    // Cross-batch merge to a fixed point (keyword Jaccard >= 0.5 or at least
    // two shared utterances, transitively), then exclusive final assignment:
    // overlap-region duplicates stay with the earliest surviving cluster.
    void merge_batches();
    bool merged() const { return merged_; }

    void summarize_all(const Conversation& conv, const TopicSummarizer& summarizer);

    static TopicSummary template_summary(const TopicCluster& cluster,
                                         const std::vector<Utterance>& members);

    struct Match {
        const TopicCluster* cluster;
        std::size_t score;
    };
    // Token-overlap match over label, keywords and key facts. Ordered by
    // score desc, label asc.
    std::vector<Match> native_match(const std::string& query, std::size_t cap) const;

    const std::vector<TopicCluster>& clusters() const { return clusters_; }

    static TopicStore from_clusters(std::vector<TopicCluster> clusters, bool merged);

private:
    std::vector<TopicCluster> clusters_;  // creation order
    int next_id_ = 0;
    bool merged_ = false;
};

}  // namespace anchorkb
