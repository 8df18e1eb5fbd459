#include "anchorkb/build.hpp"

#include <cstdio>
#include <ctime>
#include <exception>
#include <stdexcept>
#include <thread>

#include "anchorkb/extraction.hpp"
#include "anchorkb/prompts.hpp"

namespace anchorkb {

std::string_view build_mode_name(BuildMode mode) {
    switch (mode) {
        case BuildMode::sequential: return "default";
        case BuildMode::parallel: return "parallel";
        case BuildMode::triple: return "triple";
    }
    return "default";
}

BuildMode build_mode_from_name(std::string_view name) {
    if (name == "default") return BuildMode::sequential;
    if (name == "parallel") return BuildMode::parallel;
    if (name == "triple") return BuildMode::triple;
    throw std::invalid_argument("unknown build mode: " + std::string(name));
}

namespace {

CompletionRequest request_for(const Batch& batch) {
    CompletionRequest request;
    request.mode = mode_for_batch(batch.kind);
    request.prompt = render_prompt(batch);
    request.seq_start = batch.start_seq;
    request.seq_end = batch.end_seq;
    return request;
}

UsageRecord run_entity_pipeline(const std::vector<Batch>& batches, Provider& provider,
                                const SeqIndex& index, EntityStore& store) {
    UsageRecord usage;
    for (const auto& batch : batches) {
        CompletionResult result = provider.complete(request_for(batch));
        usage += result.usage;
        store.merge_extraction(parse_entities(result.text), index);
    }
    return usage;
}

UsageRecord run_event_pipeline(const std::vector<Batch>& batches, Provider& provider,
                               const SeqIndex& index, EventStore& store, double tau) {
    UsageRecord usage;
    for (const auto& batch : batches) {
        CompletionResult result = provider.complete(request_for(batch));
        usage += result.usage;
        for (const auto& extracted : parse_events(result.text)) {
            store.add_event(EventStore::from_extraction(extracted, index), tau);
        }
    }
    return usage;
}

UsageRecord run_topic_pipeline(const std::vector<Batch>& batches, Provider& provider,
                               TopicStore& store) {
    UsageRecord usage;
    int batch_index = 0;
    for (const auto& batch : batches) {
        CompletionResult result = provider.complete(request_for(batch));
        usage += result.usage;
        store.identify_batch(parse_topics(result.text), batch, batch_index);
        ++batch_index;
    }
    return usage;
}

std::string utc_now_iso() {
    std::time_t now = std::time(nullptr);
    std::tm parts{};
    gmtime_r(&now, &parts);
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%04d-%02d-%02dT%02d:%02d:%02dZ",
                  parts.tm_year + 1900, parts.tm_mon + 1, parts.tm_mday, parts.tm_hour,
                  parts.tm_min, parts.tm_sec);
    return buffer;
}

}  // namespace

AnchorKB build_kb(const Conversation& conv, Provider& provider, const BuildConfig& config,
                  BuildMode mode) {
    SeqIndex index(conv);
    AnchorKB kb;

    if (mode == BuildMode::triple) {
        auto batches = make_batches(conv, BatchKind::triple, config.batch_entity, 0.0);
        int batch_index = 0;
        for (const auto& batch : batches) {
            CompletionResult result = provider.complete(request_for(batch));
            kb.usage += result.usage;
            TripleExtraction triple = parse_triple(result.text);
            kb.entities.merge_extraction(triple.entities, index);
            for (const auto& extracted : triple.events) {
                kb.events.add_event(EventStore::from_extraction(extracted, index),
                                    config.dedup_tau);
            }
            kb.topics.identify_batch(triple.topics, batch, batch_index);
            ++batch_index;
        }
    } else {
        auto entity_batches = make_batches(conv, BatchKind::entity, config.batch_entity, 0.0);
        auto event_batches = make_batches(conv, BatchKind::event, config.batch_event, 0.0);
        auto topic_batches =
            make_batches(conv, BatchKind::topic, config.batch_topic, config.topic_overlap);

        if (mode == BuildMode::parallel) {
            UsageRecord entity_usage;
            UsageRecord event_usage;
            UsageRecord topic_usage;
            std::exception_ptr failures[3] = {};
            std::thread entity_thread([&] {
                try {
                    entity_usage =
                        run_entity_pipeline(entity_batches, provider, index, kb.entities);
                } catch (...) {
                    failures[0] = std::current_exception();
                }
            });
            std::thread event_thread([&] {
                try {
                    event_usage = run_event_pipeline(event_batches, provider, index, kb.events,
                                                     config.dedup_tau);
                } catch (...) {
                    failures[1] = std::current_exception();
                }
            });
            std::thread topic_thread([&] {
                try {
                    topic_usage = run_topic_pipeline(topic_batches, provider, kb.topics);
                } catch (...) {
                    failures[2] = std::current_exception();
                }
            });
            entity_thread.join();
            event_thread.join();
            topic_thread.join();
            for (auto& failure : failures) {
                if (failure) std::rethrow_exception(failure);
            }
            kb.usage += entity_usage;
            kb.usage += event_usage;
            kb.usage += topic_usage;
        } else {
            kb.usage += run_entity_pipeline(entity_batches, provider, index, kb.entities);
            kb.usage +=
                run_event_pipeline(event_batches, provider, index, kb.events, config.dedup_tau);
            kb.usage += run_topic_pipeline(topic_batches, provider, kb.topics);
        }
    }

    kb.topics.merge_batches();

    // Every extracted event also lands on the timeline of each participant
    // that has a profile.
    for (const auto& event : kb.events.events()) {
        for (const auto& name : event.who) {
            kb.entities.add_event_mention(name, event.what, event.recorded_at,
                                          event.source_seq_id);
        }
    }

    kb.entities.consolidate(config.cooccurrence_threshold, EntityStore::template_summary);
    kb.topics.summarize_all(conv, TopicStore::template_summary);

    kb.manifest.conversation_id = conv.conversation_id;
    // Parallel execution changes nothing about the artifact, so the manifest
    // records the extraction contract, not the scheduling strategy.
    kb.manifest.build_mode = mode == BuildMode::triple ? "triple" : "default";
    kb.manifest.created_at = provider.deterministic() ? "1970-01-01T00:00:00Z" : utc_now_iso();
    kb.manifest.utterance_count = conv.utterances.size();
    kb.manifest.min_seq = index.min_seq();
    kb.manifest.max_seq = index.max_seq();
    kb.manifest.config = config;
    return kb;
}

}  // namespace anchorkb
