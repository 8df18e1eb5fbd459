#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "anchorkb/conversation.hpp"

namespace anchorkb {

struct EntityProfile;
struct TopicCluster;

// Instruction templates, one per extraction mode. The text is fixed;
// changing it invalidates recorded fixture keys and golden outputs.
std::string_view prompt_template(BatchKind kind);
std::string_view topic_summary_template();
std::string_view profile_summary_template();
std::string_view answer_template();

// Renders one utterance in the transcript style the extraction templates
// declare: "[timestamp, weekday] seq.Speaker: message". The weekday is
// derived from the timestamp and omitted when the timestamp has no
// parseable date.
std::string format_transcript_line(const Utterance& u);

// Topic identification uses its own line style:
// "[session_id, timestamp] seq. Speaker: message".
std::string format_topic_line(const Utterance& u);

// Template text followed by the rendered batch transcript. Throws
// std::invalid_argument on an empty batch.
std::string render_prompt(const Batch& batch);

std::string render_topic_summary_prompt(const TopicCluster& cluster,
                                        const std::vector<Utterance>& members);
std::string render_profile_summary_prompt(const EntityProfile& profile);

}  // namespace anchorkb
