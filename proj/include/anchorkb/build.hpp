#pragma once

#include <string_view>

#include "anchorkb/kb.hpp"
#include "anchorkb/provider.hpp"

namespace anchorkb {

// How extraction calls are issued. Sequential and parallel produce identical
// knowledge bases from identical inputs; triple changes the prompt contract
// (one combined call per batch) and therefore the recorded fixtures.
enum class BuildMode { sequential, parallel, triple };

// CLI spellings: "default", "parallel", "triple". The manifest stores only
// the extraction contract ("default" or "triple"); parallel execution yields
// a byte-identical artifact and is not recorded.
std::string_view build_mode_name(BuildMode mode);
BuildMode build_mode_from_name(std::string_view name);

// Full build pipeline for one conversation: cut batches, extract anchors
// through the provider, merge topic batches, cross-link events into entity
// timelines, consolidate and summarize. The returned base is consolidated
// and ready for save_kb.
AnchorKB build_kb(const Conversation& conv, Provider& provider, const BuildConfig& config,
                  BuildMode mode = BuildMode::sequential);

}  // namespace anchorkb
