#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ragcap {

inline constexpr std::string_view kDefaultFixedPrompt = "Describe the audio you hear";

/// The conditioning tuple handed to a generator, in the order
/// (embedding, similar captions, fixed prompt).
struct PromptPayload {
  std::vector<float> mapped_embedding;
  std::vector<std::string> similar_captions;
  std::string fixed_prompt{kDefaultFixedPrompt};

  friend bool operator==(const PromptPayload&, const PromptPayload&) = default;
};

/// Text rendering for text-only backends:
///
///   Similar captions:
///   1. <caption>
///   2. <caption>
///   <fixed prompt>
///
/// The "Similar captions:" block is omitted when there are none. The mapped
/// embedding is not part of the text.
std::string render_prompt(const PromptPayload& payload);

}  // namespace ragcap
