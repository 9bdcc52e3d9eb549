#include "ragcap/prompt.hpp"

namespace ragcap {

std::string render_prompt(const PromptPayload& payload) {
  std::string out;
  if (!payload.similar_captions.empty()) {
    out += "Similar captions:\n";
    for (std::size_t i = 0; i < payload.similar_captions.size(); ++i) {
      out += std::to_string(i + 1);
      out += ". ";
      out += payload.similar_captions[i];
      out += '\n';
    }
  }
  out += payload.fixed_prompt;
  return out;
}

}  // namespace ragcap
