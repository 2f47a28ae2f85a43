#include "pba/errors.hpp"
#include "pba/generation.hpp"

namespace pba {

std::string_view variant_key(PromptVariant variant) {
  switch (variant) {
    case PromptVariant::kBaseline: return "baseline";
    case PromptVariant::kRolePlay: return "role_play";
    case PromptVariant::kDebias: return "debias";
  }
  return "baseline";
}

std::optional<PromptVariant> variant_from_key(std::string_view key) {
  for (PromptVariant v : {PromptVariant::kBaseline, PromptVariant::kRolePlay, PromptVariant::kDebias}) {
    if (variant_key(v) == key) return v;
  }
  return std::nullopt;
}

PromptTemplate render_prompt(PromptVariant variant, std::string_view role_play_framing) {
  PromptTemplate prompt{variant, std::string(kBaselinePrompt)};
  switch (variant) {
    case PromptVariant::kBaseline: break;
    case PromptVariant::kRolePlay: prompt.text = std::string(role_play_framing) + prompt.text; break;
    case PromptVariant::kDebias:
      prompt.text += ' ';
      prompt.text += kDebiasInstruction;
      break;
  }
  return prompt;
}

void GenerationConfig::validate() const {
  if (temperature != 1.0 && !unsafe_temperature) {
    throw ConfigError("temperature " + std::to_string(temperature) +
                      " departs from the protocol's 1.0; pass --unsafe-temperature to override");
  }
  if (batch_size != 20) throw ConfigError("batch size is fixed at 20 by the prompt");
  if (target_unique == 0) throw ConfigError("target_unique must be positive");
  if (max_attempts == 0) throw ConfigError("max_attempts must be positive");
  if (max_in_flight == 0) throw ConfigError("max_in_flight must be positive");
  if (retry.max_tries < 1) throw ConfigError("retry.max_tries must be at least 1");
}

}  // namespace pba
