#pragma once

#include <map>
#include <string>

#include "popdiag/data.hpp"

namespace popdiag {

enum class Instrument { Bfi, Moral, SelfIntro };

Instrument instrument_from_string(const std::string& name);  // throws ConfigError
std::string instrument_to_string(Instrument kind);

// Fixed preamble plus one "{dimension}: {value}" line per attribute, in
// profile order. Throws DataError on an empty attribute map.
std::string render_persona_prompt(const PersonaProfile& profile);

struct PromptPair {
  std::string system_text;
  std::string user_text;
};

// Slots: persona_description always; question_text for bfi, scenario for
// moral. Missing or extraneous slots are ConfigErrors.
PromptPair render_instrument_prompt(Instrument kind,
                                    const std::map<std::string, std::string>& slots);

}  // namespace popdiag
