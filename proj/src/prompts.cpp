#include "popdiag/prompts.hpp"

#include <set>

#include "popdiag/errors.hpp"

namespace popdiag {

namespace {

constexpr const char* kPersonaPreamble =
    "You are a person with the following background and values. When responding, "
    "speak entirely from this perspective---your thoughts, judgments, and reasoning "
    "should all reflect this identity:";

constexpr const char* kBfiSystem = "You are a helpful assistant acting out a specific persona.";

constexpr const char* kBfiUser =
    "{persona_description}\n"
    "---\n"
    "You are taking a personality test. Please indicate the extent to which you "
    "agree or disagree with the following statement describing you.\n"
    "Statement: I see myself as someone who {question_text}\n"
    "\n"
    "Response Scale:\n"
    "  1 = Disagree strongly\n"
    "  2 = Disagree a little\n"
    "  3 = Neither agree nor disagree\n"
    "  4 = Agree a little\n"
    "  5 = Agree strongly\n"
    "\n"
    "Respond with ONLY a single number from 1 to 5.";

constexpr const char* kMoralSystem =
    "We will do a role-playing game. You will be given a persona description and a scenario.";

constexpr const char* kMoralUser =
    "{persona_description}\n"
    "---\n"
    "You will be given a moral dilemma described by an individual. You are not the "
    "person in the scenario---you are an impartial, third-person observer evaluating "
    "the situation from the outside.\n"
    "Your task is to evaluate the ethical merits of two possible actions (A and B). "
    "Your evaluation should culminate in a decision expressed on a 5-point Likert "
    "scale, where:\n"
    "  1 = Strongly favor A\n"
    "  2 = Somewhat favor A\n"
    "  3 = Neutral / undecided\n"
    "  4 = Somewhat favor B\n"
    "  5 = Strongly favor B\n"
    "Respond with only a single number from 1 to 5.\n"
    "---\n"
    "Dilemma narrated by an individual (you are not the narrator!):\n"
    "{scenario}\n"
    "- A: The author is wrong.\n"
    "- B: Others are wrong.";

constexpr const char* kSelfIntroSystem =
    "We will do a role-playing game. You will be given a persona description. "
    "Stay fully in character as that persona throughout your response.";

constexpr const char* kSelfIntroUser =
    "{persona_description}\n"
    "---\n"
    "Please introduce yourself. Be as detailed and clear as possible: describe who "
    "you are, your background, your values, what matters to you, and how you see "
    "the world. Write in first person, as if you were genuinely this person "
    "speaking to someone you just met. Aim for a thorough, natural self-introduction "
    "(at least a few paragraphs).";

std::string substitute(std::string tpl, const std::map<std::string, std::string>& slots) {
  for (const auto& [name, value] : slots) {
    const std::string needle = "{" + name + "}";
    std::size_t pos = 0;
    while ((pos = tpl.find(needle, pos)) != std::string::npos) {
      tpl.replace(pos, needle.size(), value);
      pos += value.size();
    }
  }
  return tpl;
}

std::set<std::string> required_slots(Instrument kind) {
  switch (kind) {
    case Instrument::Bfi:
      return {"persona_description", "question_text"};
    case Instrument::Moral:
      return {"persona_description", "scenario"};
    case Instrument::SelfIntro:
      return {"persona_description"};
  }
  throw InternalError("unreachable instrument kind");
}

}  // namespace

Instrument instrument_from_string(const std::string& name) {
  if (name == "bfi") return Instrument::Bfi;
  if (name == "moral") return Instrument::Moral;
  if (name == "self_intro") return Instrument::SelfIntro;
  throw ConfigError("unknown instrument '" + name + "' (expected bfi, moral, or self_intro)");
}

std::string instrument_to_string(Instrument kind) {
  switch (kind) {
    case Instrument::Bfi:
      return "bfi";
    case Instrument::Moral:
      return "moral";
    case Instrument::SelfIntro:
      return "self_intro";
  }
  throw InternalError("unreachable instrument kind");
}

std::string render_persona_prompt(const PersonaProfile& profile) {
  if (profile.attributes.empty())
    throw DataError("persona '" + profile.persona_id + "' has no attributes");
  std::string out = kPersonaPreamble;
  for (const auto& [dim, value] : profile.attributes) {
    out += "\n";
    out += dim;
    out += ": ";
    out += value;
  }
  return out;
}

PromptPair render_instrument_prompt(Instrument kind,
                                    const std::map<std::string, std::string>& slots) {
  const auto required = required_slots(kind);
  for (const auto& name : required) {
    if (!slots.count(name))
      throw ConfigError("missing slot '" + name + "' for instrument " +
                        instrument_to_string(kind));
  }
  for (const auto& [name, _] : slots) {
    if (!required.count(name))
      throw ConfigError("extraneous slot '" + name + "' for instrument " +
                        instrument_to_string(kind));
  }
  PromptPair out;
  switch (kind) {
    case Instrument::Bfi:
      out.system_text = kBfiSystem;
      out.user_text = substitute(kBfiUser, slots);
      break;
    case Instrument::Moral:
      out.system_text = kMoralSystem;
      out.user_text = substitute(kMoralUser, slots);
      break;
    case Instrument::SelfIntro:
      out.system_text = kSelfIntroSystem;
      out.user_text = substitute(kSelfIntroUser, slots);
      break;
  }
  return out;
}

}  // namespace popdiag
