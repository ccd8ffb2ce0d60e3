#include "popdiag/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "popdiag/errors.hpp"
#include "popdiag/rng.hpp"

namespace popdiag {

using nlohmann::json;

const std::vector<std::string> kFeatureNames = {
    "n_words",      "n_sentences", "mean_sentence_len", "ttr",         "hapax_ratio",
    "guiraud",      "fp_pron_rate", "hedge_rate",       "emo_pos_rate", "emo_neg_rate"};

std::vector<double> feature_values(const LinguisticFeatures& f) {
  return {static_cast<double>(f.n_words),
          static_cast<double>(f.n_sentences),
          f.mean_sentence_len,
          f.ttr,
          f.hapax_ratio,
          f.guiraud,
          f.fp_pron_rate,
          f.hedge_rate,
          f.emo_pos_rate,
          f.emo_neg_rate};
}

namespace {

bool is_alnum(unsigned char c) { return std::isalnum(c) != 0; }

std::string lowercase(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Counts non-overlapping word-boundary occurrences of a (possibly multi-word)
// phrase in a space-joined token stream.
std::size_t count_phrase(const std::string& haystack, const std::string& phrase) {
  std::size_t count = 0;
  std::size_t pos = 0;
  while ((pos = haystack.find(phrase, pos)) != std::string::npos) {
    const bool start_ok = pos == 0 || haystack[pos - 1] == ' ';
    const std::size_t end = pos + phrase.size();
    const bool end_ok = end == haystack.size() || haystack[end] == ' ';
    if (start_ok && end_ok) {
      ++count;
      pos = end;
    } else {
      ++pos;
    }
  }
  return count;
}

const std::set<std::string> kFirstPersonPronouns = {"i",    "me",   "my",  "mine", "myself",
                                                    "i'm", "i've", "i'd", "i'll"};

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  const std::size_t n = text.size();
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    if (is_alnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (c == '\'' && !cur.empty() && i + 1 < n &&
               is_alnum(static_cast<unsigned char>(text[i + 1]))) {
      cur.push_back('\'');  // internal apostrophe: i'm, don't
    } else if (!cur.empty()) {
      tokens.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(cur);
  return tokens;
}

std::vector<std::string> split_sentences(const std::string& text) {
  std::vector<std::string> sentences;
  std::string cur;
  const std::size_t n = text.size();
  for (std::size_t i = 0; i < n; ++i) {
    const char c = text[i];
    cur.push_back(c);
    if (c == '.' || c == '!' || c == '?') {
      const bool at_end = i + 1 == n;
      const bool before_space =
          !at_end && std::isspace(static_cast<unsigned char>(text[i + 1])) != 0;
      if (at_end || before_space) {
        if (cur.find_first_not_of(" \t\n\r") != std::string::npos) sentences.push_back(cur);
        cur.clear();
      }
    }
  }
  if (cur.find_first_not_of(" \t\n\r") != std::string::npos) sentences.push_back(cur);
  return sentences;
}

TextLexicons default_text_lexicons() {
  TextLexicons lex;
  lex.hedges = {"maybe",    "perhaps", "i think",  "sort of",  "kind of",  "i guess", "possibly",
                "probably", "somewhat", "i suppose", "a bit",   "in a way", "arguably",
                "it seems"};
  lex.emo_pos = {"happy",   "love",    "grateful", "joy",      "excited", "proud",
                 "hopeful", "cheerful", "delighted", "content", "warm",    "kind",
                 "thankful", "passionate", "enthusiastic", "optimistic", "peaceful", "blessed"};
  lex.emo_neg = {"sad",     "angry",  "struggle", "fear",    "worried", "anxious",
                 "lonely",  "hurt",   "tired",     "afraid",  "upset",   "frustrated",
                 "grief",   "pain",   "stress",    "bitter",  "regret",  "loss"};
  return lex;
}

TextLexicons load_text_lexicons(const std::string& hedges_path,
                                const std::string& emotions_path) {
  TextLexicons lex;
  std::ifstream hin(hedges_path);
  if (!hin) throw DataError("cannot open file: " + hedges_path);
  json hj = json::parse(hin, nullptr, true, true);
  for (const auto& h : hj.at("hedges")) lex.hedges.push_back(lowercase(h.get<std::string>()));
  std::ifstream ein(emotions_path);
  if (!ein) throw DataError("cannot open file: " + emotions_path);
  json ej = json::parse(ein, nullptr, true, true);
  for (const auto& w : ej.at("positive")) lex.emo_pos.push_back(lowercase(w.get<std::string>()));
  for (const auto& w : ej.at("negative")) lex.emo_neg.push_back(lowercase(w.get<std::string>()));
  if (lex.hedges.empty() || lex.emo_pos.empty() || lex.emo_neg.empty())
    throw DataError("text lexicons must be non-empty");
  return lex;
}

LinguisticFeatures extract_features(const std::string& raw, const TextLexicons& lex) {
  std::string text = raw;
  if (text.size() > 5000) text.resize(5000);
  const auto tokens = tokenize(text);
  if (tokens.empty()) throw DataError("extract_features: no tokens after tokenization");
  const auto sentences = split_sentences(text);

  LinguisticFeatures f;
  f.n_words = tokens.size();
  f.n_sentences = std::max<std::size_t>(1, sentences.size());
  f.mean_sentence_len = static_cast<double>(f.n_words) / static_cast<double>(f.n_sentences);

  std::map<std::string, std::size_t> counts;
  for (const auto& t : tokens) counts[t] += 1;
  const double n_tokens = static_cast<double>(tokens.size());
  const double vocab = static_cast<double>(counts.size());
  std::size_t hapax = 0;
  for (const auto& [_, c] : counts)
    if (c == 1) ++hapax;
  f.ttr = vocab / n_tokens;
  f.hapax_ratio = static_cast<double>(hapax) / vocab;
  f.guiraud = vocab / std::sqrt(n_tokens);

  std::size_t fp = 0;
  for (const auto& t : tokens)
    if (kFirstPersonPronouns.count(t)) ++fp;
  f.fp_pron_rate = static_cast<double>(fp) / n_tokens;

  std::string joined;
  for (const auto& t : tokens) {
    if (!joined.empty()) joined += ' ';
    joined += t;
  }
  std::size_t hedges = 0;
  for (const auto& phrase : lex.hedges) hedges += count_phrase(joined, phrase);
  f.hedge_rate = static_cast<double>(hedges) / static_cast<double>(f.n_sentences);

  std::set<std::string> pos(lex.emo_pos.begin(), lex.emo_pos.end());
  std::set<std::string> neg(lex.emo_neg.begin(), lex.emo_neg.end());
  std::size_t pos_hits = 0;
  std::size_t neg_hits = 0;
  for (const auto& t : tokens) {
    if (pos.count(t)) ++pos_hits;
    if (neg.count(t)) ++neg_hits;
  }
  f.emo_pos_rate = static_cast<double>(pos_hits) / n_tokens;
  f.emo_neg_rate = static_cast<double>(neg_hits) / n_tokens;
  return f;
}

namespace {

bool keyword_matches(const std::string& padded_lower_text, const Keyword& kw) {
  if (kw.trailing_space) return padded_lower_text.find(kw.text + ' ') != std::string::npos;
  return padded_lower_text.find(kw.text) != std::string::npos;
}

}  // namespace

MentionResult detect_mentions(const std::string& text, const PersonaProfile& assigned,
                              const KeywordLexicon& lexicon) {
  // Trailing pad lets space-guarded keywords match at end of text.
  const std::string lower = lowercase(text) + ' ';
  MentionResult result;
  for (const auto& [dim, values] : lexicon.dimensions) {
    const std::string* assigned_value = assigned.find_attribute(dim);
    if (assigned_value == nullptr) continue;
    MentionFlags flags;
    const std::vector<Keyword>* assigned_keywords = nullptr;
    for (const auto& [value, keywords] : values) {
      if (value == *assigned_value) assigned_keywords = &keywords;
      for (const auto& kw : keywords) {
        if (keyword_matches(lower, kw)) {
          flags.any_mention = true;
          break;
        }
      }
    }
    if (assigned_keywords == nullptr) {
      flags.skipped = true;
    } else {
      for (const auto& kw : *assigned_keywords) {
        if (keyword_matches(lower, kw)) {
          flags.correct_mention = true;
          break;
        }
      }
    }
    check_internal(!flags.correct_mention || flags.any_mention,
                   "detect_mentions: correct implies any violated");
    result.per_dimension[dim] = flags;
  }
  return result;
}

MentionRates mention_rates(const TextCorpus& corpus, const std::vector<PersonaProfile>& profiles,
                           const KeywordLexicon& lexicon) {
  std::map<std::string, const PersonaProfile*> by_id;
  for (const auto& p : profiles) by_id[p.persona_id] = &p;

  std::map<std::string, std::size_t> correct_counts;
  std::map<std::string, std::size_t> any_counts;
  std::map<std::string, std::size_t> totals;
  std::size_t used = 0;
  for (const auto& entry : corpus.entries) {
    if (!entry.valid) continue;
    auto it = by_id.find(entry.persona_id);
    if (it == by_id.end())
      throw DataError("text entry references unknown persona '" + entry.persona_id + "'");
    ++used;
    const auto result = detect_mentions(entry.raw_text, *it->second, lexicon);
    for (const auto& [dim, flags] : result.per_dimension) {
      if (flags.skipped) continue;
      totals[dim] += 1;
      if (flags.correct_mention) correct_counts[dim] += 1;
      if (flags.any_mention) any_counts[dim] += 1;
    }
  }
  if (used == 0) throw DataError("mention_rates: no valid text entries");

  MentionRates rates;
  rates.texts_used = used;
  double sum = 0.0;
  std::size_t dims = 0;
  for (const auto& [dim, total] : totals) {
    if (total == 0) continue;
    rates.correct[dim] = static_cast<double>(correct_counts[dim]) / static_cast<double>(total);
    rates.any[dim] = static_cast<double>(any_counts[dim]) / static_cast<double>(total);
    sum += rates.correct[dim];
    ++dims;
  }
  rates.mean_correct = dims > 0 ? sum / static_cast<double>(dims) : 0.0;
  return rates;
}

namespace {

const std::set<std::string> kSkeletonStopWords = {
    "i",  "i'm", "i've", "i'd", "i'll", "hi",  "hello", "hey", "my",  "the", "a",
    "an", "as",  "im",   "we",  "it",   "so",  "well",  "oh",  "you", "but", "and"};

bool starts_uppercase(const std::string& token) {
  return !token.empty() && std::isupper(static_cast<unsigned char>(token[0])) != 0;
}

bool all_digits(const std::string& token) {
  if (token.empty()) return false;
  for (char c : token)
    if (std::isdigit(static_cast<unsigned char>(c)) == 0) return false;
  return true;
}

}  // namespace

std::string opening_skeleton(const std::string& text) {
  const auto sentences = split_sentences(text);
  if (sentences.empty()) return std::string();
  const std::string& first = sentences.front();

  // Split into word and separator spans, preserving separators.
  struct Span {
    std::string text;
    bool is_word;
  };
  std::vector<Span> spans;
  std::string cur;
  bool cur_word = false;
  auto flush = [&]() {
    if (!cur.empty()) spans.push_back({cur, cur_word});
    cur.clear();
  };
  for (std::size_t i = 0; i < first.size(); ++i) {
    const unsigned char c = static_cast<unsigned char>(first[i]);
    const bool word_char =
        is_alnum(c) || (c == '\'' && !cur.empty() && cur_word && i + 1 < first.size() &&
                        is_alnum(static_cast<unsigned char>(first[i + 1])));
    if (word_char != cur_word) {
      flush();
      cur_word = word_char;
    }
    cur.push_back(first[i]);
  }
  flush();

  enum class Mask { None, Name, Num };
  std::vector<Mask> masks(spans.size(), Mask::None);
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (!spans[i].is_word) continue;
    if (all_digits(spans[i].text)) {
      masks[i] = Mask::Num;
    } else if (starts_uppercase(spans[i].text) &&
               !kSkeletonStopWords.count(lowercase(spans[i].text))) {
      masks[i] = Mask::Name;
    }
  }

  std::string out;
  std::size_t i = 0;
  while (i < spans.size()) {
    if (spans[i].is_word && masks[i] == Mask::Name) {
      out += "[NAME]";
      // Collapse a run of name words separated by single spaces.
      std::size_t j = i;
      while (j + 2 < spans.size() && !spans[j + 1].is_word && spans[j + 1].text == " " &&
             spans[j + 2].is_word && masks[j + 2] == Mask::Name) {
        j += 2;
      }
      i = j + 1;
    } else if (spans[i].is_word && masks[i] == Mask::Num) {
      out += "[NUM]";
      ++i;
    } else {
      out += lowercase(spans[i].text);
      ++i;
    }
  }
  // Leading whitespace from the original text is not part of the skeleton.
  const std::size_t start = out.find_first_not_of(" \t\n\r");
  return start == std::string::npos ? std::string() : out.substr(start);
}

TemplateStats template_stats(const TextCorpus& corpus, std::size_t max_texts) {
  std::vector<const TextEntry*> valid;
  for (const auto& entry : corpus.entries) {
    if (entry.valid) valid.push_back(&entry);
    if (valid.size() == max_texts) break;
  }
  if (valid.empty()) throw DataError("template_stats: no valid texts");

  std::set<std::string> openings;
  std::map<std::string, std::size_t> skeletons;
  std::vector<double> headers;
  std::vector<double> paragraphs;
  for (const auto* entry : valid) {
    const auto sentences = split_sentences(entry->raw_text);
    std::string opening = sentences.empty() ? std::string() : lowercase(sentences.front());
    const std::size_t start = opening.find_first_not_of(" \t\n\r");
    openings.insert(start == std::string::npos ? std::string() : opening.substr(start));
    skeletons[opening_skeleton(entry->raw_text)] += 1;

    // Headers: lines starting with '#'. Paragraphs: non-blank runs separated
    // by at least one blank line.
    std::size_t header_count = 0;
    std::size_t paragraph_count = 0;
    std::istringstream lines(entry->raw_text);
    std::string line;
    bool open_paragraph = false;
    while (std::getline(lines, line)) {
      if (!line.empty() && line[0] == '#') ++header_count;
      const bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
      if (blank) {
        open_paragraph = false;
      } else if (!open_paragraph) {
        ++paragraph_count;
        open_paragraph = true;
      }
    }
    headers.push_back(static_cast<double>(header_count));
    paragraphs.push_back(static_cast<double>(paragraph_count));
  }

  TemplateStats stats;
  stats.texts_used = valid.size();
  stats.opening_diversity =
      static_cast<double>(openings.size()) / static_cast<double>(valid.size());
  std::size_t top = 0;
  for (const auto& [skeleton, count] : skeletons) {
    if (count > top) {
      top = count;
      stats.top_skeleton = skeleton;
    }
  }
  stats.top_skeleton_share = static_cast<double>(top) / static_cast<double>(valid.size());

  auto mean_sd = [](const std::vector<double>& v, double& mean, double& sd) {
    mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
  };
  mean_sd(headers, stats.mean_headers, stats.sd_headers);
  mean_sd(paragraphs, stats.mean_paragraphs, stats.sd_paragraphs);
  return stats;
}

std::vector<SampleEmbedding> load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::vector<SampleEmbedding> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    SampleEmbedding emb;
    emb.persona_id = rec.at("persona_id").get<std::string>();
    emb.sample_index = rec.value("sample", 0);
    const auto& vec = rec.at("vector");
    emb.vector.resize(static_cast<Eigen::Index>(vec.size()));
    for (std::size_t i = 0; i < vec.size(); ++i)
      emb.vector(static_cast<Eigen::Index>(i)) = vec[i].get<double>();
    if (out.size() > 0 && emb.vector.size() != out.front().vector.size())
      throw DataError(path + ":" + std::to_string(line_no) + ": inconsistent vector length");
    out.push_back(std::move(emb));
  }
  return out;
}

namespace {

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw DataError("persona_signal: zero-norm vector");
  return a.dot(b) / (na * nb);
}

}  // namespace

PersonaSignalResult persona_signal(const std::vector<SampleEmbedding>& embeddings,
                                   std::size_t pairs, std::uint64_t seed) {
  std::map<std::string, std::vector<const SampleEmbedding*>> by_persona;
  std::vector<std::string> persona_order;
  for (const auto& emb : embeddings) {
    if (!by_persona.count(emb.persona_id)) persona_order.push_back(emb.persona_id);
    by_persona[emb.persona_id].push_back(&emb);
  }
  if (persona_order.size() < 2) throw DataError("persona_signal: need at least 2 personas");

  double intra_sum = 0.0;
  std::size_t intra_pairs = 0;
  for (const auto& id : persona_order) {
    const auto& samples = by_persona[id];
    for (std::size_t i = 0; i < samples.size(); ++i) {
      for (std::size_t j = i + 1; j < samples.size(); ++j) {
        intra_sum += cosine(samples[i]->vector, samples[j]->vector);
        ++intra_pairs;
      }
    }
  }
  if (intra_pairs == 0)
    throw DataError("persona_signal: no persona has >= 2 samples for the intra term");

  Rng rng(seed, 0x7369676EULL);
  double inter_sum = 0.0;
  for (std::size_t p = 0; p < pairs; ++p) {
    const std::size_t a = static_cast<std::size_t>(rng.next_below(persona_order.size()));
    std::size_t b = static_cast<std::size_t>(rng.next_below(persona_order.size() - 1));
    if (b >= a) ++b;
    const auto& sa = by_persona[persona_order[a]];
    const auto& sb = by_persona[persona_order[b]];
    const auto* va = sa[rng.next_below(sa.size())];
    const auto* vb = sb[rng.next_below(sb.size())];
    inter_sum += cosine(va->vector, vb->vector);
  }

  PersonaSignalResult result;
  result.intra = intra_sum / static_cast<double>(intra_pairs);
  result.inter = inter_sum / static_cast<double>(pairs);
  if (std::abs(result.inter) < 1e-6) {
    result.ratio_flagged = true;
    result.ratio = 0.0;
  } else {
    result.ratio = result.intra / result.inter;
  }

  result.persona_ids = persona_order;
  const Eigen::Index dim = embeddings.front().vector.size();
  result.persona_means.resize(static_cast<Eigen::Index>(persona_order.size()), dim);
  for (std::size_t i = 0; i < persona_order.size(); ++i) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
    const auto& samples = by_persona[persona_order[i]];
    for (const auto* s : samples) mean += s->vector;
    result.persona_means.row(static_cast<Eigen::Index>(i)) =
        (mean / static_cast<double>(samples.size())).transpose();
  }
  return result;
}

}  // namespace popdiag
