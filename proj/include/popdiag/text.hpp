#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "popdiag/data.hpp"
#include "popdiag/geometry.hpp"

namespace popdiag {

struct LinguisticFeatures {
  std::size_t n_words = 0;
  std::size_t n_sentences = 0;
  double mean_sentence_len = 0.0;
  double ttr = 0.0;
  double hapax_ratio = 0.0;
  double guiraud = 0.0;
  double fp_pron_rate = 0.0;
  double hedge_rate = 0.0;  // per sentence
  double emo_pos_rate = 0.0;
  double emo_neg_rate = 0.0;
};

// Names of the scalar features in report order.
extern const std::vector<std::string> kFeatureNames;
std::vector<double> feature_values(const LinguisticFeatures& f);

struct TextLexicons {
  std::vector<std::string> hedges;     // may be multi-word phrases
  std::vector<std::string> emo_pos;    // single tokens
  std::vector<std::string> emo_neg;
};

TextLexicons default_text_lexicons();
TextLexicons load_text_lexicons(const std::string& hedges_path,
                                const std::string& emotions_path);

struct MentionFlags {
  bool correct_mention = false;
  bool any_mention = false;
  bool skipped = false;  // assigned value absent from lexicon
};

struct MentionResult {
  std::map<std::string, MentionFlags> per_dimension;
};

struct MentionRates {
  std::map<std::string, double> correct;
  std::map<std::string, double> any;
  double mean_correct = 0.0;
  std::size_t texts_used = 0;
};

struct TemplateStats {
  double opening_diversity = 0.0;
  double top_skeleton_share = 0.0;
  std::string top_skeleton;
  double mean_headers = 0.0;
  double sd_headers = 0.0;
  double mean_paragraphs = 0.0;
  double sd_paragraphs = 0.0;
  std::size_t texts_used = 0;
};

struct PersonaSignalResult {
  double intra = 0.0;
  double inter = 0.0;
  double ratio = 0.0;
  bool ratio_flagged = false;  // |inter| below 1e-6
  Eigen::MatrixXd persona_means;
  std::vector<std::string> persona_ids;
};

// Lowercase tokenization splitting on non-alphanumeric characters except
// internal apostrophes.
std::vector<std::string> tokenize(const std::string& text);
std::vector<std::string> split_sentences(const std::string& text);

LinguisticFeatures extract_features(const std::string& text, const TextLexicons& lex);

MentionResult detect_mentions(const std::string& text, const PersonaProfile& assigned,
                              const KeywordLexicon& lexicon);

MentionRates mention_rates(const TextCorpus& corpus,
                           const std::vector<PersonaProfile>& profiles,
                           const KeywordLexicon& lexicon);

// First sentence lowercased, with capitalized-word runs masked to [NAME] and
// digit runs to [NUM].
std::string opening_skeleton(const std::string& text);

TemplateStats template_stats(const TextCorpus& corpus, std::size_t max_texts = 500);

struct SampleEmbedding {
  std::string persona_id;
  int sample_index = 0;
  Eigen::VectorXd vector;
};

std::vector<SampleEmbedding> load_embeddings(const std::string& path);

PersonaSignalResult persona_signal(const std::vector<SampleEmbedding>& embeddings,
                                   std::size_t pairs, std::uint64_t seed);

}  // namespace popdiag
