#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace popdiag {

struct LikertScale {
  double min = 1.0;
  double max = 5.0;
  int levels = 5;

  double midpoint() const { return 0.5 * (min + max); }
  double step() const { return levels > 1 ? (max - min) / (levels - 1) : 0.0; }
};

// The behavioral trait matrix: one row per persona, one column per item.
struct TraitMatrix {
  std::vector<std::string> persona_ids;
  std::vector<std::string> item_ids;
  Eigen::MatrixXd values;
  std::optional<LikertScale> scale;

  std::size_t n() const { return persona_ids.size(); }
  std::size_t d() const { return item_ids.size(); }
  std::size_t item_index(const std::string& item_id) const;  // throws DataError
};

struct PersonaProfile {
  std::string persona_id;
  // Insertion order matters for prompt rendering.
  std::vector<std::pair<std::string, std::string>> attributes;
  std::map<std::string, std::string> assigned_traits;  // factor -> Low/Medium/High

  const std::string* find_attribute(const std::string& dim) const;
};

struct FactorItem {
  std::string item_id;
  bool reversed = false;
};

struct FactorKey {
  // Ordered: factor order determines score-matrix column order.
  std::vector<std::pair<std::string, std::vector<FactorItem>>> factors;
  double scale_min = 1.0;
  double scale_max = 5.0;

  double reverse(double v) const { return scale_min + scale_max - v; }
};

struct TextEntry {
  std::string persona_id;
  int sample_index = 0;
  std::string raw_text;
  bool valid = false;
};

struct TextCorpus {
  std::vector<TextEntry> entries;
};

struct Keyword {
  std::string text;
  bool trailing_space = false;  // guard against partial-word matches
};

struct KeywordLexicon {
  // dimension -> value -> keywords
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::vector<Keyword>>>>>
      dimensions;

  const std::vector<std::pair<std::string, std::vector<Keyword>>>* find_dimension(
      const std::string& dim) const;
};

struct PopulationBundle {
  TraitMatrix matrix;
  std::vector<PersonaProfile> profiles;
  std::optional<FactorKey> factor_key;
};

enum class MatrixFormat { Csv, Jsonl };

// Loaders. All throw DataError with file/line context on malformed input.
TraitMatrix load_matrix(const std::string& path, MatrixFormat format,
                        std::optional<LikertScale> scale);
void save_matrix_csv(const TraitMatrix& m, const std::string& path);
std::vector<PersonaProfile> load_profiles(const std::string& path);
FactorKey load_factor_key(const std::string& path);
KeywordLexicon load_lexicon(const std::string& path);

// Text corpus loading applies the validity rule: >= 20 characters, >= 5
// whitespace-delimited words, and no configured error-marker prefix. Texts are
// truncated to 5,000 characters.
extern const std::vector<std::string> kDefaultErrorMarkers;
TextCorpus load_text_corpus(const std::string& path,
                            const std::vector<std::string>& error_markers = kDefaultErrorMarkers);

// Per-factor mean scores after reversal; columns follow key order.
TraitMatrix score_factors(const TraitMatrix& matrix, const FactorKey& key);

// Checks profile ids are exactly the matrix ids (set equality).
PopulationBundle make_bundle(TraitMatrix matrix, std::vector<PersonaProfile> profiles,
                             std::optional<FactorKey> key);

// Shortest round-trip decimal formatting used for every file we write.
std::string format_double(double v);

}  // namespace popdiag
