#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "popdiag/data.hpp"

namespace popdiag {

struct ItemDistribution {
  std::string item_id;
  std::vector<double> level_probabilities;  // sums to 1
  std::size_t n = 0;
};

struct GroupedSamples {
  std::string grouping_variable;
  std::map<std::string, std::vector<double>> groups;
};

struct IncrementalR2Result {
  std::vector<std::string> order;
  std::vector<double> increments;
  double total = 0.0;
  std::string dominant;  // attribute name or "Balanced"
  double dom_pct = 0.0;
  bool rank_deficient = false;
};

struct EffectiveLikertResult {
  std::vector<double> per_item;
  double mean = 0.0;
};

struct VarianceRatioResult {
  std::vector<std::optional<double>> per_column;  // nullopt: zero reference variance
  double total_ratio = 0.0;
  std::size_t undefined_columns = 0;
};

struct SpearmanFidelityResult {
  std::vector<std::optional<double>> per_factor;  // nullopt: single level or constant
  double mean = 0.0;                              // over defined factors
  double pooled = 0.0;  // single rank correlation over all (persona, factor) pairs
  std::size_t excluded_factors = 0;
};

struct EtaSquaredResult {
  double value = 0.0;
  bool degenerate = false;  // zero total variance
};

struct CohensDResult {
  double value = 0.0;
  bool infinite = false;  // zero pooled sd with unequal means
};

// Inverse Simpson index 1 / sum(p^2); in [1, L].
double effective_likert(const ItemDistribution& dist);

ItemDistribution item_distribution(const TraitMatrix& matrix, std::size_t column);

// Per-item inverse Simpson plus the unweighted mean (the model-level EffL).
EffectiveLikertResult effective_likert_matrix(const TraitMatrix& matrix);

enum class VarianceLevel { Item, Factor };

// Population-variance ratio model/reference per column plus the total ratio.
VarianceRatioResult variance_ratio(const TraitMatrix& model, const TraitMatrix& reference,
                                   VarianceLevel level, const FactorKey* key);

// (mean_high - mean_low) / pooled sample sd.
CohensDResult cohens_d(const std::vector<double>& high, const std::vector<double>& low);

// Spearman rank correlation (average-rank ties) between assigned ordinal trait
// level and scored factor value; per factor and averaged.
SpearmanFidelityResult fidelity_spearman(
    const TraitMatrix& scores,
    const std::vector<std::map<std::string, std::string>>& assigned_traits);

EtaSquaredResult eta_squared(const GroupedSamples& samples);

// Sequential least-squares fits with one-hot encoded attributes (first level
// dropped lexicographically) added in `order`.
IncrementalR2Result incremental_r2(const std::vector<double>& outcome,
                                   const std::map<std::string, std::vector<std::string>>& attributes,
                                   const std::vector<std::string>& order,
                                   double balanced_threshold = 0.45);

struct IccResult {
  double value = 0.0;
  std::size_t personas_used = 0;
  double k_mean = 0.0;
};

// One-way random-effects ICC over repeated samples per persona.
IccResult icc_oneway(const std::map<std::string, std::vector<double>>& samples_per_persona,
                     std::size_t min_personas = 50);

// Spearman correlation with average-rank tie handling, exposed for reuse.
std::optional<double> spearman(const std::vector<double>& a, const std::vector<double>& b);
std::vector<double> average_ranks(const std::vector<double>& v);

}  // namespace popdiag
