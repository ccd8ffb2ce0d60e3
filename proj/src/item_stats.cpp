#include "popdiag/item_stats.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "popdiag/errors.hpp"

namespace popdiag {

namespace {

double population_variance(const Eigen::VectorXd& v) {
  const double mean = v.mean();
  return (v.array() - mean).square().sum() / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v) {
  check_internal(v.size() >= 2, "sample_variance: need >= 2 samples");
  double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

}  // namespace

double effective_likert(const ItemDistribution& dist) {
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double p : dist.level_probabilities) {
    if (p < 0.0) throw DataError("effective_likert: negative probability");
    sum += p;
    sum_sq += p * p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw DataError("effective_likert: probabilities sum to " + format_double(sum));
  return 1.0 / sum_sq;
}

ItemDistribution item_distribution(const TraitMatrix& matrix, std::size_t column) {
  if (!matrix.scale) throw DataError("item_distribution requires a Likert scale");
  const LikertScale& scale = *matrix.scale;
  if (scale.levels < 2) throw DataError("item_distribution: need at least 2 levels");
  ItemDistribution dist;
  dist.item_id = matrix.item_ids.at(column);
  dist.n = matrix.n();
  std::vector<std::size_t> counts(static_cast<std::size_t>(scale.levels), 0);
  const double step = scale.step();
  for (std::size_t r = 0; r < matrix.n(); ++r) {
    const double v =
        matrix.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(column));
    const double level_real = (v - scale.min) / step;
    const long level = std::lround(level_real);
    if (std::abs(level_real - static_cast<double>(level)) > 1e-9)
      throw DataError("item '" + dist.item_id + "': response " + format_double(v) +
                      " is not on a scale level");
    counts[static_cast<std::size_t>(level)] += 1;
  }
  dist.level_probabilities.resize(counts.size());
  for (std::size_t l = 0; l < counts.size(); ++l)
    dist.level_probabilities[l] = static_cast<double>(counts[l]) / static_cast<double>(dist.n);
  return dist;
}

EffectiveLikertResult effective_likert_matrix(const TraitMatrix& matrix) {
  EffectiveLikertResult result;
  for (std::size_t c = 0; c < matrix.d(); ++c)
    result.per_item.push_back(effective_likert(item_distribution(matrix, c)));
  result.mean = std::accumulate(result.per_item.begin(), result.per_item.end(), 0.0) /
                static_cast<double>(result.per_item.size());
  return result;
}

VarianceRatioResult variance_ratio(const TraitMatrix& model, const TraitMatrix& reference,
                                   VarianceLevel level, const FactorKey* key) {
  TraitMatrix m = model;
  TraitMatrix r = reference;
  if (level == VarianceLevel::Factor) {
    if (key == nullptr) throw DataError("variance_ratio: factor level requires a factor key");
    m = score_factors(model, *key);
    r = score_factors(reference, *key);
  }
  if (m.item_ids != r.item_ids)
    throw DataError("variance_ratio: model and reference column sets differ");
  VarianceRatioResult result;
  double model_total = 0.0;
  double ref_total = 0.0;
  for (std::size_t c = 0; c < m.d(); ++c) {
    const double vm = population_variance(m.values.col(static_cast<Eigen::Index>(c)));
    const double vr = population_variance(r.values.col(static_cast<Eigen::Index>(c)));
    model_total += vm;
    ref_total += vr;
    if (vr == 0.0) {
      result.per_column.push_back(std::nullopt);
      ++result.undefined_columns;
    } else {
      result.per_column.push_back(vm / vr);
    }
  }
  if (ref_total == 0.0) throw DataError("variance_ratio: reference has zero total variance");
  result.total_ratio = model_total / ref_total;
  return result;
}

CohensDResult cohens_d(const std::vector<double>& high, const std::vector<double>& low) {
  if (high.size() < 2 || low.size() < 2)
    throw DataError("cohens_d: both groups need at least 2 samples");
  const double nh = static_cast<double>(high.size());
  const double nl = static_cast<double>(low.size());
  const double mean_h = std::accumulate(high.begin(), high.end(), 0.0) / nh;
  const double mean_l = std::accumulate(low.begin(), low.end(), 0.0) / nl;
  const double pooled =
      std::sqrt(((nh - 1.0) * sample_variance(high) + (nl - 1.0) * sample_variance(low)) /
                (nh + nl - 2.0));
  CohensDResult result;
  if (pooled == 0.0) {
    if (mean_h == mean_l) {
      result.value = 0.0;
    } else {
      result.value = mean_h > mean_l ? std::numeric_limits<double>::infinity()
                                     : -std::numeric_limits<double>::infinity();
      result.infinite = true;
    }
    return result;
  }
  result.value = (mean_h - mean_l) / pooled;
  return result;
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> spearman(const std::vector<double>& a, const std::vector<double>& b) {
  check_internal(a.size() == b.size(), "spearman: length mismatch");
  if (a.size() < 2) return std::nullopt;
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  double mean_a = 0.0;
  double mean_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    mean_a += ra[i];
    mean_b += rb[i];
  }
  mean_a /= n;
  mean_b /= n;
  double cov = 0.0;
  double var_a = 0.0;
  double var_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (ra[i] - mean_a) * (rb[i] - mean_b);
    var_a += (ra[i] - mean_a) * (ra[i] - mean_a);
    var_b += (rb[i] - mean_b) * (rb[i] - mean_b);
  }
  if (var_a == 0.0 || var_b == 0.0) return std::nullopt;
  return cov / std::sqrt(var_a * var_b);
}

SpearmanFidelityResult fidelity_spearman(
    const TraitMatrix& scores,
    const std::vector<std::map<std::string, std::string>>& assigned_traits) {
  if (assigned_traits.size() != scores.n())
    throw DataError("fidelity_spearman: assigned traits not aligned with score rows");
  auto level_value = [](const std::string& level) -> double {
    if (level == "Low") return 0.0;
    if (level == "Medium") return 1.0;
    if (level == "High") return 2.0;
    throw DataError("fidelity_spearman: unknown level '" + level + "'");
  };
  SpearmanFidelityResult result;
  std::vector<double> pooled_assigned;
  std::vector<double> pooled_scores;
  double sum = 0.0;
  std::size_t defined = 0;
  for (std::size_t f = 0; f < scores.d(); ++f) {
    const std::string& factor = scores.item_ids[f];
    std::vector<double> assigned;
    std::vector<double> observed;
    for (std::size_t r = 0; r < scores.n(); ++r) {
      auto it = assigned_traits[r].find(factor);
      if (it == assigned_traits[r].end()) continue;
      assigned.push_back(level_value(it->second));
      observed.push_back(
          scores.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f)));
    }
    std::set<double> levels(assigned.begin(), assigned.end());
    if (levels.size() < 2) {
      result.per_factor.push_back(std::nullopt);
      ++result.excluded_factors;
      continue;
    }
    const auto rho = spearman(assigned, observed);
    result.per_factor.push_back(rho);
    if (rho) {
      sum += *rho;
      ++defined;
      pooled_assigned.insert(pooled_assigned.end(), assigned.begin(), assigned.end());
      pooled_scores.insert(pooled_scores.end(), observed.begin(), observed.end());
    } else {
      ++result.excluded_factors;
    }
  }
  result.mean = defined > 0 ? sum / static_cast<double>(defined) : 0.0;
  result.pooled = spearman(pooled_assigned, pooled_scores).value_or(0.0);
  return result;
}

EtaSquaredResult eta_squared(const GroupedSamples& samples) {
  std::size_t total_n = 0;
  std::size_t groups = 0;
  double grand_sum = 0.0;
  for (const auto& [_, values] : samples.groups) {
    if (values.empty()) continue;
    ++groups;
    total_n += values.size();
    for (double v : values) grand_sum += v;
  }
  if (groups < 2) throw DataError("eta_squared: need at least 2 non-empty groups");
  if (total_n < 3) throw DataError("eta_squared: need at least 3 samples");
  const double grand_mean = grand_sum / static_cast<double>(total_n);
  double ss_between = 0.0;
  double ss_total = 0.0;
  for (const auto& [_, values] : samples.groups) {
    if (values.empty()) continue;
    double group_sum = 0.0;
    for (double v : values) {
      group_sum += v;
      ss_total += (v - grand_mean) * (v - grand_mean);
    }
    const double group_mean = group_sum / static_cast<double>(values.size());
    ss_between +=
        static_cast<double>(values.size()) * (group_mean - grand_mean) * (group_mean - grand_mean);
  }
  EtaSquaredResult result;
  if (ss_total == 0.0) {
    result.value = 0.0;
    result.degenerate = true;
    return result;
  }
  result.value = ss_between / ss_total;
  return result;
}

IncrementalR2Result incremental_r2(
    const std::vector<double>& outcome,
    const std::map<std::string, std::vector<std::string>>& attributes,
    const std::vector<std::string>& order, double balanced_threshold) {
  const std::size_t n = outcome.size();
  if (n < 2) throw DataError("incremental_r2: need at least 2 observations");
  IncrementalR2Result result;
  result.order = order;

  // One-hot encode each attribute, dropping the lexicographically first level.
  std::vector<std::vector<Eigen::VectorXd>> encoded;
  std::size_t total_cols = 1;  // intercept
  for (const auto& name : order) {
    auto it = attributes.find(name);
    if (it == attributes.end()) throw DataError("incremental_r2: unknown attribute '" + name + "'");
    if (it->second.size() != n)
      throw DataError("incremental_r2: attribute '" + name + "' not aligned with outcome");
    std::set<std::string> levels(it->second.begin(), it->second.end());
    std::vector<Eigen::VectorXd> cols;
    bool first = true;
    for (const auto& level : levels) {
      if (first) {  // reference level
        first = false;
        continue;
      }
      Eigen::VectorXd col = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i)
        if (it->second[i] == level) col(static_cast<Eigen::Index>(i)) = 1.0;
      cols.push_back(std::move(col));
    }
    total_cols += cols.size();
    encoded.push_back(std::move(cols));
  }
  if (n <= total_cols)
    throw DataError("incremental_r2: N must exceed the number of encoded columns");

  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) y(static_cast<Eigen::Index>(i)) = outcome[i];
  const double y_mean = y.mean();
  const double ss_total = (y.array() - y_mean).square().sum();

  // Minimum-norm least squares via complete orthogonal decomposition; handles
  // rank-deficient designs.
  auto r2_for = [&](std::size_t n_attrs) -> double {
    std::size_t cols = 1;
    for (std::size_t a = 0; a < n_attrs; ++a) cols += encoded[a].size();
    Eigen::MatrixXd design(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols));
    design.col(0).setOnes();
    Eigen::Index c = 1;
    for (std::size_t a = 0; a < n_attrs; ++a)
      for (const auto& col : encoded[a]) design.col(c++) = col;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
    if (cod.rank() < design.cols()) result.rank_deficient = true;
    const Eigen::VectorXd fitted = design * cod.solve(y);
    const double ss_resid = (y - fitted).squaredNorm();
    return ss_total > 0.0 ? 1.0 - ss_resid / ss_total : 0.0;
  };

  double prev = 0.0;
  for (std::size_t a = 1; a <= order.size(); ++a) {
    const double cur = r2_for(a);
    result.increments.push_back(cur - prev);
    prev = cur;
  }
  result.total = prev;
  if (result.total > 0.0) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < result.increments.size(); ++i)
      if (result.increments[i] > result.increments[best]) best = i;
    result.dom_pct = result.increments[best] / result.total;
    result.dominant = result.dom_pct <= balanced_threshold ? "Balanced" : order[best];
  } else {
    result.dom_pct = 0.0;
    result.dominant = "Balanced";
  }
  return result;
}

IccResult icc_oneway(const std::map<std::string, std::vector<double>>& samples_per_persona,
                     std::size_t min_personas) {
  std::vector<const std::vector<double>*> retained;
  for (const auto& [_, samples] : samples_per_persona) {
    if (samples.size() >= 2) retained.push_back(&samples);
  }
  if (retained.size() < min_personas)
    throw DataError("icc_oneway: need at least " + std::to_string(min_personas) +
                    " personas with >= 2 samples, have " + std::to_string(retained.size()));

  const std::size_t groups = retained.size();
  std::size_t total_n = 0;
  double grand_sum = 0.0;
  for (const auto* s : retained) {
    total_n += s->size();
    for (double v : *s) grand_sum += v;
  }
  const double grand_mean = grand_sum / static_cast<double>(total_n);
  double ss_between = 0.0;
  double ss_within = 0.0;
  for (const auto* s : retained) {
    double mean = std::accumulate(s->begin(), s->end(), 0.0) / static_cast<double>(s->size());
    ss_between += static_cast<double>(s->size()) * (mean - grand_mean) * (mean - grand_mean);
    for (double v : *s) ss_within += (v - mean) * (v - mean);
  }
  const double ms_between = ss_between / static_cast<double>(groups - 1);
  const double ms_within = ss_within / static_cast<double>(total_n - groups);
  IccResult result;
  result.personas_used = groups;
  result.k_mean = static_cast<double>(total_n) / static_cast<double>(groups);
  const double denom = ms_between + (result.k_mean - 1.0) * ms_within;
  if (denom == 0.0) throw DataError("icc_oneway: zero total variance");
  result.value = (ms_between - ms_within) / denom;
  return result;
}

}  // namespace popdiag
