#include "popdiag/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "popdiag/errors.hpp"
#include "popdiag/rng.hpp"

namespace popdiag {

namespace {

void require_dims_match(const PointCloud& a, const PointCloud& b) {
  if (a.dim() != b.dim())
    throw DataError("point cloud dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                    std::to_string(b.dim()));
}

// Radius of the closed k-NN ball around each reference point, self excluded.
std::vector<double> knn_radii(const Eigen::MatrixXd& dists, int k) {
  const Eigen::Index n = dists.rows();
  std::vector<double> radii(static_cast<std::size_t>(n));
  std::vector<double> row(static_cast<std::size_t>(n) - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::size_t w = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) row[w++] = dists(i, j);
    }
    std::nth_element(row.begin(), row.begin() + (k - 1), row.end());
    radii[static_cast<std::size_t>(i)] = row[static_cast<std::size_t>(k - 1)];
  }
  return radii;
}

}  // namespace

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  // ||a_i - b_j||^2 = |a_i|^2 + |b_j|^2 - 2 a_i.b_j, clamped against rounding.
  Eigen::VectorXd a2 = a.rowwise().squaredNorm();
  Eigen::VectorXd b2 = b.rowwise().squaredNorm();
  Eigen::MatrixXd sq = (-2.0 * a * b.transpose());
  sq.colwise() += a2;
  sq.rowwise() += b2.transpose();
  return sq.cwiseMax(0.0).cwiseSqrt();
}

double coverage(const PointCloud& generated, const PointCloud& reference, int k) {
  require_dims_match(generated, reference);
  if (k < 1 || static_cast<std::size_t>(k) >= reference.n())
    throw DataError("coverage: k must satisfy 1 <= k < reference N");
  const auto radii = knn_radii(pairwise_distances(reference.points, reference.points), k);
  const Eigen::MatrixXd cross = pairwise_distances(reference.points, generated.points);
  std::size_t covered = 0;
  for (Eigen::Index j = 0; j < cross.rows(); ++j) {
    if (cross.row(j).minCoeff() <= radii[static_cast<std::size_t>(j)]) ++covered;
  }
  return static_cast<double>(covered) / static_cast<double>(reference.n());
}

double density(const PointCloud& generated, const PointCloud& reference, int k) {
  require_dims_match(generated, reference);
  if (k < 1 || static_cast<std::size_t>(k) >= reference.n())
    throw DataError("density: k must satisfy 1 <= k < reference N");
  const auto radii = knn_radii(pairwise_distances(reference.points, reference.points), k);
  const Eigen::MatrixXd cross = pairwise_distances(reference.points, generated.points);
  std::size_t hits = 0;
  for (Eigen::Index j = 0; j < cross.rows(); ++j) {
    const double r = radii[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < cross.cols(); ++i) {
      if (cross(j, i) <= r) ++hits;
    }
  }
  return static_cast<double>(hits) / (static_cast<double>(k) * static_cast<double>(generated.n()));
}

HopkinsResult hopkins(const PointCloud& cloud, int reps, std::uint64_t seed,
                      std::optional<std::size_t> m_override) {
  const std::size_t n = cloud.n();
  if (n < 10) throw DataError("hopkins: need at least 10 points");
  if (reps < 1) throw DataError("hopkins: reps must be positive");
  const Eigen::VectorXd lo = cloud.points.colwise().minCoeff();
  const Eigen::VectorXd hi = cloud.points.colwise().maxCoeff();
  if ((hi - lo).maxCoeff() <= 0.0)
    throw DataError("hopkins: degenerate bounding box (all points identical)");

  std::size_t m = m_override.value_or(GeometryParams::hopkins_m(n));
  if (m > n) m = n;
  const Eigen::MatrixXd data_dists = pairwise_distances(cloud.points, cloud.points);
  std::vector<double> nn_within(n);
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) best = std::min(best, data_dists(static_cast<Eigen::Index>(i),
                                                   static_cast<Eigen::Index>(j)));
    }
    nn_within[i] = best;
  }

  std::vector<double> hs(static_cast<std::size_t>(reps));
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng(seed, static_cast<std::uint64_t>(rep));
    Eigen::MatrixXd probes(static_cast<Eigen::Index>(m), cloud.points.cols());
    for (std::size_t i = 0; i < m; ++i) {
      for (Eigen::Index d = 0; d < cloud.points.cols(); ++d) {
        probes(static_cast<Eigen::Index>(i), d) = lo(d) + rng.next_double() * (hi(d) - lo(d));
      }
    }
    double sum_w = 0.0;
    const Eigen::MatrixXd probe_dists = pairwise_distances(probes, cloud.points);
    for (Eigen::Index i = 0; i < probe_dists.rows(); ++i) sum_w += probe_dists.row(i).minCoeff();
    double sum_u = 0.0;
    for (std::size_t idx : rng.sample_without_replacement(n, m)) sum_u += nn_within[idx];
    hs[static_cast<std::size_t>(rep)] = sum_w / (sum_w + sum_u);
  }

  HopkinsResult result;
  result.m = m;
  result.reps = reps;
  double mean = 0.0;
  for (double h : hs) mean += h;
  mean /= static_cast<double>(reps);
  double var = 0.0;
  for (double h : hs) var += (h - mean) * (h - mean);
  result.mean = mean;
  result.sd = reps > 1 ? std::sqrt(var / static_cast<double>(reps - 1)) : 0.0;
  return result;
}

double hyperspherical_uniformity(const PointCloud& cloud, double t) {
  if (t <= 0.0) throw DataError("hyperspherical_uniformity: t must be positive");
  const std::size_t n = cloud.n();
  if (n < 2) throw DataError("hyperspherical_uniformity: need at least 2 points");
  Eigen::MatrixXd normalized = cloud.points;
  for (Eigen::Index i = 0; i < normalized.rows(); ++i) {
    const double norm = normalized.row(i).norm();
    if (norm == 0.0)
      throw DataError("hyperspherical_uniformity: zero-norm row " + std::to_string(i));
    normalized.row(i) /= norm;
  }
  const Eigen::MatrixXd dists = pairwise_distances(normalized, normalized);
  double total = 0.0;
  for (Eigen::Index i = 0; i < dists.rows(); ++i) {
    for (Eigen::Index j = 0; j < dists.cols(); ++j) {
      total += std::exp(-t * dists(i, j) * dists(i, j));
    }
  }
  return std::log(total / (static_cast<double>(n) * static_cast<double>(n)));
}

SeparationResult separation(const PointCloud& cloud) {
  const std::size_t n = cloud.n();
  if (n < 2) throw DataError("separation: need at least 2 points");
  const Eigen::MatrixXd dists = pairwise_distances(cloud.points, cloud.points);
  SeparationResult result;
  result.min_pair = std::numeric_limits<double>::infinity();
  double nn_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double nn = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      nn = std::min(nn, dists(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    result.min_pair = std::min(result.min_pair, nn);
    nn_sum += nn;
  }
  result.mean_nn = nn_sum / static_cast<double>(n);
  return result;
}

LidResult lid(const PointCloud& cloud, int k) {
  const std::size_t n = cloud.n();
  if (k < 1 || static_cast<std::size_t>(k) >= n) throw DataError("lid: k must satisfy 1 <= k < N");
  const Eigen::MatrixXd dists = pairwise_distances(cloud.points, cloud.points);
  LidResult result;
  result.per_point.resize(n);
  std::vector<double> row(n - 1);
  std::vector<double> defined;
  defined.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t w = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) row[w++] = dists(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    std::partial_sort(row.begin(), row.begin() + k, row.end());
    const double rk = row[static_cast<std::size_t>(k - 1)];
    bool skip = rk <= 0.0;
    double acc = 0.0;
    for (int m = 0; m < k && !skip; ++m) {
      const double ri = row[static_cast<std::size_t>(m)];
      if (ri <= 0.0) {
        skip = true;
      } else {
        acc += std::log(ri / rk);
      }
    }
    if (skip) {
      result.per_point[i] = std::nullopt;
      ++result.skipped;
    } else {
      const double estimate = -1.0 / (acc / static_cast<double>(k));
      result.per_point[i] = estimate;
      defined.push_back(estimate);
    }
  }
  if (defined.empty()) {
    result.defined = false;
    return result;
  }
  std::sort(defined.begin(), defined.end());
  const std::size_t mid = defined.size() / 2;
  result.median = defined.size() % 2 == 1 ? defined[mid]
                                          : 0.5 * (defined[mid - 1] + defined[mid]);
  double mean = 0.0;
  for (double v : defined) mean += v;
  result.mean = mean / static_cast<double>(defined.size());
  return result;
}

double participation_ratio(const PointCloud& cloud) {
  const std::size_t n = cloud.n();
  if (n < 2) throw DataError("participation_ratio: need at least 2 points");
  Eigen::MatrixXd centered = cloud.points.rowwise() - cloud.points.colwise().mean();
  const Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(n - 1);
  const double trace = cov.trace();
  if (trace <= 0.0) throw DataError("participation_ratio: zero total variance");
  const double frob2 = cov.squaredNorm();  // sum of eigenvalue squares
  return trace * trace / frob2;
}

Eigen::MatrixXd project_2d(const PointCloud& cloud) {
  const std::size_t n = cloud.n();
  if (n < 3) throw DataError("project_2d: need at least 3 points");
  Eigen::MatrixXd centered = cloud.points.rowwise() - cloud.points.colwise().mean();
  const Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(n - 1);
  if (cov.trace() <= 0.0) throw DataError("project_2d: zero variance");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  check_internal(solver.info() == Eigen::Success, "project_2d: eigendecomposition failed");
  const Eigen::Index d = cov.rows();
  Eigen::MatrixXd axes(d, 2);
  axes.col(0) = solver.eigenvectors().col(d - 1);  // eigenvalues ascend
  if (d >= 2) {
    axes.col(1) = solver.eigenvectors().col(d - 2);
  } else {
    axes.col(1).setZero();
  }
  for (int a = 0; a < 2; ++a) {
    Eigen::Index imax = 0;
    axes.col(a).cwiseAbs().maxCoeff(&imax);
    if (axes(imax, a) < 0.0) axes.col(a) = -axes.col(a);
  }
  return centered * axes;
}

GeometryReport geometry_report(const PointCloud& cloud, const PointCloud* reference,
                               const GeometryParams& params) {
  GeometryReport report;
  report.params = params;
  PointCloud evaluated = cloud;
  if (params.normalize_embeddings) {
    for (Eigen::Index i = 0; i < evaluated.points.rows(); ++i) {
      const double norm = evaluated.points.row(i).norm();
      if (norm == 0.0) throw DataError("geometry: zero-norm row cannot be normalized");
      evaluated.points.row(i) /= norm;
    }
  }
  if (reference != nullptr) {
    report.coverage = coverage(evaluated, *reference, params.k_coverage);
    report.density = density(evaluated, *reference, params.k_coverage);
  }
  report.hopkins = hopkins(evaluated, params.hopkins_reps, params.seed);
  report.uniformity_loss = hyperspherical_uniformity(evaluated, params.temperature_t);
  report.separation = separation(evaluated);
  report.lid = lid(evaluated, params.k_lid);
  report.participation_ratio = participation_ratio(evaluated);
  return report;
}

}  // namespace popdiag
