#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

namespace popdiag {

// Rows are points; Euclidean metric throughout.
struct PointCloud {
  Eigen::MatrixXd points;

  std::size_t n() const { return static_cast<std::size_t>(points.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(points.cols()); }
};

struct GeometryParams {
  int k_coverage = 5;
  int k_lid = 20;
  int hopkins_reps = 20;
  double temperature_t = 2.0;
  std::uint64_t seed = 0;
  bool normalize_embeddings = false;

  // Probe count per Hopkins repetition: max(50, floor(0.1 * N)).
  static std::size_t hopkins_m(std::size_t n) {
    const std::size_t tenth = n / 10;
    return tenth < 50 ? 50 : tenth;
  }
};

struct HopkinsResult {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t m = 0;
  int reps = 0;
};

struct LidResult {
  std::vector<std::optional<double>> per_point;  // nullopt = skipped (zero distance)
  double median = 0.0;
  double mean = 0.0;
  std::size_t skipped = 0;
  bool defined = true;  // false when every point was skipped
};

struct SeparationResult {
  double min_pair = 0.0;
  double mean_nn = 0.0;
};

struct GeometryReport {
  std::optional<double> coverage;  // absent without a reference cloud
  std::optional<double> density;
  HopkinsResult hopkins;
  double uniformity_loss = 0.0;
  SeparationResult separation;
  LidResult lid;
  double participation_ratio = 1.0;
  GeometryParams params;
};

// Fraction of reference points whose closed k-NN ball (radius = distance to
// the k-th nearest neighbor within the reference, self excluded) contains at
// least one generated point.
double coverage(const PointCloud& generated, const PointCloud& reference, int k);

// (1/(k*|generated|)) * sum over generated points of the number of reference
// k-NN balls containing the point.
double density(const PointCloud& generated, const PointCloud& reference, int k);

// Mean and sd over `reps` repetitions; each repetition draws m uniform probes
// from the axis-aligned minimum bounding box and m data points without
// replacement. Throws DataError on a degenerate (zero-extent) bounding box.
HopkinsResult hopkins(const PointCloud& cloud, int reps, std::uint64_t seed,
                      std::optional<std::size_t> m_override = std::nullopt);

// log((1/N^2) * sum_ij exp(-t * ||xi - xj||^2)) after l2-normalizing rows;
// diagonal terms included. Throws DataError on a zero-norm row.
double hyperspherical_uniformity(const PointCloud& cloud, double t);

SeparationResult separation(const PointCloud& cloud);

// Levina-Bickel MLE per point with self excluded; points whose k-NN radius or
// any neighbor distance is zero are skipped and counted.
LidResult lid(const PointCloud& cloud, int k);

// (sum lambda)^2 / sum lambda^2 over covariance eigenvalues of mean-centered
// rows, computed as trace(C)^2 / ||C||_F^2. Throws DataError on zero variance.
double participation_ratio(const PointCloud& cloud);

// Projection onto the top-2 principal axes; each axis is sign-fixed so its
// largest-magnitude component is positive.
Eigen::MatrixXd project_2d(const PointCloud& cloud);

// Full pairwise Euclidean distance matrix (exact kNN backend).
Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

GeometryReport geometry_report(const PointCloud& cloud,
                               const PointCloud* reference,
                               const GeometryParams& params);

}  // namespace popdiag
