#include "popdiag/synth.hpp"

#include <algorithm>
#include <cmath>

#include "popdiag/errors.hpp"
#include "popdiag/rng.hpp"

namespace popdiag {

SynthKind synth_kind_from_string(const std::string& s) {
  if (s == "uniform_box") return SynthKind::UniformBox;
  if (s == "gaussian_clusters") return SynthKind::GaussianClusters;
  if (s == "lattice") return SynthKind::Lattice;
  if (s == "embedded_manifold") return SynthKind::EmbeddedManifold;
  if (s == "likert_quantized") return SynthKind::LikertQuantized;
  throw ConfigError("unknown synthetic kind '" + s + "'");
}

std::string synth_kind_to_string(SynthKind kind) {
  switch (kind) {
    case SynthKind::UniformBox:
      return "uniform_box";
    case SynthKind::GaussianClusters:
      return "gaussian_clusters";
    case SynthKind::Lattice:
      return "lattice";
    case SynthKind::EmbeddedManifold:
      return "embedded_manifold";
    case SynthKind::LikertQuantized:
      return "likert_quantized";
  }
  throw InternalError("unreachable synth kind");
}

namespace {

Eigen::MatrixXd uniform_box(std::size_t n, std::size_t dim, Rng& rng) {
  Eigen::MatrixXd points(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    for (Eigen::Index j = 0; j < points.cols(); ++j) points(i, j) = rng.next_double();
  return points;
}

Eigen::MatrixXd gaussian_clusters(std::size_t n, std::size_t dim, std::size_t clusters,
                                  double sigma_fraction, Rng& rng) {
  check_internal(clusters >= 1, "gaussian_clusters: need >= 1 cluster");
  Eigen::MatrixXd centers(static_cast<Eigen::Index>(clusters), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < centers.rows(); ++i)
    for (Eigen::Index j = 0; j < centers.cols(); ++j) centers(i, j) = rng.next_double();
  const double sigma = sigma_fraction * std::sqrt(static_cast<double>(dim));  // box diagonal
  Eigen::MatrixXd points(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const Eigen::Index c = static_cast<Eigen::Index>(
        static_cast<std::size_t>(i) % clusters);
    for (Eigen::Index j = 0; j < points.cols(); ++j)
      points(i, j) = centers(c, j) + sigma * rng.next_gaussian();
  }
  return points;
}

Eigen::MatrixXd lattice(std::size_t n, std::size_t dim, std::size_t& actual_n) {
  // Near-cubic grid: side = round(n^(1/dim)), at least 2.
  const double side_real = std::pow(static_cast<double>(n), 1.0 / static_cast<double>(dim));
  std::size_t side = static_cast<std::size_t>(std::llround(side_real));
  if (side < 2) side = 2;
  std::size_t total = 1;
  for (std::size_t d = 0; d < dim; ++d) total *= side;
  actual_n = total;
  Eigen::MatrixXd points(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(dim));
  std::vector<std::size_t> index(dim, 0);
  for (std::size_t i = 0; i < total; ++i) {
    for (std::size_t d = 0; d < dim; ++d) {
      points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) =
          static_cast<double>(index[d]) / static_cast<double>(side - 1);
    }
    for (std::size_t d = 0; d < dim; ++d) {
      if (++index[d] < side) break;
      index[d] = 0;
    }
  }
  return points;
}

// Orthonormal dim x intrinsic_dim basis from a seeded Gaussian matrix
// (Gram-Schmidt), so latent pairwise distances are preserved exactly.
Eigen::MatrixXd random_isometry(std::size_t dim, std::size_t intrinsic, Rng& rng) {
  Eigen::MatrixXd basis(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(intrinsic));
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
    double norm = 0.0;
    int attempts = 0;
    do {
      for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.next_gaussian();
      for (Eigen::Index prev = 0; prev < j; ++prev) v -= basis.col(prev).dot(v) * basis.col(prev);
      // Second Gram-Schmidt pass for orthogonality to 1e-12.
      for (Eigen::Index prev = 0; prev < j; ++prev) v -= basis.col(prev).dot(v) * basis.col(prev);
      norm = v.norm();
      check_internal(++attempts < 100, "random_isometry: degenerate draw loop");
    } while (norm < 1e-12);
    basis.col(j) = v / norm;
  }
  return basis;
}

Eigen::MatrixXd embedded_manifold(std::size_t n, std::size_t dim, std::size_t intrinsic,
                                  Rng& rng) {
  if (intrinsic > dim)
    throw ConfigError("embedded_manifold: intrinsic dim exceeds ambient dim");
  const Eigen::MatrixXd latent = uniform_box(n, intrinsic, rng);
  const Eigen::MatrixXd basis = random_isometry(dim, intrinsic, rng);
  return latent * basis.transpose();
}

}  // namespace

SynthResult generate(const SyntheticSpec& spec) {
  if (spec.n < 2) throw ConfigError("synthetic spec: n must be >= 2");
  if (spec.dim < 1) throw ConfigError("synthetic spec: dim must be >= 1");
  Rng rng(spec.seed, 0x73796E7468ULL);
  SynthResult result;
  result.actual_n = spec.n;
  switch (spec.kind) {
    case SynthKind::UniformBox:
      result.cloud.points = uniform_box(spec.n, spec.dim, rng);
      break;
    case SynthKind::GaussianClusters:
      result.cloud.points =
          gaussian_clusters(spec.n, spec.dim, spec.cluster_count, spec.sigma, rng);
      break;
    case SynthKind::Lattice:
      result.cloud.points = lattice(spec.n, spec.dim, result.actual_n);
      break;
    case SynthKind::EmbeddedManifold:
      result.cloud.points = embedded_manifold(spec.n, spec.dim, spec.intrinsic_dim, rng);
      break;
    case SynthKind::LikertQuantized: {
      const Eigen::MatrixXd raw = uniform_box(spec.n, spec.dim, rng);
      const int levels = spec.scale.levels;
      if (levels < 2) throw ConfigError("likert_quantized: need >= 2 levels");
      Eigen::MatrixXd quantized(raw.rows(), raw.cols());
      for (Eigen::Index i = 0; i < raw.rows(); ++i) {
        for (Eigen::Index j = 0; j < raw.cols(); ++j) {
          int level = static_cast<int>(raw(i, j) * levels);  // uniform binning
          if (level >= levels) level = levels - 1;
          quantized(i, j) = spec.scale.min + level * spec.scale.step();
        }
      }
      result.cloud.points = quantized;
      result.matrix = cloud_to_matrix(result.cloud, spec.scale);
      break;
    }
  }
  return result;
}

TraitMatrix cloud_to_matrix(const PointCloud& cloud, std::optional<LikertScale> scale) {
  TraitMatrix m;
  m.values = cloud.points;
  m.scale = scale;
  char buf[32];
  for (std::size_t i = 0; i < cloud.n(); ++i) {
    std::snprintf(buf, sizeof(buf), "p%05zu", i + 1);
    m.persona_ids.emplace_back(buf);
  }
  for (std::size_t j = 0; j < cloud.dim(); ++j) {
    std::snprintf(buf, sizeof(buf), "c%03zu", j + 1);
    m.item_ids.emplace_back(buf);
  }
  return m;
}

}  // namespace popdiag
