#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "popdiag/data.hpp"
#include "popdiag/geometry.hpp"

namespace popdiag {

enum class SynthKind {
  UniformBox,
  GaussianClusters,
  Lattice,
  EmbeddedManifold,
  LikertQuantized,
};

SynthKind synth_kind_from_string(const std::string& s);
std::string synth_kind_to_string(SynthKind kind);

struct SyntheticSpec {
  SynthKind kind = SynthKind::UniformBox;
  std::size_t n = 100;
  std::size_t dim = 2;
  std::uint64_t seed = 0;
  // gaussian_clusters
  std::size_t cluster_count = 5;
  double sigma = 0.05;  // as a fraction of the unit-box diagonal
  // embedded_manifold
  std::size_t intrinsic_dim = 1;
  // likert_quantized: underlying kind is uniform_box; levels from scale
  LikertScale scale{1.0, 5.0, 5};
};

struct SynthResult {
  PointCloud cloud;
  std::optional<TraitMatrix> matrix;  // present for likert_quantized
  std::size_t actual_n = 0;           // lattice may round to the nearest grid
};

SynthResult generate(const SyntheticSpec& spec);

// Wraps any cloud as a TraitMatrix with generated ids (p0001..., c01...).
TraitMatrix cloud_to_matrix(const PointCloud& cloud,
                            std::optional<LikertScale> scale = std::nullopt);

}  // namespace popdiag
