#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "popdiag/data.hpp"
#include "popdiag/geometry.hpp"

namespace popdiag {

struct KMeansParams {
  int k = 5;
  std::uint64_t seed = 0;
  int restarts = 10;
  int max_iters = 300;
  double tol = 1e-6;
};

struct ClusterAssignment {
  std::vector<int> labels;
  Eigen::MatrixXd centroids;
  double inertia = 0.0;
  KMeansParams params;
};

using LabelVector = std::vector<std::string>;

struct VMeasureResult {
  double homogeneity = 0.0;
  double completeness = 0.0;
  double v = 0.0;
};

// Best-of-restarts Lloyd iteration with k-means++ seeding; winner chosen by
// (inertia, restart index). Empty clusters are re-seeded to the point farthest
// from its assigned centroid.
ClusterAssignment kmeans(const PointCloud& cloud, const KMeansParams& params);

// Entropies in nats from the empirical contingency table; beta = 1.
VMeasureResult v_measure(const std::vector<int>& clusters, const LabelVector& labels);

// Mean silhouette over points; singleton-cluster points score 0.
double silhouette(const PointCloud& cloud, const std::vector<int>& labels);

// Joins the requested dimension values with '|' in order; every profile must
// carry every dimension.
LabelVector concat_demographics(const std::vector<PersonaProfile>& profiles,
                                const std::vector<std::string>& dims);

}  // namespace popdiag
