#include "popdiag/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "popdiag/errors.hpp"
#include "popdiag/rng.hpp"

namespace popdiag {

namespace {

struct LloydResult {
  std::vector<int> labels;
  Eigen::MatrixXd centroids;
  double inertia = 0.0;
};

double squared_distance(const Eigen::MatrixXd& points, Eigen::Index row,
                        const Eigen::MatrixXd& centroids, Eigen::Index c) {
  return (points.row(row) - centroids.row(c)).squaredNorm();
}

Eigen::MatrixXd kmeanspp_init(const Eigen::MatrixXd& points, int k, Rng& rng) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd centroids(k, points.cols());
  const Eigen::Index first = static_cast<Eigen::Index>(rng.next_below(static_cast<std::uint64_t>(n)));
  centroids.row(0) = points.row(first);
  Eigen::VectorXd d2 = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  for (int c = 1; c < k; ++c) {
    for (Eigen::Index i = 0; i < n; ++i)
      d2(i) = std::min(d2(i), squared_distance(points, i, centroids, c - 1));
    const double total = d2.sum();
    Eigen::Index chosen = 0;
    if (total <= 0.0) {
      // All remaining mass at existing centroids; pick a deterministic index.
      chosen = static_cast<Eigen::Index>(rng.next_below(static_cast<std::uint64_t>(n)));
    } else {
      const double target = rng.next_double() * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2(i);
        if (acc >= target) {
          chosen = i;
          break;
        }
        chosen = i;
      }
    }
    centroids.row(c) = points.row(chosen);
  }
  return centroids;
}

LloydResult lloyd(const Eigen::MatrixXd& points, int k, int max_iters, double tol, Rng& rng) {
  const Eigen::Index n = points.rows();
  LloydResult result;
  result.centroids = kmeanspp_init(points, k, rng);
  result.labels.assign(static_cast<std::size_t>(n), 0);
  double prev_inertia = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < max_iters; ++iter) {
    // Assignment.
    double inertia = 0.0;
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d2 = squared_distance(points, i, result.centroids, 0);
      for (int c = 1; c < k; ++c) {
        const double d2 = squared_distance(points, i, result.centroids, c);
        if (d2 < best_d2) {
          best_d2 = d2;
          best = c;
        }
      }
      result.labels[static_cast<std::size_t>(i)] = best;
      counts[static_cast<std::size_t>(best)] += 1;
      inertia += best_d2;
    }
    check_internal(inertia <= prev_inertia + 1e-9 * (1.0 + prev_inertia) ||
                       !std::isfinite(prev_inertia),
                   "kmeans: inertia increased across Lloyd iterations");
    prev_inertia = inertia;
    result.inertia = inertia;

    // Empty clusters take the point farthest from its assigned centroid.
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      Eigen::Index farthest = 0;
      double far_d2 = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double d2 =
            squared_distance(points, i, result.centroids, result.labels[static_cast<std::size_t>(i)]);
        if (d2 > far_d2) {
          far_d2 = d2;
          farthest = i;
        }
      }
      result.centroids.row(c) = points.row(farthest);
      counts[static_cast<std::size_t>(result.labels[static_cast<std::size_t>(farthest)])] -= 1;
      result.labels[static_cast<std::size_t>(farthest)] = c;
      counts[static_cast<std::size_t>(c)] += 1;
    }

    // Update.
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(k, points.cols());
    for (Eigen::Index i = 0; i < n; ++i)
      next.row(result.labels[static_cast<std::size_t>(i)]) += points.row(i);
    for (int c = 0; c < k; ++c) {
      check_internal(counts[static_cast<std::size_t>(c)] > 0, "kmeans: empty cluster after reseed");
      next.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
    }
    double shift = 0.0;
    for (int c = 0; c < k; ++c)
      shift = std::max(shift, (next.row(c) - result.centroids.row(c)).norm());
    result.centroids = next;
    if (shift < tol) break;
  }
  // Final assignment against the last centroid update.
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    double best_d2 = squared_distance(points, i, result.centroids, 0);
    for (int c = 1; c < k; ++c) {
      const double d2 = squared_distance(points, i, result.centroids, c);
      if (d2 < best_d2) {
        best_d2 = d2;
        best = c;
      }
    }
    result.labels[static_cast<std::size_t>(i)] = best;
    inertia += best_d2;
  }
  result.inertia = inertia;
  return result;
}

double entropy_nats(const std::vector<std::size_t>& counts, std::size_t total) {
  double h = 0.0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log(p);
  }
  return h;
}

}  // namespace

ClusterAssignment kmeans(const PointCloud& cloud, const KMeansParams& params) {
  const std::size_t n = cloud.n();
  if (params.k < 1 || static_cast<std::size_t>(params.k) > n)
    throw DataError("kmeans: K must satisfy 1 <= K <= N");
  ClusterAssignment best;
  best.params = params;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < std::max(1, params.restarts); ++restart) {
    Rng rng(params.seed, 0x6B6D65616E73ULL + static_cast<std::uint64_t>(restart));
    LloydResult run = lloyd(cloud.points, params.k, params.max_iters, params.tol, rng);
    if (run.inertia < best.inertia) {
      best.labels = std::move(run.labels);
      best.centroids = std::move(run.centroids);
      best.inertia = run.inertia;
    }
  }
  return best;
}

VMeasureResult v_measure(const std::vector<int>& clusters, const LabelVector& labels) {
  if (clusters.size() != labels.size())
    throw DataError("v_measure: cluster and label vectors differ in length");
  const std::size_t n = clusters.size();
  if (n == 0) throw DataError("v_measure: empty input");

  std::map<int, std::size_t> cluster_ids;
  std::map<std::string, std::size_t> label_ids;
  for (int c : clusters) cluster_ids.emplace(c, cluster_ids.size());
  for (const auto& l : labels) label_ids.emplace(l, label_ids.size());
  const std::size_t nc = cluster_ids.size();
  const std::size_t nl = label_ids.size();

  std::vector<std::vector<std::size_t>> table(nc, std::vector<std::size_t>(nl, 0));
  std::vector<std::size_t> cluster_counts(nc, 0);
  std::vector<std::size_t> label_counts(nl, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t ci = cluster_ids[clusters[i]];
    const std::size_t li = label_ids[labels[i]];
    table[ci][li] += 1;
    cluster_counts[ci] += 1;
    label_counts[li] += 1;
  }

  const double h_labels = entropy_nats(label_counts, n);
  const double h_clusters = entropy_nats(cluster_counts, n);
  double h_labels_given_clusters = 0.0;
  double h_clusters_given_labels = 0.0;
  for (std::size_t c = 0; c < nc; ++c) {
    for (std::size_t l = 0; l < nl; ++l) {
      if (table[c][l] == 0) continue;
      const double joint = static_cast<double>(table[c][l]) / static_cast<double>(n);
      h_labels_given_clusters -=
          joint * std::log(static_cast<double>(table[c][l]) / static_cast<double>(cluster_counts[c]));
      h_clusters_given_labels -=
          joint * std::log(static_cast<double>(table[c][l]) / static_cast<double>(label_counts[l]));
    }
  }

  VMeasureResult result;
  result.homogeneity = h_labels == 0.0 ? 1.0 : 1.0 - h_labels_given_clusters / h_labels;
  result.completeness = h_clusters == 0.0 ? 1.0 : 1.0 - h_clusters_given_labels / h_clusters;
  const double sum = result.homogeneity + result.completeness;
  result.v = sum == 0.0 ? 0.0 : 2.0 * result.homogeneity * result.completeness / sum;
  return result;
}

double silhouette(const PointCloud& cloud, const std::vector<int>& labels) {
  const std::size_t n = cloud.n();
  if (labels.size() != n) throw DataError("silhouette: label vector not aligned with cloud");
  std::map<int, std::size_t> sizes;
  for (int l : labels) sizes[l] += 1;
  if (sizes.size() < 2) throw DataError("silhouette: need at least 2 clusters");

  const Eigen::MatrixXd dists = pairwise_distances(cloud.points, cloud.points);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int own = labels[i];
    if (sizes[own] == 1) continue;  // singleton scores 0
    std::map<int, double> sums;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      sums[labels[j]] += dists(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    const double a = sums[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [label, sum] : sums) {
      if (label == own) continue;
      b = std::min(b, sum / static_cast<double>(sizes[label]));
    }
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

LabelVector concat_demographics(const std::vector<PersonaProfile>& profiles,
                                const std::vector<std::string>& dims) {
  LabelVector labels;
  labels.reserve(profiles.size());
  for (const auto& profile : profiles) {
    std::string label;
    for (std::size_t i = 0; i < dims.size(); ++i) {
      const std::string* value = profile.find_attribute(dims[i]);
      if (value == nullptr)
        throw DataError("persona '" + profile.persona_id + "' is missing dimension '" + dims[i] +
                        "'");
      if (i > 0) label += '|';
      label += *value;
    }
    labels.push_back(std::move(label));
  }
  return labels;
}

}  // namespace popdiag
