#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "popdiag/cluster.hpp"
#include "popdiag/errors.hpp"
#include "popdiag/rng.hpp"

using namespace popdiag;

namespace {

// Contingency-entropy oracle for V-Measure (nats).
VMeasureResult v_measure_oracle(const std::vector<int>& clusters,
                                const std::vector<std::string>& labels) {
  const double n = static_cast<double>(clusters.size());
  std::map<int, double> nc;
  std::map<std::string, double> nl;
  std::map<std::pair<int, std::string>, double> joint;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    nc[clusters[i]] += 1;
    nl[labels[i]] += 1;
    joint[{clusters[i], labels[i]}] += 1;
  }
  double h_l = 0, h_c = 0, h_l_given_c = 0, h_c_given_l = 0;
  for (const auto& [_, v] : nl) h_l -= v / n * std::log(v / n);
  for (const auto& [_, v] : nc) h_c -= v / n * std::log(v / n);
  for (const auto& [key, v] : joint) {
    h_l_given_c -= v / n * std::log(v / nc[key.first]);
    h_c_given_l -= v / n * std::log(v / nl[key.second]);
  }
  VMeasureResult r;
  r.homogeneity = h_l == 0 ? 1.0 : 1.0 - h_l_given_c / h_l;
  r.completeness = h_c == 0 ? 1.0 : 1.0 - h_c_given_l / h_c;
  r.v = (r.homogeneity + r.completeness) == 0
            ? 0.0
            : 2.0 * r.homogeneity * r.completeness / (r.homogeneity + r.completeness);
  return r;
}

Eigen::MatrixXd blob_cloud(std::uint64_t seed, int per_cluster, double spread,
                           std::vector<int>* truth) {
  Rng rng(seed);
  const std::vector<std::pair<double, double>> centers{{0, 0}, {10, 0}, {0, 10}};
  Eigen::MatrixXd x(per_cluster * 3, 2);
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < per_cluster; ++i) {
      const Eigen::Index row = c * per_cluster + i;
      x(row, 0) = centers[c].first + spread * rng.next_gaussian();
      x(row, 1) = centers[c].second + spread * rng.next_gaussian();
      if (truth) truth->push_back(c);
    }
  }
  return x;
}

}  // namespace

TEST_CASE("v-measure: identity, single cluster, and oracle equivalence") {
  std::vector<int> clusters{0, 0, 1, 1, 2, 2};
  std::vector<std::string> labels{"a", "a", "b", "b", "c", "c"};
  const auto perfect = v_measure(clusters, labels);
  CHECK(perfect.v == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(perfect.homogeneity == doctest::Approx(1.0).epsilon(1e-9));

  std::vector<int> single(6, 0);
  CHECK(v_measure(single, labels).v == doctest::Approx(0.0).epsilon(1e-12));

  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<int> c;
    std::vector<std::string> l;
    for (int i = 0; i < 200; ++i) {
      c.push_back(static_cast<int>(rng.next_below(5)));
      l.push_back("l" + std::to_string(rng.next_below(4)));
    }
    const auto got = v_measure(c, l);
    const auto want = v_measure_oracle(c, l);
    CHECK(got.homogeneity == doctest::Approx(want.homogeneity).epsilon(1e-9));
    CHECK(got.completeness == doctest::Approx(want.completeness).epsilon(1e-9));
    CHECK(got.v == doctest::Approx(want.v).epsilon(1e-9));
  }
}

TEST_CASE("random labels score near zero on average") {
  Rng rng(11);
  double sum = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> c;
    std::vector<std::string> l;
    for (int i = 0; i < 1000; ++i) {
      c.push_back(static_cast<int>(rng.next_below(10)));
      l.push_back("l" + std::to_string(rng.next_below(10)));
    }
    sum += v_measure(c, l).v;
  }
  CHECK(sum / 20.0 < 0.05);
}

TEST_CASE("kmeans recovers well-separated blobs deterministically") {
  std::vector<int> truth;
  const Eigen::MatrixXd x = blob_cloud(21, 40, 0.3, &truth);
  KMeansParams params;
  params.k = 3;
  params.seed = 5;
  const auto a = kmeans({x}, params);
  const auto b = kmeans({x}, params);
  CHECK(a.labels == b.labels);
  CHECK(a.inertia == b.inertia);

  std::vector<std::string> truth_labels;
  for (int t : truth) truth_labels.push_back(std::to_string(t));
  CHECK(v_measure(a.labels, truth_labels).v == doctest::Approx(1.0).epsilon(1e-9));
  // Inertia should be near the within-blob variance level, far below random.
  CHECK(a.inertia < 120 * 2 * 0.3 * 0.3 * 3);
}

TEST_CASE("kmeans with k = n gives zero inertia") {
  Rng rng(31);
  Eigen::MatrixXd x(8, 2);
  for (Eigen::Index i = 0; i < 8; ++i) {
    x(i, 0) = rng.next_double();
    x(i, 1) = rng.next_double();
  }
  KMeansParams params;
  params.k = 8;
  params.restarts = 3;
  const auto r = kmeans({x}, params);
  CHECK(r.inertia == doctest::Approx(0.0).epsilon(1e-12));
  std::set<int> distinct(r.labels.begin(), r.labels.end());
  CHECK(distinct.size() == 8);
}

TEST_CASE("kmeans validates k") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 2);
  KMeansParams params;
  params.k = 6;
  CHECK_THROWS_AS(kmeans({x}, params), DataError);
  params.k = 0;
  CHECK_THROWS_AS(kmeans({x}, params), DataError);
}

TEST_CASE("silhouette hand-computed on two pairs") {
  Eigen::MatrixXd x(4, 1);
  x << 0, 1, 10, 11;
  const std::vector<int> labels{0, 0, 1, 1};
  // points 0, 3: a = 1, b = 10.5 -> s = 9.5/10.5
  // points 1, 2: a = 1, b = 9.5  -> s = 8.5/9.5
  const double expected = 0.5 * (9.5 / 10.5 + 8.5 / 9.5);
  CHECK(silhouette({x}, labels) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("silhouette gives singletons zero") {
  Eigen::MatrixXd x(3, 1);
  x << 0, 1, 10;
  const std::vector<int> labels{0, 0, 1};
  // points 0,1: a = 1; b = 10 resp. 9 -> (9/10 + 8/9) / 3 with singleton 0.
  const double expected = (9.0 / 10.0 + 8.0 / 9.0 + 0.0) / 3.0;
  CHECK(silhouette({x}, labels) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("concat_demographics joins in order and validates") {
  PersonaProfile p;
  p.persona_id = "p1";
  p.attributes = {{"Gender", "Female"}, {"Country", "France"}};
  const auto labels = concat_demographics({p}, {"Country", "Gender"});
  CHECK(labels == LabelVector{"France|Female"});
  CHECK_THROWS_AS(concat_demographics({p}, {"Country", "Age"}), DataError);
}
