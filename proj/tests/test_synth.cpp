#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "popdiag/errors.hpp"
#include "popdiag/synth.hpp"

using namespace popdiag;

TEST_CASE("kind names round-trip") {
  for (auto kind : {SynthKind::UniformBox, SynthKind::GaussianClusters, SynthKind::Lattice,
                    SynthKind::EmbeddedManifold, SynthKind::LikertQuantized}) {
    CHECK(synth_kind_from_string(synth_kind_to_string(kind)) == kind);
  }
  CHECK_THROWS_AS(synth_kind_from_string("nope"), ConfigError);
}

TEST_CASE("generation is deterministic per seed") {
  SyntheticSpec spec;
  spec.kind = SynthKind::GaussianClusters;
  spec.n = 200;
  spec.dim = 4;
  spec.seed = 9;
  const auto a = generate(spec);
  const auto b = generate(spec);
  CHECK(a.cloud.points == b.cloud.points);
  spec.seed = 10;
  CHECK(generate(spec).cloud.points != a.cloud.points);
}

TEST_CASE("uniform box stays inside the unit cube") {
  SyntheticSpec spec;
  spec.n = 500;
  spec.dim = 6;
  spec.seed = 3;
  const auto r = generate(spec);
  CHECK(r.actual_n == 500);
  CHECK(r.cloud.points.minCoeff() >= 0.0);
  CHECK(r.cloud.points.maxCoeff() < 1.0);
}

TEST_CASE("lattice rounds to a near-cubic grid") {
  SyntheticSpec spec;
  spec.kind = SynthKind::Lattice;
  spec.n = 2025;
  spec.dim = 2;
  const auto r = generate(spec);
  CHECK(r.actual_n == 2025);  // 45 x 45
  CHECK(r.cloud.n() == 2025);

  spec.n = 2000;
  const auto rounded = generate(spec);
  // side = round(sqrt(2000)) = 45 -> 2025 points
  CHECK(rounded.actual_n == 2025);
}

TEST_CASE("embedded manifold has the requested linear rank") {
  SyntheticSpec spec;
  spec.kind = SynthKind::EmbeddedManifold;
  spec.n = 300;
  spec.dim = 10;
  spec.intrinsic_dim = 3;
  spec.seed = 4;
  const auto r = generate(spec);
  Eigen::MatrixXd centered = r.cloud.points.rowwise() - r.cloud.points.colwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered);
  const auto& sv = svd.singularValues();
  CHECK(sv(2) > 1e-6);
  CHECK(sv(3) < 1e-9 * sv(0));

  // Isometric embedding: pairwise distances preserved => distances between
  // rows equal distances in the latent cube, so all coordinates stay bounded.
  CHECK(r.cloud.points.cwiseAbs().maxCoeff() < 10.0);
}

TEST_CASE("likert quantization lands on scale levels") {
  SyntheticSpec spec;
  spec.kind = SynthKind::LikertQuantized;
  spec.n = 400;
  spec.dim = 5;
  spec.seed = 12;
  spec.scale = LikertScale{1, 5, 5};
  const auto r = generate(spec);
  REQUIRE(r.matrix.has_value());
  CHECK(r.matrix->scale->levels == 5);
  for (Eigen::Index i = 0; i < r.cloud.points.rows(); ++i) {
    for (Eigen::Index j = 0; j < r.cloud.points.cols(); ++j) {
      const double v = r.cloud.points(i, j);
      CHECK(v >= 1.0);
      CHECK(v <= 5.0);
      CHECK(std::abs(v - std::round(v)) < 1e-12);
    }
  }
  // All five levels should actually occur somewhere at this sample size.
  std::set<double> seen;
  for (Eigen::Index i = 0; i < r.cloud.points.rows(); ++i)
    for (Eigen::Index j = 0; j < r.cloud.points.cols(); ++j) seen.insert(r.cloud.points(i, j));
  CHECK(seen.size() == 5);
}

TEST_CASE("cloud_to_matrix generates stable ids") {
  SyntheticSpec spec;
  spec.n = 3;
  spec.dim = 2;
  const auto r = generate(spec);
  const TraitMatrix m = cloud_to_matrix(r.cloud);
  CHECK(m.persona_ids == std::vector<std::string>{"p00001", "p00002", "p00003"});
  CHECK(m.item_ids == std::vector<std::string>{"c001", "c002"});
}

TEST_CASE("spec validation") {
  SyntheticSpec spec;
  spec.n = 0;
  CHECK_THROWS_AS(generate(spec), ConfigError);
  spec.n = 10;
  spec.dim = 0;
  CHECK_THROWS_AS(generate(spec), ConfigError);
  spec.dim = 2;
  spec.kind = SynthKind::EmbeddedManifold;
  spec.intrinsic_dim = 5;  // exceeds ambient dim
  CHECK_THROWS_AS(generate(spec), ConfigError);
}
