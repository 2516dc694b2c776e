#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "bearings/bearings.hpp"
#include "test_support.hpp"

using namespace bearings;

TEST_CASE("projection of the axis directions") {
  const Eigen::MatrixXd p = projection(Eigen::Vector2d(1, 0));
  Eigen::MatrixXd expect(2, 2);
  expect << 0, 0,
            0, 1;
  REQUIRE((p - expect).norm() <= 1e-15);
}

TEST_CASE("projection of a 3-4-5 direction") {
  const Eigen::MatrixXd p = projection(Eigen::Vector2d(3, 4));
  Eigen::MatrixXd expect(2, 2);
  expect << 16.0 / 25.0, -12.0 / 25.0,
            -12.0 / 25.0, 9.0 / 25.0;
  REQUIRE((p - expect).norm() <= 1e-15);
}

TEST_CASE("projection rejects near-zero input") {
  REQUIRE_THROWS_AS(projection(Eigen::Vector2d(0, 0)), ValidationError);
  REQUIRE_THROWS_AS(projection(Eigen::Vector2d(1e-10, 0)), ValidationError);
}

TEST_CASE("projection is a symmetric idempotent PSD annihilator of its axis") {
  Rng rng(42);
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = 2 + trial % 4;
    const Eigen::VectorXd x = testsup::random_unit_vector(d, rng) * rng.uniform(0.1, 10.0);
    const Eigen::MatrixXd p = projection(x);
    REQUIRE((p - p.transpose()).norm() <= 1e-12);
    REQUIRE((p * p - p).norm() <= 1e-12);
    REQUIRE((p * x).norm() <= 1e-12 * x.norm());
    REQUIRE(p.trace() == Catch::Approx(static_cast<double>(d - 1)).margin(1e-12));
    const Eigen::VectorXd ev = symmetric_eigenvalues(p);
    REQUIRE(ev(0) >= -1e-12);
    // Spectrum is {0, 1, ..., 1}.
    REQUIRE(std::abs(ev(0)) <= 1e-12);
    for (int i = 1; i < d; ++i) REQUIRE(ev(i) == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("projection detects parallel vectors") {
  Rng rng(43);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 2 + trial % 3;
    const Eigen::VectorXd x = testsup::random_unit_vector(d, rng);
    const double c = rng.uniform(-3.0, 3.0);
    REQUIRE((projection(x) * (c * x)).norm() <= 1e-10);
  }
  // A vector with a component off the axis is not annihilated.
  Eigen::Vector2d x(1, 0), y(1, 0.5);
  REQUIRE((projection(x) * y).norm() > 0.1);
}

TEST_CASE("swapping the roles of two unit vectors preserves the projected energy") {
  Rng rng(44);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 2 + trial % 3;
    const Eigen::VectorXd g1 = testsup::random_unit_vector(d, rng);
    const Eigen::VectorXd g2 = testsup::random_unit_vector(d, rng);
    const double a = g1.dot(projection(g2) * g1);
    const double b = g2.dot(projection(g1) * g2);
    REQUIRE(std::abs(a - b) <= 1e-12);
  }
}

TEST_CASE("stacking and unstacking are inverse") {
  Rng rng(45);
  Eigen::MatrixXd p(3, 5);
  for (int i = 0; i < p.size(); ++i) p(i % 3, i / 3) = rng.normal();
  REQUIRE((unstack_columns(stack_columns(p), 3) - p).norm() == 0.0);
  REQUIRE_THROWS_AS(unstack_columns(Eigen::VectorXd::Zero(7), 2), ValidationError);
}

TEST_CASE("centroid and scale of the unit square") {
  const Eigen::MatrixXd p = testsup::unit_square();
  REQUIRE((centroid(p) - Eigen::Vector2d(0.5, 0.5)).norm() <= 1e-15);
  REQUIRE(formation_scale(p) == Catch::Approx(std::sqrt(0.5)).margin(1e-15));
}

TEST_CASE("framework construction validates its inputs") {
  const auto edges = testsup::square_diag_edges();
  REQUIRE_THROWS_AS(make_framework(4, edges, Eigen::MatrixXd::Random(2, 3)), ValidationError);

  Eigen::MatrixXd one_d = Eigen::MatrixXd::Random(1, 4);
  REQUIRE_THROWS_AS(make_framework(4, edges, one_d), ValidationError);

  Eigen::MatrixXd bad = testsup::unit_square();
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(make_framework(4, edges, bad), ValidationError);

  Eigen::MatrixXd coincident = testsup::unit_square();
  coincident.col(1) = coincident.col(0);
  try {
    make_framework(4, edges, coincident);
    FAIL("expected a degenerate edge error");
  } catch (const DegenerateEdgeError& e) {
    REQUIRE(e.tail() == 1);
    REQUIRE(e.head() == 2);
  }
}

TEST_CASE("bearing of a horizontal edge") {
  Eigen::MatrixXd p(2, 2);
  p << 0, 1,
       0, 0;
  const BearingSet bs = bearing_set(build_oriented_graph(2, {{1, 2}}), p);
  REQUIRE((bs.bearings.col(0) - Eigen::Vector2d(1, 0)).norm() <= 1e-15);
  REQUIRE(bs.lengths(0) == Catch::Approx(1.0));
}

TEST_CASE("bearings of the braced unit square in canonical edge order") {
  const Framework f = testsup::square_diag_framework();
  const BearingSet bs = bearing_set(f);
  // Canonical edges: (1,2), (1,3), (1,4), (2,3), (3,4).
  const double r = 1.0 / std::sqrt(2.0);
  Eigen::MatrixXd expect(2, 5);
  expect << 0, r, 1, 1, 0,
            1, r, 0, 0, -1;
  REQUIRE((bs.bearings - expect).norm() <= 1e-15);
}

TEST_CASE("bearings are unit and aligned with the edge vectors") {
  Rng rng(46);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 3 + rng.uniform_int(0, 4);
    const int d = 2 + rng.uniform_int(0, 1);
    const Framework f = testsup::random_framework(n, d, rng);
    const BearingSet bs = bearing_set(f);
    for (int k = 0; k < f.edge_count(); ++k) {
      REQUIRE(bs.bearings.col(k).norm() == Catch::Approx(1.0).margin(1e-12));
      const Eigen::VectorXd e =
          f.position(f.graph.head(k)) - f.position(f.graph.tail(k));
      REQUIRE((bs.edge_vectors.col(k) - e).norm() == 0.0);
      REQUIRE((bs.bearings.col(k) * bs.lengths(k) - e).norm() <= 1e-12);
    }
  }
}

TEST_CASE("listing an edge in either order yields the same canonical bearings") {
  Eigen::MatrixXd p(2, 3);
  p << 0, 1, 0,
       0, 0, 1;
  const BearingSet a = bearing_set(build_oriented_graph(3, {{1, 2}, {2, 3}}), p);
  const BearingSet b = bearing_set(build_oriented_graph(3, {{3, 2}, {2, 1}}), p);
  REQUIRE((a.bearings - b.bearings).norm() == 0.0);
}

TEST_CASE("coincident edge endpoints fail with the offending pair") {
  Eigen::MatrixXd p(2, 3);
  p << 0, 1, 1,
       0, 0, 0;
  try {
    bearing_set(build_oriented_graph(3, {{1, 2}, {2, 3}}), p);
    FAIL("expected a degenerate edge error");
  } catch (const DegenerateEdgeError& e) {
    REQUIRE(e.tail() == 2);
    REQUIRE(e.head() == 3);
  }
}
