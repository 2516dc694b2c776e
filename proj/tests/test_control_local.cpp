#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "bearings/bearings.hpp"
#include "test_support.hpp"

using namespace bearings;

namespace {

constexpr double kPi = 3.14159265358979323846;

Framework square_3d() {
  return make_framework(4, testsup::square_diag_edges(), testsup::unit_square_3d());
}

BearingConstraints square_constraints_3d() { return constraints_from_framework(square_3d()); }

LocalFormationState random_state(const BearingConstraints& c, Rng& rng, double max_angle) {
  LocalFormationState s;
  s.positions = testsup::separated_positions(c.graph.vertex_count(), 3, rng, 0.2);
  s.rotations = random_rotations(c.graph.vertex_count(), max_angle, rng);
  return s;
}

}  // namespace

TEST_CASE("state validation catches shape and rotation defects") {
  const BearingConstraints c = square_constraints_3d();
  LocalFormationState s;
  s.positions = testsup::unit_square_3d();
  s.rotations.assign(4, Eigen::Matrix3d::Identity());
  REQUIRE_NOTHROW(validate_local_state(s, c));

  LocalFormationState bad_count = s;
  bad_count.rotations.pop_back();
  REQUIRE_THROWS_AS(validate_local_state(bad_count, c), ValidationError);

  LocalFormationState bad_rot = s;
  bad_rot.rotations[2] *= 1.5;
  REQUIRE_THROWS_AS(validate_local_state(bad_rot, c), ValidationError);

  LocalFormationState bad_shape = s;
  bad_shape.positions = Eigen::MatrixXd::Zero(3, 5);
  REQUIRE_THROWS_AS(validate_local_state(bad_shape, c), ValidationError);

  REQUIRE_THROWS_AS(body_control(0, s, c), ValidationError);
  REQUIRE_THROWS_AS(body_control(5, s, c), ValidationError);
}

TEST_CASE("commands vanish when the formation and orientations are already aligned") {
  const BearingConstraints c = square_constraints_3d();
  LocalFormationState s;
  s.positions = testsup::unit_square_3d();
  s.rotations.assign(4, Eigen::Matrix3d::Identity());
  for (int i = 1; i <= 4; ++i) {
    const BodyCommand cmd = body_control(i, s, c);
    REQUIRE(cmd.linear.norm() <= 1e-12);
    REQUIRE(cmd.angular.norm() <= 1e-12);
  }
}

TEST_CASE("two counter-rotated agents spin toward each other about z") {
  const OrientedGraph g = build_oriented_graph(2, {{1, 2}});
  Eigen::MatrixXd dir(3, 1);
  dir << 1, 0, 0;
  const BearingConstraints c = make_bearing_constraints(g, dir);
  Eigen::MatrixXd p(3, 2);
  p << 0, 1,
       0, 0,
       0, 0;
  for (double theta : {0.2, 0.6, 1.1}) {
    LocalFormationState s;
    s.positions = p;
    s.rotations = {rotation_z(theta), rotation_z(-theta)};
    const BodyCommand one = body_control(1, s, c);
    const BodyCommand two = body_control(2, s, c);
    const double rate = 2.0 * std::sin(2.0 * theta);
    REQUIRE((one.angular - Eigen::Vector3d(0, 0, -rate)).norm() <= 1e-12);
    REQUIRE((two.angular - Eigen::Vector3d(0, 0, rate)).norm() <= 1e-12);
  }
}

TEST_CASE("world-frame velocity agrees with a direct projected-mismatch evaluation") {
  Rng rng(6001);
  const BearingConstraints c = square_constraints_3d();
  for (int trial = 0; trial < 20; ++trial) {
    const LocalFormationState s = random_state(c, rng, 2.5);
    const LocalDerivative der = closed_loop_derivative(s, c);
    for (int i = 1; i <= 4; ++i) {
      Eigen::Vector3d expect = Eigen::Vector3d::Zero();
      for (int j : c.graph.base.neighbors_of(i)) {
        const int k = c.graph.edge_index(i, j);
        const double flip = (c.graph.tail(k) == i) ? 1.0 : -1.0;
        const Eigen::Vector3d g_star = flip * c.directions.col(k);
        const Eigen::Vector3d e = s.positions.col(j - 1) - s.positions.col(i - 1);
        expect -= projection(Eigen::VectorXd(e / e.norm())) *
                  ((s.rotations[i - 1] + s.rotations[j - 1]) * g_star);
      }
      REQUIRE((der.velocities.col(i - 1) - expect).norm() <= 1e-12);
      const BodyCommand cmd = body_control(i, s, c);
      REQUIRE((der.velocities.col(i - 1) - s.rotations[i - 1] * cmd.linear).norm() <= 1e-14);
    }
  }
}

TEST_CASE("commands are invariant under a global rigid motion") {
  Rng rng(6002);
  const BearingConstraints c = square_constraints_3d();
  for (int trial = 0; trial < 10; ++trial) {
    const LocalFormationState s = random_state(c, rng, 2.0);
    const Eigen::Matrix3d rot = so3_exp(testsup::random_vector(3, rng));
    const Eigen::Vector3d t = testsup::random_vector(3, rng);
    LocalFormationState moved;
    moved.positions = (rot * s.positions).colwise() + t;
    moved.rotations.reserve(4);
    for (const auto& q : s.rotations) moved.rotations.push_back(rot * q);
    for (int i = 1; i <= 4; ++i) {
      const BodyCommand a = body_control(i, s, c);
      const BodyCommand b = body_control(i, moved, c);
      REQUIRE((a.linear - b.linear).norm() <= 1e-12);
      REQUIRE((a.angular - b.angular).norm() <= 1e-12);
    }
  }
}

TEST_CASE("translation and scale of the formation are conserved by the flow") {
  Rng rng(6003);
  const BearingConstraints c = square_constraints_3d();
  for (int trial = 0; trial < 20; ++trial) {
    const LocalFormationState s = random_state(c, rng, 2.5);
    const LocalDerivative der = closed_loop_derivative(s, c);
    REQUIRE(der.velocities.rowwise().sum().norm() <= 1e-10);
    REQUIRE(std::abs(stack_columns(s.positions).dot(stack_columns(der.velocities))) <=
            1e-10 * stack_columns(s.positions).norm());
  }
}

TEST_CASE("both synchronized equilibria are stationary") {
  const BearingConstraints c = square_constraints_3d();
  const Eigen::Matrix3d q_star = so3_exp(Eigen::Vector3d(0.3, -0.5, 0.8));
  Eigen::MatrixXd aligned = q_star * testsup::unit_square_3d();
  aligned.colwise() += Eigen::Vector3d(0.5, -1.0, 2.0);

  LocalFormationState at_target{aligned, std::vector<Eigen::Matrix3d>(4, q_star)};
  const LocalDerivative da = closed_loop_derivative(at_target, c);
  REQUIRE(da.velocities.norm() <= 1e-12);
  for (const auto& w : da.body_rates) REQUIRE(w.norm() <= 1e-12);

  LocalFormationState at_reflection{reflected_configuration(aligned),
                                    std::vector<Eigen::Matrix3d>(4, q_star)};
  const LocalDerivative dr = closed_loop_derivative(at_reflection, c);
  REQUIRE(dr.velocities.norm() <= 1e-12);
  for (const auto& w : dr.body_rates) REQUIRE(w.norm() <= 1e-12);
}

TEST_CASE("orientation-input residual vanishes in sync and obeys the crude bound") {
  Rng rng(6004);
  const BearingConstraints c = square_constraints_3d();
  const Eigen::Matrix3d q_star = rotation_z(0.9);
  Eigen::MatrixXd aligned = q_star * testsup::unit_square_3d();
  LocalFormationState synced{aligned, std::vector<Eigen::Matrix3d>(4, q_star)};
  REQUIRE(input_norm(synced, c, q_star) <= 1e-12);

  for (int trial = 0; trial < 10; ++trial) {
    const LocalFormationState s = random_state(c, rng, 2.0);
    const Eigen::Matrix3d mean = mean_rotation(s.rotations);
    double bound = 0.0;
    for (int i = 1; i <= 4; ++i)
      for (int j : c.graph.base.neighbors_of(i))
        bound += spectral_norm(2.0 * mean - s.rotations[i - 1] - s.rotations[j - 1]);
    REQUIRE(input_norm(s, c, mean) <= bound + 1e-12);
  }
}

TEST_CASE("synchronization assumption check on canonical rotation sets") {
  const std::vector<Eigen::Matrix3d> all_identity(4, Eigen::Matrix3d::Identity());
  REQUIRE(check_sync_assumption(all_identity) == SyncAssumption::satisfied);

  const std::vector<Eigen::Matrix3d> opposed = {Eigen::Matrix3d::Identity(), rotation_z(kPi)};
  REQUIRE(check_sync_assumption(opposed) == SyncAssumption::not_satisfied);

  const std::vector<Eigen::Matrix3d> cone = {rotation_z(0.3), rotation_z(-0.25),
                                             so3_exp(Eigen::Vector3d(0.2, 0.1, 0.0)),
                                             so3_exp(Eigen::Vector3d(0.0, -0.3, 0.2))};
  REQUIRE(check_sync_assumption(cone) == SyncAssumption::satisfied);

  const std::vector<Eigen::Matrix3d> spread = {rotation_z(0.0), rotation_z(2.0 * kPi / 3.0),
                                               rotation_z(4.0 * kPi / 3.0)};
  REQUIRE(check_sync_assumption(spread) == SyncAssumption::inconclusive);

  REQUIRE_THROWS_AS(check_sync_assumption({}), ValidationError);
}

TEST_CASE("polar mean and pairwise disagreement of small rotation sets") {
  const Eigen::Matrix3d r = so3_exp(Eigen::Vector3d(0.4, 0.2, -0.7));
  REQUIRE((mean_rotation({r, r}) - r).norm() <= 1e-13);
  REQUIRE((mean_rotation({rotation_z(0.5), rotation_z(-0.5)}) - Eigen::Matrix3d::Identity())
              .norm() <= 1e-13);

  const double theta = 0.7;
  const double expected = 2.0 * std::sqrt(1.0 - std::cos(theta));
  REQUIRE(sync_error({Eigen::Matrix3d::Identity(), rotation_z(theta)}) ==
          Catch::Approx(expected).margin(1e-12));
  REQUIRE(sync_error({r}) == 0.0);
}
