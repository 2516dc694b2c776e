#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "bearings/errors.hpp"
#include "bearings/framework.hpp"
#include "bearings/so3.hpp"
#include "bearings/target.hpp"

namespace bearings {

/// Poses of all agents in R^3: positions as columns, one rotation each.
/// The bearing constraints are expressed in the common frame the
/// orientations synchronize to.
struct LocalFormationState {
  Eigen::MatrixXd positions;            // 3 x n
  std::vector<Eigen::Matrix3d> rotations;  // n, world from body
};

inline void validate_local_state(const LocalFormationState& state, const BearingConstraints& c,
                                 double rotation_tol = kRotationTolerance) {
  if (c.dimension() != 3)
    throw ValidationError("the local-frame law is defined in dimension 3, constraints have "
                          "dimension " + std::to_string(c.dimension()));
  const int n = c.graph.vertex_count();
  if (state.positions.rows() != 3 || state.positions.cols() != n)
    throw ValidationError("positions are " + std::to_string(state.positions.rows()) + "x" +
                          std::to_string(state.positions.cols()) + ", expected 3x" +
                          std::to_string(n));
  if (static_cast<int>(state.rotations.size()) != n)
    throw ValidationError("got " + std::to_string(state.rotations.size()) + " rotations for " +
                          std::to_string(n) + " agents");
  for (const auto& q : state.rotations) require_rotation(q, rotation_tol);
}

/// Body-frame command of one agent: linear velocity from the projected
/// bearing mismatch, angular velocity from the relative-orientation sum.
/// Consumes only quantities the agent can sense locally: its body-frame
/// bearings g^b_ij = Q_i^T g_ij and relative orientations Q_i^T Q_j.
struct BodyCommand {
  Eigen::Vector3d linear = Eigen::Vector3d::Zero();
  Eigen::Vector3d angular = Eigen::Vector3d::Zero();
};

inline BodyCommand body_control(int agent, const LocalFormationState& state,
                                const BearingConstraints& c,
                                double sep_tolerance = kSeparationTolerance) {
  const int n = c.graph.vertex_count();
  if (agent < 1 || agent > n)
    throw ValidationError("agent index " + std::to_string(agent) + " outside 1.." +
                          std::to_string(n));
  const Eigen::Matrix3d& qi = state.rotations[agent - 1];

  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  Eigen::Matrix3d w_skew = Eigen::Matrix3d::Zero();
  for (int j : c.graph.base.neighbors_of(agent)) {
    const int k = c.graph.edge_index(agent, j);
    // Constraints are stored for the canonical orientation; flip when this
    // agent is the head.
    const double dir = (c.graph.tail(k) == agent) ? 1.0 : -1.0;
    const Eigen::Vector3d g_star = dir * c.directions.col(k);

    const Eigen::Vector3d e = state.positions.col(j - 1) - state.positions.col(agent - 1);
    const double len = e.norm();
    if (!(len > sep_tolerance)) throw DegenerateEdgeError(std::min(agent, j), std::max(agent, j));
    const Eigen::Vector3d g_body = qi.transpose() * (e / len);

    const Eigen::Matrix3d& qj = state.rotations[j - 1];
    v -= projection(g_body) * (Eigen::Matrix3d::Identity() + qi.transpose() * qj) * g_star;
    w_skew -= qj.transpose() * qi - qi.transpose() * qj;
  }
  // Each summand is a difference M - M^T, so the sum is skew-symmetric
  // exactly, not just up to roundoff.
  BodyCommand cmd;
  cmd.linear = v;
  cmd.angular = unskew(w_skew);
  return cmd;
}

/// Closed-loop derivative of all poses in the world frame:
/// pdot_i = Q_i v_i^b and Qdot_i = Q_i skew(w_i^b).
struct LocalDerivative {
  Eigen::MatrixXd velocities;  // 3 x n
  std::vector<Eigen::Vector3d> body_rates;  // w_i^b per agent
};

inline LocalDerivative closed_loop_derivative(const LocalFormationState& state,
                                              const BearingConstraints& c,
                                              double sep_tolerance = kSeparationTolerance) {
  const int n = c.graph.vertex_count();
  LocalDerivative out;
  out.velocities.resize(3, n);
  out.body_rates.resize(n);
  for (int i = 1; i <= n; ++i) {
    const BodyCommand cmd = body_control(i, state, c, sep_tolerance);
    out.velocities.col(i - 1) = state.rotations[i - 1] * cmd.linear;
    out.body_rates[i - 1] = cmd.angular;
  }
  return out;
}

/// Residual forcing of the position error once orientations are treated as
/// an exogenous input: h_i = sum_j P_{g_ij} (2 Q* - Q_i - Q_j) g*_ij.
/// Vanishes when every orientation reaches the common limit.
inline double input_norm(const LocalFormationState& state, const BearingConstraints& c,
                         const Eigen::Matrix3d& q_star,
                         double sep_tolerance = kSeparationTolerance) {
  const int n = c.graph.vertex_count();
  double sq = 0.0;
  for (int i = 1; i <= n; ++i) {
    Eigen::Vector3d h = Eigen::Vector3d::Zero();
    for (int j : c.graph.base.neighbors_of(i)) {
      const int k = c.graph.edge_index(i, j);
      const double dir = (c.graph.tail(k) == i) ? 1.0 : -1.0;
      const Eigen::Vector3d g_star = dir * c.directions.col(k);
      const Eigen::Vector3d e = state.positions.col(j - 1) - state.positions.col(i - 1);
      const double len = e.norm();
      if (!(len > sep_tolerance)) throw DegenerateEdgeError(std::min(i, j), std::max(i, j));
      h += projection(Eigen::VectorXd(e / len)) *
           ((2.0 * q_star - state.rotations[i - 1] - state.rotations[j - 1]) * g_star);
    }
    sq += h.squaredNorm();
  }
  return std::sqrt(sq);
}

enum class SyncAssumption { satisfied, not_satisfied, inconclusive };

inline const char* to_string(SyncAssumption a) {
  switch (a) {
    case SyncAssumption::satisfied: return "satisfied";
    case SyncAssumption::not_satisfied: return "not_satisfied";
    default: return "inconclusive";
  }
}

/// Best-effort test for the existence of a frame from which every agent's
/// rotation is less than a quarter turn away. The chordal mean's polar
/// factor serves as the candidate; a pair a half turn or more apart rules
/// any candidate out.
inline SyncAssumption check_sync_assumption(const std::vector<Eigen::Matrix3d>& rotations,
                                            double margin = 1e-9) {
  if (rotations.empty()) throw ValidationError("no rotations given");
  for (const auto& q : rotations) require_rotation(q, 1e-6);

  constexpr double kPi = 3.141592653589793238462643383280;
  for (std::size_t i = 0; i < rotations.size(); ++i)
    for (std::size_t j = i + 1; j < rotations.size(); ++j)
      if (rotation_angle(rotations[i].transpose() * rotations[j]) >= kPi - margin)
        return SyncAssumption::not_satisfied;

  Eigen::Matrix3d mean = Eigen::Matrix3d::Zero();
  for (const auto& q : rotations) mean += q;
  mean /= static_cast<double>(rotations.size());
  if (mean.jacobiSvd().singularValues().minCoeff() < 1e-9) return SyncAssumption::inconclusive;

  const Eigen::Matrix3d q0 = project_to_rotation(mean);
  for (const auto& q : rotations)
    if (rotation_angle(q0.transpose() * q) >= kPi / 2.0 - margin)
      return SyncAssumption::inconclusive;
  return SyncAssumption::satisfied;
}

/// Polar-projected arithmetic mean, the consistent estimator of a common
/// orientation limit.
inline Eigen::Matrix3d mean_rotation(const std::vector<Eigen::Matrix3d>& rotations) {
  if (rotations.empty()) throw ValidationError("no rotations given");
  Eigen::Matrix3d mean = Eigen::Matrix3d::Zero();
  for (const auto& q : rotations) mean += q;
  return project_to_rotation(mean / static_cast<double>(rotations.size()));
}

/// Largest pairwise orientation disagreement max_{i,j} |Q_i^T Q_j - I|.
inline double sync_error(const std::vector<Eigen::Matrix3d>& rotations) {
  double worst = 0.0;
  for (std::size_t i = 0; i < rotations.size(); ++i)
    for (std::size_t j = i + 1; j < rotations.size(); ++j)
      worst = std::max(worst, (rotations[i].transpose() * rotations[j] -
                               Eigen::Matrix3d::Identity()).norm());
  return worst;
}

}  // namespace bearings
