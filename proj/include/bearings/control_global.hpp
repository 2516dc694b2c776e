#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bearings/errors.hpp"
#include "bearings/framework.hpp"
#include "bearings/linalg.hpp"
#include "bearings/target.hpp"

namespace bearings {

/// Velocity command of the bearing-only formation law, stacked over agents:
/// v_i = -sum_{j in N_i} P_{g_ij} g*_ij. Uses measured bearings only; each
/// agent's speed is bounded by its degree.
inline Eigen::VectorXd control_velocity(const Eigen::MatrixXd& positions,
                                        const BearingConstraints& c,
                                        double sep_tolerance = kSeparationTolerance) {
  const int d = c.dimension();
  const BearingSet bs = bearing_set(c.graph, positions, sep_tolerance);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d) * positions.cols());
  for (int k = 0; k < c.edge_count(); ++k) {
    const Eigen::VectorXd push = projection(bs.bearings.col(k)) * c.directions.col(k);
    v.segment((c.graph.tail(k) - 1) * d, d) -= push;
    v.segment((c.graph.head(k) - 1) * d, d) += push;
  }
  return v;
}

/// Jacobian of the velocity field at the given configuration. Off-diagonal
/// block (i,j) for an edge is G_ij P_{g_ij} / |e_ij| with
/// G_ij = (g_ij . g*_ij) I + g_ij g*_ij^T; diagonal blocks make each block
/// row sum to zero.
inline Eigen::MatrixXd control_jacobian(const Eigen::MatrixXd& positions,
                                        const BearingConstraints& c,
                                        double sep_tolerance = kSeparationTolerance) {
  const int d = c.dimension();
  const int n = static_cast<int>(positions.cols());
  const BearingSet bs = bearing_set(c.graph, positions, sep_tolerance);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d) * n,
                                            static_cast<Eigen::Index>(d) * n);
  for (int k = 0; k < c.edge_count(); ++k) {
    const Eigen::VectorXd g = bs.bearings.col(k);
    const Eigen::VectorXd gs = c.directions.col(k);
    // Reversing the edge negates both bearings, so the same block serves
    // both directions.
    const Eigen::MatrixXd block =
        ((g.dot(gs) * Eigen::MatrixXd::Identity(d, d) + g * gs.transpose()) * projection(g)) /
        bs.lengths(k);
    const int i = c.graph.tail(k) - 1;
    const int j = c.graph.head(k) - 1;
    a.block(i * d, j * d, d, d) += block;
    a.block(j * d, i * d, d, d) += block;
    a.block(i * d, i * d, d, d) -= block;
    a.block(j * d, j * d, d, d) -= block;
  }
  return a;
}

enum class EquilibriumClass { desired, reflected, none };

/// The closed loop has exactly two equilibria: the target itself and its
/// point reflection through the target centroid.
inline Eigen::MatrixXd reflected_configuration(const Eigen::MatrixXd& p_star) {
  Eigen::MatrixXd out = -p_star;
  out.colwise() += 2.0 * centroid(p_star);
  return out;
}

inline EquilibriumClass classify_equilibrium(const Eigen::MatrixXd& p, const Eigen::MatrixXd& p_star,
                                             double tol = 1e-6) {
  if (p.rows() != p_star.rows() || p.cols() != p_star.cols())
    throw ValidationError("configuration and target have different shapes");
  const double r_star_norm = centered_offsets(p_star).norm();
  if ((p - p_star).norm() <= tol * r_star_norm) return EquilibriumClass::desired;
  if ((p - reflected_configuration(p_star)).norm() <= tol * r_star_norm)
    return EquilibriumClass::reflected;
  return EquilibriumClass::none;
}

/// Largest admissible initial error guaranteeing pairwise distances stay
/// above gamma: (min pairwise target distance - gamma) / sqrt(n).
inline double collision_bound(const Eigen::MatrixXd& p_star, double gamma) {
  const int n = static_cast<int>(p_star.cols());
  if (n < 2) throw ValidationError("collision bound needs at least 2 agents");
  double min_dist = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      min_dist = std::min(min_dist, (p_star.col(j) - p_star.col(i)).norm());
  if (!(gamma >= 0.0) || gamma >= min_dist)
    throw ValidationError("safety distance gamma = " + std::to_string(gamma) +
                          " must lie in [0, " + std::to_string(min_dist) +
                          "), the minimum pairwise target distance");
  return (min_dist - gamma) / std::sqrt(static_cast<double>(n));
}

/// Smallest positive eigenvalue of the constraint matrix Gram R~^T R~,
/// eigenvalue d+2 in ascending order. Quantifies how strongly the
/// constraints pin the shape; near zero means the constraints are not
/// infinitesimally rigid and `is_rigid` is cleared.
struct DegreeOfRigidity {
  double lambda = 0.0;
  bool is_rigid = false;
};

inline DegreeOfRigidity degree_of_rigidity(const BearingConstraints& c,
                                           double rank_tol = kRankTolerance) {
  const int d = c.dimension();
  const int n = c.graph.vertex_count();
  const Eigen::MatrixXd r = constraint_matrix(c);
  DegreeOfRigidity out;
  out.is_rigid = (matrix_rank(r, rank_tol) == d * n - d - 1);
  out.lambda = symmetric_eigenvalues(r.transpose() * r)(d + 1);
  return out;
}

/// Angle between the error delta = p - p* and the inward direction -r*.
/// At delta = 0 the angle is undefined; pi/2 is returned so the derived
/// rate bound takes its largest value at convergence.
inline double error_angle(const Eigen::VectorXd& delta, const Eigen::VectorXd& r_star) {
  const double dn = delta.norm();
  const double rn = r_star.norm();
  if (rn <= 0.0) throw ValidationError("target has zero extent, r* = 0");
  if (dn <= 1e-14 * rn) return 1.5707963267948966;
  double cosine = delta.dot(-r_star) / (dn * rn);
  cosine = std::clamp(cosine, -1.0, 1.0);
  return std::acos(cosine);
}

/// Conservative Lyapunov constants: alpha = min_k |e*_k| / (4 (n-1) s^2)
/// and rate K = 2 alpha lambda sin^2(theta0). Diagnostics only; the law
/// itself never consumes them.
inline double lyapunov_alpha(const Framework& target) {
  const BearingSet bs = bearing_set(target);
  const double s = formation_scale(target.positions);
  const int n = target.vertex_count();
  return bs.lengths.minCoeff() / (4.0 * (n - 1) * s * s);
}

inline double convergence_rate(double alpha, double lambda, double theta0) {
  const double s = std::sin(theta0);
  return 2.0 * alpha * lambda * s * s;
}

}  // namespace bearings
