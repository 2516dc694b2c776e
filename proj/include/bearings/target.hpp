#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <string>
#include <utility>

#include "bearings/errors.hpp"
#include "bearings/framework.hpp"
#include "bearings/linalg.hpp"
#include "bearings/rigidity.hpp"
#include "bearings/rng.hpp"

namespace bearings {

inline constexpr double kSignTestTolerance = 1e-9;

/// Desired unit bearing per canonical edge; the reverse edge implicitly
/// carries the negated bearing.
struct BearingConstraints {
  OrientedGraph graph;
  Eigen::MatrixXd directions;  // d x m, unit columns, one per canonical edge

  int dimension() const { return static_cast<int>(directions.rows()); }
  int edge_count() const { return static_cast<int>(directions.cols()); }
};

inline BearingConstraints make_bearing_constraints(OrientedGraph graph,
                                                   Eigen::MatrixXd directions,
                                                   double unit_tol = 1e-9) {
  const int d = static_cast<int>(directions.rows());
  if (d < 2) throw ValidationError("bearing constraints need dimension >= 2");
  if (directions.cols() != graph.edge_count())
    throw ValidationError("got " + std::to_string(directions.cols()) + " bearings for " +
                          std::to_string(graph.edge_count()) + " edges");
  if (!directions.allFinite()) throw ValidationError("bearing constraints contain non-finite entries");
  for (int k = 0; k < directions.cols(); ++k) {
    const double norm = directions.col(k).norm();
    if (std::abs(norm - 1.0) > unit_tol)
      throw ValidationError("bearing for edge (" + std::to_string(graph.tail(k)) + "," +
                            std::to_string(graph.head(k)) + ") has norm " + std::to_string(norm) +
                            ", expected a unit vector");
    directions.col(k) /= norm;
  }
  return BearingConstraints{std::move(graph), std::move(directions)};
}

/// Bearings of an existing framework read off as constraints. Round trip:
/// the framework's own configuration satisfies them.
inline BearingConstraints constraints_from_framework(const Framework& f) {
  return BearingConstraints{f.graph, bearing_set(f).bearings};
}

/// Constraint matrix diag(P_{g*_k}) * H_d. A configuration satisfies the
/// constraints, up to bearing sign, exactly when it lies in the null space.
inline Eigen::MatrixXd constraint_matrix(const BearingConstraints& c) {
  const int d = c.dimension();
  const int m = c.edge_count();
  const int n = c.graph.vertex_count();
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d) * m,
                                            static_cast<Eigen::Index>(d) * n);
  for (int k = 0; k < m; ++k) {
    const Eigen::MatrixXd block = projection(c.directions.col(k));
    r.block(k * d, (c.graph.tail(k) - 1) * d, d, d) = -block;
    r.block(k * d, (c.graph.head(k) - 1) * d, d, d) = block;
  }
  return r;
}

namespace detail {

/// Orthonormal basis of the d translation directions (1 kron I_d)/sqrt(n)
/// in stacked configuration space.
inline Eigen::MatrixXd translation_basis(int n, int d) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d) * n, d);
  const double inv = 1.0 / std::sqrt(static_cast<double>(n));
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < d; ++a) t(i * d + a, a) = inv;
  return t;
}

/// Orthonormal basis of the non-translation part of a null space.
/// Columns of `null_basis` are assumed orthonormal; translations are
/// projected out and the residual re-orthonormalized by SVD.
inline Eigen::MatrixXd non_translation_directions(const Eigen::MatrixXd& null_basis, int n, int d,
                                                  double rank_tol = kRankTolerance) {
  const Eigen::MatrixXd t = translation_basis(n, d);
  Eigen::MatrixXd residual = null_basis - t * (t.transpose() * null_basis);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(residual, Eigen::ComputeThinU);
  const auto& sigma = svd.singularValues();
  const double threshold =
      rank_tol * (sigma.size() > 0 ? sigma(0) : 0.0) *
      static_cast<double>(std::max(residual.rows(), residual.cols()));
  int rank = 0;
  for (Eigen::Index k = 0; k < sigma.size(); ++k)
    if (sigma(k) > threshold) ++rank;
  return svd.matrixU().leftCols(rank);
}

/// True when every edge vector of the configuration q points along its
/// constraint with positive, non-negligible length.
inline bool sign_consistent(const BearingConstraints& c, const Eigen::VectorXd& q,
                            double tol = kSignTestTolerance) {
  const int d = c.dimension();
  for (int k = 0; k < c.edge_count(); ++k) {
    const Eigen::VectorXd edge = q.segment((c.graph.head(k) - 1) * d, d) -
                                 q.segment((c.graph.tail(k) - 1) * d, d);
    if (edge.dot(c.directions.col(k)) <= tol) return false;
  }
  return true;
}

}  // namespace detail

struct FeasibilityResult {
  bool feasible = false;
  std::optional<Eigen::MatrixXd> witness;  // d x n configuration realizing the constraints
};

/// Searches the null space of the constraint matrix for a configuration
/// whose edge vectors point along every constraint with the right sign.
/// With nullity d+1 the non-translation direction is unique up to sign and
/// both signs are tried; larger null spaces are probed with seeded random
/// combinations before giving up.
inline FeasibilityResult feasibility_witness(const BearingConstraints& c,
                                             double rank_tol = kRankTolerance) {
  if (!is_connected(c.graph.base))
    throw ValidationError("feasibility test requires a connected graph");
  const int n = c.graph.vertex_count();
  const int d = c.dimension();

  const RankNullspace rn = rank_nullspace(constraint_matrix(c), rank_tol);
  const Eigen::MatrixXd dirs = detail::non_translation_directions(rn.nullspace, n, d, rank_tol);

  FeasibilityResult out;
  if (dirs.cols() == 0) return out;

  auto try_candidate = [&](const Eigen::VectorXd& q) {
    if (detail::sign_consistent(c, q)) {
      out.feasible = true;
      out.witness = unstack_columns(q, d);
      return true;
    }
    return false;
  };

  if (dirs.cols() == 1) {
    if (try_candidate(dirs.col(0))) return out;
    if (try_candidate(-dirs.col(0))) return out;
    return out;
  }

  for (Eigen::Index j = 0; j < dirs.cols(); ++j) {
    if (try_candidate(dirs.col(j))) return out;
    if (try_candidate(-dirs.col(j))) return out;
  }
  Rng rng(0x5eedfeedULL);
  for (int draw = 0; draw < 100; ++draw) {
    Eigen::VectorXd coeffs(dirs.cols());
    for (Eigen::Index j = 0; j < coeffs.size(); ++j) coeffs(j) = rng.normal();
    const double norm = coeffs.norm();
    if (norm < 1e-12) continue;
    const Eigen::VectorXd q = dirs * (coeffs / norm);
    if (try_candidate(q)) return out;
    if (try_candidate(-q)) return out;
  }
  return out;
}

/// Unique formation matching the constraints with prescribed centroid and
/// scale: p* = 1 kron x + alpha q, where x and the scale come from the
/// initial configuration and q spans the single non-translation null
/// direction of the constraint matrix.
struct TargetSolution {
  Eigen::MatrixXd p_star;   // d x n
  double alpha = 0.0;       // signed; |alpha| = s(0) * sqrt(n) for unit q
  Eigen::VectorXd x_shift;  // initial centroid
  Eigen::VectorXd q_basis;  // unit non-translation null direction, dn
  bool feasible = false;    // centroid, scale and bearing checks all passed
};

inline TargetSolution compute_target_at(const BearingConstraints& c, const Eigen::VectorXd& x,
                                        double s0, double rank_tol = kRankTolerance) {
  const int d = c.dimension();
  const int n = c.graph.vertex_count();
  if (x.size() != d)
    throw ValidationError("centroid has " + std::to_string(x.size()) + " entries, expected " +
                          std::to_string(d));
  if (!(s0 > 0.0)) throw ValidationError("scale must be positive");
  if (!is_connected(c.graph.base))
    throw ValidationError("target computation requires a connected graph");

  const RankNullspace rn = rank_nullspace(constraint_matrix(c), rank_tol);
  const int nullity = static_cast<int>(rn.nullspace.cols());
  if (nullity > d + 1)
    throw ValidationError("bearing constraints are not infinitesimally rigid (null space dimension " +
                          std::to_string(nullity) + " exceeds " + std::to_string(d + 1) +
                          "); the target formation is not unique");
  if (nullity < d + 1)
    throw ValidationError("bearing constraints admit no non-translation configuration (null space "
                          "dimension " + std::to_string(nullity) + ")");

  const Eigen::MatrixXd dirs = detail::non_translation_directions(rn.nullspace, n, d, rank_tol);
  if (dirs.cols() != 1)
    throw NumericError("non-translation null direction extraction returned " +
                       std::to_string(dirs.cols()) + " directions, expected 1");
  Eigen::VectorXd q = dirs.col(0);

  // Sign: the first edge whose q-difference is not orthogonal to its
  // constraint decides whether q or -q realizes the bearings.
  double sign = 0.0;
  for (int k = 0; k < c.edge_count() && sign == 0.0; ++k) {
    const Eigen::VectorXd edge = q.segment((c.graph.head(k) - 1) * d, d) -
                                 q.segment((c.graph.tail(k) - 1) * d, d);
    const double inner = edge.dot(c.directions.col(k));
    if (std::abs(inner) > kSignTestTolerance) sign = (inner > 0.0) ? 1.0 : -1.0;
  }
  if (sign == 0.0)
    throw ValidationError("sign of the target direction is ambiguous: every edge of the null "
                          "direction is orthogonal to its bearing constraint");

  const double alpha = sign * s0 * std::sqrt(static_cast<double>(n)) / q.norm();

  TargetSolution sol;
  sol.alpha = alpha;
  sol.x_shift = x;
  sol.q_basis = q;
  sol.p_star = unstack_columns(alpha * q, d);
  sol.p_star.colwise() += x;

  // Verify centroid, scale, and every edge bearing before reporting success.
  bool ok = (centroid(sol.p_star) - x).norm() <= 1e-9 &&
            std::abs(formation_scale(sol.p_star) - s0) <= 1e-9;
  if (ok) {
    for (int k = 0; k < c.edge_count() && ok; ++k) {
      const Eigen::VectorXd e =
          sol.p_star.col(c.graph.head(k) - 1) - sol.p_star.col(c.graph.tail(k) - 1);
      const double len = e.norm();
      ok = len > kSeparationTolerance && (e / len - c.directions.col(k)).norm() <= 1e-8;
    }
  }
  sol.feasible = ok;
  return sol;
}

/// Target with the centroid and scale of an initial configuration, the
/// quantities the control laws preserve.
inline TargetSolution compute_target(const BearingConstraints& c, const Eigen::MatrixXd& p0,
                                     double rank_tol = kRankTolerance) {
  const int d = c.dimension();
  const int n = c.graph.vertex_count();
  if (p0.rows() != d || p0.cols() != n)
    throw ValidationError("initial configuration is " + std::to_string(p0.rows()) + "x" +
                          std::to_string(p0.cols()) + ", expected " + std::to_string(d) + "x" +
                          std::to_string(n));
  return compute_target_at(c, centroid(p0), formation_scale(p0), rank_tol);
}

/// Offset of each target position from the target centroid, stacked.
/// This is the r* vector entering the equilibrium and collision analysis
/// of the control laws.
inline Eigen::VectorXd centered_offsets(const Eigen::MatrixXd& p_star) {
  Eigen::MatrixXd centered = p_star.colwise() - centroid(p_star).eval();
  return stack_columns(centered);
}

}  // namespace bearings
