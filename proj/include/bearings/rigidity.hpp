#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>

#include "bearings/errors.hpp"
#include "bearings/framework.hpp"
#include "bearings/graph.hpp"
#include "bearings/linalg.hpp"

namespace bearings {

inline constexpr double kRankTolerance = 1e-10;
inline constexpr double kEquivalenceTolerance = 1e-8;

/// Bearing rigidity matrix, the Jacobian of the stacked bearing function:
/// block row k equals (P_{g_k} / |e_k|) times row k of the lifted incidence
/// matrix. Always annihilates translations (1 kron v) and the configuration
/// itself.
inline Eigen::MatrixXd bearing_rigidity_matrix(const Framework& f) {
  const int d = f.dimension();
  const int m = f.edge_count();
  const int n = f.vertex_count();
  const BearingSet bs = bearing_set(f);

  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d) * m,
                                            static_cast<Eigen::Index>(d) * n);
  for (int k = 0; k < m; ++k) {
    const Eigen::MatrixXd block = projection(bs.bearings.col(k)) / bs.lengths(k);
    r.block(k * d, (f.graph.tail(k) - 1) * d, d, d) = -block;
    r.block(k * d, (f.graph.head(k) - 1) * d, d, d) = block;
  }
  return r;
}

/// Rigidity classification of a framework.
///
/// Infinitesimal rigidity: rank(R) reaches dn - d - 1, the maximum left
/// over once translations and scaling are quotiented out. Global rigidity:
/// the edge set already pins down every pairwise bearing, i.e. rank(R)
/// equals the rank of the complete-graph matrix on the same positions.
/// The two notions "rigid" and "globally rigid" coincide, so the report
/// carries one flag for both.
struct RigidityReport {
  int rank_R = 0;
  int nullity_R = 0;
  int rank_R_complete = 0;
  bool infinitesimally_bearing_rigid = false;
  bool globally_bearing_rigid = false;
  bool bearing_rigid = false;
  Eigen::MatrixXd null_basis;  // dn x nullity_R, orthonormal
  double rank_tolerance = kRankTolerance;
};

namespace detail {

inline void require_pairwise_distinct(const Eigen::MatrixXd& positions, double sep_tolerance) {
  const int n = static_cast<int>(positions.cols());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if ((positions.col(j) - positions.col(i)).norm() <= sep_tolerance)
        throw DegenerateEdgeError(i + 1, j + 1);
}

}  // namespace detail

inline RigidityReport rigidity_report(const Framework& f, double rank_tol = kRankTolerance) {
  detail::require_pairwise_distinct(f.positions, f.sep_tolerance);

  const int d = f.dimension();
  const int n = f.vertex_count();
  const Eigen::MatrixXd r = bearing_rigidity_matrix(f);
  const RankNullspace rn = rank_nullspace(r, rank_tol);

  Framework complete = make_framework(orient(complete_graph(n)), f.positions, f.sep_tolerance);
  const int rank_complete = matrix_rank(bearing_rigidity_matrix(complete), rank_tol);

  RigidityReport report;
  report.rank_R = rn.rank;
  report.nullity_R = d * n - rn.rank;
  report.rank_R_complete = rank_complete;
  report.infinitesimally_bearing_rigid = (rn.rank == d * n - d - 1);
  report.globally_bearing_rigid = (rn.rank == rank_complete);
  report.bearing_rigid = report.globally_bearing_rigid;
  report.null_basis = rn.nullspace;
  report.rank_tolerance = rank_tol;
  return report;
}

namespace detail {

inline void require_same_shape(const Framework& f, const Eigen::MatrixXd& p_other) {
  if (p_other.rows() != f.dimension() || p_other.cols() != f.vertex_count())
    throw ValidationError("other configuration is " + std::to_string(p_other.rows()) + "x" +
                          std::to_string(p_other.cols()) + ", expected " +
                          std::to_string(f.dimension()) + "x" +
                          std::to_string(f.vertex_count()));
}

}  // namespace detail

/// Two configurations share all edge bearings exactly when p' lies in the
/// null space of R(p); tested as |R(p) p'| <= tol |p'|.
inline bool bearing_equivalent(const Framework& f, const Eigen::MatrixXd& p_other,
                               double tol = kEquivalenceTolerance) {
  detail::require_same_shape(f, p_other);
  const Eigen::VectorXd p_prime = stack_columns(p_other);
  return (bearing_rigidity_matrix(f) * p_prime).norm() <= tol * p_prime.norm();
}

/// Same test against the complete-graph matrix: all pairwise bearings agree.
inline bool bearing_congruent(const Framework& f, const Eigen::MatrixXd& p_other,
                              double tol = kEquivalenceTolerance) {
  detail::require_same_shape(f, p_other);
  detail::require_pairwise_distinct(f.positions, f.sep_tolerance);
  Framework complete = make_framework(orient(complete_graph(f.vertex_count())), f.positions,
                                      f.sep_tolerance);
  const Eigen::VectorXd p_prime = stack_columns(p_other);
  return (bearing_rigidity_matrix(complete) * p_prime).norm() <= tol * p_prime.norm();
}

/// Zero-pad every position into a higher ambient dimension. Rigidity is
/// dimension-invariant: the lifted matrix gains exactly (d_new - d)(n - 1)
/// rank, so the infinitesimal-rigidity flag is preserved.
inline Framework lift_dimension(const Framework& f, int d_new) {
  const int d = f.dimension();
  if (d_new <= d)
    throw ValidationError("lift target dimension " + std::to_string(d_new) +
                          " must exceed current dimension " + std::to_string(d));
  Eigen::MatrixXd lifted = Eigen::MatrixXd::Zero(d_new, f.vertex_count());
  lifted.topRows(d) = f.positions;
  return make_framework(f.graph, std::move(lifted), f.sep_tolerance);
}

}  // namespace bearings
