#pragma once

#include <Eigen/Dense>
#include <string>

#include "bearings/errors.hpp"
#include "bearings/framework.hpp"
#include "bearings/linalg.hpp"
#include "bearings/rigidity.hpp"

namespace bearings {

/// Distance rigidity matrix, the Jacobian of the half-squared edge lengths:
/// row k = e_k^T times block row k of the lifted incidence matrix.
inline Eigen::MatrixXd distance_rigidity_matrix(const Framework& f) {
  const int d = f.dimension();
  const int m = f.edge_count();
  const int n = f.vertex_count();
  const BearingSet bs = bearing_set(f);

  Eigen::MatrixXd rd = Eigen::MatrixXd::Zero(m, static_cast<Eigen::Index>(d) * n);
  for (int k = 0; k < m; ++k) {
    const Eigen::RowVectorXd et = bs.edge_vectors.col(k).transpose();
    rd.block(k, (f.graph.tail(k) - 1) * d, 1, d) = -et;
    rd.block(k, (f.graph.head(k) - 1) * d, 1, d) = et;
  }
  return rd;
}

/// Stacked half-squared edge lengths, the function whose Jacobian is the
/// distance rigidity matrix.
inline Eigen::VectorXd distance_function(const OrientedGraph& graph,
                                         const Eigen::MatrixXd& positions) {
  const int m = graph.edge_count();
  Eigen::VectorXd out(m);
  for (int k = 0; k < m; ++k)
    out(k) =
        0.5 * (positions.col(graph.head(k) - 1) - positions.col(graph.tail(k) - 1)).squaredNorm();
  return out;
}

struct DistanceRigidityReport {
  int rank_RD = 0;
  int required_rank = 0;
  bool infinitesimally_distance_rigid = false;
};

/// Rank test for infinitesimal distance rigidity. The required rank
/// dn - d(d+1)/2 quotients out rigid motions; with fewer points than
/// dimensions the attainable maximum is n(n-1)/2 instead.
inline DistanceRigidityReport distance_rigidity_report(const Framework& f,
                                                       double rank_tol = kRankTolerance) {
  const int d = f.dimension();
  const int n = f.vertex_count();
  DistanceRigidityReport report;
  report.rank_RD = matrix_rank(distance_rigidity_matrix(f), rank_tol);
  report.required_rank = (n >= d) ? d * n - d * (d + 1) / 2 : n * (n - 1) / 2;
  report.infinitesimally_distance_rigid = (report.rank_RD == report.required_rank);
  return report;
}

/// Counter-clockwise quarter turn applied to each 2-block of a planar
/// variation: (x, y) -> (-y, x). Maps bearing-preserving motions onto
/// distance-preserving ones and back.
inline Eigen::VectorXd perp_motion(const Eigen::VectorXd& dp) {
  if (dp.size() % 2 != 0)
    throw ValidationError("perpendicular motion is defined for planar variations only, length " +
                          std::to_string(dp.size()) + " is odd");
  Eigen::VectorXd out(dp.size());
  for (Eigen::Index i = 0; i < dp.size(); i += 2) {
    out(i) = -dp(i + 1);
    out(i + 1) = dp(i);
  }
  return out;
}

/// The quarter-turn matrix used by perp_motion.
inline Eigen::Matrix2d quarter_turn() {
  Eigen::Matrix2d q;
  q << 0.0, -1.0, 1.0, 0.0;
  return q;
}

}  // namespace bearings
