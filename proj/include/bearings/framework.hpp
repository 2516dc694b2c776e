#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <utility>

#include "bearings/errors.hpp"
#include "bearings/graph.hpp"

namespace bearings {

/// Edges shorter than this have no well-defined bearing.
inline constexpr double kSeparationTolerance = 1e-9;

/// Orthogonal projection onto the complement of x: I - (x/|x|)(x/|x|)^T.
/// Symmetric, idempotent, PSD; annihilates exactly the multiples of x.
inline Eigen::MatrixXd projection(const Eigen::VectorXd& x, double eps = kSeparationTolerance) {
  const double norm = x.norm();
  if (!(norm > eps))
    throw ValidationError("projection of a (near-)zero vector is undefined, |x| = " +
                          std::to_string(norm));
  const Eigen::VectorXd u = x / norm;
  return Eigen::MatrixXd::Identity(x.size(), x.size()) - u * u.transpose();
}

/// Column i-1 holds the position of vertex i. Stacking columns gives the
/// configuration vector p of length d*n.
inline Eigen::VectorXd stack_columns(const Eigen::MatrixXd& positions) {
  return Eigen::Map<const Eigen::VectorXd>(positions.data(), positions.size());
}

inline Eigen::MatrixXd unstack_columns(const Eigen::VectorXd& p, int d) {
  if (d < 1 || p.size() % d != 0)
    throw ValidationError("configuration length " + std::to_string(p.size()) +
                          " is not a multiple of dimension " + std::to_string(d));
  return Eigen::Map<const Eigen::MatrixXd>(p.data(), d, p.size() / d);
}

/// A graph embedded in R^d. Construction checks that every edge has
/// separated endpoints; operations downstream may then divide by edge
/// lengths freely.
struct Framework {
  OrientedGraph graph;
  Eigen::MatrixXd positions;  // d x n
  double sep_tolerance = kSeparationTolerance;

  int dimension() const { return static_cast<int>(positions.rows()); }
  int vertex_count() const { return graph.vertex_count(); }
  int edge_count() const { return graph.edge_count(); }

  Eigen::VectorXd position(int vertex) const { return positions.col(vertex - 1); }
  Eigen::VectorXd stacked() const { return stack_columns(positions); }
};

inline Framework make_framework(OrientedGraph graph, Eigen::MatrixXd positions,
                                double sep_tolerance = kSeparationTolerance) {
  const int d = static_cast<int>(positions.rows());
  const int n = graph.vertex_count();
  if (d < 2)
    throw ValidationError("ambient dimension must be >= 2, got " + std::to_string(d));
  if (positions.cols() != n)
    throw ValidationError("configuration has " + std::to_string(positions.cols()) +
                          " positions for " + std::to_string(n) + " vertices");
  if (!positions.allFinite()) throw ValidationError("configuration contains non-finite entries");

  for (int k = 0; k < graph.edge_count(); ++k) {
    const int i = graph.tail(k);
    const int j = graph.head(k);
    if ((positions.col(j - 1) - positions.col(i - 1)).norm() <= sep_tolerance)
      throw DegenerateEdgeError(i, j);
  }
  return Framework{std::move(graph), std::move(positions), sep_tolerance};
}

inline Framework make_framework(int n, std::vector<std::pair<int, int>> edges,
                                Eigen::MatrixXd positions,
                                double sep_tolerance = kSeparationTolerance) {
  return make_framework(build_oriented_graph(n, std::move(edges)), std::move(positions),
                        sep_tolerance);
}

inline Eigen::VectorXd centroid(const Eigen::MatrixXd& positions) {
  return positions.rowwise().mean();
}

/// Formation scale s = |p - 1 kron centroid| / sqrt(n), the root-mean-square
/// distance of the agents from their centroid.
inline double formation_scale(const Eigen::MatrixXd& positions) {
  const Eigen::MatrixXd centered = positions.colwise() - centroid(positions).eval();
  return centered.norm() / std::sqrt(static_cast<double>(positions.cols()));
}

/// Per-edge geometry in the canonical orientation: edge vector e_k from
/// tail to head, its length, and the unit bearing g_k = e_k / |e_k|.
struct BearingSet {
  Eigen::MatrixXd edge_vectors;  // d x m
  Eigen::MatrixXd bearings;      // d x m, unit columns
  Eigen::VectorXd lengths;       // m

  int dimension() const { return static_cast<int>(bearings.rows()); }
  int edge_count() const { return static_cast<int>(bearings.cols()); }

  /// Stacked bearing vector g of length d*m, the value of the bearing
  /// function at the framework's configuration.
  Eigen::VectorXd stacked_bearings() const { return stack_columns(bearings); }
};

inline BearingSet bearing_set(const OrientedGraph& graph, const Eigen::MatrixXd& positions,
                              double sep_tolerance = kSeparationTolerance) {
  const int d = static_cast<int>(positions.rows());
  const int m = graph.edge_count();
  BearingSet out;
  out.edge_vectors.resize(d, m);
  out.bearings.resize(d, m);
  out.lengths.resize(m);
  for (int k = 0; k < m; ++k) {
    const Eigen::VectorXd e = positions.col(graph.head(k) - 1) - positions.col(graph.tail(k) - 1);
    const double len = e.norm();
    if (!(len > sep_tolerance)) throw DegenerateEdgeError(graph.tail(k), graph.head(k));
    out.edge_vectors.col(k) = e;
    out.bearings.col(k) = e / len;
    out.lengths(k) = len;
  }
  return out;
}

inline BearingSet bearing_set(const Framework& f) {
  return bearing_set(f.graph, f.positions, f.sep_tolerance);
}

/// Stacked bearing function evaluated at an arbitrary configuration on the
/// framework's graph. Used for finite-difference checks of the rigidity
/// matrix.
inline Eigen::VectorXd bearing_function(const OrientedGraph& graph,
                                        const Eigen::MatrixXd& positions,
                                        double sep_tolerance = kSeparationTolerance) {
  return bearing_set(graph, positions, sep_tolerance).stacked_bearings();
}

}  // namespace bearings
