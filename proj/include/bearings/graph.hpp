#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "bearings/errors.hpp"

namespace bearings {

/// Undirected graph on vertices 1..n with canonically ordered edge list.
///
/// Every edge {i,j} is stored as (min,max) and the list is sorted
/// lexicographically, so two graphs with the same edge set compare equal
/// and produce identical matrices.
struct Graph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;   // (min, max), sorted
  std::vector<std::vector<int>> neighbors;  // 1-based; neighbors[0] unused

  int edge_count() const { return static_cast<int>(edges.size()); }

  const std::vector<int>& neighbors_of(int vertex) const { return neighbors[vertex]; }

  bool has_edge(int i, int j) const {
    if (i > j) std::swap(i, j);
    return std::binary_search(edges.begin(), edges.end(), std::make_pair(i, j));
  }
};

/// Graph together with the canonical orientation: edge k points from its
/// smaller endpoint (tail) to its larger endpoint (head), k = 0..m-1.
struct OrientedGraph {
  Graph base;

  int vertex_count() const { return base.n; }
  int edge_count() const { return base.edge_count(); }
  int tail(int k) const { return base.edges[k].first; }
  int head(int k) const { return base.edges[k].second; }

  /// Index of edge {i,j} in the canonical list, or -1 if absent.
  int edge_index(int i, int j) const {
    if (i > j) std::swap(i, j);
    auto it = std::lower_bound(base.edges.begin(), base.edges.end(), std::make_pair(i, j));
    if (it == base.edges.end() || *it != std::make_pair(i, j)) return -1;
    return static_cast<int>(it - base.edges.begin());
  }
};

inline Graph build_graph(int n, std::vector<std::pair<int, int>> edges) {
  if (n < 2) throw ValidationError("graph needs at least 2 vertices, got " + std::to_string(n));
  for (auto& [i, j] : edges) {
    if (i == j)
      throw ValidationError("self-loop at vertex " + std::to_string(i));
    if (i < 1 || i > n || j < 1 || j > n)
      throw ValidationError("edge (" + std::to_string(i) + "," + std::to_string(j) +
                            ") has endpoint outside 1.." + std::to_string(n));
    if (i > j) std::swap(i, j);
  }
  std::sort(edges.begin(), edges.end());
  for (std::size_t k = 1; k < edges.size(); ++k) {
    if (edges[k] == edges[k - 1])
      throw ValidationError("duplicate edge (" + std::to_string(edges[k].first) + "," +
                            std::to_string(edges[k].second) + ")");
  }

  Graph g;
  g.n = n;
  g.edges = std::move(edges);
  g.neighbors.assign(static_cast<std::size_t>(n) + 1, {});
  for (const auto& [i, j] : g.edges) {
    g.neighbors[i].push_back(j);
    g.neighbors[j].push_back(i);
  }
  for (auto& nb : g.neighbors) std::sort(nb.begin(), nb.end());
  return g;
}

inline OrientedGraph orient(Graph g) { return OrientedGraph{std::move(g)}; }

inline OrientedGraph build_oriented_graph(int n, std::vector<std::pair<int, int>> edges) {
  return orient(build_graph(n, std::move(edges)));
}

inline Graph complete_graph(int n) {
  if (n < 2) throw ValidationError("complete graph needs n >= 2, got " + std::to_string(n));
  std::vector<std::pair<int, int>> edges;
  edges.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j) edges.emplace_back(i, j);
  return build_graph(n, std::move(edges));
}

inline bool is_connected(const Graph& g) {
  std::vector<bool> seen(static_cast<std::size_t>(g.n) + 1, false);
  std::vector<int> stack{1};
  seen[1] = true;
  int count = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int w : g.neighbors[v]) {
      if (!seen[w]) {
        seen[w] = true;
        ++count;
        stack.push_back(w);
      }
    }
  }
  return count == g.n;
}

/// Incidence matrix of the oriented graph, lifted to dimension d.
///
/// Row block k carries +I_d at the head of edge k and -I_d at the tail,
/// so the stacked edge-vector identity e = H_d p holds for stacked
/// d-dimensional configurations p. With d = 1 this is the plain m-by-n
/// incidence matrix.
inline Eigen::MatrixXd incidence_matrix(const OrientedGraph& g, int d) {
  if (d < 1) throw ValidationError("dimension must be >= 1, got " + std::to_string(d));
  const int m = g.edge_count();
  const int n = g.vertex_count();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d) * m,
                                            static_cast<Eigen::Index>(d) * n);
  for (int k = 0; k < m; ++k) {
    h.block(k * d, (g.tail(k) - 1) * d, d, d) = -Eigen::MatrixXd::Identity(d, d);
    h.block(k * d, (g.head(k) - 1) * d, d, d) = Eigen::MatrixXd::Identity(d, d);
  }
  return h;
}

}  // namespace bearings
