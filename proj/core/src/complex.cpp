#include "hodgeconv/complex.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "hodgeconv/errors.hpp"

namespace hodge {

SimplicialComplex::SimplicialComplex(Index n_nodes, std::vector<Edge> edges,
                                     std::vector<Triangle> triangles)
    : n_nodes_(n_nodes), edges_(std::move(edges)), triangles_(std::move(triangles)) {
  if (n_nodes_ < 0) throw TopologyError("negative node count");
  for (Index pos = 0; pos < n_edges(); ++pos) {
    const auto [i, j] = edges_[pos];
    if (i < 0 || j >= n_nodes_ || !(i < j)) {
      throw TopologyError("edge " + std::to_string(pos) + " = (" + std::to_string(i) + ", " +
                          std::to_string(j) + ") is not an ascending pair of valid nodes");
    }
    if (!edge_index_.emplace(edges_[pos], pos).second) {
      throw TopologyError("duplicate edge (" + std::to_string(i) + ", " + std::to_string(j) + ")");
    }
  }
  for (const auto& t : triangles_) {
    if (t[0] < 0 || t[2] >= n_nodes_ || !(t[0] < t[1] && t[1] < t[2])) {
      throw TopologyError("triangle is not an ascending triple of valid nodes");
    }
    if (!find_edge(t[0], t[1]) || !find_edge(t[0], t[2]) || !find_edge(t[1], t[2])) {
      throw TopologyError("triangle (" + std::to_string(t[0]) + ", " + std::to_string(t[1]) +
                          ", " + std::to_string(t[2]) + ") references a missing edge");
    }
  }
  auto sorted = triangles_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw TopologyError("duplicate triangle");
  }
}

Index SimplicialComplex::simplex_count(int k) const {
  switch (k) {
    case 0: return n_nodes_;
    case 1: return n_edges();
    case 2: return n_triangles();
    default: throw UnsupportedDimensionError("simplex dimension " + std::to_string(k));
  }
}

std::optional<Index> SimplicialComplex::find_edge(Index i, Index j) const {
  if (i > j) std::swap(i, j);
  auto it = edge_index_.find(Edge{i, j});
  if (it == edge_index_.end()) return std::nullopt;
  return it->second;
}

SimplicialComplex build_complex_from_connectivity(const Eigen::MatrixXd& matrix,
                                                  double threshold) {
  if (matrix.rows() != matrix.cols()) {
    throw InputFormatError("connectivity matrix must be square, got " +
                           std::to_string(matrix.rows()) + "x" + std::to_string(matrix.cols()));
  }
  if (!(threshold >= 0.0)) throw InputFormatError("threshold must be nonnegative");
  const Index n = matrix.rows();
  std::vector<Edge> edges;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double a = matrix(i, j);
      const double b = matrix(j, i);
      if (!std::isfinite(a) || !std::isfinite(b) || std::abs(a - b) > kSymmetryTolerance) {
        throw InputFormatError("connectivity matrix is not symmetric at (" + std::to_string(i) +
                               ", " + std::to_string(j) + ")");
      }
      if (std::abs(a) > threshold) edges.push_back({i, j});
    }
  }
  return SimplicialComplex(n, std::move(edges));
}

BoundaryOperator boundary_1(const SimplicialComplex& complex) {
  BoundaryOperator op;
  op.k = 1;
  op.rows = complex.n_nodes();
  op.cols = complex.n_edges();
  op.entries.reserve(2 * complex.edges().size());
  for (Index c = 0; c < op.cols; ++c) {
    const auto& e = complex.edges()[c];
    op.entries.push_back({e[0], c, -1});
    op.entries.push_back({e[1], c, +1});
  }
  return op;
}

BoundaryOperator boundary_2(const SimplicialComplex& complex) {
  BoundaryOperator op;
  op.k = 2;
  op.rows = complex.n_edges();
  op.cols = complex.n_triangles();
  op.entries.reserve(3 * complex.triangles().size());
  for (Index c = 0; c < op.cols; ++c) {
    const auto [i, j, k] = complex.triangles()[c];
    const auto jk = complex.find_edge(j, k);
    const auto ik = complex.find_edge(i, k);
    const auto ij = complex.find_edge(i, j);
    if (!jk || !ik || !ij) throw TopologyError("triangle references a missing edge");
    op.entries.push_back({*jk, c, +1});
    op.entries.push_back({*ik, c, -1});
    op.entries.push_back({*ij, c, +1});
  }
  return op;
}

std::vector<std::vector<Index>> simplex_adjacency(const SimplicialComplex& complex, int k) {
  if (k == 0) {
    std::vector<std::vector<Index>> adj(complex.n_nodes());
    for (const auto& [i, j] : complex.edges()) {
      adj[i].push_back(j);
      adj[j].push_back(i);
    }
    for (auto& a : adj) std::sort(a.begin(), a.end());
    return adj;
  }
  if (k == 1) {
    std::vector<std::vector<Index>> incident(complex.n_nodes());
    for (Index e = 0; e < complex.n_edges(); ++e) {
      incident[complex.edges()[e][0]].push_back(e);
      incident[complex.edges()[e][1]].push_back(e);
    }
    std::vector<std::vector<Index>> adj(complex.n_edges());
    for (const auto& star : incident) {
      for (Index a : star) {
        for (Index b : star) {
          if (a != b) adj[a].push_back(b);
        }
      }
    }
    // Two distinct edges share at most one node, so no duplicates arise.
    for (auto& a : adj) std::sort(a.begin(), a.end());
    return adj;
  }
  throw UnsupportedDimensionError("adjacency is defined for k in {0, 1}, got " + std::to_string(k));
}

std::vector<std::optional<Index>> hop_distances(const SimplicialComplex& complex, int k,
                                                Index source) {
  const auto adj = simplex_adjacency(complex, k);
  const Index n = static_cast<Index>(adj.size());
  if (source < 0 || source >= n) {
    throw ShapeError("source simplex " + std::to_string(source) + " out of range");
  }
  std::vector<std::optional<Index>> dist(n);
  std::deque<Index> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    const Index u = queue.front();
    queue.pop_front();
    for (Index v : adj[u]) {
      if (!dist[v]) {
        dist[v] = *dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

std::optional<Index> edge_hop_distance(const SimplicialComplex& complex, Index e1, Index e2) {
  if (e2 < 0 || e2 >= complex.n_edges()) {
    throw ShapeError("edge " + std::to_string(e2) + " out of range");
  }
  return hop_distances(complex, 1, e1)[e2];
}

SimplicialComplex make_path(Index n_nodes) {
  std::vector<Edge> edges;
  for (Index i = 0; i + 1 < n_nodes; ++i) edges.push_back({i, i + 1});
  return SimplicialComplex(n_nodes, std::move(edges));
}

SimplicialComplex make_grid(Index rows, Index cols) {
  std::vector<Edge> edges;
  auto id = [cols](Index r, Index c) { return r * cols + c; };
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      if (c + 1 < cols) edges.push_back({id(r, c), id(r, c + 1)});
      if (r + 1 < rows) edges.push_back({id(r, c), id(r + 1, c)});
    }
  }
  return SimplicialComplex(rows * cols, std::move(edges));
}

SimplicialComplex make_filled_triangle() {
  return SimplicialComplex(3, {{0, 1}, {0, 2}, {1, 2}}, {{0, 1, 2}});
}

}  // namespace hodge
