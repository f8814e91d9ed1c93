#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "hodgeconv/complex.hpp"

namespace hodge::testing {

/// Erdos-Renyi graph; with `fill` > 0 each 3-clique becomes a filled triangle with that probability.
inline SimplicialComplex random_complex(std::mt19937_64& rng, Index n, double p, double fill = 0.0) {
  std::bernoulli_distribution edge(p);
  std::bernoulli_distribution tri(fill);
  std::vector<Edge> edges;
  Eigen::MatrixXi adj = Eigen::MatrixXi::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (edge(rng)) {
        edges.push_back({i, j});
        adj(i, j) = adj(j, i) = 1;
      }
    }
  }
  std::vector<Triangle> triangles;
  if (fill > 0.0) {
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) {
        for (Index k = j + 1; k < n; ++k) {
          if (adj(i, j) && adj(j, k) && adj(i, k) && tri(rng)) triangles.push_back({i, j, k});
        }
      }
    }
  }
  return SimplicialComplex(n, std::move(edges), std::move(triangles));
}

/// Random complex with at most `max_edges` edges.
inline SimplicialComplex random_small_complex(std::mt19937_64& rng, Index max_nodes, Index max_edges,
                                              double fill = 0.0) {
  std::uniform_int_distribution<Index> nodes(2, max_nodes);
  std::uniform_real_distribution<double> dens(0.2, 0.9);
  while (true) {
    auto c = random_complex(rng, nodes(rng), dens(rng), fill);
    if (c.n_edges() >= 1 && c.n_edges() <= max_edges) return c;
  }
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Index rows, Index cols) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) m(r, c) = g(rng);
  }
  return m;
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

/// |a - b| / max(|a|, |b|), with the denominator floored at 1e-6 where central differences lose all digits.
inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({1e-6, std::abs(a), std::abs(b)});
}

}  // namespace hodge::testing
