#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace hodge {

using Index = std::ptrdiff_t;

/// Oriented 1-simplex, stored with ascending node indices.
using Edge = std::array<Index, 2>;
/// Oriented 2-simplex, stored with ascending node indices.
using Triangle = std::array<Index, 3>;

/**
 * Nodes, edges and filled triangles of a graph viewed as a 2-dimensional
 * simplicial complex.
 *
 * Every simplex is stored with ascending vertex indices, which fixes its
 * orientation. Edge positions are the column order of the first boundary
 * operator and the row/column order of the edge Laplacian.
 *
 * Instances are immutable once constructed; the constructor throws
 * TopologyError when the simplex lists are inconsistent.
 */
class SimplicialComplex {
 public:
  SimplicialComplex() = default;
  SimplicialComplex(Index n_nodes, std::vector<Edge> edges,
                    std::vector<Triangle> triangles = {});

  Index n_nodes() const { return n_nodes_; }
  Index n_edges() const { return static_cast<Index>(edges_.size()); }
  Index n_triangles() const { return static_cast<Index>(triangles_.size()); }

  /// Number of k-simplices for k in {0, 1, 2}.
  Index simplex_count(int k) const;

  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }

  /// Position of edge {i, j} in edges(); argument order does not matter.
  std::optional<Index> find_edge(Index i, Index j) const;

 private:
  Index n_nodes_ = 0;
  std::vector<Edge> edges_;
  std::vector<Triangle> triangles_;
  std::map<Edge, Index> edge_index_;
};

struct BoundaryEntry {
  Index row;
  Index col;
  int sign;
};

/// Sparse signed incidence matrix mapping k-simplices to their (k-1)-faces.
struct BoundaryOperator {
  int k = 1;
  Index rows = 0;
  Index cols = 0;
  std::vector<BoundaryEntry> entries;

  template <typename Scalar = double>
  Eigen::SparseMatrix<Scalar> to_sparse() const {
    std::vector<Eigen::Triplet<Scalar>> triplets;
    triplets.reserve(entries.size());
    for (const auto& e : entries) {
      triplets.emplace_back(e.row, e.col, static_cast<Scalar>(e.sign));
    }
    Eigen::SparseMatrix<Scalar> m(rows, cols);
    m.setFromTriplets(triplets.begin(), triplets.end());
    return m;
  }
};

/// Symmetric-tolerance used when validating connectivity matrices.
inline constexpr double kSymmetryTolerance = 1e-9;

/**
 * Binarize a symmetric connectivity matrix: edge (i, j), i < j, exists iff
 * |matrix(i, j)| > threshold. No triangles are created.
 */
SimplicialComplex build_complex_from_connectivity(const Eigen::MatrixXd& matrix,
                                                  double threshold);

BoundaryOperator boundary_1(const SimplicialComplex& complex);

/// Columns follow triangles(); triangle (i,j,k) maps to +e_jk - e_ik + e_ij.
BoundaryOperator boundary_2(const SimplicialComplex& complex);

/**
 * Neighbors of each k-simplex (k = 0: nodes sharing an edge, k = 1: edges
 * sharing a node), sorted ascending.
 */
std::vector<std::vector<Index>> simplex_adjacency(const SimplicialComplex& complex, int k);

/// Breadth-first hop counts from `source` over simplex_adjacency; nullopt if unreachable.
std::vector<std::optional<Index>> hop_distances(const SimplicialComplex& complex, int k,
                                                Index source);

/// Line-graph distance between two edges; nullopt means infinity.
std::optional<Index> edge_hop_distance(const SimplicialComplex& complex, Index e1, Index e2);

// Small complexes used by demos and tests.
SimplicialComplex make_path(Index n_nodes);
SimplicialComplex make_grid(Index rows, Index cols);
SimplicialComplex make_filled_triangle();

}  // namespace hodge
