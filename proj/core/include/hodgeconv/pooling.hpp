#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "hodgeconv/complex.hpp"
#include "hodgeconv/filters.hpp"
#include "hodgeconv/laplacian.hpp"

namespace hodge {

enum class PoolMode { kAverage, kMax };

/// Weighted adjacency among the k-simplices of a complex.
struct SimplexGraph {
  int k = 0;
  /// neighbors[u] = (v, w_uv), sorted by v.
  std::vector<std::vector<std::pair<Index, double>>> neighbors;

  Index size() const { return static_cast<Index>(neighbors.size()); }
  double weighted_degree(Index u) const;
};

/**
 * Adjacency of k-simplices with unit weights, or, for k = 0, with one weight
 * per edge of the complex.
 */
SimplexGraph simplex_graph(const SimplicialComplex& complex, int k,
                           std::span<const double> edge_weights = {});

/// A matched pair of simplices, or a singleton when `second` is empty.
struct MatchedPair {
  Index first = 0;
  std::optional<Index> second;

  friend bool operator==(const MatchedPair&, const MatchedPair&) = default;
};

struct MatchOptions {
  bool randomized = false;  // visit order shuffled by `seed` instead of ascending
  std::uint64_t seed = 0;
};

/**
 * Greedy Graclus-style matching. Unmatched simplices are visited in order;
 * each is matched with the unmatched neighbor maximizing
 * w_uv (1/d_u + 1/d_v), where d is the weighted degree. Zero-weight
 * neighbors are never matched. Leftovers become singletons.
 */
std::vector<MatchedPair> graclus_match(const SimplexGraph& graph, const MatchOptions& options = {});

std::vector<MatchedPair> graclus_match(const SimplicialComplex& complex, int k,
                                       std::span<const double> edge_weights = {});

struct CoarsenOptions {
  /// k = 0 only: reconnect the surviving edges of a removed node to its partner.
  bool reattach = true;
};

struct PoolingPlan {
  int k = 0;
  Index fine_count = 0;
  /// (kept, merged) per coarse simplex, in coarse simplex order.
  std::vector<MatchedPair> pairs;
  /// Leaf positions holding fake padding simplices.
  std::vector<Index> fake_indices;
  /// Leaf position -> fine simplex; fakes are numbered fine_count, fine_count + 1, ...
  std::vector<Index> permutation;
  SimplicialComplex coarse_complex;
  /// Coarse L0 and L1, in that order.
  std::vector<HodgeLaplacian> coarse_laplacians;
  /// Inherited matching weights for the next coarsening level.
  SimplexGraph coarse_graph;

  Index coarse_count() const { return static_cast<Index>(pairs.size()); }
  Index leaf_count() const { return static_cast<Index>(permutation.size()); }
};

/**
 * Merge every matched pair: the lower-degree simplex (ties: higher index) is
 * removed together with its incident (k+1)-simplices and the boundary
 * operators and Laplacians are rebuilt. `graph` supplies the weights carried
 * to the next level; when omitted, unit weights are assumed.
 */
PoolingPlan coarsen(const SimplicialComplex& complex, int k, const std::vector<MatchedPair>& pairs,
                    const CoarsenOptions& options = {}, const SimplexGraph* graph = nullptr);

/// `levels` successive match-and-coarsen steps starting from unit weights.
std::vector<PoolingPlan> build_pooling_hierarchy(const SimplicialComplex& complex, int k,
                                                 Index levels, const CoarsenOptions& options = {},
                                                 const MatchOptions& match = {});

/**
 * Reduce each pair to one coarse value (average or max); singletons pass
 * through and fakes never participate. With kMax and `argmax` non-null, the
 * winning fine row per (coarse row, channel) is recorded for the backward pass.
 */
SimplexSignal pool_signal(const PoolingPlan& plan, const SimplexSignal& f, PoolMode mode,
                          std::vector<Index>* argmax = nullptr);

/// Gradient of pool_signal with respect to its fine input.
Eigen::MatrixXd pool_signal_backward(const PoolingPlan& plan, const Eigen::MatrixXd& upstream,
                                     PoolMode mode, const std::vector<Index>& argmax);

}  // namespace hodge
