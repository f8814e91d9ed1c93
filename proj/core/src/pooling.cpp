#include "hodgeconv/pooling.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include "hodgeconv/errors.hpp"

namespace hodge {

double SimplexGraph::weighted_degree(Index u) const {
  double d = 0.0;
  for (const auto& [v, w] : neighbors[u]) d += w;
  return d;
}

SimplexGraph simplex_graph(const SimplicialComplex& complex, int k,
                           std::span<const double> edge_weights) {
  SimplexGraph g;
  g.k = k;
  if (k == 0) {
    if (!edge_weights.empty() && static_cast<Index>(edge_weights.size()) != complex.n_edges()) {
      throw ShapeError("expected one weight per edge");
    }
    g.neighbors.resize(complex.n_nodes());
    for (Index e = 0; e < complex.n_edges(); ++e) {
      const double w = edge_weights.empty() ? 1.0 : edge_weights[e];
      if (w < 0.0) throw InputFormatError("matching weights must be nonnegative");
      const auto [i, j] = complex.edges()[e];
      g.neighbors[i].emplace_back(j, w);
      g.neighbors[j].emplace_back(i, w);
    }
    for (auto& n : g.neighbors) std::sort(n.begin(), n.end());
    return g;
  }
  if (!edge_weights.empty()) {
    throw ShapeError("per-edge weights only apply to node matching (k = 0)");
  }
  const auto adj = simplex_adjacency(complex, k);
  g.neighbors.resize(adj.size());
  for (std::size_t u = 0; u < adj.size(); ++u) {
    for (Index v : adj[u]) g.neighbors[u].emplace_back(v, 1.0);
  }
  return g;
}

std::vector<MatchedPair> graclus_match(const SimplexGraph& graph, const MatchOptions& options) {
  const Index n = graph.size();
  std::vector<double> degree(static_cast<std::size_t>(n));
  for (Index u = 0; u < n; ++u) degree[u] = graph.weighted_degree(u);

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  if (options.randomized) {
    std::mt19937_64 rng(options.seed);
    std::shuffle(order.begin(), order.end(), rng);
  }

  std::vector<bool> matched(static_cast<std::size_t>(n), false);
  std::vector<MatchedPair> out;
  for (Index u : order) {
    if (matched[u]) continue;
    matched[u] = true;
    std::optional<Index> best;
    double best_score = -std::numeric_limits<double>::infinity();
    for (const auto& [v, w] : graph.neighbors[u]) {
      if (matched[v] || !(w > 0.0)) continue;
      const double score = w * (1.0 / degree[u] + 1.0 / degree[v]);
      if (score > best_score) {
        best_score = score;
        best = v;
      }
    }
    if (best) matched[*best] = true;
    out.push_back({u, best});
  }
  return out;
}

std::vector<MatchedPair> graclus_match(const SimplicialComplex& complex, int k,
                                       std::span<const double> edge_weights) {
  return graclus_match(simplex_graph(complex, k, edge_weights));
}

namespace {

// Orders each pair as (kept, removed) and checks the pairs cover every simplex once.
std::vector<MatchedPair> orient_pairs(const std::vector<MatchedPair>& pairs, Index fine_count,
                                      const std::vector<std::vector<Index>>& adjacency) {
  std::vector<int> seen(static_cast<std::size_t>(fine_count), 0);
  auto check = [&](Index s) {
    if (s < 0 || s >= fine_count) {
      throw PlanError("pair references nonexistent simplex " + std::to_string(s));
    }
    if (seen[s]++ > 0) throw PlanError("simplex " + std::to_string(s) + " appears twice");
  };
  std::vector<MatchedPair> oriented;
  oriented.reserve(pairs.size());
  for (const auto& p : pairs) {
    check(p.first);
    if (!p.second) {
      oriented.push_back({p.first, std::nullopt});
      continue;
    }
    check(*p.second);
    Index a = p.first;
    Index b = *p.second;
    const auto da = adjacency[a].size();
    const auto db = adjacency[b].size();
    // Remove the lower-degree simplex; on ties remove the higher index.
    bool remove_a = da < db || (da == db && a > b);
    oriented.push_back(remove_a ? MatchedPair{b, a} : MatchedPair{a, b});
  }
  for (Index s = 0; s < fine_count; ++s) {
    if (seen[s] == 0) throw PlanError("simplex " + std::to_string(s) + " is not covered by the plan");
  }
  std::sort(oriented.begin(), oriented.end(),
            [](const MatchedPair& x, const MatchedPair& y) { return x.first < y.first; });
  return oriented;
}

double lookup_weight(const SimplexGraph& g, Index u, Index v) {
  const auto& n = g.neighbors[u];
  auto it = std::lower_bound(n.begin(), n.end(), std::pair<Index, double>{v, -1.0},
                             [](const auto& a, const auto& b) { return a.first < b.first; });
  return (it != n.end() && it->first == v) ? it->second : 0.0;
}

}  // namespace

PoolingPlan coarsen(const SimplicialComplex& complex, int k, const std::vector<MatchedPair>& pairs,
                    const CoarsenOptions& options, const SimplexGraph* graph) {
  if (k != 0 && k != 1) throw UnsupportedDimensionError("pooling supports k in {0, 1}");
  const Index fine_count = complex.simplex_count(k);
  const auto adjacency = simplex_adjacency(complex, k);

  SimplexGraph unit;
  if (graph == nullptr) {
    unit = simplex_graph(complex, k);
    graph = &unit;
  } else if (graph->size() != fine_count) {
    throw PlanError("weight graph does not match the complex");
  }

  PoolingPlan plan;
  plan.k = k;
  plan.fine_count = fine_count;
  plan.pairs = orient_pairs(pairs, fine_count, adjacency);

  std::vector<Index> coarse_of(static_cast<std::size_t>(fine_count));
  std::vector<bool> removed(static_cast<std::size_t>(fine_count), false);
  Index fakes = 0;
  for (Index c = 0; c < plan.coarse_count(); ++c) {
    const auto& p = plan.pairs[c];
    coarse_of[p.first] = c;
    plan.permutation.push_back(p.first);
    if (p.second) {
      coarse_of[*p.second] = c;
      removed[*p.second] = true;
      plan.permutation.push_back(*p.second);
    } else {
      plan.fake_indices.push_back(static_cast<Index>(plan.permutation.size()));
      plan.permutation.push_back(fine_count + fakes++);
    }
  }

  if (k == 0) {
    // Removed nodes hand their edges to their partner; self-loops and duplicates
    // collapse, but their weight is carried into the coarse edge.
    std::map<Edge, double> coarse_edges;
    for (Index e = 0; e < complex.n_edges(); ++e) {
      const auto [i, j] = complex.edges()[e];
      if ((removed[i] || removed[j]) && !options.reattach) continue;
      Index a = coarse_of[i];
      Index b = coarse_of[j];
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      coarse_edges[Edge{a, b}] += lookup_weight(*graph, i, j);
    }
    std::vector<Edge> edges;
    std::vector<double> weights;
    for (const auto& [e, w] : coarse_edges) {
      edges.push_back(e);
      weights.push_back(w);
    }
    std::set<Triangle> triangles;
    for (const auto& t : complex.triangles()) {
      if (!options.reattach && (removed[t[0]] || removed[t[1]] || removed[t[2]])) continue;
      Triangle ct{coarse_of[t[0]], coarse_of[t[1]], coarse_of[t[2]]};
      std::sort(ct.begin(), ct.end());
      if (ct[0] == ct[1] || ct[1] == ct[2]) continue;
      if (!coarse_edges.count({ct[0], ct[1]}) || !coarse_edges.count({ct[0], ct[2]}) ||
          !coarse_edges.count({ct[1], ct[2]})) {
        continue;
      }
      triangles.insert(ct);
    }
    plan.coarse_complex = SimplicialComplex(plan.coarse_count(), std::move(edges),
                                            {triangles.begin(), triangles.end()});
    plan.coarse_graph = simplex_graph(plan.coarse_complex, 0, weights);
  } else {
    std::vector<Edge> edges;
    for (const auto& p : plan.pairs) edges.push_back(complex.edges()[p.first]);
    std::vector<Triangle> triangles;
    for (const auto& t : complex.triangles()) {
      const Index e01 = *complex.find_edge(t[0], t[1]);
      const Index e02 = *complex.find_edge(t[0], t[2]);
      const Index e12 = *complex.find_edge(t[1], t[2]);
      if (!removed[e01] && !removed[e02] && !removed[e12]) triangles.push_back(t);
    }
    plan.coarse_complex = SimplicialComplex(complex.n_nodes(), std::move(edges), std::move(triangles));

    // Coarse adjacency follows the coarse topology; weights sum over adjacent children.
    std::vector<std::vector<Index>> children(static_cast<std::size_t>(plan.coarse_count()));
    for (Index c = 0; c < plan.coarse_count(); ++c) {
      children[c].push_back(plan.pairs[c].first);
      if (plan.pairs[c].second) children[c].push_back(*plan.pairs[c].second);
    }
    const auto coarse_adj = simplex_adjacency(plan.coarse_complex, 1);
    plan.coarse_graph.k = 1;
    plan.coarse_graph.neighbors.resize(coarse_adj.size());
    for (Index c = 0; c < static_cast<Index>(coarse_adj.size()); ++c) {
      for (Index d : coarse_adj[c]) {
        double w = 0.0;
        for (Index x : children[c]) {
          for (Index y : children[d]) w += lookup_weight(*graph, x, y);
        }
        plan.coarse_graph.neighbors[c].emplace_back(d, w);
      }
    }
  }

  plan.coarse_laplacians.push_back(hodge_laplacian(plan.coarse_complex, 0));
  plan.coarse_laplacians.push_back(hodge_laplacian(plan.coarse_complex, 1));
  return plan;
}

std::vector<PoolingPlan> build_pooling_hierarchy(const SimplicialComplex& complex, int k,
                                                 Index levels, const CoarsenOptions& options,
                                                 const MatchOptions& match) {
  std::vector<PoolingPlan> plans;
  SimplicialComplex current = complex;
  SimplexGraph graph = simplex_graph(complex, k);
  for (Index level = 0; level < levels; ++level) {
    MatchOptions level_match = match;
    level_match.seed = match.seed + static_cast<std::uint64_t>(level);
    const auto pairs = graclus_match(graph, level_match);
    plans.push_back(coarsen(current, k, pairs, options, &graph));
    current = plans.back().coarse_complex;
    graph = plans.back().coarse_graph;
  }
  return plans;
}

SimplexSignal pool_signal(const PoolingPlan& plan, const SimplexSignal& f, PoolMode mode,
                          std::vector<Index>* argmax) {
  if (f.dim() != plan.fine_count) {
    throw ShapeError("signal has " + std::to_string(f.dim()) + " rows, plan expects " +
                     std::to_string(plan.fine_count));
  }
  const Index channels = f.channels();
  Eigen::MatrixXd out(plan.coarse_count(), channels);
  if (argmax != nullptr) argmax->assign(static_cast<std::size_t>(plan.coarse_count() * channels), 0);
  for (Index c = 0; c < plan.coarse_count(); ++c) {
    const auto& p = plan.pairs[c];
    for (Index ch = 0; ch < channels; ++ch) {
      const double a = f.values(p.first, ch);
      Index winner = p.first;
      double value = a;
      if (p.second) {
        const double b = f.values(*p.second, ch);
        if (mode == PoolMode::kAverage) {
          value = 0.5 * (a + b);
        } else if (b > a) {
          value = b;
          winner = *p.second;
        }
      }
      out(c, ch) = value;
      if (argmax != nullptr) (*argmax)[static_cast<std::size_t>(c * channels + ch)] = winner;
    }
  }
  return SimplexSignal(std::move(out));
}

Eigen::MatrixXd pool_signal_backward(const PoolingPlan& plan, const Eigen::MatrixXd& upstream,
                                     PoolMode mode, const std::vector<Index>& argmax) {
  if (upstream.rows() != plan.coarse_count()) throw ShapeError("upstream gradient shape mismatch");
  const Index channels = upstream.cols();
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(plan.fine_count, channels);
  if (mode == PoolMode::kMax && static_cast<Index>(argmax.size()) != plan.coarse_count() * channels) {
    throw TapeError("max pooling backward needs the forward argmax record");
  }
  for (Index c = 0; c < plan.coarse_count(); ++c) {
    const auto& p = plan.pairs[c];
    for (Index ch = 0; ch < channels; ++ch) {
      const double g = upstream(c, ch);
      if (mode == PoolMode::kMax) {
        grad(argmax[static_cast<std::size_t>(c * channels + ch)], ch) += g;
      } else if (p.second) {
        grad(p.first, ch) += 0.5 * g;
        grad(*p.second, ch) += 0.5 * g;
      } else {
        grad(p.first, ch) += g;
      }
    }
  }
  return grad;
}

}  // namespace hodge
