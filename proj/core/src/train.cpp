#include "hodgeconv/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "hodgeconv/errors.hpp"

namespace hodge {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw InputFormatError("learning_rate must be nonnegative");
  if (!(lr_decay > 0.0)) throw InputFormatError("lr_decay must be positive");
  if (!(weight_decay >= 0.0)) throw InputFormatError("weight_decay must be nonnegative");
  if (batch_size < 1) throw InputFormatError("batch_size must be positive");
  if (epochs < 0) throw InputFormatError("epochs must be nonnegative");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(epsilon > 0.0)) {
    throw InputFormatError("invalid Adam hyperparameters");
  }
}

AdamState::AdamState(const std::vector<std::size_t>& sizes, double b1, double b2, double eps)
    : beta1(b1), beta2(b2), epsilon(eps) {
  for (auto n : sizes) {
    first_moment.emplace_back(n, 0.0);
    second_moment.emplace_back(n, 0.0);
  }
}

void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state,
               const AdamOptions& options) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw ShapeError("Adam parameter, gradient and state lists differ in length");
  }
  for (std::size_t s = 0; s < params.size(); ++s) {
    if (params[s].size() != grads[s].size() || params[s].size() != state.first_moment[s].size()) {
      throw ShapeError("Adam tensor " + std::to_string(s) + " shape mismatch");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  const double lr = options.learning_rate;
  for (std::size_t s = 0; s < params.size(); ++s) {
    auto p = params[s];
    auto& m = state.first_moment[s];
    auto& v = state.second_moment[s];
    for (std::size_t i = 0; i < p.size(); ++i) {
      double g = grads[s][i];
      if (!options.decoupled_weight_decay) g += options.weight_decay * p[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
      if (options.decoupled_weight_decay) p[i] -= lr * options.weight_decay * p[i];
    }
  }
}

void adam_step(Model& model, const ModelGradients& grads, AdamState& state, const AdamOptions& options) {
  std::vector<std::span<double>> params;
  for (auto& v : model.parameters()) params.push_back(v.values);
  std::vector<std::span<const double>> g(grads.parameters.begin(), grads.parameters.end());
  adam_step(params, g, state, options);
}

double rmse(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.empty()) throw InputFormatError("rmse of an empty set");
  if (predictions.size() != targets.size()) throw ShapeError("rmse inputs differ in length");
  double acc = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - targets[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(predictions.size()));
}

SyntheticDataset generate_synthetic(const SyntheticOptions& options) {
  if (!(options.density > 0.0 && options.density <= 1.0)) throw InputFormatError("density must lie in (0, 1]");
  if (options.n_nodes < 4) throw InputFormatError("synthetic atlas needs at least 4 nodes");
  if (options.n_samples < 1 || options.time_len < 1) throw InputFormatError("need at least one sample and time step");
  if (!(options.noise_sigma >= 0.0) || !(options.perturbation >= 0.0)) {
    throw InputFormatError("noise levels must be nonnegative");
  }
  if (options.n_planted < 0) throw InputFormatError("n_planted must be nonnegative");
  if (!options.planted_weights.empty() &&
      static_cast<Index>(options.planted_weights.size()) != options.n_planted) {
    throw InputFormatError("planted_weights must have n_planted entries");
  }
  if (options.nonlinear && options.n_planted < 2) throw InputFormatError("nonlinear target needs two planted edges");

  Rng rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  const Index n = options.n_nodes;
  std::vector<Edge> edges;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const bool random_edge = unit(rng) < options.density;
      if (random_edge || j == i + 1) edges.push_back({i, j});
    }
  }
  SyntheticDataset out;
  out.options = options;
  out.data.atlas = SimplicialComplex(n, edges);
  const Index m = out.data.atlas.n_edges();
  if (options.n_planted > m) throw InputFormatError("more planted edges than atlas edges");

  Eigen::VectorXd base(m);
  for (Index e = 0; e < m; ++e) base[e] = unit(rng) - 0.5;

  std::vector<Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::pair<Index, double>> planted;
  for (Index p = 0; p < options.n_planted; ++p) {
    const double w = options.planted_weights.empty() ? 1.0 + unit(rng) : options.planted_weights[p];
    planted.emplace_back(order[p], w);
  }
  // Keep caller-specified weight order when weights were given explicitly.
  if (options.planted_weights.empty()) std::sort(planted.begin(), planted.end());
  for (const auto& [e, w] : planted) {
    out.planted_edges.push_back(e);
    out.planted_weights.push_back(w);
  }

  constexpr double kSmoothing = 0.8;
  const double innovation = std::sqrt(1.0 - kSmoothing * kSmoothing);
  out.data.samples.reserve(static_cast<std::size_t>(options.n_samples));
  for (Index s = 0; s < options.n_samples; ++s) {
    Sample sample;
    sample.node_series.resize(n, options.time_len);
    for (Index v = 0; v < n; ++v) {
      double x = normal(rng);
      for (Index t = 0; t < options.time_len; ++t) {
        sample.node_series(v, t) = x;
        x = kSmoothing * x + innovation * normal(rng);
      }
    }
    sample.edge_features.resize(m);
    for (Index e = 0; e < m; ++e) sample.edge_features[e] = base[e] + options.perturbation * normal(rng);

    double target = 0.0;
    if (options.nonlinear) {
      target = out.planted_weights[0] * sample.edge_features[out.planted_edges[0]] *
               sample.edge_features[out.planted_edges[1]];
    } else {
      for (std::size_t p = 0; p < out.planted_edges.size(); ++p) {
        target += out.planted_weights[p] * sample.edge_features[out.planted_edges[p]];
      }
    }
    const double noise = normal(rng);
    sample.target = target + options.noise_sigma * noise;
    out.data.samples.push_back(std::move(sample));
  }
  return out;
}

std::vector<double> predict(const Model& model, const Dataset& data, std::span<const Index> indices) {
  Rng unused(0);
  std::vector<double> out;
  out.reserve(indices.size());
  for (Index i : indices) out.push_back(model_forward(model, data.samples[i], unused, false));
  return out;
}

namespace {

double subset_rmse(const Model& model, const Dataset& data, std::span<const Index> indices) {
  if (indices.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto preds = predict(model, data, indices);
  std::vector<double> targets;
  for (Index i : indices) targets.push_back(data.samples[i].target);
  return rmse(preds, targets);
}

}  // namespace

std::vector<std::vector<double>> snapshot_parameters(const Model& model) {
  std::vector<std::vector<double>> out;
  for (const auto& v : model.parameters()) out.emplace_back(v.values.begin(), v.values.end());
  return out;
}

void load_parameters(Model& model, const std::vector<std::vector<double>>& values) {
  auto views = model.parameters();
  if (views.size() != values.size()) throw ShapeError("parameter list length mismatch");
  for (std::size_t s = 0; s < views.size(); ++s) {
    if (views[s].values.size() != values[s].size()) {
      throw ShapeError("parameter '" + views[s].name + "' has " + std::to_string(views[s].values.size()) +
                       " entries, got " + std::to_string(values[s].size()));
    }
    std::copy(values[s].begin(), values[s].end(), views[s].values.begin());
  }
}

FitResult fit(Model& model, const Dataset& data, std::span<const Index> train,
              std::span<const Index> val, const TrainConfig& config) {
  config.validate();
  if (data.samples.empty() || train.empty()) throw InputFormatError("training set is empty");
  for (auto idx : {train, val}) {
    for (Index i : idx) {
      if (i < 0 || i >= data.size()) throw InputFormatError("sample index out of range");
    }
  }
  FitResult result;
  result.best_parameters = snapshot_parameters(model);

  std::vector<std::size_t> sizes;
  for (const auto& v : model.parameters()) sizes.push_back(v.values.size());
  AdamState state(sizes, config.beta1, config.beta2, config.epsilon);
  Rng rng(config.seed);
  std::vector<Index> order(train.begin(), train.end());
  double lr = config.learning_rate;
  double best = std::numeric_limits<double>::infinity();

  for (Index epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const double weight = 1.0 / static_cast<double>(stop - start);
      ModelGradients batch = zero_gradients(model);
      ForwardTape tape;
      for (std::size_t b = start; b < stop; ++b) {
        const auto& sample = data.samples[order[b]];
        const double pred = model_forward(model, sample, rng, true, &tape);
        const double residual = pred - sample.target;
        if (!std::isfinite(residual)) {
          throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch + 1));
        }
        accumulate(batch, model_backward(model, tape, residual), weight);
      }
      adam_step(model, batch, state, {lr, config.weight_decay, config.decoupled_weight_decay});
    }
    if (!model.all_finite()) throw DivergenceError("non-finite parameters at epoch " + std::to_string(epoch + 1));

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.train_rmse = subset_rmse(model, data, train);
    rec.val_rmse = subset_rmse(model, data, val);
    rec.learning_rate = lr;
    if (!std::isfinite(rec.train_rmse)) {
      throw DivergenceError("non-finite training RMSE at epoch " + std::to_string(epoch + 1));
    }
    const double score = val.empty() ? rec.train_rmse : rec.val_rmse;
    if (score < best) {
      best = score;
      result.best_epoch = rec.epoch;
      result.best_parameters = snapshot_parameters(model);
    }
    result.history.push_back(rec);
    lr *= config.lr_decay;
  }
  return result;
}

std::pair<std::vector<Index>, std::vector<Index>> train_val_split(Index n, double val_fraction,
                                                                  std::uint64_t seed) {
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw InputFormatError("val_fraction must lie in [0, 1)");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n)));
  std::vector<Index> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<Index> train(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(val.begin(), val.end());
  std::sort(train.begin(), train.end());
  return {std::move(train), std::move(val)};
}

std::vector<std::vector<Index>> kfold_partition(Index n, Index folds, std::uint64_t seed) {
  if (folds < 2 || folds > n) throw InputFormatError("fold count must lie in [2, n]");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(folds));
  for (Index i = 0; i < n; ++i) out[i % folds].push_back(order[i]);
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

SaliencyMap saliency_map(const Model& model, const Dataset& data) {
  if (!model.all_finite()) throw InvalidModelError("model has non-finite parameters");
  if (data.samples.empty()) throw InputFormatError("saliency needs at least one sample");
  const Index n = data.atlas.n_nodes();
  const Index m = data.atlas.n_edges();
  if (n != model.atlas.n_nodes() || m != model.atlas.n_edges()) {
    throw ShapeError("dataset atlas does not match the model atlas");
  }
  // Per-simplex contributions are summed in sorted order so the result does not
  // depend on the order of the samples.
  std::vector<std::vector<double>> edge_terms(static_cast<std::size_t>(m));
  std::vector<std::vector<double>> node_terms(static_cast<std::size_t>(n));
  Rng unused(0);
  ForwardTape tape;
  for (const auto& sample : data.samples) {
    model_forward(model, sample, unused, false, &tape);
    const auto g = model_backward(model, tape, 1.0);
    for (Index e = 0; e < m; ++e) {
      edge_terms[e].push_back(g.edge_features.size() == m ? std::abs(g.edge_features[e]) : 0.0);
    }
    for (Index v = 0; v < n; ++v) {
      node_terms[v].push_back(g.node_series.rows() == n ? g.node_series.row(v).cwiseAbs().mean() : 0.0);
    }
  }
  auto ordered_mean = [](std::vector<double>& values) {
    std::sort(values.begin(), values.end());
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc / static_cast<double>(values.size());
  };
  SaliencyMap out;
  out.edges.resize(m);
  out.nodes.resize(n);
  for (Index e = 0; e < m; ++e) out.edges[e] = ordered_mean(edge_terms[e]);
  for (Index v = 0; v < n; ++v) out.nodes[v] = ordered_mean(node_terms[v]);
  return out;
}

}  // namespace hodge
