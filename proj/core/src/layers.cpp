#include "hodgeconv/layers.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "hodgeconv/errors.hpp"

namespace hodge {

double leaky_relu(double x, double slope) { return x >= 0.0 ? x : slope * x; }

Eigen::MatrixXd leaky_relu(const Eigen::MatrixXd& x, double slope) {
  return x.unaryExpr([slope](double v) { return leaky_relu(v, slope); });
}

Eigen::MatrixXd leaky_relu_grad(const Eigen::MatrixXd& x, double slope) {
  return x.unaryExpr([slope](double v) { return v >= 0.0 ? 1.0 : slope; });
}

Eigen::MatrixXd dropout(const Eigen::MatrixXd& x, double rate, Rng& rng, bool train_mode,
                        Eigen::MatrixXd* mask) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ShapeError("dropout rate must lie in [0, 1)");
  if (!train_mode || rate == 0.0) {
    if (mask != nullptr) mask->resize(0, 0);
    return x;
  }
  const double keep_scale = 1.0 / (1.0 - rate);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Eigen::MatrixXd m(x.rows(), x.cols());
  for (Index c = 0; c < m.cols(); ++c) {
    for (Index r = 0; r < m.rows(); ++r) m(r, c) = uniform(rng) < rate ? 0.0 : keep_scale;
  }
  Eigen::MatrixXd out = x.cwiseProduct(m);
  if (mask != nullptr) *mask = std::move(m);
  return out;
}

TemporalConvLayer::TemporalConvLayer(Index kernel, Index in, Index out)
    : kernel_size(kernel), in_channels(in), out_channels(out) {
  if (kernel < 1 || in < 1 || out < 1) throw ShapeError("temporal layer sizes must be positive");
  weights.assign(static_cast<std::size_t>(out * in * kernel), 0.0);
  bias.assign(static_cast<std::size_t>(out), 0.0);
}

Eigen::MatrixXd temporal_forward(const TemporalConvLayer& layer, const Eigen::MatrixXd& series) {
  if (series.cols() != layer.in_channels) {
    throw ShapeError("series has " + std::to_string(series.cols()) + " channels, layer expects " +
                     std::to_string(layer.in_channels));
  }
  const Index steps = series.rows();
  Eigen::MatrixXd out(steps, layer.out_channels);
  for (Index o = 0; o < layer.out_channels; ++o) {
    for (Index t = 0; t < steps; ++t) {
      double acc = layer.bias[o];
      for (Index i = 0; i < layer.in_channels; ++i) {
        for (Index j = 0; j < layer.kernel_size && j <= t; ++j) {
          acc += layer.weight(o, i, j) * series(t - j, i);
        }
      }
      out(t, o) = acc;
    }
  }
  return out;
}

std::vector<Eigen::MatrixXd> temporal_forward(const TemporalConvLayer& layer,
                                              const std::vector<Eigen::MatrixXd>& series) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(series.size());
  for (const auto& s : series) out.push_back(temporal_forward(layer, s));
  return out;
}

Eigen::MatrixXd temporal_backward(const TemporalConvLayer& layer, const Eigen::MatrixXd& series,
                                  const Eigen::MatrixXd& upstream, std::span<double> grad_weights,
                                  std::span<double> grad_bias) {
  if (upstream.rows() != series.rows() || upstream.cols() != layer.out_channels) {
    throw ShapeError("temporal upstream gradient shape mismatch");
  }
  Eigen::MatrixXd grad_in = Eigen::MatrixXd::Zero(series.rows(), series.cols());
  for (Index o = 0; o < layer.out_channels; ++o) {
    for (Index t = 0; t < series.rows(); ++t) {
      const double g = upstream(t, o);
      if (g == 0.0) continue;
      grad_bias[o] += g;
      for (Index i = 0; i < layer.in_channels; ++i) {
        for (Index j = 0; j < layer.kernel_size && j <= t; ++j) {
          const auto w = static_cast<std::size_t>((o * layer.in_channels + i) * layer.kernel_size + j);
          grad_weights[w] += g * series(t - j, i);
          grad_in(t - j, i) += g * layer.weights[w];
        }
      }
    }
  }
  return grad_in;
}

Eigen::MatrixXd temporal_max_pool(const Eigen::MatrixXd& x, std::vector<Index>* argmax) {
  const Index rows = (x.rows() + 1) / 2;
  Eigen::MatrixXd out(rows, x.cols());
  if (argmax != nullptr) argmax->assign(static_cast<std::size_t>(rows * x.cols()), 0);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < x.cols(); ++c) {
      Index best = 2 * r;
      if (2 * r + 1 < x.rows() && x(2 * r + 1, c) > x(best, c)) best = 2 * r + 1;
      out(r, c) = x(best, c);
      if (argmax != nullptr) (*argmax)[static_cast<std::size_t>(r * x.cols() + c)] = best;
    }
  }
  return out;
}

Eigen::MatrixXd temporal_max_pool_backward(Index input_rows, const Eigen::MatrixXd& upstream,
                                           const std::vector<Index>& argmax) {
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(input_rows, upstream.cols());
  for (Index r = 0; r < upstream.rows(); ++r) {
    for (Index c = 0; c < upstream.cols(); ++c) {
      grad(argmax[static_cast<std::size_t>(r * upstream.cols() + c)], c) += upstream(r, c);
    }
  }
  return grad;
}

DenseLayer::DenseLayer(Index in, Index out) : in_dim(in), out_dim(out) {
  if (in < 1 || out < 1) throw ShapeError("dense layer sizes must be positive");
  weights.assign(static_cast<std::size_t>(in * out), 0.0);
  bias.assign(static_cast<std::size_t>(out), 0.0);
}

void ModelConfig::validate() const {
  if (!use_node_branch && !use_edge_branch) throw ShapeError("model needs at least one branch");
  if (temporal_channels.size() != temporal_kernels.size()) {
    throw ShapeError("temporal_channels and temporal_kernels must have equal length");
  }
  auto positive = [](const std::vector<Index>& v, const char* what) {
    for (Index x : v) {
      if (x < 1) throw ShapeError(std::string(what) + " entries must be positive");
    }
  };
  positive(temporal_channels, "temporal_channels");
  positive(temporal_kernels, "temporal_kernels");
  positive(node_channels, "node_channels");
  positive(edge_channels, "edge_channels");
  positive(head_hidden, "head_hidden");
  if (node_order < 1 || edge_order < 1) throw ShapeError("Laguerre orders must be at least 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ShapeError("dropout_rate must lie in [0, 1)");
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) throw ShapeError("leaky_slope must lie in (0, 1)");
  if (!(theta_noise >= 0.0)) throw ShapeError("theta_noise must be nonnegative");
}

namespace {

void glorot_fill(std::vector<double>& values, Index fan_in, Index fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& v : values) v = dist(rng);
}

HLConvLayer make_hl_layer(int k, Index order, Index in, Index out, const HodgeLaplacian& L,
                          const ModelConfig& config, Rng& rng) {
  double scale = 1.0;
  if (config.spectral_scale == ScaleMode::kAuto) {
    const double lambda_max = estimate_lambda_max(L);
    if (lambda_max > 0.0) scale = lambda_max;
  }
  HLConvLayer layer{k, FilterBank(order, in, out, scale), std::vector<double>(static_cast<std::size_t>(out), 0.0)};
  std::uniform_real_distribution<double> noise(-config.theta_noise, config.theta_noise);
  for (Index o = 0; o < out; ++o) {
    for (Index i = 0; i < in; ++i) {
      for (Index p = 0; p < order; ++p) {
        const double base = p == 0 ? 1.0 / static_cast<double>(in) : 0.0;
        layer.bank.theta(o, i, p) = base + (config.theta_noise > 0.0 ? noise(rng) : 0.0);
      }
    }
  }
  return layer;
}

struct SlotLayout {
  std::size_t temporal = 0;
  std::size_t node = 0;
  std::size_t node_readout = 0;
  std::size_t edge = 0;
  std::size_t edge_readout = 0;
  std::size_t head = 0;
  std::size_t total = 0;
};

SlotLayout slot_layout(const Model& m) {
  SlotLayout s;
  std::size_t next = 2 * m.temporal.size();
  if (m.config.use_node_branch) {
    s.node = next;
    s.node_readout = next + 2 * m.node_layers.size();
    next = s.node_readout + 2;
  }
  if (m.config.use_edge_branch) {
    s.edge = next;
    s.edge_readout = next + 2 * m.edge_layers.size();
    next = s.edge_readout + 2;
  }
  s.head = next;
  s.total = next + 2 * m.head.size();
  return s;
}

}  // namespace

Model::Model(const ModelConfig& cfg, const SimplicialComplex& complex, std::uint64_t seed)
    : config(cfg), atlas(complex) {
  config.validate();
  Rng rng(seed);
  const CoarsenOptions coarsen_options{config.reattach};

  if (config.use_node_branch) {
    node_laplacians.push_back(hodge_laplacian(atlas, 0));
    if (config.pool_nodes) {
      node_plans = build_pooling_hierarchy(atlas, 0, static_cast<Index>(config.node_channels.size()),
                                           coarsen_options);
      for (const auto& plan : node_plans) node_laplacians.push_back(plan.coarse_laplacians[0]);
    }
    Index channels = 1;
    for (std::size_t l = 0; l < config.temporal_channels.size(); ++l) {
      TemporalConvLayer layer(config.temporal_kernels[l], channels, config.temporal_channels[l]);
      glorot_fill(layer.weights, channels * layer.kernel_size, layer.out_channels * layer.kernel_size, rng);
      temporal.push_back(std::move(layer));
      channels = config.temporal_channels[l];
    }
    for (std::size_t l = 0; l < config.node_channels.size(); ++l) {
      const auto& L = node_laplacians[node_level(static_cast<Index>(l))];
      node_layers.push_back(make_hl_layer(0, config.node_order, channels, config.node_channels[l], L, config, rng));
      channels = config.node_channels[l];
    }
    const auto& L = node_laplacians[node_level(static_cast<Index>(config.node_channels.size()))];
    node_readout = make_hl_layer(0, config.node_order, channels, 1, L, config, rng);
  }

  if (config.use_edge_branch) {
    edge_laplacians.push_back(hodge_laplacian(atlas, 1));
    if (config.pool_edges) {
      edge_plans = build_pooling_hierarchy(atlas, 1, static_cast<Index>(config.edge_channels.size()),
                                           coarsen_options);
      for (const auto& plan : edge_plans) edge_laplacians.push_back(plan.coarse_laplacians[1]);
    }
    Index channels = 1;
    for (std::size_t l = 0; l < config.edge_channels.size(); ++l) {
      const auto& L = edge_laplacians[edge_level(static_cast<Index>(l))];
      edge_layers.push_back(make_hl_layer(1, config.edge_order, channels, config.edge_channels[l], L, config, rng));
      channels = config.edge_channels[l];
    }
    const auto& L = edge_laplacians[edge_level(static_cast<Index>(config.edge_channels.size()))];
    edge_readout = make_hl_layer(1, config.edge_order, channels, 1, L, config, rng);
  }

  Index width = head_input_dim();
  if (width < 1) throw ShapeError("model readout is empty; the atlas has no simplices to read");
  for (Index hidden : config.head_hidden) {
    DenseLayer layer(width, hidden);
    glorot_fill(layer.weights, width, hidden, rng);
    head.push_back(std::move(layer));
    width = hidden;
  }
  DenseLayer out(width, 1);
  glorot_fill(out.weights, width, 1, rng);
  head.push_back(std::move(out));
}

Index Model::head_input_dim() const {
  Index width = 0;
  if (config.use_node_branch) {
    width += node_laplacians[node_level(static_cast<Index>(config.node_channels.size()))].dim();
  }
  if (config.use_edge_branch) {
    width += edge_laplacians[edge_level(static_cast<Index>(config.edge_channels.size()))].dim();
  }
  return width;
}

std::vector<ParameterView> Model::parameters() {
  std::vector<ParameterView> views;
  for (std::size_t l = 0; l < temporal.size(); ++l) {
    views.push_back({"temporal." + std::to_string(l) + ".weights", temporal[l].weights});
    views.push_back({"temporal." + std::to_string(l) + ".bias", temporal[l].bias});
  }
  auto add_hl = [&views](const std::string& name, HLConvLayer& layer) {
    views.push_back({name + ".theta", layer.bank.coefficients()});
    views.push_back({name + ".bias", layer.bias});
  };
  if (config.use_node_branch) {
    for (std::size_t l = 0; l < node_layers.size(); ++l) add_hl("node." + std::to_string(l), node_layers[l]);
    add_hl("node.readout", node_readout);
  }
  if (config.use_edge_branch) {
    for (std::size_t l = 0; l < edge_layers.size(); ++l) add_hl("edge." + std::to_string(l), edge_layers[l]);
    add_hl("edge.readout", edge_readout);
  }
  for (std::size_t l = 0; l < head.size(); ++l) {
    views.push_back({"head." + std::to_string(l) + ".weights", head[l].weights});
    views.push_back({"head." + std::to_string(l) + ".bias", head[l].bias});
  }
  return views;
}

std::vector<ConstParameterView> Model::parameters() const {
  auto views = const_cast<Model*>(this)->parameters();
  std::vector<ConstParameterView> out;
  out.reserve(views.size());
  for (auto& v : views) out.push_back({std::move(v.name), v.values});
  return out;
}

Index Model::parameter_count() const {
  Index n = 0;
  for (const auto& v : parameters()) n += static_cast<Index>(v.values.size());
  return n;
}

void Model::zero_parameters() {
  for (auto& v : parameters()) std::fill(v.values.begin(), v.values.end(), 0.0);
}

bool Model::all_finite() const {
  for (const auto& v : parameters()) {
    for (double x : v.values) {
      if (!std::isfinite(x)) return false;
    }
  }
  return true;
}

namespace {

struct StageContext {
  const ModelConfig& config;
  Rng& rng;
  bool train_mode;
};

Eigen::MatrixXd run_stage(const HLConvLayer& layer, const HodgeLaplacian& L, const PoolingPlan* plan,
                          const Eigen::MatrixXd& x, const StageContext& ctx, StageRecord& rec) {
  if (x.cols() != layer.bank.in_channels()) {
    throw ShapeError("HL layer expects " + std::to_string(layer.bank.in_channels()) +
                     " input channels, got " + std::to_string(x.cols()));
  }
  rec.input = x;
  rec.terms = laguerre_terms(L, layer.bank.spectral_scale(), x, layer.bank.order());
  rec.pre = combine_terms(layer.bank, rec.terms);
  for (Index o = 0; o < rec.pre.cols(); ++o) rec.pre.col(o).array() += layer.bias[o];
  Eigen::MatrixXd act = leaky_relu(rec.pre, ctx.config.leaky_slope);
  const double rate = ctx.config.dropout_on_conv ? ctx.config.dropout_rate : 0.0;
  rec.activated = dropout(act, rate, ctx.rng, ctx.train_mode, &rec.mask);
  if (plan == nullptr) return rec.activated;
  return pool_signal(*plan, SimplexSignal(rec.activated), ctx.config.pool_mode, &rec.argmax).values;
}

Eigen::MatrixXd stage_backward(const HLConvLayer& layer, const HodgeLaplacian& L,
                               const PoolingPlan* plan, const StageRecord& rec,
                               const Eigen::MatrixXd& upstream, const ModelConfig& config,
                               std::vector<double>& grad_theta, std::vector<double>& grad_bias) {
  Eigen::MatrixXd grad =
      plan == nullptr ? upstream : pool_signal_backward(*plan, upstream, config.pool_mode, rec.argmax);
  if (rec.mask.size() > 0) grad = grad.cwiseProduct(rec.mask);
  grad = grad.cwiseProduct(leaky_relu_grad(rec.pre, config.leaky_slope));
  for (Index o = 0; o < grad.cols(); ++o) grad_bias[o] += grad.col(o).sum();
  auto fg = laguerre_backward(L, layer.bank, rec.terms, grad);
  for (std::size_t i = 0; i < fg.theta.size(); ++i) grad_theta[i] += fg.theta[i];
  return std::move(fg.input);
}

}  // namespace

double model_forward(const Model& model, const SampleInput& input, Rng& rng, bool train_mode,
                     ForwardTape* tape) {
  const auto& config = model.config;
  ForwardTape local;
  ForwardTape& t = tape != nullptr ? *tape : local;
  t = ForwardTape{};
  const StageContext ctx{config, rng, train_mode};

  std::vector<Eigen::VectorXd> parts;
  if (config.use_node_branch) {
    const Index n = model.atlas.n_nodes();
    if (input.node_series.rows() != n || input.node_series.cols() < 1) {
      throw ShapeError("node series must be " + std::to_string(n) + " x time with time >= 1");
    }
    std::vector<Eigen::MatrixXd> series(static_cast<std::size_t>(n));
    for (Index v = 0; v < n; ++v) series[v] = input.node_series.row(v).transpose();
    const double temporal_rate = config.dropout_on_conv ? config.dropout_rate : 0.0;
    for (const auto& layer : model.temporal) {
      TemporalRecord rec;
      rec.input = series;
      for (Index v = 0; v < n; ++v) {
        Eigen::MatrixXd pre = temporal_forward(layer, series[v]);
        Eigen::MatrixXd mask;
        Eigen::MatrixXd act = dropout(leaky_relu(pre, config.leaky_slope), temporal_rate, rng, train_mode, &mask);
        std::vector<Index> argmax;
        series[v] = temporal_max_pool(act, &argmax);
        rec.pre.push_back(std::move(pre));
        rec.mask.push_back(std::move(mask));
        rec.activated.push_back(std::move(act));
        rec.argmax.push_back(std::move(argmax));
      }
      t.temporal.push_back(std::move(rec));
    }
    t.averaged_length = series[0].rows();
    Eigen::MatrixXd x(n, series[0].cols());
    for (Index v = 0; v < n; ++v) x.row(v) = series[v].colwise().mean();

    for (std::size_t l = 0; l < model.node_layers.size(); ++l) {
      const Index level = model.node_level(static_cast<Index>(l));
      const PoolingPlan* plan = config.pool_nodes ? &model.node_plans[l] : nullptr;
      StageRecord rec;
      x = run_stage(model.node_layers[l], model.node_laplacians[level], plan, x, ctx, rec);
      t.node.push_back(std::move(rec));
    }
    const Index level = model.node_level(static_cast<Index>(model.node_layers.size()));
    x = run_stage(model.node_readout, model.node_laplacians[level], nullptr, x, ctx, t.node_readout);
    parts.push_back(x.col(0));
  }

  if (config.use_edge_branch) {
    const Index m = model.atlas.n_edges();
    if (input.edge_features.size() != m) {
      throw ShapeError("expected " + std::to_string(m) + " edge features, got " +
                       std::to_string(input.edge_features.size()));
    }
    Eigen::MatrixXd x = input.edge_features;
    for (std::size_t l = 0; l < model.edge_layers.size(); ++l) {
      const Index level = model.edge_level(static_cast<Index>(l));
      const PoolingPlan* plan = config.pool_edges ? &model.edge_plans[l] : nullptr;
      StageRecord rec;
      x = run_stage(model.edge_layers[l], model.edge_laplacians[level], plan, x, ctx, rec);
      t.edge.push_back(std::move(rec));
    }
    const Index level = model.edge_level(static_cast<Index>(model.edge_layers.size()));
    x = run_stage(model.edge_readout, model.edge_laplacians[level], nullptr, x, ctx, t.edge_readout);
    parts.push_back(x.col(0));
  }

  Index width = 0;
  for (const auto& p : parts) width += p.size();
  Eigen::MatrixXd h(width, 1);
  Index offset = 0;
  for (const auto& p : parts) {
    h.block(offset, 0, p.size(), 1) = p;
    offset += p.size();
  }

  for (std::size_t l = 0; l < model.head.size(); ++l) {
    const auto& layer = model.head[l];
    if (h.rows() != layer.in_dim) throw ShapeError("dense head input width mismatch");
    DenseRecord rec;
    rec.input = h;
    rec.pre = layer.weight_matrix() * h;
    for (Index o = 0; o < layer.out_dim; ++o) rec.pre(o, 0) += layer.bias[o];
    if (l + 1 < model.head.size()) {
      h = dropout(leaky_relu(rec.pre, config.leaky_slope), config.dropout_rate, rng, train_mode, &rec.mask);
    } else {
      h = rec.pre;
    }
    t.head.push_back(std::move(rec));
  }
  t.prediction = h(0, 0);
  t.recorded = true;
  return t.prediction;
}

ModelGradients zero_gradients(const Model& model) {
  ModelGradients g;
  for (const auto& v : model.parameters()) g.parameters.emplace_back(v.values.size(), 0.0);
  return g;
}

ModelGradients model_backward(const Model& model, const ForwardTape& tape, double upstream) {
  if (!tape.recorded) throw TapeError("model_backward called without a recorded forward pass");
  const auto& config = model.config;
  const SlotLayout slots = slot_layout(model);
  ModelGradients g = zero_gradients(model);
  auto& gp = g.parameters;

  Eigen::MatrixXd grad(1, 1);
  grad(0, 0) = upstream;
  for (std::size_t l = model.head.size(); l-- > 0;) {
    const auto& layer = model.head[l];
    const auto& rec = tape.head[l];
    if (l + 1 < model.head.size()) {
      if (rec.mask.size() > 0) grad = grad.cwiseProduct(rec.mask);
      grad = grad.cwiseProduct(leaky_relu_grad(rec.pre, config.leaky_slope));
    }
    auto& gw = gp[slots.head + 2 * l];
    auto& gb = gp[slots.head + 2 * l + 1];
    for (Index o = 0; o < layer.out_dim; ++o) {
      gb[o] += grad(o, 0);
      for (Index i = 0; i < layer.in_dim; ++i) {
        gw[static_cast<std::size_t>(o * layer.in_dim + i)] += grad(o, 0) * rec.input(i, 0);
      }
    }
    grad = layer.weight_matrix().transpose() * grad;
  }

  Index offset = 0;
  if (config.use_node_branch) {
    const Index n = model.atlas.n_nodes();
    const Index level = model.node_level(static_cast<Index>(model.node_layers.size()));
    const Index width = model.node_laplacians[level].dim();
    Eigen::MatrixXd x = grad.block(offset, 0, width, 1);
    offset += width;
    x = stage_backward(model.node_readout, model.node_laplacians[level], nullptr, tape.node_readout, x,
                       config, gp[slots.node_readout], gp[slots.node_readout + 1]);
    for (std::size_t l = model.node_layers.size(); l-- > 0;) {
      const Index lvl = model.node_level(static_cast<Index>(l));
      const PoolingPlan* plan = config.pool_nodes ? &model.node_plans[l] : nullptr;
      x = stage_backward(model.node_layers[l], model.node_laplacians[lvl], plan, tape.node[l], x, config,
                         gp[slots.node + 2 * l], gp[slots.node + 2 * l + 1]);
    }
    // Global average over the remaining time steps.
    std::vector<Eigen::MatrixXd> series_grad(static_cast<std::size_t>(n));
    const double inv_len = 1.0 / static_cast<double>(tape.averaged_length);
    for (Index v = 0; v < n; ++v) {
      series_grad[v] = (x.row(v) * inv_len).replicate(tape.averaged_length, 1);
    }
    for (std::size_t l = model.temporal.size(); l-- > 0;) {
      const auto& rec = tape.temporal[l];
      for (Index v = 0; v < n; ++v) {
        Eigen::MatrixXd d = temporal_max_pool_backward(rec.activated[v].rows(), series_grad[v], rec.argmax[v]);
        if (rec.mask[v].size() > 0) d = d.cwiseProduct(rec.mask[v]);
        d = d.cwiseProduct(leaky_relu_grad(rec.pre[v], config.leaky_slope));
        series_grad[v] = temporal_backward(model.temporal[l], rec.input[v], d, gp[slots.temporal + 2 * l],
                                           gp[slots.temporal + 2 * l + 1]);
      }
    }
    g.node_series.resize(n, series_grad.empty() ? 0 : series_grad[0].rows());
    for (Index v = 0; v < n; ++v) g.node_series.row(v) = series_grad[v].col(0).transpose();
  }

  if (config.use_edge_branch) {
    const Index level = model.edge_level(static_cast<Index>(model.edge_layers.size()));
    const Index width = model.edge_laplacians[level].dim();
    Eigen::MatrixXd x = grad.block(offset, 0, width, 1);
    x = stage_backward(model.edge_readout, model.edge_laplacians[level], nullptr, tape.edge_readout, x,
                       config, gp[slots.edge_readout], gp[slots.edge_readout + 1]);
    for (std::size_t l = model.edge_layers.size(); l-- > 0;) {
      const Index lvl = model.edge_level(static_cast<Index>(l));
      const PoolingPlan* plan = config.pool_edges ? &model.edge_plans[l] : nullptr;
      x = stage_backward(model.edge_layers[l], model.edge_laplacians[lvl], plan, tape.edge[l], x, config,
                         gp[slots.edge + 2 * l], gp[slots.edge + 2 * l + 1]);
    }
    g.edge_features = x.col(0);
  }
  return g;
}

void accumulate(ModelGradients& dst, const ModelGradients& src, double scale) {
  if (dst.parameters.size() != src.parameters.size()) throw ShapeError("gradient layout mismatch");
  for (std::size_t s = 0; s < dst.parameters.size(); ++s) {
    auto& d = dst.parameters[s];
    const auto& v = src.parameters[s];
    if (d.size() != v.size()) throw ShapeError("gradient layout mismatch");
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += scale * v[i];
  }
}

}  // namespace hodge
