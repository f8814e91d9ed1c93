#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hodgeconv/complex.hpp"
#include "hodgeconv/filters.hpp"
#include "hodgeconv/laplacian.hpp"
#include "hodgeconv/pooling.hpp"

namespace hodge {

using Rng = std::mt19937_64;

double leaky_relu(double x, double slope);
Eigen::MatrixXd leaky_relu(const Eigen::MatrixXd& x, double slope);
/// Derivative with respect to x; 1 for x >= 0.
Eigen::MatrixXd leaky_relu_grad(const Eigen::MatrixXd& x, double slope);

/**
 * Inverted dropout. In train mode every entry is zeroed with probability
 * `rate` and survivors are scaled by 1/(1-rate); otherwise the input is
 * returned unchanged. When `mask` is non-null it receives the per-entry
 * scale factors (empty when dropout is inactive).
 */
Eigen::MatrixXd dropout(const Eigen::MatrixXd& x, double rate, Rng& rng, bool train_mode,
                        Eigen::MatrixXd* mask = nullptr);

/// 1-D convolution along time, stride 1, zero-padded to keep the series length.
struct TemporalConvLayer {
  Index kernel_size = 1;
  Index in_channels = 1;
  Index out_channels = 1;
  std::vector<double> weights;  // (out, in, tap) row-major
  std::vector<double> bias;     // out

  TemporalConvLayer() = default;
  TemporalConvLayer(Index kernel, Index in, Index out);

  double& weight(Index o, Index i, Index tap) {
    return weights[static_cast<std::size_t>((o * in_channels + i) * kernel_size + tap)];
  }
  double weight(Index o, Index i, Index tap) const {
    return weights[static_cast<std::size_t>((o * in_channels + i) * kernel_size + tap)];
  }
};

/**
 * Convolution plus bias for one node's series (time x channels). Tap j
 * weighs the sample j steps in the past: y[t] = b + sum_j w[j] x[t - j],
 * with x[t] = 0 for t < 0.
 */
Eigen::MatrixXd temporal_forward(const TemporalConvLayer& layer, const Eigen::MatrixXd& series);

/// Per-node temporal_forward over a node-indexed list of series.
std::vector<Eigen::MatrixXd> temporal_forward(const TemporalConvLayer& layer,
                                              const std::vector<Eigen::MatrixXd>& series);

/// Accumulates parameter gradients and returns the gradient with respect to `series`.
Eigen::MatrixXd temporal_backward(const TemporalConvLayer& layer, const Eigen::MatrixXd& series,
                                  const Eigen::MatrixXd& upstream, std::span<double> grad_weights,
                                  std::span<double> grad_bias);

/// Max-pool of width 2 along time (rows); an odd trailing sample passes through.
Eigen::MatrixXd temporal_max_pool(const Eigen::MatrixXd& x, std::vector<Index>* argmax = nullptr);
Eigen::MatrixXd temporal_max_pool_backward(Index input_rows, const Eigen::MatrixXd& upstream,
                                           const std::vector<Index>& argmax);

/// Hodge-Laplacian convolution: Laguerre filter bank plus per-channel bias.
struct HLConvLayer {
  int k = 0;
  FilterBank bank;
  std::vector<double> bias;
};

struct DenseLayer {
  Index in_dim = 0;
  Index out_dim = 0;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> bias;

  DenseLayer() = default;
  DenseLayer(Index in, Index out);

  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> weight_matrix() {
    return {weights.data(), out_dim, in_dim};
  }
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
  weight_matrix() const {
    return {weights.data(), out_dim, in_dim};
  }
};

enum class ScaleMode { kUnit, kAuto };

struct ModelConfig {
  std::vector<Index> temporal_channels{8, 8};
  std::vector<Index> temporal_kernels{5, 3};
  std::vector<Index> node_channels{16, 1};
  Index node_order = 3;
  std::vector<Index> edge_channels{32, 32};
  Index edge_order = 4;
  std::vector<Index> head_hidden{256, 128};
  double dropout_rate = 0.5;
  bool dropout_on_conv = true;
  double leaky_slope = 0.33;
  PoolMode pool_mode = PoolMode::kAverage;
  bool pool_nodes = true;
  bool pool_edges = true;
  bool reattach = true;
  bool use_node_branch = true;
  bool use_edge_branch = true;
  ScaleMode spectral_scale = ScaleMode::kUnit;
  double theta_noise = 0.01;

  /// Throws ShapeError on inconsistent sizes.
  void validate() const;
};

struct ParameterView {
  std::string name;
  std::span<double> values;
};

struct ConstParameterView {
  std::string name;
  std::span<const double> values;
};

/**
 * The full heterogeneous network bound to one atlas complex.
 *
 * Node branch: temporal conv/max-pool layers, global average over time,
 * HL-node conv layers with node pooling, and a one-channel node readout.
 * Edge branch: HL-edge conv layers with edge pooling and a one-channel edge
 * readout. The readouts are concatenated (nodes first) and fed to the dense
 * head, whose last layer outputs the scalar prediction.
 */
struct Model {
  ModelConfig config;
  SimplicialComplex atlas;

  std::vector<TemporalConvLayer> temporal;
  std::vector<HLConvLayer> node_layers;
  HLConvLayer node_readout;
  std::vector<HLConvLayer> edge_layers;
  HLConvLayer edge_readout;
  std::vector<DenseLayer> head;

  // Topology per resolution level; level 0 is the atlas itself.
  std::vector<PoolingPlan> node_plans;
  std::vector<PoolingPlan> edge_plans;
  std::vector<HodgeLaplacian> node_laplacians;
  std::vector<HodgeLaplacian> edge_laplacians;

  Model() = default;
  Model(const ModelConfig& config, const SimplicialComplex& atlas, std::uint64_t seed);

  /// Resolution level consumed by node (edge) conv layer `layer`.
  Index node_level(Index layer) const { return config.pool_nodes ? layer : 0; }
  Index edge_level(Index layer) const { return config.pool_edges ? layer : 0; }

  /// Input width of the dense head.
  Index head_input_dim() const;

  std::vector<ParameterView> parameters();
  std::vector<ConstParameterView> parameters() const;
  Index parameter_count() const;

  /// Sets every parameter to zero.
  void zero_parameters();
  bool all_finite() const;
};

/// Intermediates of one HL convolution stage.
struct StageRecord {
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> terms;
  Eigen::MatrixXd pre;
  Eigen::MatrixXd mask;
  Eigen::MatrixXd activated;
  std::vector<Index> argmax;
};

struct TemporalRecord {
  std::vector<Eigen::MatrixXd> input;
  std::vector<Eigen::MatrixXd> pre;
  std::vector<Eigen::MatrixXd> mask;
  std::vector<Eigen::MatrixXd> activated;
  std::vector<std::vector<Index>> argmax;
};

struct DenseRecord {
  Eigen::MatrixXd input;
  Eigen::MatrixXd pre;
  Eigen::MatrixXd mask;
};

/// Everything model_backward needs from a forward pass.
struct ForwardTape {
  bool recorded = false;
  std::vector<TemporalRecord> temporal;
  Index averaged_length = 0;
  std::vector<StageRecord> node;
  StageRecord node_readout;
  std::vector<StageRecord> edge;
  StageRecord edge_readout;
  std::vector<DenseRecord> head;
  double prediction = 0.0;
};

/// Inputs for one sample: node time series (nodes x time) and edge features (edges).
struct SampleInput {
  Eigen::MatrixXd node_series;
  Eigen::VectorXd edge_features;
};

/**
 * Scalar prediction for one sample. Dropout is active only when `train_mode`
 * is true and draws from `rng`. When `tape` is non-null the intermediates are
 * recorded for model_backward.
 */
double model_forward(const Model& model, const SampleInput& input, Rng& rng, bool train_mode,
                     ForwardTape* tape = nullptr);

struct ModelGradients {
  /// One entry per Model::parameters() view, same order and sizes.
  std::vector<std::vector<double>> parameters;
  Eigen::MatrixXd node_series;
  Eigen::VectorXd edge_features;
};

ModelGradients zero_gradients(const Model& model);

/**
 * Reverse pass: gradients of `upstream * prediction` with respect to every
 * parameter and both inputs. For a squared-error loss 0.5 (y_hat - y)^2 pass
 * upstream = y_hat - y; for saliency pass 1. Throws TapeError if the tape was
 * not recorded.
 */
ModelGradients model_backward(const Model& model, const ForwardTape& tape, double upstream);

/// Adds `scale * src` into `dst` (parameter parts only).
void accumulate(ModelGradients& dst, const ModelGradients& src, double scale = 1.0);

}  // namespace hodge
