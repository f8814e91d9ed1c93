#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hodgeconv/complex.hpp"
#include "hodgeconv/layers.hpp"

namespace hodge {

struct TrainConfig {
  double learning_rate = 0.005;
  double lr_decay = 0.95;  // multiplier applied after every epoch
  double weight_decay = 0.005;
  bool decoupled_weight_decay = false;
  Index batch_size = 32;
  Index epochs = 100;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

/// Adam moments for a list of parameter tensors.
struct AdamState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  explicit AdamState(const std::vector<std::size_t>& sizes, double b1 = 0.9, double b2 = 0.999,
                     double eps = 1e-8);
};

struct AdamOptions {
  double learning_rate = 0.005;
  double weight_decay = 0.0;
  bool decoupled_weight_decay = false;
};

/**
 * One bias-corrected Adam update of every tensor in `params`.
 *
 * Coupled weight decay adds weight_decay * param to the gradient before the
 * moment update; decoupled decay shrinks the parameter by
 * (1 - learning_rate * weight_decay) after it.
 */
void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state,
               const AdamOptions& options);

/// Convenience wrapper over the model parameter views.
void adam_step(Model& model, const ModelGradients& grads, AdamState& state, const AdamOptions& options);

double rmse(std::span<const double> predictions, std::span<const double> targets);

/// One subject: node series (nodes x time), edge features in atlas edge order, and the target.
struct Sample : SampleInput {
  double target = 0.0;
};

struct Dataset {
  SimplicialComplex atlas;
  std::vector<Sample> samples;

  Index size() const { return static_cast<Index>(samples.size()); }
};

struct SyntheticOptions {
  std::uint64_t seed = 0;
  Index n_samples = 200;
  Index n_nodes = 20;
  Index time_len = 32;
  double density = 0.2;
  double noise_sigma = 0.0;
  Index n_planted = 5;
  /// Explicit planted weights (length n_planted); empty draws them from U[1, 2].
  std::vector<double> planted_weights;
  /// Standard deviation of the per-sample perturbation of the base connectivity.
  double perturbation = 0.3;
  /// Product-of-two-edges target instead of the linear one (capacity tests only).
  bool nonlinear = false;
};

struct SyntheticDataset {
  Dataset data;
  SyntheticOptions options;
  std::vector<Index> planted_edges;
  std::vector<double> planted_weights;
};

/**
 * Random connected atlas (Erdos-Renyi at `density` plus a spanning path),
 * low-pass filtered node series, perturbed base connectivity as edge
 * features, and targets sum_e w_e x_e + N(0, sigma^2) over the planted edges.
 */
SyntheticDataset generate_synthetic(const SyntheticOptions& options);

struct EpochRecord {
  Index epoch = 0;
  double train_rmse = 0.0;
  double val_rmse = 0.0;  // NaN when there is no validation set
  double learning_rate = 0.0;
};

struct FitResult {
  std::vector<EpochRecord> history;
  /// Parameters at the epoch with the lowest validation RMSE (training RMSE when no validation set).
  std::vector<std::vector<double>> best_parameters;
  Index best_epoch = -1;
};

std::vector<double> predict(const Model& model, const Dataset& data, std::span<const Index> indices);

/**
 * Minibatch Adam training on `train` indices with per-epoch RMSE on `train`
 * and `val`. Shuffling and dropout draw from config.seed. Throws
 * DivergenceError if the loss turns non-finite.
 */
FitResult fit(Model& model, const Dataset& data, std::span<const Index> train,
              std::span<const Index> val, const TrainConfig& config);

/// Seeded split into (train, validation) index lists.
std::pair<std::vector<Index>, std::vector<Index>> train_val_split(Index n, double val_fraction,
                                                                  std::uint64_t seed);

/// Seeded k-fold partition; fold f is returned as the validation indices of fold f.
std::vector<std::vector<Index>> kfold_partition(Index n, Index folds, std::uint64_t seed);

struct SaliencyMap {
  Eigen::VectorXd edges;  // atlas edge order
  Eigen::VectorXd nodes;  // per node, mean |d prediction / d series| over time
};

/// Mean over samples of |d prediction / d input| in eval mode.
SaliencyMap saliency_map(const Model& model, const Dataset& data);

void load_parameters(Model& model, const std::vector<std::vector<double>>& values);
std::vector<std::vector<double>> snapshot_parameters(const Model& model);

}  // namespace hodge
