#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "hodgeconv/complex.hpp"
#include "hodgeconv/filters.hpp"
#include "hodgeconv/laplacian.hpp"
#include "hodgeconv/layers.hpp"
#include "hodgeconv/pooling.hpp"
#include "hodgeconv/train.hpp"

namespace hodge::io {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Shortest round-trip decimal text for a double.
std::string format_double(double value);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Rows of comma-separated reals; blank lines are skipped.
Eigen::MatrixXd parse_matrix_csv(const std::string& text);
std::string matrix_to_csv(const Eigen::MatrixXd& matrix);

/// CSV (n rows of n reals) or JSON {"n": int, "matrix": [[...]]}, chosen by extension.
Eigen::MatrixXd read_connectivity(const std::filesystem::path& path);

json complex_to_json(const SimplicialComplex& complex);
SimplicialComplex complex_from_json(const json& j);

/// "row col value" lines sorted row-major.
std::string laplacian_to_coordinate_list(const HodgeLaplacian& L);

/// {"order", "in_channels", "out_channels", "spectral_scale", "theta": flat (out, in, p) list}.
json filter_bank_to_json(const FilterBank& bank);
FilterBank filter_bank_from_json(const json& j);

json pooling_plan_to_json(const PoolingPlan& plan);

json model_config_to_json(const ModelConfig& config);
/// Every field optional; missing fields keep their defaults.
ModelConfig model_config_from_json(const json& j, ModelConfig base = {});

json train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const json& j, TrainConfig base = {});

/// Version-tagged checkpoint with architecture, Adam constants and every parameter tensor.
json checkpoint_to_json(const Model& model, const TrainConfig& train);
/// Rebuilds the model on `atlas` and loads its parameters; ShapeError when incompatible.
Model model_from_checkpoint(const json& checkpoint, const SimplicialComplex& atlas);

/// atlas.json, samples.csv, series/<id>.csv, edges/<id>.csv, planted.json.
void save_dataset(const std::filesystem::path& dir, const SyntheticDataset& dataset);
void save_dataset(const std::filesystem::path& dir, const Dataset& dataset,
                  const json& planted = json::object());
Dataset load_dataset(const std::filesystem::path& dir);

/// epoch,train_rmse,val_rmse,lr
std::string history_to_csv(const std::vector<EpochRecord>& history);

/// 64-bit FNV-1a digest of a file, as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);

}  // namespace hodge::io
