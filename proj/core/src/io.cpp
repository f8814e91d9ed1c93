#include "hodgeconv/io.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include <fmt/format.h>

#include "hodgeconv/errors.hpp"

namespace hodge::io {

namespace fs = std::filesystem;

std::string format_double(double value) { return fmt::format("{}", value); }

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputFormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputFormatError("cannot write " + path.string());
  out << text;
}

Eigen::MatrixXd parse_matrix_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw InputFormatError("not a number in CSV: '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) throw InputFormatError("ragged CSV rows");
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd m(static_cast<Index>(rows.size()), rows.empty() ? 0 : static_cast<Index>(rows[0].size()));
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

std::string matrix_to_csv(const Eigen::MatrixXd& matrix) {
  std::string out;
  for (Index r = 0; r < matrix.rows(); ++r) {
    for (Index c = 0; c < matrix.cols(); ++c) {
      if (c > 0) out += ',';
      out += format_double(matrix(r, c));
    }
    out += '\n';
  }
  return out;
}

Eigen::MatrixXd read_connectivity(const fs::path& path) {
  const std::string text = read_text(path);
  if (path.extension() == ".json") {
    json j;
    try {
      j = json::parse(text);
      const auto n = j.at("n").get<Index>();
      const auto& rows = j.at("matrix");
      if (static_cast<Index>(rows.size()) != n) throw InputFormatError("matrix row count differs from n");
      Eigen::MatrixXd m(n, n);
      for (Index r = 0; r < n; ++r) {
        if (static_cast<Index>(rows[r].size()) != n) throw InputFormatError("connectivity matrix is not square");
        for (Index c = 0; c < n; ++c) m(r, c) = rows[r][c].get<double>();
      }
      return m;
    } catch (const json::exception& e) {
      throw InputFormatError(std::string("bad connectivity JSON: ") + e.what());
    }
  }
  return parse_matrix_csv(text);
}

json complex_to_json(const SimplicialComplex& complex) {
  json edges = json::array();
  for (const auto& e : complex.edges()) edges.push_back({e[0], e[1]});
  json triangles = json::array();
  for (const auto& t : complex.triangles()) triangles.push_back({t[0], t[1], t[2]});
  return {{"schema_version", kSchemaVersion},
          {"n_nodes", complex.n_nodes()},
          {"edges", edges},
          {"triangles", triangles}};
}

SimplicialComplex complex_from_json(const json& j) {
  try {
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges")) edges.push_back({e.at(0).get<Index>(), e.at(1).get<Index>()});
    std::vector<Triangle> triangles;
    if (j.contains("triangles")) {
      for (const auto& t : j.at("triangles")) {
        triangles.push_back({t.at(0).get<Index>(), t.at(1).get<Index>(), t.at(2).get<Index>()});
      }
    }
    return SimplicialComplex(j.at("n_nodes").get<Index>(), std::move(edges), std::move(triangles));
  } catch (const json::exception& e) {
    throw InputFormatError(std::string("bad complex JSON: ") + e.what());
  }
}

std::string laplacian_to_coordinate_list(const HodgeLaplacian& L) {
  const Eigen::SparseMatrix<double, Eigen::RowMajor> rows = L.matrix;
  std::string out;
  for (Index r = 0; r < rows.outerSize(); ++r) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(rows, r); it; ++it) {
      out += fmt::format("{} {} {}\n", it.row(), it.col(), format_double(it.value()));
    }
  }
  return out;
}

json filter_bank_to_json(const FilterBank& bank) {
  const auto theta = bank.coefficients();
  return {{"schema_version", kSchemaVersion},
          {"order", bank.order()},
          {"in_channels", bank.in_channels()},
          {"out_channels", bank.out_channels()},
          {"spectral_scale", bank.spectral_scale()},
          {"theta", std::vector<double>(theta.begin(), theta.end())}};
}

FilterBank filter_bank_from_json(const json& j) {
  try {
    FilterBank bank(j.at("order").get<Index>(), j.at("in_channels").get<Index>(),
                    j.at("out_channels").get<Index>(), j.value("spectral_scale", 1.0));
    const auto theta = j.at("theta").get<std::vector<double>>();
    if (theta.size() != bank.coefficients().size()) throw ShapeError("theta length does not match bank shape");
    std::copy(theta.begin(), theta.end(), bank.coefficients().begin());
    return bank;
  } catch (const json::exception& e) {
    throw InputFormatError(std::string("bad filter bank JSON: ") + e.what());
  }
}

json pooling_plan_to_json(const PoolingPlan& plan) {
  json pairs = json::array();
  json singletons = json::array();
  for (const auto& p : plan.pairs) {
    if (p.second) {
      pairs.push_back({p.first, *p.second});
    } else {
      singletons.push_back(p.first);
    }
  }
  return {{"schema_version", kSchemaVersion},
          {"k", plan.k},
          {"fine_count", plan.fine_count},
          {"pairs", pairs},
          {"singletons", singletons},
          {"fakes", plan.fake_indices},
          {"permutation", plan.permutation},
          {"coarse_complex", complex_to_json(plan.coarse_complex)}};
}

namespace {

const char* pool_mode_name(PoolMode mode) { return mode == PoolMode::kMax ? "max" : "avg"; }

PoolMode pool_mode_from(const std::string& s) {
  if (s == "avg" || s == "average") return PoolMode::kAverage;
  if (s == "max") return PoolMode::kMax;
  throw InputFormatError("pool_mode must be 'avg' or 'max', got '" + s + "'");
}

template <typename T>
void read_optional(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

}  // namespace

json model_config_to_json(const ModelConfig& c) {
  return {{"temporal_channels", c.temporal_channels},
          {"temporal_kernels", c.temporal_kernels},
          {"node_channels", c.node_channels},
          {"node_order", c.node_order},
          {"edge_channels", c.edge_channels},
          {"edge_order", c.edge_order},
          {"head_hidden", c.head_hidden},
          {"dropout_rate", c.dropout_rate},
          {"dropout_on_conv", c.dropout_on_conv},
          {"leaky_slope", c.leaky_slope},
          {"pool_mode", pool_mode_name(c.pool_mode)},
          {"pool_nodes", c.pool_nodes},
          {"pool_edges", c.pool_edges},
          {"reattach", c.reattach},
          {"use_node_branch", c.use_node_branch},
          {"use_edge_branch", c.use_edge_branch},
          {"spectral_scale", c.spectral_scale == ScaleMode::kAuto ? "auto" : "unit"},
          {"theta_noise", c.theta_noise}};
}

ModelConfig model_config_from_json(const json& j, ModelConfig c) {
  try {
    read_optional(j, "temporal_channels", c.temporal_channels);
    read_optional(j, "temporal_kernels", c.temporal_kernels);
    read_optional(j, "node_channels", c.node_channels);
    read_optional(j, "node_order", c.node_order);
    read_optional(j, "edge_channels", c.edge_channels);
    read_optional(j, "edge_order", c.edge_order);
    read_optional(j, "head_hidden", c.head_hidden);
    read_optional(j, "dropout_rate", c.dropout_rate);
    read_optional(j, "dropout_on_conv", c.dropout_on_conv);
    read_optional(j, "leaky_slope", c.leaky_slope);
    if (j.contains("pool_mode")) c.pool_mode = pool_mode_from(j.at("pool_mode").get<std::string>());
    read_optional(j, "pool_nodes", c.pool_nodes);
    read_optional(j, "pool_edges", c.pool_edges);
    read_optional(j, "reattach", c.reattach);
    read_optional(j, "use_node_branch", c.use_node_branch);
    read_optional(j, "use_edge_branch", c.use_edge_branch);
    if (j.contains("spectral_scale")) {
      const auto s = j.at("spectral_scale").get<std::string>();
      if (s != "auto" && s != "unit") throw InputFormatError("spectral_scale must be 'unit' or 'auto'");
      c.spectral_scale = s == "auto" ? ScaleMode::kAuto : ScaleMode::kUnit;
    }
    read_optional(j, "theta_noise", c.theta_noise);
  } catch (const json::exception& e) {
    throw InputFormatError(std::string("bad model config: ") + e.what());
  }
  try {
    c.validate();
  } catch (const ShapeError& e) {
    throw InputFormatError(std::string("bad model config: ") + e.what());
  }
  return c;
}

json train_config_to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"lr_decay", c.lr_decay},
          {"weight_decay", c.weight_decay},
          {"decoupled_weight_decay", c.decoupled_weight_decay},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"seed", c.seed},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"epsilon", c.epsilon}};
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
  try {
    read_optional(j, "learning_rate", c.learning_rate);
    read_optional(j, "lr_decay", c.lr_decay);
    read_optional(j, "weight_decay", c.weight_decay);
    read_optional(j, "decoupled_weight_decay", c.decoupled_weight_decay);
    read_optional(j, "batch_size", c.batch_size);
    read_optional(j, "epochs", c.epochs);
    read_optional(j, "seed", c.seed);
    read_optional(j, "beta1", c.beta1);
    read_optional(j, "beta2", c.beta2);
    read_optional(j, "epsilon", c.epsilon);
  } catch (const json::exception& e) {
    throw InputFormatError(std::string("bad train config: ") + e.what());
  }
  c.validate();
  return c;
}

json checkpoint_to_json(const Model& model, const TrainConfig& train) {
  json params = json::object();
  for (const auto& v : model.parameters()) {
    params[v.name] = std::vector<double>(v.values.begin(), v.values.end());
  }
  return {{"format", "hodgeconv-checkpoint"},
          {"schema_version", kSchemaVersion},
          {"model", model_config_to_json(model.config)},
          {"train", train_config_to_json(train)},
          {"atlas", {{"n_nodes", model.atlas.n_nodes()}, {"n_edges", model.atlas.n_edges()}}},
          {"parameters", params}};
}

Model model_from_checkpoint(const json& checkpoint, const SimplicialComplex& atlas) {
  try {
    if (checkpoint.value("format", std::string()) != "hodgeconv-checkpoint") {
      throw InputFormatError("not a hodgeconv checkpoint");
    }
    if (checkpoint.at("schema_version").get<int>() != kSchemaVersion) {
      throw InputFormatError("unsupported checkpoint version");
    }
    const auto& a = checkpoint.at("atlas");
    if (a.at("n_nodes").get<Index>() != atlas.n_nodes() || a.at("n_edges").get<Index>() != atlas.n_edges()) {
      throw ShapeError("checkpoint atlas does not match the dataset atlas");
    }
    Model model(model_config_from_json(checkpoint.at("model")), atlas, 0);
    std::vector<std::vector<double>> values;
    const auto& params = checkpoint.at("parameters");
    for (const auto& v : model.parameters()) {
      if (!params.contains(v.name)) throw ShapeError("checkpoint lacks parameter '" + v.name + "'");
      values.push_back(params.at(v.name).get<std::vector<double>>());
    }
    load_parameters(model, values);
    return model;
  } catch (const json::exception& e) {
    throw InputFormatError(std::string("bad checkpoint: ") + e.what());
  }
}

void save_dataset(const fs::path& dir, const SyntheticDataset& dataset) {
  json planted = {{"schema_version", kSchemaVersion},
                  {"edges", dataset.planted_edges},
                  {"weights", dataset.planted_weights},
                  {"seed", dataset.options.seed},
                  {"noise_sigma", dataset.options.noise_sigma}};
  save_dataset(dir, dataset.data, planted);
}

void save_dataset(const fs::path& dir, const Dataset& dataset, const json& planted) {
  fs::create_directories(dir / "series");
  fs::create_directories(dir / "edges");
  write_text(dir / "atlas.json", complex_to_json(dataset.atlas).dump(2) + "\n");
  std::string samples = "sample_id,target\n";
  for (Index s = 0; s < dataset.size(); ++s) {
    const auto& sample = dataset.samples[s];
    samples += fmt::format("{},{}\n", s, format_double(sample.target));
    write_text(dir / "series" / (std::to_string(s) + ".csv"), matrix_to_csv(sample.node_series));
    write_text(dir / "edges" / (std::to_string(s) + ".csv"), matrix_to_csv(sample.edge_features));
  }
  write_text(dir / "samples.csv", samples);
  write_text(dir / "planted.json", planted.dump(2) + "\n");
}

Dataset load_dataset(const fs::path& dir) {
  Dataset out;
  try {
    out.atlas = complex_from_json(json::parse(read_text(dir / "atlas.json")));
  } catch (const json::exception& e) {
    throw InputFormatError(std::string("bad atlas.json: ") + e.what());
  }
  std::istringstream lines(read_text(dir / "samples.csv"));
  std::string line;
  if (!std::getline(lines, line)) throw InputFormatError("samples.csv is empty");
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw InputFormatError("malformed samples.csv row: " + line);
    const std::string id = line.substr(0, comma);
    Sample sample;
    try {
      sample.target = std::stod(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw InputFormatError("malformed target in samples.csv: " + line);
    }
    sample.node_series = parse_matrix_csv(read_text(dir / "series" / (id + ".csv")));
    const Eigen::MatrixXd edges = parse_matrix_csv(read_text(dir / "edges" / (id + ".csv")));
    if (sample.node_series.rows() != out.atlas.n_nodes()) {
      throw InputFormatError("series/" + id + ".csv must have one row per atlas node");
    }
    if (edges.cols() != 1 || edges.rows() != out.atlas.n_edges()) {
      throw InputFormatError("edges/" + id + ".csv must hold one value per atlas edge");
    }
    sample.edge_features = edges.col(0);
    out.samples.push_back(std::move(sample));
  }
  if (out.samples.empty()) throw InputFormatError("dataset has no samples");
  return out;
}

std::string history_to_csv(const std::vector<EpochRecord>& history) {
  std::string out = "epoch,train_rmse,val_rmse,lr\n";
  for (const auto& r : history) {
    out += fmt::format("{},{},{},{}\n", r.epoch, format_double(r.train_rmse),
                       std::isnan(r.val_rmse) ? std::string("nan") : format_double(r.val_rmse),
                       format_double(r.learning_rate));
  }
  return out;
}

std::string file_digest(const fs::path& path) {
  const std::string bytes = read_text(path);
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace hodge::io
