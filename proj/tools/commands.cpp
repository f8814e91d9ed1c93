#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>
#include <set>

#include <CLI11.hpp>
#include <fmt/chrono.h>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "hodgeconv/errors.hpp"
#include "hodgeconv/hodgeconv.hpp"

namespace hodge::cli {

namespace fs = std::filesystem;
using io::json;

namespace {

std::string now_utc() {
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::now()));
}

/// Collects artifacts written by one command and emits manifest.json beside them.
class Manifest {
 public:
  Manifest(std::string command, fs::path dir) : command_(std::move(command)), dir_(std::move(dir)) {
    started_ = now_utc();
  }

  void input(const std::string& name, const std::string& value) { inputs_[name] = value; }
  void config(json c) { config_ = std::move(c); }
  void seed(std::uint64_t s) { seed_ = s; }

  fs::path write(const std::string& name, const std::string& text) {
    const fs::path path = dir_ / name;
    io::write_text(path, text);
    outputs_.push_back(name);
    return path;
  }

  void finish() {
    json outputs = json::object();
    for (const auto& name : outputs_) {
      outputs[name] = {{"path", (dir_ / name).string()}, {"fnv1a64", io::file_digest(dir_ / name)}};
    }
    const json m = {{"schema_version", io::kSchemaVersion},
                    {"command", command_},
                    {"config", config_},
                    {"seed", seed_},
                    {"started_at", started_},
                    {"finished_at", now_utc()},
                    {"inputs", inputs_},
                    {"outputs", outputs}};
    io::write_text(dir_ / "manifest.json", m.dump(2) + "\n");
  }

 private:
  std::string command_;
  fs::path dir_;
  std::string started_;
  json config_ = json::object();
  json inputs_ = json::object();
  std::uint64_t seed_ = 0;
  std::vector<std::string> outputs_;
};

std::string simplex_label(const SimplicialComplex& c, int k, Index s) {
  if (k == 0) return std::to_string(s);
  return fmt::format("{}-{}", c.edges()[s][0], c.edges()[s][1]);
}

std::vector<Index> numeric_support(const Eigen::MatrixXd& x, double tol) {
  std::vector<Index> s;
  for (Index r = 0; r < x.rows(); ++r) {
    if (std::abs(x(r, 0)) > tol) s.push_back(r);
  }
  return s;
}

FilterBank demo_bank(Index degree, const std::string& scheme) {
  FilterBank bank(degree + 1, 1, 1);
  for (Index p = 0; p <= degree; ++p) {
    bank.theta(0, 0, p) = scheme == "uniform" ? 1.0 : 1.0 / static_cast<double>((p + 1) * (p + 1));
  }
  return bank;
}

// ---------------------------------------------------------------- localization

struct LocalizationArgs {
  std::string complex = "builtin:path4";
  double threshold = 0.5;
  int k = 1;
  std::vector<Index> degrees{0, 1, 2, 3, 4};
  Index stacked_layers = 4;
  Index source = 0;
  std::string out;
  std::string coefficients = "decay";
};

int run_localization(const LocalizationArgs& a, std::ostream& out) {
  const auto complex = load_complex(a.complex, a.threshold);
  const auto L = hodge_laplacian(complex, a.k);
  if (a.source < 0 || a.source >= L.dim()) {
    throw InputFormatError(fmt::format("source {} out of range for {} simplices", a.source, L.dim()));
  }
  for (Index d : a.degrees) {
    if (d < 0) throw InputFormatError("polynomial degrees must be nonnegative");
  }
  if (a.stacked_layers < 0) throw InputFormatError("stacked-layers must be nonnegative");
  constexpr double kTol = 1e-12;

  Eigen::MatrixXd pulse = Eigen::MatrixXd::Zero(L.dim(), 1);
  pulse(a.source, 0) = 1.0;
  const auto hops = hop_distances(complex, a.k, a.source);

  std::vector<Eigen::MatrixXd> filtered;
  json degrees = json::array();
  bool localized = true;
  for (Index d : a.degrees) {
    filtered.push_back(laguerre_apply(L, demo_bank(d, a.coefficients), SimplexSignal(pulse)).values);
    const auto structural = filter_support(complex, a.k, d + 1, a.source);
    const std::set<Index> allowed(structural.begin(), structural.end());
    double leak = 0.0;
    for (Index r = 0; r < L.dim(); ++r) {
      if (!allowed.count(r)) leak = std::max(leak, std::abs(filtered.back()(r, 0)));
    }
    localized = localized && leak <= kTol;
    degrees.push_back({{"degree", d},
                       {"structural_support", structural},
                       {"numeric_support", numeric_support(filtered.back(), kTol)},
                       {"max_abs_outside_support", leak}});
  }

  Eigen::MatrixXd stacked = pulse;
  for (Index l = 0; l < a.stacked_layers; ++l) {
    stacked = laguerre_apply(L, demo_bank(1, a.coefficients), SimplexSignal(stacked)).values;
  }
  const Eigen::MatrixXd single =
      laguerre_apply(L, demo_bank(a.stacked_layers, a.coefficients), SimplexSignal(pulse)).values;
  const auto stacked_support = numeric_support(stacked, kTol);
  const auto single_support = numeric_support(single, kTol);

  std::string csv = "simplex,label,hop_distance";
  for (Index d : a.degrees) csv += fmt::format(",degree_{}", d);
  csv += fmt::format(",stacked_{}x1,single_degree_{}\n", a.stacked_layers, a.stacked_layers);
  for (Index r = 0; r < L.dim(); ++r) {
    csv += fmt::format("{},{},{}", r, simplex_label(complex, a.k, r),
                       hops[r] ? std::to_string(*hops[r]) : std::string("inf"));
    for (const auto& f : filtered) csv += "," + io::format_double(f(r, 0));
    csv += "," + io::format_double(stacked(r, 0)) + "," + io::format_double(single(r, 0)) + "\n";
  }

  const json support = {
      {"schema_version", io::kSchemaVersion},
      {"k", a.k},
      {"source", a.source},
      {"coefficients", a.coefficients},
      {"degrees", degrees},
      {"stacked",
       {{"layers", a.stacked_layers},
        {"stacked_support", stacked_support},
        {"single_support", single_support},
        {"structural_support", filter_support(complex, a.k, a.stacked_layers + 1, a.source)},
        {"supports_equal", stacked_support == single_support}}}};

  Manifest manifest("localization", a.out);
  manifest.config({{"complex", a.complex},
                   {"threshold", a.threshold},
                   {"k", a.k},
                   {"degrees", a.degrees},
                   {"stacked_layers", a.stacked_layers},
                   {"source", a.source},
                   {"coefficients", a.coefficients}});
  manifest.input("complex", a.complex);
  manifest.write("localization.csv", csv);
  manifest.write("support.json", support.dump(2) + "\n");
  manifest.finish();

  fmt::print(out, "{} {}-simplices, pulse at {}\n", L.dim(), a.k, simplex_label(complex, a.k, a.source));
  for (const auto& d : degrees) {
    fmt::print(out, "degree {}: support {} (max outside {:.3g})\n", d["degree"].get<Index>(),
               d["numeric_support"].dump(), d["max_abs_outside_support"].get<double>());
  }
  fmt::print(out, "stacked {}x degree-1 support {} {} single degree-{} support {}\n", a.stacked_layers,
             json(stacked_support).dump(), stacked_support == single_support ? "==" : "!=",
             a.stacked_layers, json(single_support).dump());
  fmt::print(out, "localized: {}\n", localized ? "yes" : "no");
  return kOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string data;
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<Index> epochs;
  double val_fraction = 0.2;
  Index cv_folds = 0;
  Index cv_repeats = 1;
};

std::pair<ModelConfig, TrainConfig> read_config(const std::string& path) {
  if (path.empty()) return {};
  json j;
  try {
    j = json::parse(io::read_text(path));
  } catch (const json::exception& e) {
    throw InputFormatError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw InputFormatError("config must be a JSON object");
  return {io::model_config_from_json(j.contains("model") ? j.at("model") : j),
          io::train_config_from_json(j.contains("train") ? j.at("train") : j)};
}

int run_train(const TrainArgs& a, std::ostream& out) {
  auto [model_config, train_config] = read_config(a.config);
  if (a.seed) train_config.seed = *a.seed;
  if (a.epochs) train_config.epochs = *a.epochs;
  train_config.validate();
  const Dataset data = io::load_dataset(a.data);

  Manifest manifest("train", a.out);
  manifest.config({{"model", io::model_config_to_json(model_config)},
                   {"train", io::train_config_to_json(train_config)},
                   {"val_fraction", a.val_fraction},
                   {"cv_folds", a.cv_folds},
                   {"cv_repeats", a.cv_repeats}});
  manifest.seed(train_config.seed);
  manifest.input("data", a.data);
  if (!a.config.empty()) manifest.input("config", a.config);

  if (a.cv_folds > 0) {
    if (a.cv_repeats < 1) throw InputFormatError("cv-repeats must be positive");
    std::string csv = "repeat,fold,best_epoch,best_val_rmse\n";
    std::vector<double> scores;
    for (Index r = 0; r < a.cv_repeats; ++r) {
      const auto folds = kfold_partition(data.size(), a.cv_folds, train_config.seed + static_cast<std::uint64_t>(r));
      for (Index f = 0; f < a.cv_folds; ++f) {
        std::vector<Index> train;
        for (Index g = 0; g < a.cv_folds; ++g) {
          if (g != f) train.insert(train.end(), folds[g].begin(), folds[g].end());
        }
        std::sort(train.begin(), train.end());
        Model model(model_config, data.atlas, train_config.seed);
        const auto result = fit(model, data, train, folds[f], train_config);
        const double best = result.best_epoch >= 1 ? result.history[result.best_epoch - 1].val_rmse : std::nan("");
        scores.push_back(best);
        csv += fmt::format("{},{},{},{}\n", r, f, result.best_epoch, io::format_double(best));
      }
    }
    manifest.write("cv.csv", csv);
    manifest.finish();
    const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
    double var = 0.0;
    for (double s : scores) var += (s - mean) * (s - mean);
    fmt::print(out, "cross-validated RMSE {:.6g} +/- {:.3g} over {} folds\n", mean,
               std::sqrt(var / static_cast<double>(scores.size())), scores.size());
    return kOk;
  }

  auto [train, val] = train_val_split(data.size(), a.val_fraction, train_config.seed);
  Model model(model_config, data.atlas, train_config.seed);
  const auto result = fit(model, data, train, val, train_config);
  if (!result.best_parameters.empty()) load_parameters(model, result.best_parameters);

  manifest.write("checkpoint.json", io::checkpoint_to_json(model, train_config).dump(2) + "\n");
  manifest.write("history.csv", io::history_to_csv(result.history));
  manifest.finish();

  fmt::print(out, "trained {} parameters on {} samples ({} validation)\n", model.parameter_count(),
             train.size(), val.size());
  if (!result.history.empty()) {
    const auto& last = result.history.back();
    fmt::print(out, "final train RMSE {:.6g}, val RMSE {:.6g}; best epoch {}\n", last.train_rmse, last.val_rmse,
               result.best_epoch);
  }
  return kOk;
}

// ---------------------------------------------------------------- saliency

struct SaliencyArgs {
  std::string checkpoint;
  std::string data;
  std::string out;
};

int run_saliency(const SaliencyArgs& a, std::ostream& out) {
  const Dataset data = io::load_dataset(a.data);
  json checkpoint;
  try {
    checkpoint = json::parse(io::read_text(a.checkpoint));
  } catch (const json::exception& e) {
    throw InputFormatError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  const Model model = io::model_from_checkpoint(checkpoint, data.atlas);
  const auto sal = saliency_map(model, data);

  std::string edges = "edge,i,j,saliency\n";
  for (Index e = 0; e < data.atlas.n_edges(); ++e) {
    edges += fmt::format("{},{},{},{}\n", e, data.atlas.edges()[e][0], data.atlas.edges()[e][1],
                         io::format_double(sal.edges(e)));
  }
  std::string nodes = "node,saliency\n";
  for (Index v = 0; v < sal.nodes.size(); ++v) nodes += fmt::format("{},{}\n", v, io::format_double(sal.nodes(v)));

  Manifest manifest("saliency", a.out);
  manifest.input("checkpoint", a.checkpoint);
  manifest.input("data", a.data);
  manifest.write("edge_saliency.csv", edges);
  manifest.write("node_saliency.csv", nodes);
  manifest.finish();

  std::vector<Index> order(static_cast<std::size_t>(sal.edges.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) { return sal.edges(x) > sal.edges(y); });
  fmt::print(out, "top edges by saliency:");
  for (std::size_t i = 0; i < std::min<std::size_t>(5, order.size()); ++i) {
    fmt::print(out, " {}", simplex_label(data.atlas, 1, order[i]));
  }
  fmt::print(out, "\n");
  return kOk;
}

// ---------------------------------------------------------------- inspect

struct InspectArgs {
  std::string complex;
  double threshold = 0.5;
  int k = 0;
  std::string spectrum = "auto";
  Index oracle_limit = kDefaultOracleLimit;
  std::string out;
};

int run_inspect(const InspectArgs& a, std::ostream& out) {
  const auto complex = load_complex(a.complex, a.threshold);
  const auto L = hodge_laplacian(complex, a.k);

  const auto adjacency = simplex_adjacency(complex, 0);
  Index components = 0;
  std::vector<bool> seen(static_cast<std::size_t>(complex.n_nodes()), false);
  for (Index v = 0; v < complex.n_nodes(); ++v) {
    if (seen[v]) continue;
    ++components;
    const auto hops = hop_distances(complex, 0, v);
    for (Index u = 0; u < complex.n_nodes(); ++u) {
      if (hops[u]) seen[u] = true;
    }
  }
  Index isolated = 0;
  Index min_degree = 0;
  Index max_degree = 0;
  double mean_degree = 0.0;
  for (Index v = 0; v < complex.n_nodes(); ++v) {
    const auto d = static_cast<Index>(adjacency[v].size());
    if (d == 0) ++isolated;
    min_degree = v == 0 ? d : std::min(min_degree, d);
    max_degree = std::max(max_degree, d);
    mean_degree += static_cast<double>(d);
  }
  if (complex.n_nodes() > 0) mean_degree /= static_cast<double>(complex.n_nodes());

  json spectrum = {{"computed", false}};
  const bool over = L.dim() > a.oracle_limit;
  if (a.spectrum == "always" || (a.spectrum == "auto" && !over)) {
    const auto s = spectral_decompose(L, a.oracle_limit);
    std::vector<double> values(s.eigenvalues.data(), s.eigenvalues.data() + s.eigenvalues.size());
    spectrum = {{"computed", true}, {"eigenvalues", values}};
    if (!values.empty()) {
      spectrum["min"] = values.front();
      spectrum["max"] = values.back();
    }
  } else if (over) {
    spectrum["reason"] = fmt::format("dimension {} exceeds oracle limit {}", L.dim(), a.oracle_limit);
  }

  const json report = {{"schema_version", io::kSchemaVersion},
                       {"complex", a.complex},
                       {"k", a.k},
                       {"counts",
                        {{"nodes", complex.n_nodes()}, {"edges", complex.n_edges()}, {"triangles", complex.n_triangles()}}},
                       {"laplacian", {{"dim", L.dim()}, {"nonzeros", L.matrix.nonZeros()}}},
                       {"lambda_max_estimate", L.dim() > 0 ? estimate_lambda_max(L) : 0.0},
                       {"spectrum", spectrum},
                       {"connectivity",
                        {{"components", components},
                         {"isolated_nodes", isolated},
                         {"min_degree", min_degree},
                         {"max_degree", max_degree},
                         {"mean_degree", mean_degree}}}};
  out << report.dump(2) << "\n";

  if (!a.out.empty()) {
    Manifest manifest("inspect", a.out);
    manifest.config({{"complex", a.complex}, {"k", a.k}, {"spectrum", a.spectrum}, {"oracle_limit", a.oracle_limit}});
    manifest.input("complex", a.complex);
    manifest.write("report.json", report.dump(2) + "\n");
    manifest.write("laplacian.txt", io::laplacian_to_coordinate_list(L));
    manifest.finish();
  }
  return kOk;
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  std::string out;
  SyntheticOptions options;
};

int run_generate(const GenerateArgs& a, std::ostream& out) {
  const auto d = generate_synthetic(a.options);
  io::save_dataset(a.out, d);
  Manifest manifest("generate", a.out);
  manifest.seed(a.options.seed);
  manifest.config({{"n_samples", a.options.n_samples},
                   {"n_nodes", a.options.n_nodes},
                   {"time_len", a.options.time_len},
                   {"density", a.options.density},
                   {"noise_sigma", a.options.noise_sigma},
                   {"n_planted", a.options.n_planted},
                   {"planted_weights", a.options.planted_weights},
                   {"perturbation", a.options.perturbation},
                   {"nonlinear", a.options.nonlinear}});
  for (const char* name : {"atlas.json", "samples.csv", "planted.json"}) {
    manifest.write(name, io::read_text(fs::path(a.out) / name));
  }
  manifest.finish();
  fmt::print(out, "{} samples on {} nodes / {} edges; planted edges {}\n", d.data.size(), d.data.atlas.n_nodes(),
             d.data.atlas.n_edges(), json(d.planted_edges).dump());
  return kOk;
}

}  // namespace

SimplicialComplex load_complex(const std::string& source, double threshold) {
  if (source.rfind("builtin:", 0) == 0) {
    const std::string name = source.substr(8);
    if (name == "path3") return make_path(3);
    if (name == "path4") return make_path(4);
    if (name == "grid") return make_grid(5, 5);
    if (name == "triangle") return make_filled_triangle();
    if (name == "empty") return SimplicialComplex(0, {});
    throw InputFormatError("unknown builtin complex '" + name + "'");
  }
  const fs::path path(source);
  if (path.extension() == ".json") {
    json j;
    try {
      j = json::parse(io::read_text(path));
    } catch (const json::exception& e) {
      throw InputFormatError(std::string("invalid JSON in ") + source + ": " + e.what());
    }
    if (j.contains("matrix")) return build_complex_from_connectivity(io::read_connectivity(path), threshold);
    return io::complex_from_json(j);
  }
  return build_complex_from_connectivity(io::read_connectivity(path), threshold);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hodge-Laplacian heterogeneous graph convolution"};
  app.require_subcommand(1);

  LocalizationArgs loc;
  auto* cmd_loc = app.add_subcommand("localization", "Filter a unit pulse and report its spatial support");
  cmd_loc->add_option("--complex", loc.complex, "builtin:path3|path4|grid|triangle|empty or a file");
  cmd_loc->add_option("--threshold", loc.threshold, "Binarization threshold for connectivity files");
  cmd_loc->add_option("--k", loc.k, "Simplex dimension (0 nodes, 1 edges)")->check(CLI::IsMember({0, 1}));
  cmd_loc->add_option("--orders", loc.degrees, "Polynomial degrees to apply")->delimiter(',');
  cmd_loc->add_option("--stacked-layers", loc.stacked_layers, "Number of stacked degree-1 filters");
  cmd_loc->add_option("--source", loc.source, "Index of the pulsed simplex");
  cmd_loc->add_option("--out", loc.out, "Output directory")->required();
  cmd_loc->add_option("--coefficients", loc.coefficients, "Filter coefficients: decay (1/(p+1)^2) or uniform")
      ->check(CLI::IsMember({"decay", "uniform"}));

  TrainArgs train;
  auto* cmd_train = app.add_subcommand("train", "Train a model on a dataset directory");
  cmd_train->add_option("--data", train.data, "Dataset directory")->required();
  cmd_train->add_option("--config", train.config, "JSON config with model and train fields");
  cmd_train->add_option("--out", train.out, "Output directory")->required();
  cmd_train->add_option("--seed", train.seed, "Override the config seed");
  cmd_train->add_option("--epochs", train.epochs, "Override the config epoch count");
  cmd_train->add_option("--val-fraction", train.val_fraction, "Held-out fraction for validation");
  cmd_train->add_option("--cv-folds", train.cv_folds, "Run k-fold cross-validation instead of one split");
  cmd_train->add_option("--cv-repeats", train.cv_repeats, "Repetitions of the cross-validation");

  SaliencyArgs sal;
  auto* cmd_sal = app.add_subcommand("saliency", "Group-level saliency of a trained checkpoint");
  cmd_sal->add_option("--checkpoint", sal.checkpoint, "checkpoint.json from train")->required();
  cmd_sal->add_option("--data", sal.data, "Dataset directory")->required();
  cmd_sal->add_option("--out", sal.out, "Output directory")->required();

  InspectArgs ins;
  auto* cmd_ins = app.add_subcommand("inspect", "Report counts, spectrum and connectivity of a complex");
  cmd_ins->add_option("--complex", ins.complex, "builtin:path3|path4|grid|triangle|empty or a file")->required();
  cmd_ins->add_option("--threshold", ins.threshold, "Binarization threshold for connectivity files");
  cmd_ins->add_option("--k", ins.k, "Laplacian dimension")->check(CLI::IsMember({0, 1}));
  cmd_ins->add_option("--spectrum", ins.spectrum, "auto, always or never")
      ->check(CLI::IsMember({"auto", "always", "never"}));
  cmd_ins->add_option("--oracle-limit", ins.oracle_limit, "Largest dimension for the dense spectrum");
  cmd_ins->add_option("--out", ins.out, "Optional directory for report, Laplacian and manifest");

  GenerateArgs gen;
  auto* cmd_gen = app.add_subcommand("generate", "Write a synthetic planted-signal dataset");
  cmd_gen->add_option("--out", gen.out, "Dataset directory")->required();
  cmd_gen->add_option("--seed", gen.options.seed);
  cmd_gen->add_option("--samples", gen.options.n_samples);
  cmd_gen->add_option("--nodes", gen.options.n_nodes);
  cmd_gen->add_option("--time", gen.options.time_len);
  cmd_gen->add_option("--density", gen.options.density);
  cmd_gen->add_option("--noise", gen.options.noise_sigma);
  cmd_gen->add_option("--planted", gen.options.n_planted);
  cmd_gen->add_option("--planted-weights", gen.options.planted_weights)->delimiter(',');
  cmd_gen->add_option("--perturbation", gen.options.perturbation);
  cmd_gen->add_flag("--nonlinear", gen.options.nonlinear);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kOk : kInputError;
  }

  try {
    if (*cmd_loc) return run_localization(loc, out);
    if (*cmd_train) return run_train(train, out);
    if (*cmd_sal) return run_saliency(sal, out);
    if (*cmd_ins) return run_inspect(ins, out);
    if (*cmd_gen) return run_generate(gen, out);
  } catch (const OracleLimitError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kOracleLimit;
  } catch (const DivergenceError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kDivergence;
  } catch (const Error& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kInputError;
  } catch (const fs::filesystem_error& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kInputError;
  } catch (const std::exception& e) {
    fmt::print(err, "internal error: {}\n", e.what());
    return kInternalError;
  }
  return kInputError;
}

}  // namespace hodge::cli
