#include <filesystem>

#include <gtest/gtest.h>

#include "hodgeconv/errors.hpp"
#include "hodgeconv/io.hpp"
#include "support.hpp"

namespace hodge {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("hodgeconv_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(Io, FormatDoubleRoundTrips) {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 12345.678, 0.0}) {
    EXPECT_EQ(std::stod(io::format_double(x)), x);
  }
}

TEST(Io, MatrixCsv) {
  const auto m = io::parse_matrix_csv("1,2,3\n4,5,6\n\n");
  ASSERT_EQ(m.rows(), 2);
  EXPECT_EQ(m(1, 2), 6.0);
  EXPECT_EQ(io::parse_matrix_csv(io::matrix_to_csv(m)), m);
  EXPECT_THROW(io::parse_matrix_csv("1,2\n3\n"), InputFormatError);
  EXPECT_THROW(io::parse_matrix_csv("1,x\n"), InputFormatError);
}

TEST(Io, ConnectivityFiles) {
  const auto dir = scratch("conn");
  io::write_text(dir / "m.csv", "0,0.8,0.1\n0.8,0,-0.7\n0.1,-0.7,0\n");
  io::write_text(dir / "m.json", R"({"n": 3, "matrix": [[0,0.8,0.1],[0.8,0,-0.7],[0.1,-0.7,0]]})");
  EXPECT_EQ(io::read_connectivity(dir / "m.csv"), io::read_connectivity(dir / "m.json"));
  const auto c = build_complex_from_connectivity(io::read_connectivity(dir / "m.json"), 0.5);
  EXPECT_EQ(c.edges(), (std::vector<Edge>{{0, 1}, {1, 2}}));
  io::write_text(dir / "bad.json", R"({"n": 2, "matrix": [[0,1]]})");
  EXPECT_THROW(io::read_connectivity(dir / "bad.json"), InputFormatError);
  EXPECT_THROW(io::read_connectivity(dir / "missing.csv"), InputFormatError);
}

TEST(Io, ComplexRoundTrip) {
  const SimplicialComplex c(4, {{0, 1}, {0, 2}, {1, 2}, {2, 3}}, {{0, 1, 2}});
  const auto j = io::complex_to_json(c);
  EXPECT_EQ(j.at("schema_version"), io::kSchemaVersion);
  const auto back = io::complex_from_json(j);
  EXPECT_EQ(back.n_nodes(), 4);
  EXPECT_EQ(back.edges(), c.edges());
  EXPECT_EQ(back.triangles(), c.triangles());
  EXPECT_THROW(io::complex_from_json(io::json::parse(R"({"edges": []})")), InputFormatError);
  EXPECT_THROW(io::complex_from_json(io::json::parse(R"({"n_nodes": 2, "edges": [[1, 0]]})")), TopologyError);
}

TEST(Io, LaplacianCoordinateList) {
  const auto text = io::laplacian_to_coordinate_list(hodge_laplacian(make_path(3), 1));
  EXPECT_EQ(text, "0 0 2\n0 1 -1\n1 0 -1\n1 1 2\n");
}

TEST(Io, FilterBankRoundTrip) {
  FilterBank bank(3, 2, 2, 1.5);
  for (std::size_t i = 0; i < bank.coefficients().size(); ++i) bank.coefficients()[i] = 0.1 * static_cast<double>(i);
  const auto back = io::filter_bank_from_json(io::filter_bank_to_json(bank));
  EXPECT_EQ(back.order(), 3);
  EXPECT_EQ(back.spectral_scale(), 1.5);
  EXPECT_TRUE(std::equal(back.coefficients().begin(), back.coefficients().end(), bank.coefficients().begin()));
  auto j = io::filter_bank_to_json(bank);
  j["theta"] = std::vector<double>{1.0};
  EXPECT_THROW(io::filter_bank_from_json(j), ShapeError);
}

TEST(Io, PoolingPlanExport) {
  const auto plan = coarsen(make_path(3), 0, {{0, 1}, {2, std::nullopt}});
  const auto j = io::pooling_plan_to_json(plan);
  EXPECT_EQ(j.at("pairs").size(), 1u);
  EXPECT_EQ(j.at("singletons"), io::json::array({2}));
  EXPECT_EQ(j.at("fakes"), io::json::array({3}));
  EXPECT_EQ(j.at("coarse_complex").at("n_nodes"), 2);
}

TEST(Io, ConfigsArePartial) {
  const auto m = io::model_config_from_json(io::json::parse(R"({"edge_order": 2, "pool_mode": "max"})"));
  EXPECT_EQ(m.edge_order, 2);
  EXPECT_EQ(m.pool_mode, PoolMode::kMax);
  EXPECT_EQ(m.node_channels, (std::vector<Index>{16, 1}));
  const auto t = io::train_config_from_json(io::json::parse(R"({"epochs": 7})"));
  EXPECT_EQ(t.epochs, 7);
  EXPECT_EQ(t.learning_rate, 0.005);
  EXPECT_THROW(io::model_config_from_json(io::json::parse(R"({"pool_mode": "sum"})")), InputFormatError);
  EXPECT_THROW(io::train_config_from_json(io::json::parse(R"({"batch_size": 0})")), InputFormatError);
  EXPECT_THROW(io::train_config_from_json(io::json::parse(R"({"epochs": "x"})")), InputFormatError);
  const auto again = io::model_config_from_json(io::model_config_to_json(m));
  EXPECT_EQ(io::model_config_to_json(again), io::model_config_to_json(m));
}

TEST(Io, CheckpointRoundTrip) {
  std::mt19937_64 rng(1);
  const auto atlas = testing::random_complex(rng, 8, 0.5);
  ModelConfig cfg;
  cfg.node_channels = {2};
  cfg.edge_channels = {3};
  cfg.head_hidden = {4};
  const Model m(cfg, atlas, 9);
  const auto j = io::checkpoint_to_json(m, TrainConfig{});
  const Model back = io::model_from_checkpoint(io::json::parse(j.dump()), atlas);
  EXPECT_EQ(snapshot_parameters(back), snapshot_parameters(m));
  EXPECT_THROW(io::model_from_checkpoint(j, make_path(8)), ShapeError);
  EXPECT_THROW(io::model_from_checkpoint(io::json::object(), atlas), InputFormatError);
}

TEST(Io, DatasetRoundTrip) {
  SyntheticOptions o;
  o.n_samples = 5;
  o.n_nodes = 6;
  o.time_len = 4;
  o.n_planted = 2;
  const auto d = generate_synthetic(o);
  const auto dir = scratch("dataset");
  io::save_dataset(dir, d);
  EXPECT_TRUE(fs::exists(dir / "planted.json"));
  const auto back = io::load_dataset(dir);
  EXPECT_EQ(back.atlas.edges(), d.data.atlas.edges());
  ASSERT_EQ(back.size(), 5);
  for (Index s = 0; s < 5; ++s) {
    EXPECT_EQ(back.samples[s].target, d.data.samples[s].target);
    EXPECT_EQ(back.samples[s].node_series, d.data.samples[s].node_series);
    EXPECT_EQ(back.samples[s].edge_features, d.data.samples[s].edge_features);
  }
  fs::remove(dir / "edges" / "3.csv");
  EXPECT_THROW(io::load_dataset(dir), InputFormatError);
}

TEST(Io, HistoryCsvAndDigest) {
  const std::vector<EpochRecord> h{{1, 0.5, std::nan(""), 0.005}, {2, 0.25, 0.3, 0.00475}};
  EXPECT_EQ(io::history_to_csv(h), "epoch,train_rmse,val_rmse,lr\n1,0.5,nan,0.005\n2,0.25,0.3,0.00475\n");
  const auto dir = scratch("digest");
  io::write_text(dir / "a", "");
  io::write_text(dir / "b", "a");
  EXPECT_EQ(io::file_digest(dir / "a"), "cbf29ce484222325");
  EXPECT_EQ(io::file_digest(dir / "b"), "af63dc4c8601ec8c");
}

}  // namespace
}  // namespace hodge
