#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "amfc/error.hpp"
#include "amfc/harness.hpp"
#include "amfc/hierarchy.hpp"
#include "amfc/tensor_io.hpp"

using namespace amfc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("amfc_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "amfc");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig small_zero() {
  return parse_config(
      "[model]\nid = \"zero\"\n[grid]\nnx = 10\nnt = 150\n[hierarchy]\nN = [1, 2]\nsamples = 8\nlipschitz_pairs = 30\n"
      "[mfc]\nnx = 16\nnt = 150\n");
}

}  // namespace

TEST(Config, DefaultsAndOverrides) {
  const auto c = parse_config("[grid]\nnx = 12\n", {"hierarchy.N=[2,3]", "mfc.tol=1e-6", "output.dir=abc"});
  EXPECT_EQ(c.nx, 12);
  EXPECT_EQ(c.nt, 400);
  EXPECT_EQ(c.N_list, (std::vector<int>{2, 3}));
  EXPECT_EQ(c.mfc_tol, 1e-6);
  EXPECT_EQ(c.out_dir, fs::path("abc"));
  EXPECT_EQ(parse_config("[model]\nT = 1\n", {"mfc.nt=800"}).params.T, 1.0);
}

TEST(Config, Rejections) {
  EXPECT_THROW(parse_config("[grid]\nnx = "), DomainError);
  EXPECT_THROW(parse_config("[grid]\nnz = 3\n"), DomainError);
  EXPECT_THROW(parse_config("[other]\n"), DomainError);
  EXPECT_THROW(parse_config("[hierarchy]\nN = [1, 5]\n"), DomainError);
  EXPECT_THROW(parse_config("[grid]\nnx = \"many\"\n"), DomainError);
  EXPECT_THROW(parse_config("", {"nodot=3"}), DomainError);
  EXPECT_THROW(parse_config("[mfc]\nnt = 1000\n"), DomainError);
  EXPECT_THROW(load_config("/nonexistent/amfc.toml"), std::runtime_error);
}

TEST(Config, ShippedConfigParses) {
  const auto c = load_config(fs::path(AMFC_SOURCE_DIR) / "configs" / "quadratic.toml");
  EXPECT_EQ(c.nx, 24);
  EXPECT_EQ(c.N_list, (std::vector<int>{1, 2, 3}));
  EXPECT_NO_THROW(load_config(fs::path(AMFC_SOURCE_DIR) / "configs" / "zero.toml"));
}

TEST(TensorIo, RoundTripAndHeader) {
  const auto dir = scratch("tensor");
  HierarchyOptions o;
  o.store_stride = 10;
  const auto sol = solve_hierarchy(2, make_quadratic_model(), SpaceGrid(6), TimeGrid(0, 0.5, 100), o);
  const auto files = dump_hierarchy(sol, dir);
  ASSERT_EQ(files.size(), 3u);
  const auto t = read_tensor(files[2]);
  EXPECT_EQ(t.header.N, 2u);
  EXPECT_EQ(t.header.K, 2u);
  EXPECT_EQ(t.header.nx, 6u);
  EXPECT_EQ(t.header.nt, 10u);
  ASSERT_EQ(t.values.size(), 11u * 64u);
  for (int j = 0; j < sol.layers(); ++j)
    for (std::size_t f = 0; f < 64; ++f) EXPECT_EQ(t.values[static_cast<std::size_t>(j) * 64 + f], sol.layer(2, j)[f]);
  const std::string raw = slurp(files[0]);
  EXPECT_EQ(raw.substr(0, 4), "AMFC");
  EXPECT_EQ(raw.size(), 4u + 20u + 11u * 8u);
  EXPECT_THROW(write_tensor(dir / "bad.amfc", TensorHeader{}, std::vector<double>(3)), DomainError);
  EXPECT_FALSE(fs::exists(dir / "bad.amfc.tmp"));
}

TEST(Harness, ParallelForOrderAndErrors) {
  std::vector<int> out(50, 0);
  parallel_for(50, 4, [&](int i) { out[static_cast<std::size_t>(i)] = i * i; });
  for (int i = 0; i < 50; ++i) EXPECT_EQ(out[static_cast<std::size_t>(i)], i * i);
  EXPECT_THROW(parallel_for(10, 3, [](int i) { if (i == 7) throw SolverError("x"); }), SolverError);
}

TEST(Harness, Spread) {
  EXPECT_EQ(spread({0.0, 0.0}), 1.0);
  EXPECT_EQ(spread({1.0, 2.0, 1.5}), 2.0);
  EXPECT_TRUE(std::isinf(spread({0.0, 1.0})));
}

TEST(Harness, ZeroModelConvergenceAndTables) {
  const auto cfg = small_zero();
  const auto rep = run_convergence(cfg);
  ASSERT_EQ(rep.rows.size(), 2u);
  for (const auto& r : rep.rows) EXPECT_EQ(r.error, 0.0);
  EXPECT_TRUE(rep.ok());
  const auto t = run_estimate_tables(cfg);
  for (double v : t.crude) EXPECT_EQ(v, 0.0);
  for (double v : t.gradient) EXPECT_EQ(v, 0.0);
  for (double v : t.holder) EXPECT_EQ(v, 0.0);
  EXPECT_TRUE(t.sandwich_all);
  EXPECT_TRUE(t.ok());
}

TEST(Harness, ConvergenceCsvIsDeterministic) {
  auto cfg = parse_config("[grid]\nnx = 10\nnt = 200\n[hierarchy]\nN = [1, 2]\nsamples = 6\n[mfc]\nnx = 24\nnt = 400\n");
  const auto a = run_convergence(cfg);
  cfg.workers = 3;
  const auto b = run_convergence(cfg);
  EXPECT_EQ(a.csv, b.csv);
  EXPECT_EQ(a.samples_csv, b.samples_csv);
  EXPECT_NE(a.csv.find("N,error,scheme_tol"), std::string::npos);
}

TEST(Cli, ExitCodesAndOutputs) {
  const auto dir = scratch("cli");
  EXPECT_EQ(run_cli({"metric", "--a", "atoms:0.3,0.6", "--b", "atoms:0.35,0.55", "--denom", "2", "--out", dir.string()}), 0);
  EXPECT_TRUE(fs::exists(dir / "metric.csv"));
  EXPECT_EQ(run_cli({"converge", "--config", "/nonexistent/amfc.toml"}), 1);
  EXPECT_EQ(run_cli({"converge"}), 1);
  EXPECT_EQ(run_cli({"bogus"}), 1);
  EXPECT_EQ(run_cli({"metric", "--a", "atoms:0.3,x", "--b", "atoms:", "--denom", "2"}), 1);

  const fs::path cfg = dir / "zero.toml";
  std::ofstream(cfg) << "[model]\nid = \"zero\"\n[grid]\nnx = 10\nnt = 150\n[hierarchy]\nN = [1, 2]\nsamples = 8\n"
                        "lipschitz_pairs = 30\n[mfc]\nnx = 16\nnt = 150\n";
  EXPECT_EQ(run_cli({"converge", "--config", cfg.string(), "--out", (dir / "c").string(), "--seed", "7"}), 0);
  EXPECT_TRUE(fs::exists(dir / "c" / "report.csv"));
  EXPECT_EQ(run_cli({"tables", "--config", cfg.string(), "--out", (dir / "t").string()}), 0);
  EXPECT_TRUE(fs::exists(dir / "t" / "lipschitz.csv"));
  EXPECT_EQ(run_cli({"solve-hierarchy", "--config", cfg.string(), "--out", (dir / "h").string()}), 0);
  EXPECT_TRUE(fs::exists(dir / "h" / "hierarchy_N2" / "V_K2.amfc"));
  EXPECT_EQ(run_cli({"fp-run", "--config", cfg.string(), "--out", (dir / "f").string()}), 0);
  EXPECT_EQ(run_cli({"solve-mfc", "--config", cfg.string(), "--out", (dir / "m").string()}), 0);
  EXPECT_TRUE(fs::exists(dir / "m" / "mfc_history.csv"));
  EXPECT_EQ(run_cli({"barrier-check", "--config", cfg.string(), "--out", (dir / "b").string()}), 0);
  EXPECT_EQ(run_cli({"solve-hierarchy", "--config", cfg.string(), "--set", "grid.nt=10", "--set", "mfc.nt=20"}), 3);
  EXPECT_EQ(run_cli({"tables", "--config", cfg.string(), "--set", "grid.nx=oops"}), 1);
}
