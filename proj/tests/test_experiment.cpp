#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "support/small_config.hpp"
#include "tumorinv/experiment.hpp"

using namespace tumorinv;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tumorinv_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("seed derivation") {
  CHECK(derive_seed(1, 0, 0) == derive_seed(1, 0, 0));
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 5; ++s)
    for (std::uint64_t i = 0; i < 5; ++i) seen.insert(derive_seed(42, s, i));
  CHECK(seen.size() == 25);
}

TEST_CASE("sweep expansion and shared noise") {
  const ExperimentConfig c = parse_config(small_config_text("out"));
  const auto cells = expand_sweep(c);
  REQUIRE(cells.size() == 2);
  CHECK(cells[1].sigma == std::vector<double>{0.1});
  CHECK(cells[1].m == 10.0);
  CHECK(cell_noise(c, cells[0]).seed == cell_noise(c, cells[1]).seed);
  CHECK(cell_noise(c, cells[1]).variances[0] == doctest::Approx(0.01));
}

TEST_CASE("options override the config") {
  const ExperimentConfig c = parse_config(small_config_text("out"));
  RunOptions o;
  o.paper_scale = true;
  o.seed = 99;
  o.out = "elsewhere";
  const ExperimentConfig d = apply_options(c, o);
  CHECK(d.mcmc.iterations == 60);
  CHECK(d.mcmc.runs == 3);
  CHECK(d.mcmc.seed == 99u);
  CHECK(d.output == fs::path("elsewhere"));
}

TEST_CASE("dry run writes config and data only") {
  const fs::path out = scratch("dry");
  const ExperimentConfig c = parse_config(small_config_text(out.string()));
  RunOptions o;
  o.dry_run = true;
  const ExperimentReport r = run_experiment(c, o);
  CHECK(r.rows.empty());
  CHECK(fs::exists(out / "small" / "config.cfg"));
  CHECK(fs::exists(out / "small" / "data" / "cell0.dat"));
  CHECK(fs::exists(out / "small" / "data" / "cell1.dat.clean"));
  CHECK(fs::is_empty(out / "small" / "chains"));
  CHECK(parse_config(slurp(out / "small" / "config.cfg")).mcmc.seed == 7u);
  fs::remove_all(out);
}

TEST_CASE("full run writes every manifest entry and is deterministic") {
  const fs::path out = scratch("full");
  const ExperimentConfig c = parse_config(small_config_text(out.string()));
  const ExperimentReport a = run_experiment(c);
  REQUIRE(a.rows.size() == 2);
  CHECK(a.iterations == 40);
  CHECK(a.runs == 2);
  const std::string manifest = slurp(out / "small" / "manifest.txt");
  std::istringstream lines(manifest);
  std::string line;
  std::size_t listed = 0;
  while (std::getline(lines, line)) {
    CHECK(fs::exists(out / "small" / line));
    ++listed;
  }
  CHECK(listed == a.files.size());
  for (const char* f : {"tables/mse.csv", "tables/ensemble_cell0.csv", "tables/hist_cell1_h.csv",
                        "chains/cell0_run1.csv", "config.cfg"}) {
    CHECK(manifest.find(f) != std::string::npos);
  }
  const std::string mse = slurp(out / "small" / "tables" / "mse.csv");
  CHECK(mse.rfind("cell,sigma,m,", 0) == 0);

  const ExperimentReport b = run_experiment(c);
  CHECK(slurp(out / "small" / "tables" / "mse.csv") == mse);
  for (std::size_t i = 0; i < a.rows.size(); ++i) CHECK(a.rows[i].mean == b.rows[i].mean);
  fs::remove_all(out);
}

TEST_CASE("forward run tabulates mass") {
  const fs::path out = scratch("forward");
  const ExperimentConfig c = parse_config(small_config_text(out.string()));
  run_forward(c);
  const std::string table = slurp(out / "small" / "tables" / "forward.csv");
  CHECK(table.rfind("time,mass,max_density,radius_0.5", 0) == 0);
  fs::remove_all(out);
}

TEST_CASE("m-convergence input checks and identical m") {
  const fs::path out = scratch("mconv");
  std::string text = small_config_text(out.string());
  text += "\n[mconv]\nm = 5, 10\nsamples = 100\nbootstrap = 200\n";
  const ExperimentConfig c = parse_config(text);
  CHECK_THROWS_AS(run_m_convergence(c, {5.0}), std::invalid_argument);
  CHECK_THROWS_AS(run_m_convergence(c, {10.0, 5.0}), std::invalid_argument);
  const ConvergenceReport r = run_m_convergence(c, {6.0, 6.0});
  REQUIRE(r.hellinger.size() == 1);
  CHECK(r.hellinger[0].distance == 0.0);
  CHECK(r.l1[0].l1 == 0.0);
  CHECK(fs::exists(out / "small" / "tables" / "hellinger.csv"));

  ExperimentConfig one = c;
  one.mconv.samples = 1;
  CHECK_THROWS(run_m_convergence(one, {5.0, 10.0}));
  fs::remove_all(out);
}

TEST_CASE("histogram output") {
  const fs::path p = fs::temp_directory_path() / "tumorinv_hist.csv";
  write_histogram_csv(p, {1.0, 1.0, 1.0}, 4);
  const std::string t = slurp(p);
  CHECK(t.find("0.5,0.75,0") != std::string::npos);
  CHECK(t.find("1,1.25,3") != std::string::npos);
  CHECK_THROWS_AS(write_histogram_csv(p, {}, 4), std::invalid_argument);
  fs::remove(p);
}
