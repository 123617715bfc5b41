#include <doctest.h>

#include <algorithm>
#include <string>

#include "support/small_config.hpp"
#include "tumorinv/config.hpp"

using namespace tumorinv;

namespace {

std::vector<std::string> errors_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.errors();
  }
  return {};
}

bool any_contains(const std::vector<std::string>& errs, const std::string& needle) {
  return std::any_of(errs.begin(), errs.end(), [&](const std::string& e) { return e.find(needle) != std::string::npos; });
}

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  REQUIRE(pos != std::string::npos);
  return text.replace(pos, from.size(), to);
}

}  // namespace

TEST_CASE("shipped configs parse") {
  const std::filesystem::path dir = TUMORINV_CONFIG_DIR;
  const ExperimentConfig a = load_config(dir / "test1a.cfg");
  CHECK(a.id == "test1a");
  CHECK(a.solver.m == 40.0);
  CHECK(a.solver.dt == 0.005);
  CHECK(a.solver.t_final == 0.5);
  CHECK(a.grid.cells == std::vector<int>{44, 44});
  CHECK(a.truth.z == std::vector<double>{1.0});
  CHECK(a.sweep.parameter == SweepParameter::Sigma);
  CHECK(a.sweep.values.size() == 4);

  const ExperimentConfig b = load_config(dir / "test1b.cfg");
  REQUIRE(b.observation.op.bumps.size() == 9);
  CHECK(b.observation.op.bumps[0].cx == doctest::Approx(-0.55));
  CHECK(b.observation.op.bumps[0].cy == doctest::Approx(-0.15));

  const ExperimentConfig t2 = load_config(dir / "test2.cfg");
  CHECK(t2.prior.names() == std::vector<std::string>{"h", "c1", "c2"});

  const ExperimentConfig t3 = load_config(dir / "test3.cfg");
  CHECK(t3.prior.field.basis == BasisKind::Test3);
  CHECK(t3.prior.dimension() == 3);

  const ExperimentConfig mc = load_config(dir / "mconv.cfg");
  CHECK(mc.mconv.m == std::vector<double>{5, 10, 20, 40});
}

TEST_CASE("missing required key is named") {
  const std::string text = replace(small_config_text("out"), "m = 10\n", "");
  CHECK(any_contains(errors_of(text), "missing required key \"solver.m\""));
}

TEST_CASE("observation time after T is rejected") {
  const std::string text = replace(small_config_text("out"), "times = 0.05", "times = 0.06");
  CHECK(any_contains(errors_of(text), "(0, T]"));
}

TEST_CASE("unknown keys and sections carry line numbers") {
  std::string text = replace(small_config_text("out"), "dt = 0.01", "dt = 0.01\nstepsize = 3");
  const auto errs = errors_of(text);
  CHECK(any_contains(errs, "line 15: unknown key solver.stepsize"));
  CHECK(any_contains(errors_of(small_config_text("out") + "[extras]\n"), "unknown section [extras]"));
  CHECK(any_contains(errors_of(replace(small_config_text("out"), "dt = 0.01", "dt = 0.01\ndt = 0.02")),
                     "duplicate key solver.dt"));
}

TEST_CASE("all errors are collected") {
  std::string text = replace(small_config_text("out"), "sigma = 0.05", "sigma = -1");
  text = replace(text, "nx = 12", "nx = 2");
  text = replace(text, "times = 0.05", "times = 0.06");
  const auto errs = errors_of(text);
  CHECK(errs.size() >= 3);
}

TEST_CASE("malformed values") {
  CHECK(!errors_of(replace(small_config_text("out"), "nx = 12", "nx = twelve")).empty());
  CHECK(!errors_of(replace(small_config_text("out"), "h = normal, 0.5, 0.5", "h = cauchy, 0, 1")).empty());
  CHECK(!errors_of(replace(small_config_text("out"), "mode = full_grid", "mode = everything")).empty());
}

TEST_CASE("truth outside a uniform prior is rejected") {
  std::string text = replace(small_config_text("out"), "h = normal, 0.5, 0.5", "h = uniform, 0.5, 0.8");
  CHECK(any_contains(errors_of(text), "outside its uniform prior support"));
}

TEST_CASE("canonical text round trip") {
  const std::filesystem::path dir = TUMORINV_CONFIG_DIR;
  for (const char* name : {"test1a.cfg", "test1b.cfg", "test2.cfg", "test3.cfg", "mconv.cfg"}) {
    const ExperimentConfig c = load_config(dir / name);
    const std::string text = to_text(c);
    const ExperimentConfig back = parse_config(text);
    CHECK(to_text(back) == text);
    CHECK(back.truth == c.truth);
    CHECK(back.observation.op.bumps.size() == c.observation.op.bumps.size());
  }
}
