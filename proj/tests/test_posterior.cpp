#include <doctest.h>

#include <atomic>
#include <cmath>
#include <limits>
#include <random>

#include "support/oracles.hpp"
#include "tumorinv/posterior.hpp"

using namespace tumorinv;

namespace {

PriorSpec scalar_prior(ScalarLaw law) {
  PriorSpec p;
  p.params = {{"h", law}};
  return p;
}

}  // namespace

TEST_CASE("potential decomposes into misfit and offset") {
  const std::vector<double> a{1.0, 2.0, -0.5};
  const std::vector<double> y{0.9, 2.3, -0.4};
  const NoiseModel noise{{0.04}, 0};
  Posterior post(scalar_prior(NormalLaw{0.0, 1.0}),
                 [&](const ModelParams& u) {
                   std::vector<double> out;
                   for (double ai : a) out.push_back(ai * u.z[0]);
                   return out;
                 },
                 y, noise);
  const double offset = half_weighted_norm2(y, noise);
  CHECK(offset == doctest::Approx(0.5 * (0.81 + 5.29 + 0.16) / 0.04));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int s = 0; s < 200; ++s) {
    const ModelParams u{{n(rng)}, {}};
    const PotentialEvaluation e = post.potential(u);
    CHECK(e.offset == doctest::Approx(offset));
    CHECK(e.phi == doctest::Approx(e.misfit - e.offset));
    CHECK(e.phi >= -offset - 1e-12);
    CHECK(post.log_unnormalized(u) == doctest::Approx(log_prior_density(post.prior(), u) - e.misfit));
  }
  CHECK(post.potential(ModelParams{{0.0}, {}}).phi == doctest::Approx(0.0));
}

TEST_CASE("forward evaluations are cached") {
  std::atomic<int> calls{0};
  Posterior post(scalar_prior(NormalLaw{0.0, 1.0}),
                 [&](const ModelParams& u) {
                   ++calls;
                   return std::vector<double>{u.z[0]};
                 },
                 {0.5}, NoiseModel{{1.0}, 0});
  const ModelParams u{{0.25}, {}};
  post.potential(u);
  const PotentialEvaluation again = post.potential(u);
  CHECK(calls == 1);
  CHECK(again.seconds == 0.0);
  CHECK(post.cache_hits() == 1);
  CHECK(post.cache_misses() == 1);
  post.potential(ModelParams{{0.26}, {}});
  CHECK(calls == 2);
}

TEST_CASE("outside the prior support the forward model is not called") {
  int calls = 0;
  Posterior post(scalar_prior(UniformLaw{0.5, 0.8}),
                 [&](const ModelParams& u) {
                   ++calls;
                   return std::vector<double>{u.z[0]};
                 },
                 {0.6}, NoiseModel{{1.0}, 0});
  CHECK(post.log_unnormalized(ModelParams{{0.9}, {}}) == -std::numeric_limits<double>::infinity());
  const double flat[] = {0.4};
  CHECK(post.log_density(flat) == -std::numeric_limits<double>::infinity());
  CHECK(calls == 0);
}

TEST_CASE("data length mismatch is rejected") {
  Posterior post(scalar_prior(NormalLaw{0.0, 1.0}),
                 [](const ModelParams& u) { return std::vector<double>{u.z[0], u.z[0]}; }, {0.5},
                 NoiseModel{{1.0}, 0});
  CHECK_THROWS(post.potential(ModelParams{{0.1}, {}}));
}

// Prior N(0,1) with Phi_i = (x - mu_i)^2/2 - x^2/2 gives posteriors N(mu_i, 1).
TEST_CASE("hellinger estimate against the gaussian closed form") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(0.0, 1.0);
  const int N = 40000;
  std::vector<double> x(N);
  for (double& v : x) v = n(rng);
  for (double shift : {0.2, 0.5, 1.0}) {
    std::vector<double> p1(N), p2(N);
    for (int s = 0; s < N; ++s) {
      p1[s] = 0.5 * (x[s] - 0.0) * (x[s] - 0.0) - 0.5 * x[s] * x[s];
      p2[s] = 0.5 * (x[s] - shift) * (x[s] - shift) - 0.5 * x[s] * x[s];
    }
    const HellingerReport r = hellinger_estimate(p1, p2, 200, 5);
    const double want = oracle::gaussian_hellinger(0.0, shift);
    CHECK(std::abs(r.distance - want) < std::max(4.0 * r.standard_error, 0.01));
    CHECK(r.standard_error > 0.0);
    CHECK(r.samples == static_cast<std::size_t>(N));
    CHECK(r.z1 == doctest::Approx(1.0).epsilon(0.05));
  }
}

TEST_CASE("hellinger estimate properties") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> a(300), b(300);
  for (std::size_t s = 0; s < a.size(); ++s) {
    a[s] = 3.0 + n(rng);
    b[s] = 1.0 + 2.0 * n(rng);
  }
  SUBCASE("identical inputs give zero") {
    const HellingerReport r = hellinger_estimate(a, a, 200, 1);
    CHECK(r.distance == 0.0);
    CHECK(r.standard_error == 0.0);
  }
  SUBCASE("symmetric") {
    CHECK(hellinger_estimate(a, b, 200, 1).distance == hellinger_estimate(b, a, 200, 1).distance);
  }
  SUBCASE("invariant under a constant shift of one potential") {
    std::vector<double> c(b);
    for (double& v : c) v += 100.0;
    CHECK(hellinger_estimate(a, c, 200, 1).distance == doctest::Approx(hellinger_estimate(a, b, 200, 1).distance));
  }
  SUBCASE("bounded") {
    const double d = hellinger_estimate(a, b, 200, 1).distance;
    CHECK(d >= 0.0);
    CHECK(d <= 1.0);
  }
  SUBCASE("input validation") {
    const std::vector<double> small(99, 0.0);
    CHECK_THROWS_AS(hellinger_estimate(small, small), std::invalid_argument);
    CHECK_THROWS_AS(hellinger_estimate(a, b, 199), std::invalid_argument);
    std::vector<double> c(a);
    c.pop_back();
    CHECK_THROWS_AS(hellinger_estimate(a, c), std::invalid_argument);
    std::vector<double> inf(a.size(), std::numeric_limits<double>::infinity());
    CHECK_THROWS_AS(hellinger_estimate(a, inf), std::runtime_error);
  }
}
