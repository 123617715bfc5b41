#include "tumorinv/posterior.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace tumorinv {

struct Posterior::Cache {
  explicit Cache(std::size_t cap) : capacity(cap) {}

  std::size_t capacity;
  std::atomic<std::uint64_t> hits{0};
  std::atomic<std::uint64_t> misses{0};
  std::shared_mutex mutex;
  std::unordered_map<std::string, std::vector<double>> entries;
};

namespace {

std::string cache_key(const ModelParams& u) {
  std::string key;
  char buf[32];
  for (double v : u.flatten()) {
    std::snprintf(buf, sizeof buf, "%.15e;", v);
    key += buf;
  }
  return key;
}

}  // namespace

double half_weighted_norm2(std::span<const double> r, const NoiseModel& noise) {
  double sum = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) sum += r[i] * r[i] / noise.variance(i);
  return 0.5 * sum;
}

Posterior::Posterior(PriorSpec prior, ForwardModel forward, std::vector<double> data, NoiseModel noise,
                     std::size_t cache_capacity)
    : prior_(std::move(prior)),
      forward_(std::move(forward)),
      data_(std::move(data)),
      noise_(std::move(noise)),
      cache_(std::make_shared<Cache>(cache_capacity)) {
  prior_.validate();
  noise_.validate(data_.size());
  offset_ = half_weighted_norm2(data_, noise_);
}

Posterior Posterior::from_forward_map(const ForwardMap& map, const ObservationVector& y, const NoiseModel& noise) {
  return Posterior(map.prior, [map](const ModelParams& u) { return map(u).values; }, y.values, noise);
}

std::uint64_t Posterior::cache_hits() const { return cache_->hits.load(); }
std::uint64_t Posterior::cache_misses() const { return cache_->misses.load(); }

std::vector<double> Posterior::forward(const ModelParams& u) const {
  const std::string key = cache_key(u);
  {
    std::shared_lock lock(cache_->mutex);
    if (auto it = cache_->entries.find(key); it != cache_->entries.end()) {
      ++cache_->hits;
      return it->second;
    }
  }
  ++cache_->misses;
  std::vector<double> g = forward_(u);
  if (g.size() != data_.size()) throw std::logic_error("forward model output has the wrong length");
  if (cache_->capacity > 0) {
    std::unique_lock lock(cache_->mutex);
    if (cache_->entries.size() >= cache_->capacity) cache_->entries.clear();
    cache_->entries.emplace(key, g);
  }
  return g;
}

PotentialEvaluation Posterior::potential(const ModelParams& u) const {
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t misses_before = cache_->misses.load();
  const std::vector<double> g = forward(u);
  PotentialEvaluation ev;
  if (cache_->misses.load() != misses_before) {
    ev.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  std::vector<double> r(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) r[i] = g[i] - data_[i];
  ev.misfit = half_weighted_norm2(r, noise_);
  ev.offset = offset_;
  ev.phi = ev.misfit - ev.offset;
  return ev;
}

double Posterior::log_unnormalized(const ModelParams& u) const {
  const double lp = log_prior_density(prior_, u);
  if (!std::isfinite(lp)) return -std::numeric_limits<double>::infinity();
  return lp - potential(u).misfit;
}

double Posterior::log_density(std::span<const double> flat) const {
  return log_unnormalized(ModelParams::from_flat(prior_, flat));
}

}  // namespace tumorinv
