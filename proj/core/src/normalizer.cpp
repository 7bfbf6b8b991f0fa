#include "pmtg/normalizer.hpp"

#include <algorithm>
#include <cmath>

#include "pmtg/errors.hpp"

namespace pmtg {

RunningNormalizer::RunningNormalizer(std::size_t dim) : mean_(dim, 0.0), m2_(dim, 0.0) {}

RunningNormalizer::RunningNormalizer(std::size_t count, std::vector<double> mean, std::vector<double> m2)
    : count_(count), mean_(std::move(mean)), m2_(std::move(m2)) {
  if (mean_.size() != m2_.size()) throw ConfigError("normalizer mean/m2 length mismatch");
}

void RunningNormalizer::update(std::span<const double> obs) {
  if (obs.size() != dim()) throw ConfigError("normalizer dimension mismatch");
  ++count_;
  const double n = static_cast<double>(count_);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const double delta = obs[i] - mean_[i];
    mean_[i] += delta / n;
    m2_[i] += delta * (obs[i] - mean_[i]);
  }
}

void RunningNormalizer::merge(const RunningNormalizer& other) {
  if (other.count_ == 0) return;
  if (other.dim() != dim()) throw ConfigError("normalizer dimension mismatch");
  if (count_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(count_);
  const double nb = static_cast<double>(other.count_);
  const double n = na + nb;
  for (std::size_t i = 0; i < dim(); ++i) {
    const double delta = other.mean_[i] - mean_[i];
    mean_[i] += delta * nb / n;
    m2_[i] += other.m2_[i] + delta * delta * na * nb / n;
  }
  count_ += other.count_;
}

std::vector<double> RunningNormalizer::variance() const {
  std::vector<double> var(dim(), 0.0);
  if (count_ == 0) return var;
  for (std::size_t i = 0; i < dim(); ++i) var[i] = std::max(0.0, m2_[i] / static_cast<double>(count_));
  return var;
}

void RunningNormalizer::apply(std::span<const double> obs, std::span<double> out) const {
  if (obs.size() != dim() || out.size() != dim()) throw ConfigError("normalizer dimension mismatch");
  if (count_ == 0) {
    for (std::size_t i = 0; i < obs.size(); ++i) out[i] = obs[i];
    return;
  }
  const double n = static_cast<double>(count_);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const double var = std::max(0.0, m2_[i] / n);
    out[i] = (obs[i] - mean_[i]) / std::sqrt(var + kEpsilon);
  }
}

std::vector<double> RunningNormalizer::apply(std::span<const double> obs) const {
  std::vector<double> out(obs.size());
  apply(obs, out);
  return out;
}

}  // namespace pmtg
