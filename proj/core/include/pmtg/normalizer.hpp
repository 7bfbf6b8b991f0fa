#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pmtg {

// Per-channel running mean/variance (Welford updates, Chan merges).
// apply() is the identity until the first sample arrives.
class RunningNormalizer {
 public:
  static constexpr double kEpsilon = 1e-8;

  RunningNormalizer() = default;
  explicit RunningNormalizer(std::size_t dim);
  RunningNormalizer(std::size_t count, std::vector<double> mean, std::vector<double> m2);

  void update(std::span<const double> obs);
  void merge(const RunningNormalizer& other);

  void apply(std::span<const double> obs, std::span<double> out) const;
  std::vector<double> apply(std::span<const double> obs) const;

  std::size_t dim() const { return mean_.size(); }
  std::size_t count() const { return count_; }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& m2() const { return m2_; }
  std::vector<double> variance() const;

 private:
  std::size_t count_ = 0;
  std::vector<double> mean_;
  std::vector<double> m2_;
};

}  // namespace pmtg
