#pragma once

// The learning-facing side of an environment: raw policy outputs in,
// observations and rewards out. Concrete episodes own the wiring between the
// policy, the trajectory generator and the simulator.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace pmtg {

struct StepResult {
  std::vector<double> observation;
  double reward = 0.0;
  bool done = false;
};

struct EpisodeSummary {
  std::size_t steps = 0;
  // Mean |v_R - v_T| over the episode; NaN for tasks without a speed target.
  double tracking_error = std::numeric_limits<double>::quiet_NaN();
  bool fell = false;
  double fall_time = std::numeric_limits<double>::quiet_NaN();
};

class Episode {
 public:
  virtual ~Episode() = default;

  virtual std::size_t observation_dim() const = 0;
  virtual std::size_t action_dim() const = 0;

  virtual std::vector<double> reset(std::uint64_t seed) = 0;
  virtual StepResult step(std::span<const double> raw_action) = 0;

  // Per-step diagnostics describing the most recent step.
  virtual std::vector<std::string> trace_columns() const = 0;
  virtual std::vector<double> trace_row() const = 0;

  virtual EpisodeSummary summary() const = 0;
};

using EpisodeFactory = std::function<std::unique_ptr<Episode>()>;

}  // namespace pmtg
