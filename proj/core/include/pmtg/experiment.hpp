#pragma once

// Experiment orchestration: training loops for both optimizers, periodic
// evaluation, checkpoints and the CSV logs they leave behind.

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pmtg/checkpoint.hpp"
#include "pmtg/config.hpp"

namespace pmtg {

class WorkerPool;

// One learning-curve row, written after every optimizer iteration.
struct CurveRow {
  std::size_t iteration = 0;
  std::size_t total_rollouts = 0;
  std::size_t total_env_steps = 0;
  double mean_return = 0.0;
  double max_return = 0.0;
  double min_return = 0.0;
  double wall_time_s = 0.0;

  bool operator==(const CurveRow&) const = default;
};

struct EvalEpisode {
  std::uint64_t seed = 0;
  double episode_return = 0.0;
  std::size_t steps = 0;
  double tracking_error = 0.0;  // NaN for the point-mass task
  bool fell = false;
  double fall_time = 0.0;  // NaN unless fell
};

struct EvalReport {
  std::vector<EvalEpisode> episodes;
  double mean_return = 0.0;
  double mean_reward_per_step = 0.0;
  double mean_tracking_error = 0.0;
  double fall_rate = 0.0;
  std::vector<std::string> trace_columns;
  std::vector<std::vector<std::vector<double>>> traces;  // [episode][step][column]

  // Column of one episode's trace by name; throws if absent.
  std::vector<double> trace_column(std::size_t episode, const std::string& name) const;
};

// Tracking criterion: no fall and mean |v_R - v_T| at most the threshold.
inline constexpr double kTrackingThreshold = 0.1;
bool passes_tracking(const EvalEpisode& e, double threshold = kTrackingThreshold);

struct EvalRow {
  std::size_t iteration = 0;
  std::size_t total_rollouts = 0;
  std::size_t total_env_steps = 0;
  double mean_return = 0.0;
  double mean_tracking_error = 0.0;
  double fall_rate = 0.0;
};

struct EvalOptions {
  std::size_t episodes = 4;
  bool tg_only = false;  // zero feedback and midpoint modulation
  bool trace = false;
};

// Deterministic episodes with reset seeds 0 .. episodes-1.
EvalReport evaluate_policy(const RunConfig& cfg, const PolicyParams& params, const RunningNormalizer& normalizer,
                           const EvalOptions& options, WorkerPool* pool = nullptr);

struct TrainOptions {
  std::ostream* log = nullptr;
  std::optional<std::size_t> workers;  // overrides run.workers
};

struct TrainResult {
  std::filesystem::path output_dir;
  std::vector<CurveRow> curve;
  std::vector<EvalRow> evals;
  Checkpoint final;
  std::optional<EvalReport> final_eval;  // absent when no iteration ran
};

// Resolves run.output_dir against $PMTG_OUTPUT_ROOT when it is relative.
std::filesystem::path resolve_output_dir(const std::string& output_dir);

// Writes resolved_config.json, checkpoint_initial.bin, learning_curve.csv,
// eval.csv, checkpoint_latest.bin (periodic and on error) and
// checkpoint_final.bin into out_dir.
TrainResult train(const RunConfig& cfg, const std::filesystem::path& out_dir, const TrainOptions& options = {});

struct CompareResult {
  TrainResult a;
  TrainResult b;
  double delta = 0.0;  // final evaluation mean return, b minus a
};

// Trains both configs with A's seed and the given rollout budget (or each
// config's own when absent) into out_dir/a and out_dir/b and writes
// compare.csv and compare_summary.csv.
CompareResult compare(const RunConfig& a, const RunConfig& b, std::optional<std::size_t> budget,
                      const std::filesystem::path& out_dir, const TrainOptions& options = {});

// Gathers the learning curves and evaluation logs of several run directories
// into long-format learning_curves.csv and evals.csv.
void export_plots(const std::vector<std::filesystem::path>& run_dirs, const std::filesystem::path& out_dir);

// CSV helpers; doubles are written with 17 significant digits so they read
// back exactly.
std::string format_double(double v);
std::string curve_csv_header();
std::string curve_csv_row(const CurveRow& row);
std::vector<CurveRow> read_learning_curve(const std::filesystem::path& path);
std::vector<EvalRow> read_eval_log(const std::filesystem::path& path);
void write_eval_summary(const EvalReport& report, const std::filesystem::path& path);
void write_traces(const EvalReport& report, const std::filesystem::path& dir);

}  // namespace pmtg
