#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pmtg/checkpoint.hpp"
#include "pmtg/config.hpp"
#include "pmtg/errors.hpp"
#include "pmtg/experiment.hpp"
#include "pmtg/worker_pool.hpp"

namespace fs = std::filesystem;
using namespace pmtg;

namespace {

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides,
              const std::optional<std::size_t>& workers, bool quiet) {
  const RunConfig cfg = load_config(config_path, overrides);
  const fs::path out = resolve_output_dir(cfg.run.output_dir);
  TrainOptions opts;
  opts.log = quiet ? nullptr : &std::cout;
  opts.workers = workers;
  const TrainResult result = train(cfg, out, opts);
  if (result.final_eval) {
    std::cout << "final mean_return " << format_double(result.final_eval->mean_return) << "  tracking_error "
              << format_double(result.final_eval->mean_tracking_error) << "  fall_rate "
              << format_double(result.final_eval->fall_rate) << '\n';
  }
  std::cout << "outputs in " << out.string() << '\n';
  return 0;
}

int cmd_eval(const std::string& config_path, const std::vector<std::string>& overrides,
             const std::string& checkpoint_path, std::size_t episodes, bool trace, bool tg_only, bool force,
             const std::string& out_dir) {
  const RunConfig cfg = load_config(config_path, overrides);
  PolicyParams params = PolicyParams::zeros(cfg.policy_shape());
  RunningNormalizer norm;
  if (!tg_only || !checkpoint_path.empty()) {
    if (checkpoint_path.empty()) throw ConfigError("eval needs --checkpoint (or --tg-only)");
    LoadOptions lo;
    lo.expected_hash = cfg.hash();
    lo.expected_shape = cfg.policy_shape();
    lo.force = force;
    lo.warn = [](const std::string& msg) { std::cerr << msg << '\n'; };
    Checkpoint ckpt = load_checkpoint(checkpoint_path, lo);
    params = std::move(ckpt.params);
    norm = std::move(ckpt.normalizer);
  }
  EvalOptions opts;
  opts.episodes = episodes;
  opts.trace = trace;
  opts.tg_only = tg_only;
  WorkerPool pool(cfg.run.workers);
  const EvalReport report = evaluate_policy(cfg, params, norm, opts, &pool);

  const fs::path out = out_dir.empty() ? resolve_output_dir(cfg.run.output_dir) / "eval" : fs::path(out_dir);
  fs::create_directories(out);
  write_eval_summary(report, out / "eval_summary.csv");
  if (trace) write_traces(report, out);

  std::cout << "episode  return  steps  tracking_error  fell  fall_time\n";
  for (std::size_t i = 0; i < report.episodes.size(); ++i) {
    const EvalEpisode& e = report.episodes[i];
    std::printf("%zu  %.6g  %zu  %.6g  %d  %.3g\n", i, e.episode_return, e.steps, e.tracking_error, e.fell ? 1 : 0,
                e.fall_time);
  }
  std::printf("mean_return %.6g  mean_reward_per_step %.6g  tracking_error %.6g  fall_rate %.3g\n",
              report.mean_return, report.mean_reward_per_step, report.mean_tracking_error, report.fall_rate);
  std::cout << "outputs in " << out.string() << '\n';
  return 0;
}

int cmd_compare(const std::string& a_path, const std::string& b_path, const std::vector<std::string>& overrides,
                const std::optional<std::size_t>& budget, const std::string& out_dir, bool quiet) {
  const RunConfig a = load_config(a_path, overrides);
  const RunConfig b = load_config(b_path, overrides);
  const fs::path out = out_dir.empty() ? resolve_output_dir(a.run.output_dir) / "compare" : fs::path(out_dir);
  TrainOptions opts;
  opts.log = quiet ? nullptr : &std::cout;
  const CompareResult r = compare(a, b, budget, out, opts);
  std::cout << "arm  wiring  final_mean_return\n";
  auto line = [](const char* arm, const RunConfig& c, const TrainResult& t) {
    std::printf("%s  %s  %.6g\n", arm, std::string(to_string(c.wiring)).c_str(),
                t.final_eval ? t.final_eval->mean_return : 0.0);
  };
  line("a", a, r.a);
  line("b", b, r.b);
  std::printf("delta (b - a) %.6g\n", r.delta);
  std::cout << "outputs in " << out.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Policies modulating trajectory generators: training, evaluation and experiment tooling"};
  app.require_subcommand(1);

  std::string config_path, config_b, checkpoint_path, out_dir;
  std::vector<std::string> overrides;
  std::optional<std::size_t> workers, budget;
  std::size_t episodes = 4;
  bool trace = false, tg_only = false, force = false, quiet = false, reference = false;
  std::vector<std::string> run_dirs;

  auto* train = app.add_subcommand("train", "Train a policy from a config file");
  train->add_option("config", config_path, "Config file (JSON)")->required()->check(CLI::ExistingFile);
  train->add_option("--set", overrides, "Override a config key, e.g. --set run.seed=3");
  train->add_option("--workers", workers, "Rollout threads (overrides run.workers)");
  train->add_flag("--quiet", quiet, "Only print the final summary");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on deterministic episodes");
  eval->add_option("config", config_path, "Config file (JSON)")->required()->check(CLI::ExistingFile);
  eval->add_option("--checkpoint", checkpoint_path, "Checkpoint file");
  eval->add_option("--episodes", episodes, "Number of evaluation episodes")->check(CLI::PositiveNumber);
  eval->add_flag("--trace", trace, "Write per-step trace CSVs");
  eval->add_flag("--tg-only", tg_only, "Zero feedback and midpoint TG modulation (ignores the checkpoint)");
  eval->add_flag("--force", force, "Load a checkpoint whose config hash differs");
  eval->add_option("--out", out_dir, "Output directory (default <run.output_dir>/eval)");
  eval->add_option("--set", overrides, "Override a config key");

  auto* cmp = app.add_subcommand("compare", "Train two configs under one budget and seed");
  cmp->add_option("config_a", config_path, "First config")->required()->check(CLI::ExistingFile);
  cmp->add_option("config_b", config_b, "Second config")->required()->check(CLI::ExistingFile);
  cmp->add_option("--budget", budget, "Rollout budget for both arms");
  cmp->add_option("--out", out_dir, "Output directory (default <run.output_dir>/compare)");
  cmp->add_option("--set", overrides, "Override a config key in both configs");
  cmp->add_flag("--quiet", quiet, "Only print the summary");

  auto* plots = app.add_subcommand("export-plots", "Collect run logs into long-format CSVs");
  plots->add_option("runs", run_dirs, "Run directories")->required();
  plots->add_option("--out", out_dir, "Output directory")->required();

  auto* print = app.add_subcommand("print-config", "Print the resolved config, or the defaults");
  print->add_option("config", config_path, "Config file (JSON)")->check(CLI::ExistingFile);
  print->add_option("--set", overrides, "Override a config key");
  print->add_flag("--reference", reference, "Print the documented key reference as markdown");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(config_path, overrides, workers, quiet);
    if (*eval) {
      if (tg_only) checkpoint_path.clear();
      return cmd_eval(config_path, overrides, checkpoint_path, episodes, trace, tg_only, force, out_dir);
    }
    if (*cmp) return cmd_compare(config_path, config_b, overrides, budget, out_dir, quiet);
    if (*plots) {
      std::vector<fs::path> dirs(run_dirs.begin(), run_dirs.end());
      export_plots(dirs, out_dir);
      std::cout << "wrote " << (fs::path(out_dir) / "learning_curves.csv").string() << " and "
                << (fs::path(out_dir) / "evals.csv").string() << '\n';
      return 0;
    }
    if (*print) {
      if (reference) {
        std::cout << config_reference();
      } else if (config_path.empty()) {
        std::cout << config_defaults().dump(2) << '\n';
      } else {
        std::cout << load_config(config_path, overrides).resolved.dump(2) << '\n';
      }
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
