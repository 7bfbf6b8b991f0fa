#include "pmtg/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "pmtg/errors.hpp"
#include "pmtg/rollout.hpp"
#include "pmtg/seeding.hpp"
#include "pmtg/worker_pool.hpp"

namespace pmtg {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw std::runtime_error("bad number in CSV: '" + s + "'");
  return v;
}

std::size_t parse_size(const std::string& s) {
  std::size_t pos = 0;
  const unsigned long long v = std::stoull(s, &pos);
  if (pos != s.size()) throw std::runtime_error("bad integer in CSV: '" + s + "'");
  return static_cast<std::size_t>(v);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

const char* kEvalHeader = "iteration,total_rollouts,total_env_steps,mean_return,mean_tracking_error,fall_rate";

std::string eval_csv_row(const EvalRow& r) {
  return std::to_string(r.iteration) + "," + std::to_string(r.total_rollouts) + "," +
         std::to_string(r.total_env_steps) + "," + format_double(r.mean_return) + "," +
         format_double(r.mean_tracking_error) + "," + format_double(r.fall_rate);
}

PolicyParams initial_params(const RunConfig& cfg) {
  const PolicyShape shape = cfg.policy_shape();
  if (shape.kind == PolicyKind::kLinear) return PolicyParams::zeros(shape);
  return PolicyParams::random_init(shape, derive_seed(cfg.run.seed, "init"));
}

struct Logger {
  std::ostream* out;
  template <class... T>
  void operator()(const T&... parts) const {
    if (out == nullptr) return;
    ((*out) << ... << parts) << '\n';
    out->flush();
  }
};

// Shared bookkeeping of both training loops.
class RunWriter {
 public:
  RunWriter(const RunConfig& cfg, const fs::path& dir, TrainResult& result, Logger log)
      : cfg_(cfg), dir_(dir), result_(result), log_(log), start_(std::chrono::steady_clock::now()) {
    fs::create_directories(dir_);
    open_out(dir_ / "resolved_config.json") << cfg_.resolved.dump(2) << '\n';
    curve_ = open_out(dir_ / "learning_curve.csv");
    curve_ << curve_csv_header() << '\n';
    curve_.flush();
    evals_ = open_out(dir_ / "eval.csv");
    evals_ << kEvalHeader << '\n';
    evals_.flush();
  }

  Checkpoint checkpoint(const PolicyParams& params, const RunningNormalizer& norm) const {
    Checkpoint c;
    c.params = params;
    c.bounds = cfg_.quadruped.bounds;
    c.seed = cfg_.run.seed;
    c.config_hash = cfg_.hash();
    c.iteration = iteration_;
    c.total_rollouts = rollouts_;
    c.normalizer = norm;
    return c;
  }

  void save(const std::string& name, const PolicyParams& params, const RunningNormalizer& norm) const {
    save_checkpoint(checkpoint(params, norm), dir_ / name);
  }

  void record(std::size_t rollouts, std::size_t steps, double mean, double max, double min) {
    ++iteration_;
    rollouts_ += rollouts;
    steps_ += steps;
    CurveRow row{iteration_, rollouts_, steps_, mean, max, min, 0.0};
    if (cfg_.run.log_wall_time) {
      row.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }
    curve_ << curve_csv_row(row) << '\n';
    curve_.flush();
    result_.curve.push_back(row);
    log_("iter ", iteration_, "  rollouts ", rollouts_, "  steps ", steps_, "  mean_return ", format_double(mean));
  }

  EvalReport evaluate(const PolicyParams& params, const RunningNormalizer& norm, WorkerPool* pool,
                      bool write_row = true) {
    EvalOptions opts;
    opts.episodes = cfg_.run.eval_episodes;
    EvalReport report = evaluate_policy(cfg_, params, norm, opts, pool);
    if (!write_row) return report;
    EvalRow row{iteration_, rollouts_, steps_, report.mean_return, report.mean_tracking_error, report.fall_rate};
    evals_ << eval_csv_row(row) << '\n';
    evals_.flush();
    result_.evals.push_back(row);
    log_("eval iter ", iteration_, "  mean_return ", format_double(report.mean_return), "  tracking_error ",
         format_double(report.mean_tracking_error), "  fall_rate ", format_double(report.fall_rate));
    return report;
  }

  bool budget_allows(std::size_t rollouts_per_iter) const {
    const RunSection& r = cfg_.run;
    if (r.max_iterations > 0 && iteration_ >= r.max_iterations) return false;
    if (rollouts_ + rollouts_per_iter > r.max_rollouts) return false;
    if (r.max_env_steps > 0 && steps_ + rollouts_per_iter * cfg_.max_episode_steps() > r.max_env_steps) {
      return false;
    }
    return true;
  }

  bool due(std::size_t every) const { return every > 0 && iteration_ % every == 0; }
  std::size_t iteration() const { return iteration_; }

 private:
  const RunConfig& cfg_;
  fs::path dir_;
  TrainResult& result_;
  Logger log_;
  std::chrono::steady_clock::time_point start_;
  std::ofstream curve_;
  std::ofstream evals_;
  std::size_t iteration_ = 0;
  std::size_t rollouts_ = 0;
  std::size_t steps_ = 0;
};

void finish(RunWriter& w, TrainResult& result, const PolicyParams& params, const RunningNormalizer& norm,
            WorkerPool* pool) {
  if (w.iteration() == 0) {
    result.final = w.checkpoint(params, norm);
    return;
  }
  const bool logged = !result.evals.empty() && result.evals.back().iteration == w.iteration();
  result.final_eval = w.evaluate(params, norm, pool, !logged);
  w.save("checkpoint_final.bin", params, norm);
  result.final = w.checkpoint(params, norm);
}

void train_ars(const RunConfig& cfg, RunWriter& w, TrainResult& result, WorkerPool& pool) {
  const ArsConfig& ars = cfg.ars;
  const EpisodeFactory factory = make_episode_factory(cfg);
  const std::size_t per_iter = static_cast<std::size_t>(2 * ars.num_directions * ars.rollouts_per_direction);
  PolicyParams params = initial_params(cfg);
  RunningNormalizer norm(ars.normalize_obs ? cfg.observation_dim() : 0);
  w.save("checkpoint_initial.bin", params, norm);
  if (!w.budget_allows(per_iter)) {
    result.final = w.checkpoint(params, norm);
    return;
  }
  try {
    while (w.budget_allows(per_iter)) {
      const RunningNormalizer snapshot = norm;
      const PolicyShape shape = params.shape;
      ParamEvaluator evaluate = [&](std::span<const double> theta, std::uint64_t seed) {
        PolicyParams candidate{shape, std::vector<double>(theta.begin(), theta.end())};
        auto episode = factory();
        RolloutOptions opts;
        opts.normalizer = ars.normalize_obs ? &snapshot : nullptr;
        opts.collect_obs_stats = ars.normalize_obs;
        RolloutRecord rec = rollout(candidate, *episode, seed, opts);
        return EvalOutcome{rec.episode_return, rec.length, std::move(rec.obs_stats)};
      };
      ArsIteration it = ars_iteration(params.flat, ars, evaluate, cfg.run.seed, w.iteration(), &pool);
      params.flat = std::move(it.params);
      if (ars.normalize_obs) {
        for (const EvalOutcome& o : it.outcomes) norm.merge(o.obs_stats);
      }
      w.record(it.rollouts, it.env_steps, it.mean_return, it.max_return, it.min_return);
      if (w.due(cfg.run.eval_every)) w.evaluate(params, norm, &pool);
      if (w.due(cfg.run.checkpoint_every)) w.save("checkpoint_latest.bin", params, norm);
    }
  } catch (...) {
    w.save("checkpoint_latest.bin", params, norm);
    throw;
  }
  finish(w, result, params, norm, &pool);
}

void train_ppo(const RunConfig& cfg, RunWriter& w, TrainResult& result, WorkerPool& pool) {
  const PpoConfig& ppo = cfg.ppo;
  const EpisodeFactory factory = make_episode_factory(cfg);
  const std::size_t per_iter = static_cast<std::size_t>(ppo.episodes_per_batch);
  ActorCritic net = ActorCritic::make(cfg.policy_shape(), ppo, derive_seed(cfg.run.seed, "init"));
  Adam adam(net.size(), ppo.learning_rate);
  RunningNormalizer norm(ppo.normalize_obs ? cfg.observation_dim() : 0);
  w.save("checkpoint_initial.bin", net.policy, norm);
  if (!w.budget_allows(per_iter)) {
    result.final = w.checkpoint(net.policy, norm);
    return;
  }
  try {
    while (w.budget_allows(per_iter)) {
      const std::uint64_t iter = w.iteration();
      PpoCollection col = ppo_collect(net, factory, ppo.normalize_obs ? &norm : nullptr, ppo, cfg.run.seed, iter, &pool);
      double sum = 0.0, mx = -std::numeric_limits<double>::infinity(), mn = std::numeric_limits<double>::infinity();
      for (double r : col.episode_returns) {
        if (!std::isfinite(r)) throw PpoError("non-finite episode return in PPO iteration " + std::to_string(iter));
        sum += r;
        mx = std::max(mx, r);
        mn = std::min(mn, r);
      }
      Rng rng = make_rng(derive_seed(cfg.run.seed, "optim", {iter}));
      ppo_update(net, adam, std::move(col.batch), ppo, rng);
      if (ppo.normalize_obs) norm.merge(col.obs_stats);
      w.record(col.episode_returns.size(), col.env_steps, sum / static_cast<double>(col.episode_returns.size()), mx,
               mn);
      if (w.due(cfg.run.eval_every)) w.evaluate(net.policy, norm, &pool);
      if (w.due(cfg.run.checkpoint_every)) w.save("checkpoint_latest.bin", net.policy, norm);
    }
  } catch (...) {
    w.save("checkpoint_latest.bin", net.policy, norm);
    throw;
  }
  finish(w, result, net.policy, norm, &pool);
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string curve_csv_header() {
  return "iteration,total_rollouts,total_env_steps,mean_return,max_return,min_return,wall_time_s";
}

std::string curve_csv_row(const CurveRow& r) {
  return std::to_string(r.iteration) + "," + std::to_string(r.total_rollouts) + "," +
         std::to_string(r.total_env_steps) + "," + format_double(r.mean_return) + "," +
         format_double(r.max_return) + "," + format_double(r.min_return) + "," + format_double(r.wall_time_s);
}

std::vector<CurveRow> read_learning_curve(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != curve_csv_header()) throw std::runtime_error(path.string() + ": unexpected header");
  std::vector<CurveRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() != 7) throw std::runtime_error(path.string() + ": malformed row '" + line + "'");
    rows.push_back({parse_size(c[0]), parse_size(c[1]), parse_size(c[2]), parse_double(c[3]), parse_double(c[4]),
                    parse_double(c[5]), parse_double(c[6])});
  }
  return rows;
}

std::vector<EvalRow> read_eval_log(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != kEvalHeader) throw std::runtime_error(path.string() + ": unexpected header");
  std::vector<EvalRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() != 6) throw std::runtime_error(path.string() + ": malformed row '" + line + "'");
    rows.push_back({parse_size(c[0]), parse_size(c[1]), parse_size(c[2]), parse_double(c[3]), parse_double(c[4]),
                    parse_double(c[5])});
  }
  return rows;
}

std::vector<double> EvalReport::trace_column(std::size_t episode, const std::string& name) const {
  std::size_t col = trace_columns.size();
  for (std::size_t i = 0; i < trace_columns.size(); ++i) {
    if (trace_columns[i] == name) col = i;
  }
  if (col == trace_columns.size()) throw std::out_of_range("no trace column '" + name + "'");
  std::vector<double> out;
  out.reserve(traces.at(episode).size());
  for (const auto& row : traces.at(episode)) out.push_back(row[col]);
  return out;
}

bool passes_tracking(const EvalEpisode& e, double threshold) {
  return !e.fell && std::isfinite(e.tracking_error) && e.tracking_error <= threshold;
}

EvalReport evaluate_policy(const RunConfig& cfg, const PolicyParams& params, const RunningNormalizer& normalizer,
                           const EvalOptions& options, WorkerPool* pool) {
  if (options.episodes < 1) throw ConfigError("evaluation needs at least one episode");
  const PolicyShape shape = cfg.policy_shape();
  if (!(params.shape == shape)) {
    throw ShapeMismatchError("checkpoint policy " + params.shape.describe() + " does not match config policy " +
                             shape.describe());
  }
  PolicyParams policy = params;
  RunningNormalizer norm = normalizer;
  if (options.tg_only) {
    if (cfg.wiring != Wiring::kPmtg) throw ConfigError("TG-only evaluation needs env.wiring = pmtg");
    policy = PolicyParams::zeros(shape);
    norm = RunningNormalizer();
  }
  const EpisodeFactory factory = make_episode_factory(cfg, true);

  EvalReport report;
  report.episodes.resize(options.episodes);
  report.traces.resize(options.trace ? options.episodes : 0);
  auto task = [&](std::size_t e) {
    auto episode = factory();
    RolloutOptions opts;
    opts.normalizer = norm.dim() > 0 ? &norm : nullptr;
    opts.record_trace = options.trace;
    RolloutRecord rec = rollout(policy, *episode, e, opts);
    EvalEpisode& out = report.episodes[e];
    out.seed = e;
    out.episode_return = rec.episode_return;
    out.steps = rec.length;
    out.tracking_error = rec.summary.tracking_error;
    out.fell = rec.summary.fell;
    out.fall_time = rec.summary.fall_time;
    if (options.trace) report.traces[e] = std::move(rec.trace);
  };
  if (pool != nullptr) {
    pool->run(options.episodes, task);
  } else {
    for (std::size_t e = 0; e < options.episodes; ++e) task(e);
  }
  report.trace_columns = factory()->trace_columns();

  double ret = 0.0, per_step = 0.0, err = 0.0, falls = 0.0;
  for (const EvalEpisode& e : report.episodes) {
    ret += e.episode_return;
    per_step += e.episode_return / static_cast<double>(std::max<std::size_t>(e.steps, 1));
    err += e.tracking_error;
    falls += e.fell ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(options.episodes);
  report.mean_return = ret / n;
  report.mean_reward_per_step = per_step / n;
  report.mean_tracking_error = err / n;
  report.fall_rate = falls / n;
  return report;
}

void write_eval_summary(const EvalReport& report, const fs::path& path) {
  std::ofstream out = open_out(path);
  out << "episode,seed,return,steps,tracking_error,fell,fall_time\n";
  for (std::size_t i = 0; i < report.episodes.size(); ++i) {
    const EvalEpisode& e = report.episodes[i];
    out << i << ',' << e.seed << ',' << format_double(e.episode_return) << ',' << e.steps << ','
        << format_double(e.tracking_error) << ',' << (e.fell ? 1 : 0) << ',' << format_double(e.fall_time) << '\n';
  }
}

void write_traces(const EvalReport& report, const fs::path& dir) {
  fs::create_directories(dir);
  for (std::size_t e = 0; e < report.traces.size(); ++e) {
    std::ofstream out = open_out(dir / ("trace_episode_" + std::to_string(e) + ".csv"));
    for (std::size_t c = 0; c < report.trace_columns.size(); ++c) {
      out << (c ? "," : "") << report.trace_columns[c];
    }
    out << '\n';
    for (const auto& row : report.traces[e]) {
      for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_double(row[c]);
      out << '\n';
    }
  }
}

fs::path resolve_output_dir(const std::string& output_dir) {
  fs::path p(output_dir);
  if (p.is_relative()) {
    if (const char* root = std::getenv("PMTG_OUTPUT_ROOT"); root != nullptr && *root != '\0') {
      return fs::path(root) / p;
    }
  }
  return p;
}

TrainResult train(const RunConfig& cfg, const fs::path& out_dir, const TrainOptions& options) {
  TrainResult result;
  result.output_dir = out_dir;
  Logger log{options.log};
  RunWriter writer(cfg, out_dir, result, log);
  WorkerPool pool(options.workers.value_or(cfg.run.workers));
  log("training ", to_string(cfg.algo), " on ", to_string(cfg.env), " (", to_string(cfg.wiring), "), policy ",
      cfg.policy_shape().describe(), ", seed ", cfg.run.seed);
  if (cfg.algo == OptimAlgo::kArs) {
    train_ars(cfg, writer, result, pool);
  } else {
    train_ppo(cfg, writer, result, pool);
  }
  return result;
}

CompareResult compare(const RunConfig& a, const RunConfig& b, std::optional<std::size_t> budget,
                      const fs::path& out_dir, const TrainOptions& options) {
  if (a.env != b.env) {
    throw ConfigError("compare needs both configs on the same env (got " + std::string(to_string(a.env)) + " and " +
                      std::string(to_string(b.env)) + ")");
  }
  auto prepare = [&](const RunConfig& c) {
    std::vector<std::string> overrides{"run.seed=" + std::to_string(a.run.seed)};
    if (budget) overrides.push_back("run.max_rollouts=" + std::to_string(*budget));
    return resolve_config(c.resolved, overrides);
  };
  const RunConfig ca = prepare(a);
  const RunConfig cb = prepare(b);
  CompareResult result;
  result.a = train(ca, out_dir / "a", options);
  result.b = train(cb, out_dir / "b", options);
  const double ra = result.a.final_eval ? result.a.final_eval->mean_return : 0.0;
  const double rb = result.b.final_eval ? result.b.final_eval->mean_return : 0.0;
  result.delta = rb - ra;

  std::ofstream out = open_out(out_dir / "compare.csv");
  out << "iteration,total_rollouts_a,mean_return_a,total_rollouts_b,mean_return_b\n";
  const std::size_t n = std::max(result.a.curve.size(), result.b.curve.size());
  for (std::size_t i = 0; i < n; ++i) {
    out << (i + 1) << ',';
    if (i < result.a.curve.size()) {
      out << result.a.curve[i].total_rollouts << ',' << format_double(result.a.curve[i].mean_return);
    } else {
      out << ',';
    }
    out << ',';
    if (i < result.b.curve.size()) {
      out << result.b.curve[i].total_rollouts << ',' << format_double(result.b.curve[i].mean_return);
    } else {
      out << ',';
    }
    out << '\n';
  }
  std::ofstream summary = open_out(out_dir / "compare_summary.csv");
  summary << "arm,wiring,final_mean_return,final_tracking_error,final_fall_rate\n";
  auto line = [&](const char* arm, const RunConfig& c, const TrainResult& r) {
    summary << arm << ',' << to_string(c.wiring) << ',';
    if (r.final_eval) {
      summary << format_double(r.final_eval->mean_return) << ',' << format_double(r.final_eval->mean_tracking_error)
              << ',' << format_double(r.final_eval->fall_rate);
    } else {
      summary << ",,";
    }
    summary << '\n';
  };
  line("a", ca, result.a);
  line("b", cb, result.b);
  summary << "delta_b_minus_a,," << format_double(result.delta) << ",,\n";
  return result;
}

void export_plots(const std::vector<fs::path>& run_dirs, const fs::path& out_dir) {
  if (run_dirs.empty()) throw ConfigError("export-plots needs at least one run directory");
  fs::create_directories(out_dir);
  std::ofstream curves = open_out(out_dir / "learning_curves.csv");
  curves << "run," << curve_csv_header() << '\n';
  std::ofstream evals = open_out(out_dir / "evals.csv");
  evals << "run," << kEvalHeader << '\n';
  for (const fs::path& dir : run_dirs) {
    const std::string name = dir.filename().empty() ? dir.parent_path().filename().string() : dir.filename().string();
    for (const CurveRow& r : read_learning_curve(dir / "learning_curve.csv")) {
      curves << name << ',' << curve_csv_row(r) << '\n';
    }
    if (fs::exists(dir / "eval.csv")) {
      for (const EvalRow& r : read_eval_log(dir / "eval.csv")) evals << name << ',' << eval_csv_row(r) << '\n';
    }
  }
}

}  // namespace pmtg
