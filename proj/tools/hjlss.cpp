/*
 Copyright 2026 The hjlss Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
// hjlss: command-line driver. Subcommands hopf, dp, train, eval and slice,
// each taking --config <file> plus --set key=value overrides. One run writes
// into one output directory, which carries a `.partial` marker until the
// command succeeds.

#include "hjlss/config.hpp"
#include "hjlss/contour.hpp"
#include "hjlss/eval.hpp"

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cstdio>
#include <cstdlib>
#include <iostream>

using namespace hjlss;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out;
};

void add_common(CLI::App *cmd, Common &c) {
  cmd->add_option("--config", c.config_path, "configuration file");
  cmd->add_option("--set", c.overrides, "override key=value (repeatable)");
  cmd->add_option("--out", c.out, "output directory (default: output.dir)");
}

Config resolve_config(const Common &c) {
  Config cfg = c.config_path.empty() ? Config() : Config::load(c.config_path);
  for (const auto &kv : c.overrides) cfg.apply_override(kv);
  if (!c.out.empty()) cfg.set("output.dir", c.out);
  return cfg;
}

/// Output directory with a frozen config and a `.partial` marker that is
/// removed only when the command finishes.
class RunDir {
public:
  RunDir(const Config &cfg, const std::string &command, bool allow_existing_config = true)
      : dir_(cfg.str("output.dir")) {
    fs::create_directories(dir_);
    const auto frozen = dir_ / "config.frozen";
    if (fs::exists(frozen) && read_text_file(frozen) != cfg.frozen()) {
      if (!allow_existing_config)
        throw Error("output directory " + dir_.string() + " holds a different configuration");
    }
    write_text_file(dir_ / ".partial", command + "\n");
    write_text_file(frozen, cfg.frozen());
    write_text_file(dir_ / "config.hash", cfg.hash() + "\n");
  }
  const fs::path &path() const { return dir_; }
  void finish() { fs::remove(dir_ / ".partial"); }

private:
  fs::path dir_;
};

double eval_time(const Config &cfg, const Problem &p) {
  return cfg.str("eval.t").empty() ? -p.horizon : cfg.num("eval.t");
}

Mat read_points_csv(const std::string &path, int n) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path);
  std::vector<double> vals;
  std::string line;
  Eigen::Index rows = 0;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<double> row;
    bool numeric = true;
    while (std::getline(ss, tok, ',')) {
      try {
        std::size_t pos = 0;
        row.push_back(std::stod(tok, &pos));
      } catch (const std::exception &) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (first) { first = false; continue; } // header
      throw Error(path + ": non-numeric row");
    }
    first = false;
    if (static_cast<int>(row.size()) != n)
      throw Error(path + ": expected " + std::to_string(n) + " columns per row");
    vals.insert(vals.end(), row.begin(), row.end());
    ++rows;
  }
  return Eigen::Map<const Mat>(vals.data(), n, rows);
}

std::unique_ptr<ValueFunction> load_model(const std::string &checkpoint, const std::string &grid,
                                          double lambda, bool clamp = false) {
  if (!checkpoint.empty() && !grid.empty())
    throw Error("give either --checkpoint or --grid, not both");
  if (!checkpoint.empty())
    return std::make_unique<NetValueFunction>(
        std::make_shared<SirenValueNet>(load_checkpoint(checkpoint)), lambda);
  if (!grid.empty()) return std::make_unique<OracleValueFunction>(load_oracle_manifest(grid), clamp);
  throw Error("a model is required: --checkpoint <file> or --grid <manifest>");
}

// ---------------------------------------------------------------------------

int cmd_hopf(const Common &c, const std::string &points, std::optional<double> t_opt) {
  const Config cfg = resolve_config(c);
  const Problem p = build_problem(cfg);
  const HopfProblem hp = build_hopf_problem(cfg, p);
  RunDir run(cfg, "hopf");
  const auto seed = cfg.seed("hopf.seed");
  HopfDataset ds;
  if (!points.empty()) {
    const Mat X = read_points_csv(points, p.linear.state_dim);
    const double t = t_opt ? *t_opt : (cfg.str("hopf.t").empty() ? -p.horizon : cfg.num("hopf.t"));
    ds = hopf_dataset_at(hp, X, t, seed);
  } else {
    TimeSampler ts;
    ts.horizon = p.horizon;
    if (t_opt || !cfg.str("hopf.t").empty()) {
      ts.kind = TimeSampler::Kind::Fixed;
      ts.fixed_t = t_opt ? *t_opt : cfg.num("hopf.t");
    }
    ds = generate_hopf_dataset(hp, p.domain, cfg.integer("hopf.n_points"), ts, seed);
  }
  atomic_write(run.path() / "hopf.csv",
               [&](std::ostream &os) { write_hopf_csv(os, ds, p.linear.state_dim); });
  json side;
  side["config_hash"] = cfg.hash();
  side["system"] = p.linear.name;
  side["objective"] = p.linear.objective == Objective::Reach ? "reach" : "avoid";
  side["seed"] = seed;
  side["rows"] = ds.rows();
  side["flagged_fraction"] = ds.flagged_fraction();
  side["low_quality"] = ds.low_quality;
  write_text_file(run.path() / "hopf.json", side.dump(2) + "\n");
  std::cout << "hopf: " << ds.rows() << " rows, flagged fraction " << ds.flagged_fraction()
            << " -> " << (run.path() / "hopf.csv").string() << "\n";
  run.finish();
  return 0;
}

int cmd_dp(const Common &c) {
  const Config cfg = resolve_config(c);
  const Problem p = build_problem(cfg);
  if (p.name != "pubsub")
    throw Error("dp: only the pub-sub problem decomposes into 2-D parts");
  RunDir run(cfg, "dp");
  PubSubParams part = p.pubsub;
  part.N = 2;
  const auto grid = dp_solve_2d(make_pubsub(part), make_pubsub_target(part),
                                build_grid_spec(cfg, p), p.horizon, cfg.num("oracle.cfl"),
                                cfg.integer("oracle.slices"), build_dissipation(cfg));
  save_grid(grid, run.path() / "part.grid");
  std::vector<std::string> files;
  std::vector<std::pair<int, int>> proj;
  for (int i = 1; i < p.pubsub.N; ++i) {
    files.push_back("part.grid");
    proj.emplace_back(0, i);
  }
  save_oracle_manifest(run.path() / "oracle.json", files, proj,
                       {{"config_hash", cfg.hash()}, {"N", p.pubsub.N}});
  std::cout << "dp: solved one 2-D part (" << grid.nx << "x" << grid.ny << ", dt " << grid.dt
            << "), manifest lists " << files.size() << " parts\n";
  run.finish();
  return 0;
}

int cmd_train(const Common &c, std::optional<int> stop_after) {
  const Config cfg = resolve_config(c);
  const Problem p = build_problem(cfg);
  TrainConfig tc = build_train_config(cfg, p);
  RunDir run(cfg, "train", false);
  tc.state_path = run.path() / "train.state";

  std::unique_ptr<Supervisor> sup;
  const auto &sup_path = cfg.str("train.supervisor");
  const bool needs_sup = tc.program == Program::LssDecay || tc.program == Program::LssSpectrum ||
                         tc.program == Program::LssDecayAdaptive;
  if (needs_sup) {
    if (sup_path.empty())
      throw Error(std::string("program ") + to_string(tc.program) +
                  " needs a supervisor: set train.supervisor to a checkpoint or Hopf CSV");
    if (fs::path(sup_path).extension() == ".csv") {
      std::ifstream is(sup_path);
      if (!is) throw Error("cannot open supervisor dataset " + sup_path);
      sup = std::make_unique<DatasetSupervisor>(read_hopf_csv(is));
    } else {
      sup = std::make_unique<NetSupervisor>(load_checkpoint(sup_path), p.domain, p.horizon);
    }
  }

  TrainHooks hooks;
  hooks.stop_after = stop_after;
  TrainResult r;
  switch (tc.program) {
  case Program::Baseline: r = train_baseline(tc, p.system, p.target, hooks); break;
  case Program::LssDecay: r = train_lss_decay(tc, p.system, p.target, *sup, hooks); break;
  case Program::LssDecayAdaptive: r = train_adaptive(tc, p.system, p.target, *sup, hooks); break;
  case Program::LssSpectrum:
    r = train_lss_spectrum(tc, SpectrumSystem{p.system, p.linear}, p.target, *sup, hooks);
    break;
  case Program::LinearSupervisor: {
    std::optional<HopfDataset> ds;
    if (tc.supervisor_path == SupervisorPath::HopfData) {
      const auto &dpath = cfg.str("train.dataset");
      if (dpath.empty()) throw Error("linear supervisor path A needs train.dataset");
      std::ifstream is(dpath);
      if (!is) throw Error("cannot open " + dpath);
      ds = read_hopf_csv(is);
    }
    r = train_linear_supervisor(tc, p.linear, p.target, ds ? &*ds : nullptr, hooks);
    break;
  }
  }
  atomic_write(run.path() / "metrics.csv", [&](std::ostream &os) { write_metric_csv(os, r.rows); });
  if (!r.completed) {
    std::cout << "train: stopped early; state saved to " << tc.state_path.string() << "\n";
    return 0; // leaves the .partial marker in place
  }
  save_checkpoint(r.net, run.path() / "model.ckpt");
  json info{{"config_hash", cfg.hash()},
            {"program", to_string(tc.program)},
            {"wall_clock_s", r.wall_clock_s},
            {"iterations", tc.iterations}};
  write_text_file(run.path() / "train.json", info.dump(2) + "\n");
  std::cout << "train: " << to_string(tc.program) << " finished in " << r.wall_clock_s << " s\n";
  run.finish();
  return 0;
}

int cmd_eval(const Common &c, const std::string &checkpoint, const std::string &grid,
             const std::string &oracle_path) {
  const Config cfg = resolve_config(c);
  const Problem p = build_problem(cfg);
  RunDir run(cfg, "eval");
  const auto t0 = std::chrono::steady_clock::now();
  const double t = eval_time(cfg, p);
  const auto model = load_model(checkpoint, grid, cfg.num("eval.lambda"));
  const auto policy = load_model(checkpoint, grid, cfg.num("eval.lambda"), true);
  if (model->state_dim() != p.domain.dim())
    throw Error("eval: model dimension does not match the configured problem");
  const auto seed = cfg.seed("eval.seed");
  const Eigen::Index n = cfg.integer("eval.samples");
  const auto &sampler = cfg.str("eval.sampler");
  Mat X;
  if (sampler == "uniform") X = uniform_samples(p.domain, n, seed);
  else if (sampler == "diagonal") X = diagonal_samples(p.domain, n, seed);
  else throw Error("config: eval.sampler must be uniform or diagonal");

  MetricsReport rep;
  rep.objective = p.system.objective == Objective::Reach ? "reach" : "avoid";
  rep.config_hash = cfg.hash();
  rep.eval_time = t;
  rep.counts["samples"] = n;
  if (!oracle_path.empty()) {
    const OracleValueFunction oracle(load_oracle_manifest(oracle_path));
    rep.iou = iou(*model, oracle, X, t);
    const auto m = mse_metrics(*model, oracle, X, t);
    rep.mse_value = m.value;
    rep.mse_grad = m.grad;
  } else {
    rep.notes.push_back("no oracle given: IOU and MSE skipped");
  }
  RolloutConfig rc;
  rc.dt = cfg.num("eval.dt");
  rc.escape_box = p.domain.scaled(2.0);
  const int n_roll = cfg.integer("eval.rollouts");
  if (n_roll > 0) {
    const Mat R = uniform_samples(p.domain, n_roll, derive_seed(seed, 1));
    const auto rates = fp_fn_rates(*model, *policy, p.system, p.target, R, t, rc);
    rep.fp_rate = rates.fp;
    rep.fn_rate = rates.fn;
    rep.counts["rollouts"] = n_roll;
    atomic_write(run.path() / "records.csv", [&](std::ostream &os) {
      os << "sample,predicted_value,predicted_good,empirical_good,min_cost,escaped\n";
      for (std::size_t i = 0; i < rates.records.size(); ++i) {
        const auto &r = rates.records[i];
        os << i << ',' << fmt_double(r.predicted_value) << ',' << r.predicted_good << ','
           << r.empirical_good << ',' << fmt_double(r.min_cost) << ',' << r.escaped << '\n';
      }
    });
  } else {
    rep.notes.push_back("eval.rollouts = 0: FP/FN skipped");
  }
  const int n_cal = cfg.integer("eval.calibration");
  if (p.system.objective == Objective::Avoid && n_cal > 0) {
    const Mat C = uniform_samples(p.domain, n_cal, derive_seed(seed, 2));
    const auto cal = fp_fn_rates(*model, *policy, p.system, p.target, C, t, rc);
    const auto conf = conformal_delta(cal);
    rep.delta = conf.delta;
    rep.recovered_volume = recovered_volume(*model, conf.delta, X, t);
    rep.counts["calibration"] = conf.calibration;
    rep.counts["calibration_unsafe"] = conf.unsafe;
    rep.counts["calibration_false_safe_after"] = conf.false_safe_after;
    char note[160];
    std::snprintf(note, sizeof note,
                  "conformal: coverage >= %.6g for exchangeable unsafe states; "
                  "miss rate <= %.6g with 99.9%% confidence",
                  conf.coverage_bound, conf.epsilon_999);
    rep.notes.push_back(note);
  } else if (p.system.objective == Objective::Avoid) {
    rep.notes.push_back("eval.calibration = 0: conformal expansion skipped");
  }
  rep.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_text_file(run.path() / "report.json", rep.to_json().dump(2) + "\n");
  std::cout << rep.to_json().dump(2) << "\n";
  run.finish();
  return 0;
}

int cmd_slice(const Common &c, const std::string &checkpoint, const std::string &grid,
              const std::string &axes_s, int res, std::optional<double> t_opt,
              const std::vector<std::string> &fixes, std::optional<double> delta) {
  const Config cfg = resolve_config(c);
  const Problem p = build_problem(cfg);
  RunDir run(cfg, "slice");
  const auto model = load_model(checkpoint, grid, cfg.num("eval.lambda"));
  const int n = p.domain.dim();
  if (model->state_dim() != n) throw Error("slice: model dimension does not match the problem");
  int ax = 0, ay = 1;
  if (std::sscanf(axes_s.c_str(), "%d,%d", &ax, &ay) != 2 || ax == ay || ax < 0 || ay < 0 ||
      ax >= n || ay >= n)
    throw Error("slice: --axes expects two distinct state indices i,j");
  if (res < 2) throw Error("slice: --res must be >= 2");
  Vec base = Vec::Zero(n);
  for (const auto &f : fixes) {
    int k = 0;
    double v = 0.0;
    if (std::sscanf(f.c_str(), "%d=%lf", &k, &v) != 2 || k < 0 || k >= n)
      throw Error("slice: --fix expects index=value");
    base[k] = v;
  }
  const double t = t_opt ? *t_opt : eval_time(cfg, p);
  Field2D field;
  for (int i = 0; i < res; ++i) {
    field.xs.push_back(p.domain.lo[ax] + (p.domain.hi[ax] - p.domain.lo[ax]) * i / (res - 1));
    field.ys.push_back(p.domain.lo[ay] + (p.domain.hi[ay] - p.domain.lo[ay]) * i / (res - 1));
  }
  Mat X(n, res * res);
  for (int i = 0; i < res; ++i)
    for (int j = 0; j < res; ++j) {
      Vec x = base;
      x[ax] = field.xs[i];
      x[ay] = field.ys[j];
      X.col(i * res + j) = x;
    }
  Vec V;
  model->evaluate(X, t, V, nullptr);
  field.values.assign(V.data(), V.data() + V.size());
  const std::string xn = "x" + std::to_string(ax), yn = "x" + std::to_string(ay);
  atomic_write(run.path() / "slice.csv", [&](std::ostream &os) { write_field_csv(os, field, xn, yn); });
  std::vector<ContourLayer> layers{{marching_squares(field, 0.0), "black", "V = 0"}};
  if (delta) layers.push_back({marching_squares(field, *delta), "red", "V = delta"});
  write_text_file(run.path() / "slice.svg", contour_svg(field, layers));
  std::cout << "slice: " << res << "x" << res << " field, " << layers.front().segments.size()
            << " zero-level segments\n";
  run.finish();
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  if (const char *nt = std::getenv("HJLSS_NUM_THREADS")) {
#ifdef _OPENMP
    const int k = std::atoi(nt);
    if (k > 0) omp_set_num_threads(k);
#endif
  }
  CLI::App app{"Hamilton-Jacobi reachability with linear semi-supervision"};
  app.require_subcommand(1);

  Common common;
  std::string points, checkpoint, grid, oracle, axes = "0,1";
  std::optional<double> t_opt, delta;
  std::optional<int> stop_after;
  std::vector<std::string> fixes;
  int res = 101;

  auto *hopf = app.add_subcommand("hopf", "Hopf-formula dataset for the linear dynamics");
  add_common(hopf, common);
  hopf->add_option("--points", points, "CSV of states (one per row)");
  hopf->add_option("--t", t_opt, "query time");

  auto *dp = app.add_subcommand("dp", "2-D dynamic-programming oracle and composition manifest");
  add_common(dp, common);

  auto *train = app.add_subcommand("train", "train a value network (resumes from train.state)");
  add_common(train, common);
  train->add_option("--stop-after", stop_after, "stop after this many iterations (state is saved)");

  auto *ev = app.add_subcommand("eval", "score a model: IOU, MSE, FP/FN, conformal delta, volume");
  add_common(ev, common);
  ev->add_option("--checkpoint", checkpoint, "network checkpoint");
  ev->add_option("--grid", grid, "oracle manifest used as the model");
  ev->add_option("--oracle", oracle, "oracle manifest for IOU/MSE");

  auto *sl = app.add_subcommand("slice", "2-D slice as CSV and SVG zero-level contour");
  add_common(sl, common);
  sl->add_option("--checkpoint", checkpoint, "network checkpoint");
  sl->add_option("--grid", grid, "oracle manifest");
  sl->add_option("--axes", axes, "state indices i,j of the slice plane");
  sl->add_option("--res", res, "samples per axis");
  sl->add_option("--t", t_opt, "slice time");
  sl->add_option("--fix", fixes, "fixed coordinate index=value (repeatable)");
  sl->add_option("--delta", delta, "additional level drawn in red");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*hopf) return cmd_hopf(common, points, t_opt);
    if (*dp) return cmd_dp(common);
    if (*train) return cmd_train(common, stop_after);
    if (*ev) return cmd_eval(common, checkpoint, grid, oracle);
    if (*sl) return cmd_slice(common, checkpoint, grid, axes, res, t_opt, fixes, delta);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
