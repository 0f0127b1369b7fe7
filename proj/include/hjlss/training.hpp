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
#ifndef HJLSS_TRAINING_HPP
#define HJLSS_TRAINING_HPP

// Samplers, schedules and the training programs: PDE-only baseline, decayed
// linear semi-supervision, spectrum semi-supervision, adaptive weighting, and
// the two linear-supervisor paths.

#include "hjlss/hopf.hpp"
#include "hjlss/net.hpp"

#include <chrono>
#include <memory>
#include <optional>

namespace hjlss {

enum class Program { Baseline, LssDecay, LssSpectrum, LssDecayAdaptive, LinearSupervisor };

inline const char *to_string(Program p) {
  switch (p) {
  case Program::Baseline: return "baseline";
  case Program::LssDecay: return "lss_decay";
  case Program::LssSpectrum: return "lss_spectrum";
  case Program::LssDecayAdaptive: return "lss_decay_adaptive";
  case Program::LinearSupervisor: return "linear_supervisor";
  }
  return "?";
}

inline Program program_from_string(const std::string &s) {
  for (auto p : {Program::Baseline, Program::LssDecay, Program::LssSpectrum,
                 Program::LssDecayAdaptive, Program::LinearSupervisor})
    if (s == to_string(p)) return p;
  throw Error("unknown program '" + s +
              "' (expected baseline|lss_decay|lss_spectrum|lss_decay_adaptive|"
              "linear_supervisor)");
}

enum class SupervisorPath { HopfData, PdeOnly };

struct TrainConfig {
  Program program = Program::Baseline;
  int iterations = 1000;
  int batch_size = 1000;
  int sup_batch_size = 0; // 0 means batch_size
  double lr = 1e-4;
  std::uint64_t seed = 0;

  bool curriculum = true;      // honoured by baseline, spectrum and path B
  double warmup = 0.5;         // fraction of K over which s_k ramps to T
  double lambda_K = 1.0;       // LSS-D final PDE weight
  double ramp = 0.5;           // fraction of K over which lambda_k ramps
  std::optional<double> lambda_fixed; // constant LSS-D weight instead of the ramp
  double rho = 1.0;            // value supervision weight
  double rho_g = 0.1;          // gradient supervision weight
  double I_start = 10.0;
  double I_end = 1.0;
  double spectrum_sup_fraction = 0.25;
  SupervisorPath supervisor_path = SupervisorPath::PdeOnly;
  double supervisor_pde_weight = 1.0; // path A

  Box domain = Box::cube(2, -3.0, 3.0);
  double horizon = 1.0;
  double t_f = 0.0;
  ResidualNorm pde_norm = ResidualNorm::L1;
  bool vi_min = true;

  std::vector<int> hidden{64, 64, 64};
  double omega0 = 30.0;
  double output_scale = 1.0;

  int log_every = 100;
  int checkpoint_every = 0;            // 0 disables intermediate state files
  std::filesystem::path state_path;    // resumable training state

  void validate() const {
    if (iterations < 1) throw Error("train: iterations must be >= 1");
    if (batch_size < 1) throw Error("train: batch_size must be >= 1");
    if (!(lambda_K >= 0.0 && lambda_K <= 1.0)) throw Error("train: lambda_K must be in [0,1]");
    if (!(ramp > 0.0 && ramp <= 1.0)) throw Error("train: ramp must be in (0,1]");
    if (lambda_fixed && !(*lambda_fixed >= 0.0 && *lambda_fixed <= 1.0))
      throw Error("train: lambda_fixed must be in [0,1]");
    if (!(warmup > 0.0 && warmup <= 1.0)) throw Error("train: warmup must be in (0,1]");
    if (program == Program::LssDecayAdaptive && !(I_end < I_start))
      throw Error("train: adaptive weighting requires I_end < I_start");
    if (!(I_end > 0.0)) throw Error("train: I_end must be positive");
    if (!(spectrum_sup_fraction > 0.0 && spectrum_sup_fraction < 1.0))
      throw Error("train: spectrum_sup_fraction must be in (0,1)");
    if (!(horizon > 0.0)) throw Error("train: horizon must be positive");
    if (!(lr > 0.0)) throw Error("train: lr must be positive");
  }

  int sup_batch() const { return sup_batch_size > 0 ? sup_batch_size : batch_size; }
  bool curriculum_active() const {
    return curriculum && (program == Program::Baseline || program == Program::LssSpectrum ||
                          (program == Program::LinearSupervisor &&
                           supervisor_path == SupervisorPath::PdeOnly));
  }
};

// ---------------------------------------------------------------------------
// Schedules
// ---------------------------------------------------------------------------

/// Sampled backward-time range [0, s_k].
inline double curriculum_s(const TrainConfig &cfg, int k) {
  if (!cfg.curriculum_active()) return cfg.horizon;
  const double frac = static_cast<double>(k) / (cfg.warmup * cfg.iterations);
  return cfg.horizon * std::min(1.0, frac);
}

/// LSS-D PDE weight, zero at k = 0 and lambda_K from ramp*K on.
inline double lssd_lambda(const TrainConfig &cfg, int k) {
  if (cfg.lambda_fixed) return *cfg.lambda_fixed;
  const double frac = static_cast<double>(k) / (cfg.ramp * cfg.iterations);
  return frac >= 1.0 ? cfg.lambda_K : cfg.lambda_K * frac;
}

/// Supervision importance I_k, exponential from I_start (k=0) to I_end (k=K).
inline double adaptive_importance(const TrainConfig &cfg, int k) {
  if (k <= 0) return cfg.I_start;
  if (k >= cfg.iterations) return cfg.I_end;
  return cfg.I_end * std::exp(std::log(cfg.I_start / cfg.I_end) *
                              (1.0 - static_cast<double>(k) / cfg.iterations));
}

struct AdaptiveWeight {
  double lambda = 0.0;
  double last_ratio = 0.0;
};

/// One EMA step lambda <- 0.9 lambda + 0.1 I_k |g_LS| / |g_PDE|. A vanishing
/// PDE gradient reuses the last finite ratio.
inline AdaptiveWeight adaptive_update(AdaptiveWeight w, double I_k, double g_ls_norm,
                                      double g_pde_norm) {
  if (g_pde_norm >= 1e-12) w.last_ratio = g_ls_norm / g_pde_norm;
  w.lambda = 0.9 * w.lambda + 0.1 * I_k * w.last_ratio;
  return w;
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

enum class BatchMode {
  Pde,      // PDE block only
  Sup,      // supervision block only
  PdeSup,   // PDE block followed by a supervision block
  Spectrum  // PDE block with lambda ~ U[0,1], supervision block at lambda = 0
};

inline std::uint64_t batch_seed(std::uint64_t seed, int k) {
  return derive_seed(seed, static_cast<std::uint64_t>(k), 0);
}

/// Uniform states over the domain and backward times over [0, s_k]; a pure
/// function of (cfg, k, mode). Blocks are drawn in order PDE then
/// supervision, so dropping the supervision block leaves the PDE block
/// unchanged.
inline Batch sample_batch(const TrainConfig &cfg, int k, BatchMode mode,
                          bool lambda_input = false) {
  const int n = cfg.domain.dim();
  Eigen::Index n_pde = 0, n_sup = 0;
  switch (mode) {
  case BatchMode::Pde: n_pde = cfg.batch_size; break;
  case BatchMode::Sup: n_sup = cfg.sup_batch(); break;
  case BatchMode::PdeSup: n_pde = cfg.batch_size; n_sup = cfg.sup_batch(); break;
  case BatchMode::Spectrum:
    n_sup = std::max<Eigen::Index>(1, std::llround(cfg.spectrum_sup_fraction * cfg.batch_size));
    n_pde = std::max<Eigen::Index>(1, cfg.batch_size - n_sup);
    lambda_input = true;
    break;
  }
  const Eigen::Index B = n_pde + n_sup;
  const double s_k = curriculum_s(cfg, k);
  std::mt19937_64 rng(batch_seed(cfg.seed, k));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Batch b;
  b.in.x.resize(n, B);
  b.in.t.resize(B);
  if (lambda_input) b.in.lambda = Vec::Zero(B);
  for (Eigen::Index c = 0; c < B; ++c) {
    for (int i = 0; i < n; ++i)
      b.in.x(i, c) = cfg.domain.lo[i] + (cfg.domain.hi[i] - cfg.domain.lo[i]) * unit(rng);
    b.in.t[c] = cfg.t_f - s_k * unit(rng);
    if (mode == BatchMode::Spectrum && c < n_pde) b.in.lambda[c] = unit(rng);
  }
  b.pde = {0, n_pde};
  b.sup = {n_pde, n_sup};
  return b;
}

// ---------------------------------------------------------------------------
// Supervisors
// ---------------------------------------------------------------------------

/// Provides linear-value targets for the supervision block of a batch.
class Supervisor {
public:
  virtual ~Supervisor() = default;
  /// Fills b.sup_value / b.sup_grad; may replace the supervision points.
  virtual void fill(Batch &b, std::uint64_t seed) const = 0;
  virtual std::string describe() const = 0;
};

/// A frozen network over the linear dynamics.
class NetSupervisor : public Supervisor {
public:
  NetSupervisor(SirenValueNet net, Box domain, double horizon)
      : net_(std::move(net)), domain_(std::move(domain)), horizon_(horizon) {}

  void query(const NetInput &in, Vec &value, Mat &grad) const {
    for (Eigen::Index c = 0; c < in.size(); ++c) {
      if (!domain_.contains(in.x.col(c), 1e-12) || in.t[c] > net_.t_f + 1e-12 ||
          in.t[c] < net_.t_f - horizon_ - 1e-12)
        throw Error("supervisor: query outside its training domain");
    }
    NetInput q;
    q.x = in.x;
    q.t = in.t;
    const auto out = forward(net_, q);
    value = out.value;
    grad = out.dx;
  }

  void fill(Batch &b, std::uint64_t) const override {
    NetInput q;
    q.x = b.in.x.middleCols(b.sup.begin, b.sup.count);
    q.t = b.in.t.segment(b.sup.begin, b.sup.count);
    query(q, b.sup_value, b.sup_grad);
  }

  std::string describe() const override { return "net"; }
  const SirenValueNet &net() const { return net_; }

private:
  SirenValueNet net_;
  Box domain_;
  double horizon_;
};

/// Rows of a Hopf dataset drawn with replacement, deterministic per seed.
class DatasetSupervisor : public Supervisor {
public:
  explicit DatasetSupervisor(HopfDataset ds) : ds_(std::move(ds)) {
    if (ds_.rows() == 0) throw Error("supervisor: empty Hopf dataset");
    if (ds_.low_quality) warn("supervisor: Hopf dataset is marked low-quality");
  }

  void fill(Batch &b, std::uint64_t seed) const override {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Eigen::Index> pick(0, ds_.rows() - 1);
    const auto n = ds_.x.rows();
    if (b.in.x.rows() != n) throw DimensionError("supervisor: dataset dimension");
    b.sup_value.resize(b.sup.count);
    b.sup_grad.resize(n, b.sup.count);
    for (Eigen::Index c = 0; c < b.sup.count; ++c) {
      const auto r = pick(rng);
      b.in.x.col(b.sup.begin + c) = ds_.x.col(r);
      b.in.t[b.sup.begin + c] = ds_.t[r];
      b.sup_value[c] = ds_.value[r];
      b.sup_grad.col(c) = ds_.grad.col(r);
    }
  }

  std::string describe() const override { return "hopf_dataset"; }
  const HopfDataset &dataset() const { return ds_; }

private:
  HopfDataset ds_;
};

// ---------------------------------------------------------------------------
// Loss terms
// ---------------------------------------------------------------------------

/// Mean |V_t + min{0, H}| (or the configured variant) over the PDE block.
inline LossResult pde_loss(const SirenValueNet &net, const HamiltonianFn &ham,
                           const Batch &b, ResidualNorm norm = ResidualNorm::L1,
                           bool vi_min = true) {
  LossSpec s;
  s.pde_weight = 1.0;
  s.pde_norm = norm;
  s.vi_min = vi_min;
  s.hamiltonian = ham;
  Batch only = b;
  only.sup = {0, 0};
  return loss_gradients(net, only, s);
}

/// rho * MSE(V) + rho_g * MSE(grad V) against the supervisor.
inline LossResult ls_loss(const SirenValueNet &net, const Supervisor &sup, Batch b,
                          double rho, double rho_g, std::uint64_t seed = 0) {
  LossSpec s;
  s.pde_weight = 0.0;
  s.value_weight = rho;
  s.grad_weight = rho_g;
  sup.fill(b, seed);
  b.pde = {0, 0};
  return loss_gradients(net, b, s);
}

// ---------------------------------------------------------------------------
// Training state and logs
// ---------------------------------------------------------------------------

struct MetricRow {
  int iter = 0;
  double wall_clock_s = 0.0;
  double loss_total = 0.0;
  double loss_pde = 0.0;
  double loss_ls = 0.0;
  double lambda_k = 0.0;
  double s_k = 0.0;
};

inline void write_metric_csv(std::ostream &os, const std::vector<MetricRow> &rows) {
  os << "iter,wall_clock_s,loss_total,loss_pde,loss_ls,lambda_k,s_k\n";
  for (const auto &r : rows)
    os << r.iter << ',' << fmt_double(r.wall_clock_s) << ',' << fmt_double(r.loss_total) << ','
       << fmt_double(r.loss_pde) << ',' << fmt_double(r.loss_ls) << ','
       << fmt_double(r.lambda_k) << ',' << fmt_double(r.s_k) << '\n';
}

struct TrainState {
  SirenValueNet net;
  AdamState adam;
  int next_iter = 0;
  double lambda_adapt = 0.0; // adaptive EMA weight
  double last_ratio = 0.0;   // last finite gradient-norm ratio
  double wall_clock_s = 0.0;
  std::vector<MetricRow> rows;
};

inline constexpr char kStateMagic[9] = "HJLSTRN1";
inline constexpr int kStateVersion = 1;

inline void save_train_state(const TrainState &st, const std::filesystem::path &path) {
  json h;
  h["version"] = kStateVersion;
  h["net"] = net_header(st.net);
  h["next_iter"] = st.next_iter;
  h["lambda_adapt"] = st.lambda_adapt;
  h["last_ratio"] = st.last_ratio;
  h["wall_clock_s"] = st.wall_clock_s;
  h["adam"] = {{"step", st.adam.step}, {"lr", st.adam.lr}, {"beta1", st.adam.beta1},
               {"beta2", st.adam.beta2}, {"eps", st.adam.eps}};
  json rows = json::array();
  for (const auto &r : st.rows)
    rows.push_back({r.iter, r.wall_clock_s, r.loss_total, r.loss_pde, r.loss_ls, r.lambda_k, r.s_k});
  h["rows"] = rows;
  const auto P = st.net.params.size();
  std::vector<double> blob(static_cast<std::size_t>(3 * P), 0.0);
  std::copy(st.net.params.data(), st.net.params.data() + P, blob.begin());
  if (st.adam.m.size() == P) {
    std::copy(st.adam.m.data(), st.adam.m.data() + P, blob.begin() + P);
    std::copy(st.adam.v.data(), st.adam.v.data() + P, blob.begin() + 2 * P);
  }
  atomic_write(path, [&](std::ostream &os) { write_container(os, kStateMagic, h, blob); });
}

inline TrainState load_train_state(const std::filesystem::path &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open training state " + path.string());
  auto c = read_container(is, kStateMagic);
  if (c.header.value("version", -1) != kStateVersion)
    throw Error("training state: unsupported version");
  TrainState st;
  // Rebuild the network through the checkpoint reader for validation.
  const auto &nh = c.header.at("net");
  const std::size_t P = SirenValueNet::param_count(nh.at("layer_dims").get<std::vector<int>>());
  if (c.blob.size() != 3 * P) throw Error("training state: blob size mismatch");
  {
    std::stringstream ss;
    write_container(ss, kNetMagic, nh, std::span<const double>(c.blob.data(), P));
    st.net = read_net(ss);
  }
  st.next_iter = c.header.at("next_iter").get<int>();
  st.lambda_adapt = c.header.at("lambda_adapt").get<double>();
  st.last_ratio = c.header.at("last_ratio").get<double>();
  st.wall_clock_s = c.header.at("wall_clock_s").get<double>();
  const auto &a = c.header.at("adam");
  st.adam.step = a.at("step").get<std::uint64_t>();
  st.adam.lr = a.at("lr").get<double>();
  st.adam.beta1 = a.at("beta1").get<double>();
  st.adam.beta2 = a.at("beta2").get<double>();
  st.adam.eps = a.at("eps").get<double>();
  if (st.adam.step > 0) {
    st.adam.m = Eigen::Map<const Vec>(c.blob.data() + P, static_cast<Eigen::Index>(P));
    st.adam.v = Eigen::Map<const Vec>(c.blob.data() + 2 * P, static_cast<Eigen::Index>(P));
  }
  for (const auto &r : c.header.at("rows"))
    st.rows.push_back(MetricRow{r[0].get<int>(), r[1].get<double>(), r[2].get<double>(),
                                r[3].get<double>(), r[4].get<double>(), r[5].get<double>(),
                                r[6].get<double>()});
  return st;
}

// ---------------------------------------------------------------------------
// Programs
// ---------------------------------------------------------------------------

/// What a program trains against.
struct TrainProblem {
  HamiltonianFn hamiltonian;
  QuadraticTarget target;
  bool lambda_input = false;
};

struct TrainHooks {
  /// Called after every logged iteration with the current network. Time spent
  /// here is not counted in wall_clock_s.
  std::function<void(int iter, double wall_clock_s, const SirenValueNet &)> on_log;
  /// Stop after this many iterations of the current call (for resume tests).
  std::optional<int> stop_after;
};

struct TrainResult {
  SirenValueNet net;
  std::vector<MetricRow> rows;
  double wall_clock_s = 0.0;
  bool completed = true;
};

inline SirenValueNet initial_net(const TrainConfig &cfg, const TrainProblem &prob) {
  NetArch arch;
  arch.state_dim = cfg.domain.dim();
  arch.has_lambda = prob.lambda_input;
  arch.hidden = cfg.hidden;
  arch.omega0 = cfg.omega0;
  arch.t_f = cfg.t_f;
  arch.domain = cfg.domain;
  arch.horizon = cfg.horizon;
  arch.output_scale = cfg.output_scale;
  return init_siren(arch, prob.target, derive_seed(cfg.seed, 0x5eedULL << 32));
}

namespace detail {

inline int last_iteration(const TrainConfig &cfg) {
  // The adaptive loop runs k = 0..K inclusive.
  return cfg.program == Program::LssDecayAdaptive ? cfg.iterations : cfg.iterations - 1;
}

inline TrainResult run_program(const TrainConfig &cfg, const TrainProblem &prob,
                               const Supervisor *sup, const TrainHooks &hooks) {
  cfg.validate();
  if (prob.target.dim() != cfg.domain.dim())
    throw DimensionError("train: target and domain dimensions differ");
  const bool needs_sup = cfg.program == Program::LssDecay ||
                         cfg.program == Program::LssSpectrum ||
                         cfg.program == Program::LssDecayAdaptive ||
                         (cfg.program == Program::LinearSupervisor &&
                          cfg.supervisor_path == SupervisorPath::HopfData);
  if (needs_sup && !sup)
    throw Error(std::string("train: program ") + to_string(cfg.program) + " requires a supervisor");

  TrainState st;
  bool resumed = false;
  if (!cfg.state_path.empty() && std::filesystem::exists(cfg.state_path)) {
    st = load_train_state(cfg.state_path);
    resumed = true;
  } else {
    st.net = initial_net(cfg, prob);
    st.adam.lr = cfg.lr;
    st.lambda_adapt = cfg.I_start;
  }
  if (resumed && (st.net.has_lambda != prob.lambda_input ||
                  st.net.state_dim != cfg.domain.dim()))
    throw Error("train: saved state does not match the configured problem");

  const int last = last_iteration(cfg);
  int done_this_call = 0;
  const auto t_start = std::chrono::steady_clock::now();
  const double clock_offset = st.wall_clock_s;
  double hook_seconds = 0.0; // time spent in on_log, excluded from the clock
  auto elapsed = [&] {
    return clock_offset - hook_seconds +
           std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  };

  for (int k = st.next_iter; k <= last; ++k) {
    if (hooks.stop_after && done_this_call >= *hooks.stop_after) {
      st.wall_clock_s = elapsed();
      if (!cfg.state_path.empty()) save_train_state(st, cfg.state_path);
      return TrainResult{st.net, st.rows, st.wall_clock_s, false};
    }
    const double s_k = curriculum_s(cfg, k);
    LossSpec spec;
    spec.hamiltonian = prob.hamiltonian;
    spec.pde_norm = cfg.pde_norm;
    spec.vi_min = cfg.vi_min;
    double lambda_log = 1.0;
    Batch b;
    Vec grad;
    LossResult res;

    switch (cfg.program) {
    case Program::Baseline:
      b = sample_batch(cfg, k, BatchMode::Pde, prob.lambda_input);
      res = loss_gradients(st.net, b, spec);
      grad = res.grad;
      break;
    case Program::LinearSupervisor:
      if (cfg.supervisor_path == SupervisorPath::PdeOnly) {
        b = sample_batch(cfg, k, BatchMode::Pde, prob.lambda_input);
      } else {
        b = sample_batch(cfg, k, cfg.supervisor_pde_weight > 0 ? BatchMode::PdeSup : BatchMode::Sup,
                         prob.lambda_input);
        sup->fill(b, derive_seed(cfg.seed, static_cast<std::uint64_t>(k), 1));
        spec.pde_weight = cfg.supervisor_pde_weight;
        spec.value_weight = cfg.rho;
        spec.grad_weight = cfg.rho_g;
      }
      res = loss_gradients(st.net, b, spec);
      grad = res.grad;
      break;
    case Program::LssDecay: {
      const double lam = lssd_lambda(cfg, k);
      lambda_log = lam;
      const BatchMode mode =
          lam >= 1.0 ? BatchMode::Pde : (lam <= 0.0 ? BatchMode::Sup : BatchMode::PdeSup);
      b = sample_batch(cfg, k, mode, prob.lambda_input);
      if (b.sup.count > 0) sup->fill(b, derive_seed(cfg.seed, static_cast<std::uint64_t>(k), 1));
      spec.pde_weight = lam;
      spec.value_weight = (1.0 - lam) * cfg.rho;
      spec.grad_weight = (1.0 - lam) * cfg.rho_g;
      res = loss_gradients(st.net, b, spec);
      grad = res.grad;
      break;
    }
    case Program::LssSpectrum:
      b = sample_batch(cfg, k, BatchMode::Spectrum);
      sup->fill(b, derive_seed(cfg.seed, static_cast<std::uint64_t>(k), 1));
      spec.value_weight = cfg.rho;
      spec.grad_weight = cfg.rho_g;
      res = loss_gradients(st.net, b, spec);
      grad = res.grad;
      break;
    case Program::LssDecayAdaptive: {
      b = sample_batch(cfg, k, BatchMode::PdeSup, prob.lambda_input);
      sup->fill(b, derive_seed(cfg.seed, static_cast<std::uint64_t>(k), 1));
      spec.value_weight = cfg.rho;
      spec.grad_weight = cfg.rho_g;
      res = loss_gradients(st.net, b, spec, true);
      const double I_k = adaptive_importance(cfg, k);
      const auto w = adaptive_update({st.lambda_adapt, st.last_ratio}, I_k,
                                     res.grad_sup.norm(), res.grad_pde.norm());
      st.lambda_adapt = w.lambda;
      st.last_ratio = w.last_ratio;
      lambda_log = st.lambda_adapt;
      grad = st.lambda_adapt * res.grad_sup + res.grad_pde;
      res.total = st.lambda_adapt * (cfg.rho * res.sup_value + cfg.rho_g * res.sup_grad) + res.pde;
      break;
    }
    }

    adam_step(st.adam, st.net, grad);
    if (!st.net.params.allFinite())
      throw Error("train: non-finite parameters at iteration " + std::to_string(k));
    st.next_iter = k + 1;
    ++done_this_call;

    const bool log_now = cfg.log_every > 0 && (k % cfg.log_every == 0 || k == last);
    if (log_now) {
      MetricRow r;
      r.iter = k;
      r.wall_clock_s = elapsed();
      r.loss_total = res.total;
      r.loss_pde = res.pde;
      r.loss_ls = cfg.rho * res.sup_value + cfg.rho_g * res.sup_grad;
      r.lambda_k = lambda_log;
      r.s_k = s_k;
      st.rows.push_back(r);
      if (hooks.on_log) {
        const auto h0 = std::chrono::steady_clock::now();
        hooks.on_log(k, r.wall_clock_s, st.net);
        hook_seconds +=
            std::chrono::duration<double>(std::chrono::steady_clock::now() - h0).count();
      }
    }
    if (cfg.checkpoint_every > 0 && !cfg.state_path.empty() &&
        (k + 1) % cfg.checkpoint_every == 0) {
      st.wall_clock_s = elapsed();
      save_train_state(st, cfg.state_path);
    }
  }
  st.wall_clock_s = elapsed();
  if (!cfg.state_path.empty()) save_train_state(st, cfg.state_path);
  return TrainResult{st.net, st.rows, st.wall_clock_s, true};
}

} // namespace detail

inline TrainResult train_baseline(TrainConfig cfg, const AffineInputSystem &sys,
                                  const QuadraticTarget &target, const TrainHooks &hooks = {}) {
  cfg.program = Program::Baseline;
  return detail::run_program(cfg, TrainProblem{make_hamiltonian_fn(sys), target, false},
                             nullptr, hooks);
}

inline TrainResult train_lss_decay(TrainConfig cfg, const AffineInputSystem &sys,
                                   const QuadraticTarget &target, const Supervisor &sup,
                                   const TrainHooks &hooks = {}) {
  cfg.program = Program::LssDecay;
  return detail::run_program(cfg, TrainProblem{make_hamiltonian_fn(sys), target, false},
                             &sup, hooks);
}

/// The returned net takes (x, lambda, t); the nonlinear value is its lambda = 1 slice.
inline TrainResult train_lss_spectrum(TrainConfig cfg, const SpectrumSystem &spec,
                                      const QuadraticTarget &target, const Supervisor &sup,
                                      const TrainHooks &hooks = {}) {
  cfg.program = Program::LssSpectrum;
  spec.validate();
  return detail::run_program(cfg, TrainProblem{make_spectrum_hamiltonian_fn(spec), target, true},
                             &sup, hooks);
}

inline TrainResult train_adaptive(TrainConfig cfg, const AffineInputSystem &sys,
                                  const QuadraticTarget &target, const Supervisor &sup,
                                  const TrainHooks &hooks = {}) {
  cfg.program = Program::LssDecayAdaptive;
  return detail::run_program(cfg, TrainProblem{make_hamiltonian_fn(sys), target, false},
                             &sup, hooks);
}

/// Path A (Hopf data, optional PDE term) or path B (PDE only with curriculum)
/// over the linear dynamics.
inline TrainResult train_linear_supervisor(TrainConfig cfg, const LinearTVSystem &lin,
                                           const QuadraticTarget &target,
                                           const HopfDataset *data = nullptr,
                                           const TrainHooks &hooks = {}) {
  cfg.program = Program::LinearSupervisor;
  std::unique_ptr<DatasetSupervisor> sup;
  if (cfg.supervisor_path == SupervisorPath::HopfData) {
    if (!data) throw Error("train_linear_supervisor: path A needs a Hopf dataset");
    if (data->low_quality) warn("linear supervisor: Hopf dataset is low-quality; training anyway");
    sup = std::make_unique<DatasetSupervisor>(*data);
  }
  return detail::run_program(cfg, TrainProblem{make_hamiltonian_fn(lin.as_affine()), target, false},
                             sup.get(), hooks);
}

/// Freezes a trained linear-value net as a supervisor.
inline NetSupervisor freeze_supervisor(const TrainResult &r, const TrainConfig &cfg) {
  return NetSupervisor(r.net, cfg.domain, cfg.horizon);
}

} // namespace hjlss

#endif // HJLSS_TRAINING_HPP
