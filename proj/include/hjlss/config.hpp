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
#ifndef HJLSS_CONFIG_HPP
#define HJLSS_CONFIG_HPP

// Plain-text experiment configuration. One `key = value` per line, `#`
// comments, optional `[section]` headers that prefix the keys that follow.
// Every key must appear in the schema below; unset keys take their default.

#include "hjlss/hopf.hpp"
#include "hjlss/levelset.hpp"
#include "hjlss/systems.hpp"
#include "hjlss/training.hpp"

#include <map>

namespace hjlss {

struct ConfigKey {
  const char *key;
  const char *default_value;
  const char *help;
};

inline const std::vector<ConfigKey> &config_schema() {
  static const std::vector<ConfigKey> schema{
      {"problem.system", "pubsub", "pubsub | quadrotor"},
      {"problem.N", "10", "pub-sub state count (publisher + N-1 subscribers)"},
      {"problem.a", "-0.5", "pub-sub a"},
      {"problem.b", "1", "pub-sub control gain b"},
      {"problem.c", "1", "pub-sub disturbance gain c"},
      {"problem.alpha", "0", "pub-sub publisher nonlinearity"},
      {"problem.beta", "0", "pub-sub subscriber nonlinearity"},
      {"problem.r", "1", "pub-sub target radius"},
      {"problem.control_bound", "1", "pub-sub control bound"},
      {"problem.disturb_bound", "1", "pub-sub disturbance bound"},
      {"problem.half_width", "3", "pub-sub domain [-w, w]^N"},
      {"problem.horizon", "1", "horizon T (t in [-T, 0])"},
      {"quad.g", "9.8", "gravity"},
      {"quad.d0", "7", "angular stiffness"},
      {"quad.d1", "4", "angular damping"},
      {"quad.n0", "12", "angular input gain"},
      {"quad.tilt_bound", "0.7853981633974483", "angular input bound"},
      {"quad.thrust_bound", "1", "vertical acceleration bound"},
      {"quad.obstacle_radius", "0.5", "cylinder radius"},
      {"train.program", "baseline",
       "baseline | lss_decay | lss_spectrum | lss_decay_adaptive | linear_supervisor"},
      {"train.iterations", "1000", "K"},
      {"train.batch_size", "1000", "PDE batch size"},
      {"train.sup_batch_size", "0", "supervision batch size (0: batch_size)"},
      {"train.lr", "1e-4", "Adam learning rate"},
      {"train.seed", "0", "seed for init and sampling"},
      {"train.curriculum", "true", "time curriculum (baseline, spectrum, path B)"},
      {"train.warmup", "0.5", "curriculum ramp fraction of K"},
      {"train.lambda_K", "1", "LSS-D final PDE weight"},
      {"train.ramp", "0.5", "LSS-D ramp fraction of K"},
      {"train.rho", "1", "value supervision weight"},
      {"train.rho_g", "0.1", "gradient supervision weight"},
      {"train.I_start", "10", "adaptive importance at k = 0"},
      {"train.I_end", "1", "adaptive importance at k = K"},
      {"train.spectrum_sup_fraction", "0.25", "spectrum supervision share of the batch"},
      {"train.supervisor", "", "supervisor checkpoint (.ckpt) or Hopf dataset (.csv)"},
      {"train.supervisor_path", "pde", "linear supervisor path: hopf (A) | pde (B)"},
      {"train.supervisor_pde_weight", "1", "PDE weight for path A"},
      {"train.dataset", "", "Hopf dataset for path A"},
      {"train.hidden", "64,64,64", "hidden widths"},
      {"train.omega0", "30", "sine frequency"},
      {"train.output_scale", "1", "correction output scale"},
      {"train.pde_norm", "l1", "l1 | l2"},
      {"train.vi_min", "true", "use min{0, H} in the residual"},
      {"train.log_every", "100", "metric log cadence"},
      {"train.checkpoint_every", "1000", "resumable state cadence (0: end only)"},
      {"oracle.nx", "201", "grid nodes along x0"},
      {"oracle.ny", "201", "grid nodes along xi"},
      {"oracle.cfl", "0.5", "CFL number"},
      {"oracle.slices", "21", "stored time slices"},
      {"oracle.dissipation", "local", "local | global Lax-Friedrichs"},
      {"hopf.n_points", "1000", "random dataset size"},
      {"hopf.seed", "0", "dataset seed"},
      {"hopf.t", "", "fixed query time (empty: uniform over the horizon)"},
      {"hopf.n_tau", "16", "tau grid size"},
      {"hopf.quad_nodes", "64", "quadrature nodes"},
      {"hopf.restarts", "4", "solver restarts"},
      {"hopf.max_iters", "400", "solver iterations per start"},
      {"hopf.step_c", "1", "subgradient step constant"},
      {"hopf.tol", "1e-3", "non-convergence tolerance"},
      {"eval.samples", "100000", "Monte Carlo samples for IOU/MSE/volume"},
      {"eval.seed", "1", "evaluation seed"},
      {"eval.t", "", "evaluation time (empty: t_f - T)"},
      {"eval.sampler", "uniform", "uniform | diagonal"},
      {"eval.lambda", "1", "lambda slice of spectrum networks"},
      {"eval.rollouts", "0", "rollout samples for FP/FN (0: skip)"},
      {"eval.calibration", "0", "conformal calibration rollouts (0: skip)"},
      {"eval.dt", "0.01", "rollout step"},
      {"output.dir", "run", "output directory"},
  };
  return schema;
}

class Config {
public:
  Config() {
    for (const auto &k : config_schema()) values_[k.key] = k.default_value;
  }

  static Config parse(const std::string &text) {
    Config c;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw Error("config line " + std::to_string(lineno) + ": bad section");
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw Error("config line " + std::to_string(lineno) + ": expected key = value");
      std::string key = trim(line.substr(0, eq));
      if (!section.empty()) key = section + "." + key;
      c.set(key, trim(line.substr(eq + 1)));
    }
    return c;
  }

  static Config load(const std::filesystem::path &path) { return parse(read_text_file(path)); }

  void set(const std::string &key, const std::string &value) {
    if (!values_.count(key)) throw Error("config: unknown key '" + key + "'");
    values_[key] = value;
  }

  /// Applies `key=value`.
  void apply_override(const std::string &kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error("--set expects key=value, got '" + kv + "'");
    set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }

  const std::string &str(const std::string &key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw Error("config: unknown key '" + key + "'");
    return it->second;
  }

  double num(const std::string &key) const {
    const auto &s = str(key);
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception &) {
      throw Error("config: " + key + " = '" + s + "' is not a number");
    }
  }

  int integer(const std::string &key) const {
    const double v = num(key);
    if (v != std::floor(v) || std::abs(v) > 2e9)
      throw Error("config: " + key + " must be an integer");
    return static_cast<int>(v);
  }

  std::uint64_t seed(const std::string &key) const {
    const auto &s = str(key);
    try {
      std::size_t pos = 0;
      const auto v = std::stoull(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception &) {
      throw Error("config: " + key + " = '" + s + "' is not an unsigned integer");
    }
  }

  bool flag(const std::string &key) const {
    const auto &s = str(key);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw Error("config: " + key + " = '" + s + "' is not a boolean");
  }

  std::vector<int> int_list(const std::string &key) const {
    std::vector<int> out;
    std::stringstream ss(str(key));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      tok = trim(tok);
      if (tok.empty()) continue;
      try {
        out.push_back(std::stoi(tok));
      } catch (const std::exception &) {
        throw Error("config: " + key + " has a non-integer entry '" + tok + "'");
      }
    }
    return out;
  }

  /// Resolved configuration, one sorted `key = value` line per schema key.
  std::string frozen() const {
    std::string out;
    for (const auto &[k, v] : values_) out += k + " = " + v + "\n";
    return out;
  }

  std::string hash() const { return hex64(fnv1a(frozen())); }

private:
  static std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  std::map<std::string, std::string> values_;
};

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

struct Problem {
  std::string name;
  AffineInputSystem system;
  LinearTVSystem linear;
  QuadraticTarget target;
  Box domain;
  double horizon = 1.0;
  PubSubParams pubsub; // valid when name == "pubsub"
};

inline PubSubParams pubsub_params(const Config &c) {
  PubSubParams p;
  p.N = c.integer("problem.N");
  p.a = c.num("problem.a");
  p.b = c.num("problem.b");
  p.c = c.num("problem.c");
  p.alpha = c.num("problem.alpha");
  p.beta = c.num("problem.beta");
  p.r = c.num("problem.r");
  p.control_bound = c.num("problem.control_bound");
  p.disturb_bound = c.num("problem.disturb_bound");
  return p;
}

inline QuadrotorParams quadrotor_params(const Config &c) {
  QuadrotorParams q;
  q.g = c.num("quad.g");
  q.d0 = c.num("quad.d0");
  q.d1 = c.num("quad.d1");
  q.n0 = c.num("quad.n0");
  q.tilt_bound = c.num("quad.tilt_bound");
  q.thrust_bound = c.num("quad.thrust_bound");
  q.obstacle_radius = c.num("quad.obstacle_radius");
  return q;
}

inline Problem build_problem(const Config &c) {
  Problem p;
  p.name = c.str("problem.system");
  p.horizon = c.num("problem.horizon");
  if (!(p.horizon > 0.0)) throw Error("config: problem.horizon must be positive");
  if (p.name == "pubsub") {
    p.pubsub = pubsub_params(c);
    p.system = make_pubsub(p.pubsub);
    p.linear = make_pubsub_linear(p.pubsub);
    p.target = make_pubsub_target(p.pubsub);
    const double w = c.num("problem.half_width");
    if (!(w > 0.0)) throw Error("config: problem.half_width must be positive");
    p.domain = Box::cube(p.pubsub.N, -w, w);
  } else if (p.name == "quadrotor") {
    const auto q = quadrotor_params(c);
    p.system = make_quadrotor(q);
    OperatingPoint hover;
    hover.x0 = Vec::Zero(quad::dim);
    p.linear = taylor_linearize(p.system, hover);
    p.target = make_quadrotor_target(q);
    p.domain = make_quadrotor_domain();
  } else {
    throw Error("config: unknown problem.system '" + p.name + "' (expected pubsub|quadrotor)");
  }
  return p;
}

inline TrainConfig build_train_config(const Config &c, const Problem &p) {
  TrainConfig t;
  t.program = program_from_string(c.str("train.program"));
  t.iterations = c.integer("train.iterations");
  t.batch_size = c.integer("train.batch_size");
  t.sup_batch_size = c.integer("train.sup_batch_size");
  t.lr = c.num("train.lr");
  t.seed = c.seed("train.seed");
  t.curriculum = c.flag("train.curriculum");
  t.warmup = c.num("train.warmup");
  t.lambda_K = c.num("train.lambda_K");
  t.ramp = c.num("train.ramp");
  t.rho = c.num("train.rho");
  t.rho_g = c.num("train.rho_g");
  t.I_start = c.num("train.I_start");
  t.I_end = c.num("train.I_end");
  t.spectrum_sup_fraction = c.num("train.spectrum_sup_fraction");
  const auto &path = c.str("train.supervisor_path");
  if (path == "hopf") t.supervisor_path = SupervisorPath::HopfData;
  else if (path == "pde") t.supervisor_path = SupervisorPath::PdeOnly;
  else throw Error("config: train.supervisor_path must be hopf or pde");
  t.supervisor_pde_weight = c.num("train.supervisor_pde_weight");
  t.domain = p.domain;
  t.horizon = p.horizon;
  const auto &norm = c.str("train.pde_norm");
  if (norm == "l1") t.pde_norm = ResidualNorm::L1;
  else if (norm == "l2") t.pde_norm = ResidualNorm::L2;
  else throw Error("config: train.pde_norm must be l1 or l2");
  t.vi_min = c.flag("train.vi_min");
  t.hidden = c.int_list("train.hidden");
  if (t.hidden.empty()) throw Error("config: train.hidden must list at least one width");
  t.omega0 = c.num("train.omega0");
  t.output_scale = c.num("train.output_scale");
  t.log_every = c.integer("train.log_every");
  t.checkpoint_every = c.integer("train.checkpoint_every");
  t.validate();
  return t;
}

inline GridSpec build_grid_spec(const Config &c, const Problem &p) {
  GridSpec g;
  g.nx = c.integer("oracle.nx");
  g.ny = c.integer("oracle.ny");
  g.bounds = Box(p.domain.lo.head(2), p.domain.hi.head(2));
  return g;
}

inline Dissipation build_dissipation(const Config &c) {
  const auto &d = c.str("oracle.dissipation");
  if (d == "local") return Dissipation::Local;
  if (d == "global") return Dissipation::Global;
  throw Error("config: oracle.dissipation must be local or global");
}

inline HopfProblem build_hopf_problem(const Config &c, const Problem &p) {
  HopfProblem h;
  h.linear = p.linear;
  h.target = p.target;
  h.n_tau = c.integer("hopf.n_tau");
  h.quad_nodes = c.integer("hopf.quad_nodes");
  h.solver.restarts = c.integer("hopf.restarts");
  h.solver.max_iters = c.integer("hopf.max_iters");
  h.solver.step_c = c.num("hopf.step_c");
  h.solver.tol = c.num("hopf.tol");
  h.validate();
  return h;
}

} // namespace hjlss

#endif // HJLSS_CONFIG_HPP
