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
#ifndef HJLSS_NET_HPP
#define HJLSS_NET_HPP

// Sinusoidal value network with the terminal-cost wrapper
//
//   V(x, t) = J(x) + (t - t_f) * sigma * o(z),   z = D (input - center)
//
// where o is a stack of sine layers a = sin(w0 (W a' + b)) closed by an affine
// layer, D and center are fixed input normalizers and sigma is a fixed output
// scale. Input derivatives are propagated in forward mode as extra GEMM
// columns; parameter gradients of losses that contain those derivatives are
// obtained by a reverse pass through the tangent graph.

#include "hjlss/dynamics.hpp"
#include "hjlss/io.hpp"

#include <random>

namespace hjlss {

struct SirenValueNet {
  std::vector<int> layer_dims; // input, hidden..., 1
  double omega0 = 30.0;
  QuadraticTarget target;
  double t_f = 0.0;
  int state_dim = 0;
  bool has_lambda = false;
  Vec input_center; // size input_dim()
  Vec input_scale;  // multiplies (input - center)
  double output_scale = 1.0;
  Vec params;

  int input_dim() const { return layer_dims.front(); }
  int num_layers() const { return static_cast<int>(layer_dims.size()) - 1; }
  int time_index() const { return input_dim() - 1; }

  std::size_t weight_offset(int l) const {
    std::size_t off = 0;
    for (int k = 0; k < l; ++k)
      off += static_cast<std::size_t>(layer_dims[k + 1]) * (layer_dims[k] + 1);
    return off;
  }
  std::size_t bias_offset(int l) const {
    return weight_offset(l) + static_cast<std::size_t>(layer_dims[l + 1]) * layer_dims[l];
  }
  static std::size_t param_count(const std::vector<int> &dims) {
    std::size_t n = 0;
    for (std::size_t k = 0; k + 1 < dims.size(); ++k)
      n += static_cast<std::size_t>(dims[k + 1]) * (dims[k] + 1);
    return n;
  }

  Eigen::Map<const Mat> W(int l) const {
    return {params.data() + weight_offset(l), layer_dims[l + 1], layer_dims[l]};
  }
  Eigen::Map<Mat> W(int l) {
    return {params.data() + weight_offset(l), layer_dims[l + 1], layer_dims[l]};
  }
  Eigen::Map<const Vec> b(int l) const {
    return {params.data() + bias_offset(l), layer_dims[l + 1]};
  }
  Eigen::Map<Vec> b(int l) {
    return {params.data() + bias_offset(l), layer_dims[l + 1]};
  }
};

struct NetArch {
  int state_dim = 2;
  bool has_lambda = false;
  std::vector<int> hidden{512, 512, 512};
  double omega0 = 30.0;
  double t_f = 0.0;
  Box domain;          // state box used for input normalization
  double horizon = 1.0;
  double output_scale = 1.0;
};

/// Deterministic SIREN initialization.
inline SirenValueNet init_siren(const NetArch &arch, const QuadraticTarget &target,
                                std::uint64_t seed) {
  if (arch.state_dim <= 0) throw Error("init_siren: state_dim must be positive");
  if (target.dim() != arch.state_dim)
    throw DimensionError("init_siren: target dimension");
  if (arch.hidden.empty()) throw Error("init_siren: need at least one hidden layer");
  if (arch.domain.dim() != arch.state_dim)
    throw DimensionError("init_siren: domain dimension");
  if (!(arch.horizon > 0.0)) throw Error("init_siren: horizon must be positive");
  SirenValueNet net;
  net.state_dim = arch.state_dim;
  net.has_lambda = arch.has_lambda;
  net.omega0 = arch.omega0;
  net.t_f = arch.t_f;
  net.target = target;
  net.output_scale = arch.output_scale;
  const int in = arch.state_dim + (arch.has_lambda ? 1 : 0) + 1;
  net.layer_dims.push_back(in);
  for (int h : arch.hidden) {
    if (h <= 0) throw Error("init_siren: hidden widths must be positive");
    net.layer_dims.push_back(h);
  }
  net.layer_dims.push_back(1);

  net.input_center = Vec::Zero(in);
  net.input_scale = Vec::Ones(in);
  for (int i = 0; i < arch.state_dim; ++i) {
    net.input_center[i] = 0.5 * (arch.domain.lo[i] + arch.domain.hi[i]);
    const double hw = 0.5 * (arch.domain.hi[i] - arch.domain.lo[i]);
    net.input_scale[i] = hw > 0.0 ? 1.0 / hw : 1.0;
  }
  if (arch.has_lambda) {
    net.input_center[arch.state_dim] = 0.5;
    net.input_scale[arch.state_dim] = 2.0;
  }
  net.input_center[in - 1] = arch.t_f - 0.5 * arch.horizon;
  net.input_scale[in - 1] = 2.0 / arch.horizon;

  net.params.resize(static_cast<Eigen::Index>(SirenValueNet::param_count(net.layer_dims)));
  std::mt19937_64 rng(seed);
  auto fill = [&](double *p, std::size_t n, double r) {
    std::uniform_real_distribution<double> u(-r, r);
    for (std::size_t i = 0; i < n; ++i) p[i] = u(rng);
  };
  const int L = net.num_layers();
  for (int l = 0; l < L; ++l) {
    const int fan_in = net.layer_dims[l];
    double wr;
    if (l == 0) wr = 1.0 / fan_in;
    else if (l < L - 1) wr = std::sqrt(6.0 / fan_in) / net.omega0;
    else wr = std::sqrt(6.0 / fan_in);
    fill(net.params.data() + net.weight_offset(l),
         static_cast<std::size_t>(net.layer_dims[l + 1]) * fan_in, wr);
    fill(net.params.data() + net.bias_offset(l), net.layer_dims[l + 1],
         1.0 / std::sqrt(static_cast<double>(fan_in)));
  }
  return net;
}

// ---------------------------------------------------------------------------
// Forward and reverse passes
// ---------------------------------------------------------------------------

/// Batch of query points; columns are samples.
struct NetInput {
  Mat x;      // n x B
  Vec lambda; // B, only for nets with a lambda input
  Vec t;      // B

  Eigen::Index size() const { return t.size(); }
};

struct NetOutput {
  Vec value; // B
  Vec dt;    // B
  Mat dx;    // n x B
};

/// Single-point result of forward_with_grad.
struct ForwardBundle {
  double value = 0.0;
  double dt = 0.0;
  Vec dx;
};

/// Activations kept for the reverse pass.
struct ForwardCache {
  Eigen::Index B = 0;
  int m = 0;                 // tangent directions (state coords + time)
  Mat z;                     // normalized input, in x B
  std::vector<Mat> Z;        // per sine layer output [a | T^(0..m-1)]
  std::vector<Mat> cosu;     // per sine layer cos(u), N x B
  std::vector<Mat> S;        // per sine layer pre-cos tangents, N x (B m)
  Vec tau;                   // t - t_f
  Vec o;                     // raw network output
  Mat o_tan;                 // m x B raw output tangents
};

namespace detail {

inline Mat normalized_input(const SirenValueNet &net, const NetInput &in) {
  const Eigen::Index B = in.size();
  if (in.x.rows() != net.state_dim || in.x.cols() != B)
    throw DimensionError("net: x batch has wrong shape");
  if (net.has_lambda && in.lambda.size() != B)
    throw DimensionError("net: lambda batch missing or wrong size");
  Mat z(net.input_dim(), B);
  z.topRows(net.state_dim) = in.x;
  if (net.has_lambda) z.row(net.state_dim) = in.lambda.transpose();
  z.row(net.time_index()) = in.t.transpose();
  z = (z.colwise() - net.input_center).array().colwise() * net.input_scale.array();
  if (!z.allFinite()) throw Error("net: non-finite inputs");
  return z;
}

/// Input column of tangent direction j (state coords, then time).
inline int tangent_input_index(const SirenValueNet &net, int j) {
  return j < net.state_dim ? j : net.time_index();
}

inline void check_finite_layer(const Mat &m, int l) {
  if (!m.allFinite())
    throw Error("net: non-finite activations in layer " + std::to_string(l));
}

} // namespace detail

/// Values only.
inline Vec forward_value(const SirenValueNet &net, const NetInput &in) {
  const Mat z = detail::normalized_input(net, in);
  Mat a = z;
  const int L = net.num_layers();
  for (int l = 0; l < L - 1; ++l) {
    Mat u = net.W(l) * a;
    u.colwise() += net.b(l);
    a = (net.omega0 * u).array().sin().matrix();
    detail::check_finite_layer(a, l);
  }
  const Vec o = (net.W(L - 1) * a).transpose().array() + net.b(L - 1)[0];
  Vec v(in.size());
  for (Eigen::Index k = 0; k < in.size(); ++k)
    v[k] = net.target.value(in.x.col(k)) +
           (in.t[k] - net.t_f) * net.output_scale * o[k];
  return v;
}

/// Values, time derivative and spatial gradient; fills `cache` when given.
inline NetOutput forward(const SirenValueNet &net, const NetInput &in,
                         ForwardCache *cache = nullptr) {
  ForwardCache local;
  ForwardCache &c = cache ? *cache : local;
  const Eigen::Index B = in.size();
  if (B == 0) throw Error("net: empty batch");
  const int n = net.state_dim;
  const int m = n + 1;
  const int L = net.num_layers();
  const double w0 = net.omega0;
  c.B = B;
  c.m = m;
  c.z = detail::normalized_input(net, in);
  c.Z.assign(L - 1, Mat());
  c.cosu.assign(L - 1, Mat());
  c.S.assign(L - 1, Mat());

  for (int l = 0; l < L - 1; ++l) {
    const int N = net.layer_dims[l + 1];
    const auto W = net.W(l);
    Mat u(N, B);
    Mat &S = c.S[l];
    if (l == 0) {
      u.noalias() = W * c.z;
      S.resize(N, B * m);
      for (int j = 0; j < m; ++j) {
        const int idx = detail::tangent_input_index(net, j);
        const Vec col = (w0 * net.input_scale[idx]) * W.col(idx);
        S.middleCols(j * B, B) = col.replicate(1, B);
      }
    } else {
      const Mat P = W * c.Z[l - 1];
      u = P.leftCols(B);
      S = w0 * P.rightCols(B * m);
    }
    u.colwise() += net.b(l);
    u *= w0;
    Mat &Z = c.Z[l];
    Z.resize(N, B * (m + 1));
    Z.leftCols(B) = u.array().sin().matrix();
    c.cosu[l] = u.array().cos().matrix();
    for (int j = 0; j < m; ++j)
      Z.middleCols(B * (j + 1), B) =
          c.cosu[l].cwiseProduct(S.middleCols(j * B, B));
    detail::check_finite_layer(Z, l);
  }
  const Mat out = net.W(L - 1) * c.Z[L - 2]; // 1 x B(m+1)
  c.o = out.leftCols(B).transpose();
  c.o.array() += net.b(L - 1)[0];
  c.o_tan.resize(m, B);
  for (int j = 0; j < m; ++j) c.o_tan.row(j) = out.middleCols(B * (j + 1), B);
  c.tau = in.t.array() - net.t_f;

  NetOutput r;
  r.value.resize(B);
  r.dt.resize(B);
  r.dx.resize(n, B);
  const double sg = net.output_scale;
  for (Eigen::Index k = 0; k < B; ++k) {
    const Vec xk = in.x.col(k);
    r.value[k] = net.target.value(xk) + c.tau[k] * sg * c.o[k];
    r.dt[k] = sg * c.o[k] + c.tau[k] * sg * c.o_tan(n, k);
    r.dx.col(k) = net.target.gradient(xk) + (c.tau[k] * sg) * c.o_tan.col(k).head(n);
  }
  if (!r.value.allFinite() || !r.dt.allFinite() || !r.dx.allFinite())
    throw Error("net: non-finite output");
  return r;
}

inline ForwardBundle forward_with_grad(const SirenValueNet &net, const Vec &x,
                                       double t, double lambda = 0.0) {
  NetInput in;
  in.x = x;
  in.t = Vec::Constant(1, t);
  if (net.has_lambda) in.lambda = Vec::Constant(1, lambda);
  const auto r = forward(net, in);
  return ForwardBundle{r.value[0], r.dt[0], r.dx.col(0)};
}

/// Adjoints of a scalar loss with respect to the network outputs.
struct OutputAdjoint {
  Vec value; // B
  Vec dt;    // B
  Mat dx;    // n x B
};

/// Parameter gradient of a loss given its output adjoints.
inline Vec backward(const SirenValueNet &net, const ForwardCache &c,
                    const OutputAdjoint &adj) {
  const Eigen::Index B = c.B;
  const int m = c.m, n = net.state_dim;
  const int L = net.num_layers();
  const double w0 = net.omega0, sg = net.output_scale;
  Vec grad = Vec::Zero(net.params.size());

  // Adjoints of the raw output and its tangents.
  Mat obar(1, B * (m + 1));
  for (Eigen::Index k = 0; k < B; ++k) {
    obar(0, k) = sg * (c.tau[k] * adj.value[k] + adj.dt[k]);
    for (int j = 0; j < n; ++j) obar(0, B * (j + 1) + k) = sg * c.tau[k] * adj.dx(j, k);
    obar(0, B * (n + 1) + k) = sg * c.tau[k] * adj.dt[k];
  }
  {
    Eigen::Map<Mat> gW(grad.data() + net.weight_offset(L - 1), 1, net.layer_dims[L - 1]);
    gW.noalias() = obar * c.Z[L - 2].transpose();
    grad[static_cast<Eigen::Index>(net.bias_offset(L - 1))] = obar.leftCols(B).sum();
  }
  Mat Zbar = net.W(L - 1).transpose() * obar; // N x B(m+1)

  for (int l = L - 2; l >= 0; --l) {
    const int N = net.layer_dims[l + 1];
    const Mat &Z = c.Z[l];
    const Mat &S = c.S[l];
    const Mat &cu = c.cosu[l];
    const auto a = Z.leftCols(B);
    Mat cbar = Mat::Zero(N, B);
    Mat Pbar(N, B * (m + 1));
    for (int j = 0; j < m; ++j) {
      const auto Tb = Zbar.middleCols(B * (j + 1), B);
      cbar.noalias() += Tb.cwiseProduct(S.middleCols(j * B, B));
      Pbar.middleCols(B * (j + 1), B) = cu.cwiseProduct(Tb);
    }
    Pbar.leftCols(B) = Zbar.leftCols(B).cwiseProduct(cu) - cbar.cwiseProduct(a);

    Eigen::Map<Mat> gW(grad.data() + net.weight_offset(l), N, net.layer_dims[l]);
    Eigen::Map<Vec> gb(grad.data() + net.bias_offset(l), N);
    gb = w0 * Pbar.leftCols(B).rowwise().sum();
    if (l == 0) {
      gW.noalias() = w0 * Pbar.leftCols(B) * c.z.transpose();
      for (int j = 0; j < m; ++j) {
        const int idx = detail::tangent_input_index(net, j);
        gW.col(idx) += (w0 * net.input_scale[idx]) *
                       Pbar.middleCols(B * (j + 1), B).rowwise().sum();
      }
    } else {
      gW.noalias() = w0 * Pbar * c.Z[l - 1].transpose();
      Zbar.noalias() = w0 * net.W(l).transpose() * Pbar;
    }
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

/// Batched Hamiltonian: fills H (B) and dH/dp (n x B) at (x, lambda, t, p).
using HamiltonianFn = std::function<void(const NetInput &in, const Mat &P,
                                         Vec &H, Mat &dHdp)>;

inline HamiltonianFn make_hamiltonian_fn(const AffineInputSystem &sys) {
  return [sys](const NetInput &in, const Mat &P, Vec &H, Mat &dHdp) {
    const Eigen::Index B = in.size();
    H.resize(B);
    dHdp.resize(sys.state_dim, B);
    Mat B1 = sys.B1(0.0), B2 = sys.B2(0.0);
    for (Eigen::Index k = 0; k < B; ++k) {
      const double t = in.t[k];
      if (!sys.time_invariant) {
        B1 = sys.B1(t);
        B2 = sys.B2(t);
      }
      Vec g;
      H[k] = box_hamiltonian(P.col(k), sys.drift(in.x.col(k), t), B1,
                             sys.control_bound, B2, sys.disturb_bound,
                             sys.objective, &g);
      dHdp.col(k) = g;
    }
  };
}

inline HamiltonianFn make_spectrum_hamiltonian_fn(const SpectrumSystem &spec) {
  return [spec](const NetInput &in, const Mat &P, Vec &H, Mat &dHdp) {
    const int n = spec.state_dim();
    const Eigen::Index B = in.size();
    if (in.lambda.size() != B) throw DimensionError("spectrum loss: lambda missing");
    H.resize(B);
    dHdp.resize(n, B);
    Vec xt(n + 1);
    for (Eigen::Index k = 0; k < B; ++k) {
      xt.head(n) = in.x.col(k);
      xt[n] = in.lambda[k];
      Vec g;
      H[k] = spectrum_hamiltonian(spec, xt, P.col(k), in.t[k], &g);
      dHdp.col(k) = g;
    }
  };
}

enum class ResidualNorm { L1, L2 };

struct Range {
  Eigen::Index begin = 0;
  Eigen::Index count = 0;
};

/// One training batch: query points plus the index ranges that the PDE and
/// supervision terms average over. Supervision targets are indexed relative
/// to the start of the supervision range.
struct Batch {
  NetInput in;
  Range pde;
  Range sup;
  Vec sup_value; // sup.count
  Mat sup_grad;  // n x sup.count
};

struct LossSpec {
  double pde_weight = 1.0;
  double value_weight = 0.0;
  double grad_weight = 0.0;
  ResidualNorm pde_norm = ResidualNorm::L1;
  bool vi_min = true; // residual V_t + min{0, H}
  HamiltonianFn hamiltonian;
};

struct LossResult {
  double total = 0.0;
  double pde = 0.0;      // unweighted mean residual term
  double sup_value = 0.0; // unweighted value MSE
  double sup_grad = 0.0;  // unweighted gradient MSE
  Vec grad;              // of total
  Vec grad_pde;          // of pde_weight * pde, when split requested
  Vec grad_sup;          // of the weighted supervision terms, when split requested
};

/// Mean-reduced composite loss and its exact parameter gradient.
inline LossResult loss_gradients(const SirenValueNet &net, const Batch &batch,
                                 const LossSpec &spec, bool split = false) {
  const Eigen::Index B = batch.in.size();
  if (B == 0) throw Error("loss_gradients: empty batch");
  const int n = net.state_dim;
  auto in_range = [&](const Range &r) { return r.begin >= 0 && r.begin + r.count <= B; };
  if (!in_range(batch.pde) || !in_range(batch.sup))
    throw Error("loss_gradients: term range outside batch");

  ForwardCache cache;
  const NetOutput out = forward(net, batch.in, &cache);
  LossResult res;
  OutputAdjoint pde_adj{Vec::Zero(B), Vec::Zero(B), Mat::Zero(n, B)};
  OutputAdjoint sup_adj{Vec::Zero(B), Vec::Zero(B), Mat::Zero(n, B)};

  if (spec.pde_weight != 0.0 && batch.pde.count > 0) {
    if (!spec.hamiltonian) throw Error("loss_gradients: PDE term without Hamiltonian");
    const auto r0 = batch.pde.begin, cnt = batch.pde.count;
    NetInput sub;
    sub.x = batch.in.x.middleCols(r0, cnt);
    sub.t = batch.in.t.segment(r0, cnt);
    if (batch.in.lambda.size()) sub.lambda = batch.in.lambda.segment(r0, cnt);
    Vec H;
    Mat dH;
    spec.hamiltonian(sub, out.dx.middleCols(r0, cnt), H, dH);
    double acc = 0.0;
    const double inv = 1.0 / static_cast<double>(cnt);
    for (Eigen::Index k = 0; k < cnt; ++k) {
      const bool active = !spec.vi_min || H[k] < 0.0;
      const double r = out.dt[r0 + k] + (active ? H[k] : 0.0);
      double dr;
      if (spec.pde_norm == ResidualNorm::L1) {
        acc += std::abs(r);
        dr = r > 0 ? inv : (r < 0 ? -inv : 0.0);
      } else {
        acc += r * r;
        dr = 2.0 * r * inv;
      }
      dr *= spec.pde_weight;
      pde_adj.dt[r0 + k] = dr;
      if (active) pde_adj.dx.col(r0 + k) = dr * dH.col(k);
    }
    res.pde = acc * inv;
  }
  if ((spec.value_weight != 0.0 || spec.grad_weight != 0.0) && batch.sup.count > 0) {
    const auto r0 = batch.sup.begin, cnt = batch.sup.count;
    if (batch.sup_value.size() != cnt)
      throw DimensionError("loss_gradients: supervision values size");
    const bool use_grad = spec.grad_weight != 0.0;
    if (use_grad && (batch.sup_grad.rows() != n || batch.sup_grad.cols() != cnt))
      throw DimensionError("loss_gradients: supervision gradients shape");
    const double inv = 1.0 / static_cast<double>(cnt);
    double sv = 0.0, sgsum = 0.0;
    for (Eigen::Index k = 0; k < cnt; ++k) {
      const double e = out.value[r0 + k] - batch.sup_value[k];
      sv += e * e;
      sup_adj.value[r0 + k] = spec.value_weight * 2.0 * e * inv;
      if (use_grad) {
        const Vec ge = out.dx.col(r0 + k) - batch.sup_grad.col(k);
        sgsum += ge.squaredNorm();
        sup_adj.dx.col(r0 + k) = (spec.grad_weight * 2.0 * inv) * ge;
      }
    }
    res.sup_value = sv * inv;
    res.sup_grad = sgsum * inv;
  }
  res.total = spec.pde_weight * res.pde + spec.value_weight * res.sup_value +
              spec.grad_weight * res.sup_grad;
  if (split) {
    res.grad_pde = backward(net, cache, pde_adj);
    res.grad_sup = backward(net, cache, sup_adj);
    res.grad = res.grad_pde + res.grad_sup;
  } else {
    OutputAdjoint all{pde_adj.value + sup_adj.value, pde_adj.dt + sup_adj.dt,
                      pde_adj.dx + sup_adj.dx};
    res.grad = backward(net, cache, all);
  }
  if (!res.grad.allFinite()) throw Error("loss_gradients: non-finite gradient");
  return res;
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamState {
  std::uint64_t step = 0;
  Vec m;
  Vec v;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

inline void adam_step(AdamState &st, SirenValueNet &net, const Vec &grad) {
  if (grad.size() != net.params.size())
    throw DimensionError("adam_step: gradient size");
  if (st.m.size() == 0) {
    st.m = Vec::Zero(grad.size());
    st.v = Vec::Zero(grad.size());
  }
  if (st.m.size() != grad.size()) throw DimensionError("adam_step: moment size");
  ++st.step;
  st.m = st.beta1 * st.m + (1.0 - st.beta1) * grad;
  st.v = st.beta2 * st.v + (1.0 - st.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  net.params.array() -= st.lr * (st.m.array() / c1) /
                        ((st.v.array() / c2).sqrt() + st.eps);
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

inline constexpr char kNetMagic[9] = "HJLSNET1";
inline constexpr int kNetVersion = 1;

inline json target_to_json(const QuadraticTarget &t) {
  json j;
  j["weights"] = std::vector<double>(t.weights.data(), t.weights.data() + t.dim());
  j["active"] = std::vector<bool>(t.active.begin(), t.active.end());
  j["offset"] = t.offset;
  j["radius"] = t.radius;
  return j;
}

inline QuadraticTarget target_from_json(const json &j) {
  const auto w = j.at("weights").get<std::vector<double>>();
  const auto a = j.at("active").get<std::vector<bool>>();
  return QuadraticTarget(Eigen::Map<const Vec>(w.data(), static_cast<Eigen::Index>(w.size())),
                         a, j.at("offset").get<double>(), j.at("radius").get<double>());
}

inline json net_header(const SirenValueNet &net) {
  json h;
  h["version"] = kNetVersion;
  h["layer_dims"] = net.layer_dims;
  h["omega0"] = net.omega0;
  h["t_f"] = net.t_f;
  h["state_dim"] = net.state_dim;
  h["has_lambda"] = net.has_lambda;
  h["input_center"] = std::vector<double>(net.input_center.data(),
                                          net.input_center.data() + net.input_center.size());
  h["input_scale"] = std::vector<double>(net.input_scale.data(),
                                         net.input_scale.data() + net.input_scale.size());
  h["output_scale"] = net.output_scale;
  h["target"] = target_to_json(net.target);
  return h;
}

inline void write_net(std::ostream &os, const SirenValueNet &net) {
  write_container(os, kNetMagic, net_header(net),
                  std::span<const double>(net.params.data(), net.params.size()));
}

inline SirenValueNet read_net(std::istream &is) {
  auto c = read_container(is, kNetMagic);
  const int version = c.header.value("version", -1);
  if (version != kNetVersion)
    throw Error("checkpoint: version " + std::to_string(version) +
                " does not match supported version " + std::to_string(kNetVersion));
  SirenValueNet net;
  const auto &h = c.header;
  net.layer_dims = h.at("layer_dims").get<std::vector<int>>();
  net.omega0 = h.at("omega0").get<double>();
  net.t_f = h.at("t_f").get<double>();
  net.state_dim = h.at("state_dim").get<int>();
  net.has_lambda = h.at("has_lambda").get<bool>();
  auto vec = [](const json &j) {
    const auto v = j.get<std::vector<double>>();
    return Vec(Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  net.input_center = vec(h.at("input_center"));
  net.input_scale = vec(h.at("input_scale"));
  net.output_scale = h.at("output_scale").get<double>();
  net.target = target_from_json(h.at("target"));
  if (c.blob.size() != SirenValueNet::param_count(net.layer_dims))
    throw Error("checkpoint: parameter count does not match layer_dims");
  net.params = Eigen::Map<const Vec>(c.blob.data(), static_cast<Eigen::Index>(c.blob.size()));
  return net;
}

inline void save_checkpoint(const SirenValueNet &net, const std::filesystem::path &path) {
  atomic_write(path, [&](std::ostream &os) { write_net(os, net); });
}

inline SirenValueNet load_checkpoint(const std::filesystem::path &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open checkpoint " + path.string());
  return read_net(is);
}

} // namespace hjlss

#endif // HJLSS_NET_HPP
