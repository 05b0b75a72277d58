#include "manger/mixer.hpp"

#include <cmath>
#include <string>

#include "kernels.hpp"
#include "manger/errors.hpp"
#include "manger/ops.hpp"

namespace manger {

using kernels::mat;
using kernels::RowMat;

Mixer::Mixer(const MixerConfig& config, RngStream& rng) : config_(config) { build(&rng); }

Mixer::Mixer(const MixerConfig& config) : config_(config) { build(nullptr); }

void Mixer::build(RngStream* rng) {
  const auto& c = config_;
  if (c.n_agents == 0 || c.state_dim == 0 || c.embed_dim == 0 || c.hypernet_embed == 0)
    throw ContractError("Mixer: all dimensions must be positive");
  auto layer = [&](const std::string& name, std::size_t out, std::size_t in, std::size_t& w, std::size_t& b) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    w = params_.add(name + ".weight", rng ? init_uniform_fanin({out, in}, *rng) : Tensor({out, in}));
    b = params_.add(name + ".bias", rng ? init_uniform({out}, bound, *rng) : Tensor({out}));
  };
  const std::size_t S = c.state_dim, E = c.embed_dim, HE = c.hypernet_embed, N = c.n_agents;
  layer("hyper_w1.0", HE, S, w1a_w_, w1a_b_);
  layer("hyper_w1.2", N * E, HE, w1b_w_, w1b_b_);
  layer("hyper_b1", E, S, b1_w_, b1_b_);
  layer("hyper_w_final.0", HE, S, wfa_w_, wfa_b_);
  layer("hyper_w_final.2", E, HE, wfb_w_, wfb_b_);
  layer("v.0", E, S, va_w_, va_b_);
  layer("v.2", 1, E, vb_w_, vb_b_);
}

double Mixer::forward(std::span<const double> q_agents, std::span<const double> state) const {
  const std::size_t N = config_.n_agents, S = config_.state_dim, E = config_.embed_dim;
  if (q_agents.size() != N)
    throw DimensionError("mixer: q_agents has " + std::to_string(q_agents.size()) + " entries, expected " +
                         std::to_string(N));
  if (state.size() != S)
    throw DimensionError("mixer: state has " + std::to_string(state.size()) + " entries, expected " +
                         std::to_string(S));
  const auto& p = params_;
  const Tensor s = Tensor::vector(state);
  const Tensor w1 = affine(relu(affine(s, p[w1a_w_].value, p[w1a_b_].value)), p[w1b_w_].value, p[w1b_b_].value);
  const Tensor b1 = affine(s, p[b1_w_].value, p[b1_b_].value);
  const Tensor wf = affine(relu(affine(s, p[wfa_w_].value, p[wfa_b_].value)), p[wfb_w_].value, p[wfb_b_].value);
  const Tensor v = affine(relu(affine(s, p[va_w_].value, p[va_b_].value)), p[vb_w_].value, p[vb_b_].value);
  double q_tot = v[0];
  for (std::size_t e = 0; e < E; ++e) {
    double pre = b1[e];
    for (std::size_t i = 0; i < N; ++i) pre += q_agents[i] * std::abs(w1[i * E + e]);
    q_tot += elu(pre) * std::abs(wf[e]);
  }
  return q_tot;
}

namespace {

Tensor mat_tensor(std::size_t r, std::size_t c) { return Tensor({r, c}); }

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

Mixer::Rows Mixer::forward_rows(Tensor q, Tensor states) const {
  const std::size_t N = config_.n_agents, S = config_.state_dim, E = config_.embed_dim, HE = config_.hypernet_embed;
  if (q.rank() != 2 || q.cols() != N) throw DimensionError("mixer rows: q has shape " + shape_string(q.shape()));
  if (states.rank() != 2 || states.cols() != S || states.rows() != q.rows())
    throw DimensionError("mixer rows: state has shape " + shape_string(states.shape()));
  const std::size_t M = q.rows();
  const auto& p = params_;
  Rows r;
  r.q = std::move(q);
  r.state = std::move(states);
  const auto s = mat(r.state);

  r.w1_hidden = mat_tensor(M, HE);
  kernels::linear(s, p[w1a_w_].value, p[w1a_b_].value, mat(r.w1_hidden));
  mat(r.w1_hidden) = mat(r.w1_hidden).cwiseMax(0.0);
  r.w1_raw = mat_tensor(M, N * E);
  kernels::linear(mat(r.w1_hidden), p[w1b_w_].value, p[w1b_b_].value, mat(r.w1_raw));

  r.b1 = mat_tensor(M, E);
  kernels::linear(s, p[b1_w_].value, p[b1_b_].value, mat(r.b1));

  r.wf_hidden = mat_tensor(M, HE);
  kernels::linear(s, p[wfa_w_].value, p[wfa_b_].value, mat(r.wf_hidden));
  mat(r.wf_hidden) = mat(r.wf_hidden).cwiseMax(0.0);
  r.wf_raw = mat_tensor(M, E);
  kernels::linear(mat(r.wf_hidden), p[wfb_w_].value, p[wfb_b_].value, mat(r.wf_raw));

  r.v_hidden = mat_tensor(M, E);
  kernels::linear(s, p[va_w_].value, p[va_b_].value, mat(r.v_hidden));
  mat(r.v_hidden) = mat(r.v_hidden).cwiseMax(0.0);

  r.pre = r.b1;
  r.hidden = mat_tensor(M, E);
  r.q_tot = Tensor({M});
  const Tensor& vw = p[vb_w_].value;
  const double vb = p[vb_b_].value[0];
  for (std::size_t m = 0; m < M; ++m) {
    const double* qm = r.q.raw() + m * N;
    const double* w1 = r.w1_raw.raw() + m * N * E;
    double* pre = r.pre.raw() + m * E;
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t e = 0; e < E; ++e) pre[e] += qm[i] * std::abs(w1[i * E + e]);
    double acc = vb;
    const double* vh = r.v_hidden.raw() + m * E;
    for (std::size_t e = 0; e < E; ++e) acc += vh[e] * vw[e];
    const double* wf = r.wf_raw.raw() + m * E;
    double* hid = r.hidden.raw() + m * E;
    for (std::size_t e = 0; e < E; ++e) {
      hid[e] = elu(pre[e]);
      acc += hid[e] * std::abs(wf[e]);
    }
    r.q_tot[m] = acc;
  }
  return r;
}

Tensor Mixer::backward_rows(const Rows& r, std::span<const double> dq_tot) {
  const std::size_t N = config_.n_agents, E = config_.embed_dim;
  const std::size_t M = r.q.rows();
  if (dq_tot.size() != M) throw DimensionError("mixer backward: dq_tot length mismatch");
  auto& p = params_;

  Tensor dq({M, N});
  Tensor dw1_raw({M, N * E});
  Tensor db1({M, E});
  Tensor dwf_raw({M, E});
  Tensor dv_hidden({M, E});
  Tensor dv_out({M, 1});
  const Tensor& vw = p[vb_w_].value;
  for (std::size_t m = 0; m < M; ++m) {
    const double g = dq_tot[m];
    dv_out[m] = g;
    const double* vh = r.v_hidden.raw() + m * E;
    for (std::size_t e = 0; e < E; ++e) dv_hidden[m * E + e] = vh[e] > 0.0 ? g * vw[e] : 0.0;
    const double* wf = r.wf_raw.raw() + m * E;
    const double* hid = r.hidden.raw() + m * E;
    const double* pre = r.pre.raw() + m * E;
    const double* w1 = r.w1_raw.raw() + m * N * E;
    const double* qm = r.q.raw() + m * N;
    for (std::size_t e = 0; e < E; ++e) {
      dwf_raw[m * E + e] = g * hid[e] * sign(wf[e]);
      const double dhid = g * std::abs(wf[e]);
      // elu'(x) = 1 for x >= 0, exp(x) otherwise
      const double dpre = dhid * (pre[e] >= 0.0 ? 1.0 : std::exp(pre[e]));
      db1[m * E + e] = dpre;
      for (std::size_t i = 0; i < N; ++i) {
        dq[m * N + i] += dpre * std::abs(w1[i * E + e]);
        dw1_raw[m * N * E + i * E + e] = dpre * qm[i] * sign(w1[i * E + e]);
      }
    }
  }

  const auto s = mat(r.state);
  // V
  kernels::linear_param_grad(mat(r.v_hidden), mat(dv_out), p[vb_w_].grad, p[vb_b_].grad);
  kernels::linear_param_grad(s, mat(dv_hidden), p[va_w_].grad, p[va_b_].grad);
  // b1
  kernels::linear_param_grad(s, mat(db1), p[b1_w_].grad, p[b1_b_].grad);
  // w_final
  kernels::linear_param_grad(mat(r.wf_hidden), mat(dwf_raw), p[wfb_w_].grad, p[wfb_b_].grad);
  RowMat dwf_h = mat(dwf_raw) * mat(p[wfb_w_].value);
  dwf_h = (dwf_h.array() * (mat(r.wf_hidden).array() > 0.0).cast<double>()).matrix();
  kernels::linear_param_grad(s, dwf_h, p[wfa_w_].grad, p[wfa_b_].grad);
  // w1
  kernels::linear_param_grad(mat(r.w1_hidden), mat(dw1_raw), p[w1b_w_].grad, p[w1b_b_].grad);
  RowMat dw1_h = mat(dw1_raw) * mat(p[w1b_w_].value);
  dw1_h = (dw1_h.array() * (mat(r.w1_hidden).array() > 0.0).cast<double>()).matrix();
  kernels::linear_param_grad(s, dw1_h, p[w1a_w_].grad, p[w1a_b_].grad);
  return dq;
}

}  // namespace manger
