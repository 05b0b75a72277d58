#include "manger/agent_net.hpp"

#include <cmath>
#include <string>

#include "kernels.hpp"
#include "manger/errors.hpp"
#include "manger/ops.hpp"

namespace manger {

using kernels::ConstStridedMap;
using kernels::mat;
using kernels::RowMat;
using kernels::StridedMap;

AgentNet::AgentNet(const AgentNetConfig& config, RngStream& rng) : config_(config) { build(&rng); }

AgentNet::AgentNet(const AgentNetConfig& config) : config_(config) { build(nullptr); }

void AgentNet::build(RngStream* rng) {
  const auto& c = config_;
  if (c.input_dim == 0 || c.hidden == 0 || c.n_actions == 0 || c.n_agents == 0)
    throw ContractError("AgentNet: all dimensions must be positive");
  if (!(c.lambda >= 0.0)) throw ContractError("AgentNet: lambda must be >= 0");

  // Biases share the fan-in bound of their layer's weights.
  auto layer = [&](const std::string& name, std::size_t out, std::size_t in, std::size_t& w, std::size_t& b) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    w = params_.add(name + ".weight", rng ? init_uniform_fanin({out, in}, *rng) : Tensor({out, in}));
    b = params_.add(name + ".bias", rng ? init_uniform({out}, bound, *rng) : Tensor({out}));
  };
  auto tensor = [&](const std::string& name, Shape shape, double bound) {
    return params_.add(name, rng ? init_uniform(shape, bound, *rng) : Tensor(shape));
  };

  const std::size_t H = c.hidden;
  const double gb = 1.0 / std::sqrt(static_cast<double>(H));
  layer("fc1", H, c.input_dim, fc1_w_, fc1_b_);
  w_r_ = tensor("gru.w_r", {H, H}, gb);
  w_z_ = tensor("gru.w_z", {H, H}, gb);
  w_n_ = tensor("gru.w_n", {H, H}, gb);
  u_r_ = tensor("gru.u_r", {H, H}, gb);
  u_z_ = tensor("gru.u_z", {H, H}, gb);
  u_n_ = tensor("gru.u_n", {H, H}, gb);
  b_r_ = tensor("gru.b_r", {H}, gb);
  b_z_ = tensor("gru.b_z", {H}, gb);
  b_n_ = tensor("gru.b_n", {H}, gb);
  layer("fc2_com", c.n_actions, H, fc2_w_, fc2_b_);
  for (std::size_t i = 0; i < params_.size(); ++i) trunk_.push_back(i);

  head_w_.resize(c.n_agents);
  head_b_.resize(c.n_agents);
  for (std::size_t i = 0; i < c.n_agents; ++i)
    layer("sep." + std::to_string(i), c.n_actions, H, head_w_[i], head_b_[i]);
}

void AgentNet::set_lambda(double lambda) {
  if (!(lambda >= 0.0)) throw ContractError("AgentNet: lambda must be >= 0");
  config_.lambda = lambda;
}

std::vector<std::size_t> AgentNet::head_indices(std::size_t agent) const {
  if (agent >= config_.n_agents) throw ContractError("agent index " + std::to_string(agent) + " out of range");
  return {head_w_[agent], head_b_[agent]};
}

AgentNet::StepOutput AgentNet::forward(const Tensor& input, const Tensor& h_prev, std::size_t agent) const {
  if (agent >= config_.n_agents)
    throw ContractError("agent index " + std::to_string(agent) + " out of range (n_agents=" +
                        std::to_string(config_.n_agents) + ")");
  const auto& p = params_;
  const Tensor a1 = relu(affine(input, p[fc1_w_].value, p[fc1_b_].value));
  const GruWeights gw{p[w_r_].value, p[w_z_].value, p[w_n_].value, p[u_r_].value, p[u_z_].value,
                      p[u_n_].value, p[b_r_].value, p[b_z_].value, p[b_n_].value};
  StepOutput out;
  out.h_next = gru_cell(a1, h_prev, gw);
  out.q_com = affine(out.h_next, p[fc2_w_].value, p[fc2_b_].value);
  out.q_sep = affine(out.h_next, p[head_w_[agent]].value, p[head_b_[agent]].value);
  out.q_sum = out.q_com;
  for (std::size_t a = 0; a < out.q_sum.size(); ++a) out.q_sum[a] += config_.lambda * out.q_sep[a];
  return out;
}

namespace {

RowMat sigmoid_rows(const RowMat& x) {
  return x.unaryExpr([](double v) { return sigmoid(v); });
}

Tensor to_tensor(const RowMat& m) {
  Tensor t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
  mat(t) = m;
  return t;
}

}  // namespace

AgentNet::Unroll AgentNet::unroll(std::vector<std::size_t> active, std::vector<Tensor> inputs) const {
  const std::size_t N = config_.n_agents, H = config_.hidden, A = config_.n_actions;
  if (active.size() != inputs.size() || active.empty()) throw DimensionError("unroll: active/inputs length mismatch");
  Unroll u;
  u.active = std::move(active);
  u.input = std::move(inputs);
  const std::size_t T = u.steps();
  for (auto* v : {&u.a1, &u.r, &u.z, &u.n, &u.un, &u.h, &u.q_com, &u.q_sep, &u.q_sum}) v->resize(T);

  const auto& p = params_;
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t k = u.active[t];
    if (k == 0 || (t > 0 && k > u.active[t - 1])) throw ContractError("unroll: active counts must be positive and non-increasing");
    const Eigen::Index R = static_cast<Eigen::Index>(k * N);
    const Tensor& X = u.input[t];
    if (X.rank() != 2 || X.rows() != static_cast<std::size_t>(R) || X.cols() != config_.input_dim)
      throw DimensionError("unroll: input at t=" + std::to_string(t) + " has shape " + shape_string(X.shape()));

    RowMat a1(R, H);
    kernels::linear(mat(X), p[fc1_w_].value, p[fc1_b_].value, a1);
    a1 = a1.cwiseMax(0.0);

    RowMat hprev = t == 0 ? RowMat::Zero(R, H) : RowMat(mat(u.h[t - 1]).topRows(R));
    RowMat r(R, H), z(R, H), un(R, H), n(R, H);
    kernels::linear(a1, p[w_r_].value, p[b_r_].value, r);
    r.noalias() += hprev * mat(p[u_r_].value).transpose();
    r = sigmoid_rows(r);
    kernels::linear(a1, p[w_z_].value, p[b_z_].value, z);
    z.noalias() += hprev * mat(p[u_z_].value).transpose();
    z = sigmoid_rows(z);
    kernels::linear(hprev, p[u_n_].value, p[b_n_].value, un);
    n.noalias() = a1 * mat(p[w_n_].value).transpose();
    n = (n.array() + r.array() * un.array()).tanh().matrix();
    RowMat h = ((1.0 - z.array()) * n.array() + z.array() * hprev.array()).matrix();

    RowMat qc(R, A);
    kernels::linear(h, p[fc2_w_].value, p[fc2_b_].value, qc);

    u.a1[t] = to_tensor(a1);
    u.r[t] = to_tensor(r);
    u.z[t] = to_tensor(z);
    u.n[t] = to_tensor(n);
    u.un[t] = to_tensor(un);
    u.h[t] = to_tensor(h);
    u.q_com[t] = to_tensor(qc);
  }
  refresh_heads(u);
  return u;
}

void AgentNet::refresh_heads(Unroll& u) const {
  const std::size_t N = config_.n_agents, H = config_.hidden, A = config_.n_actions;
  const auto& p = params_;
  for (std::size_t t = 0; t < u.steps(); ++t) {
    const Eigen::Index k = static_cast<Eigen::Index>(u.active[t]);
    const Eigen::Index R = k * static_cast<Eigen::Index>(N);
    if (u.q_sep[t].empty() || u.q_sep[t].rows() != static_cast<std::size_t>(R)) {
      u.q_sep[t] = Tensor({static_cast<std::size_t>(R), A});
      u.q_sum[t] = Tensor({static_cast<std::size_t>(R), A});
    }
    for (std::size_t i = 0; i < N; ++i) {
      ConstStridedMap hi(u.h[t].raw() + i * H, k, H, Eigen::OuterStride<>(N * H));
      StridedMap qi(u.q_sep[t].raw() + i * A, k, A, Eigen::OuterStride<>(N * A));
      kernels::linear(hi, p[head_w_[i]].value, p[head_b_[i]].value, qi);
    }
    mat(u.q_sum[t]) = mat(u.q_com[t]) + config_.lambda * mat(u.q_sep[t]);
  }
}

void AgentNet::backward(const Unroll& u, const std::vector<Tensor>& dq_sum, GradScope scope,
                        std::span<const std::uint8_t> head_mask) {
  const std::size_t N = config_.n_agents, H = config_.hidden, A = config_.n_actions;
  const double lam = config_.lambda;
  if (dq_sum.size() != u.steps()) throw DimensionError("backward: dq_sum length mismatch");
  if (!head_mask.empty() && head_mask.size() != N) throw DimensionError("backward: head mask length mismatch");
  auto head_on = [&](std::size_t i) { return head_mask.empty() || head_mask[i] != 0; };
  auto& p = params_;

  // Head gradients (both scopes).
  for (std::size_t t = 0; t < u.steps(); ++t) {
    const Eigen::Index k = static_cast<Eigen::Index>(u.active[t]);
    if (dq_sum[t].shape() != u.q_sum[t].shape()) throw DimensionError("backward: dq_sum shape mismatch");
    for (std::size_t i = 0; i < N; ++i) {
      if (!head_on(i)) continue;
      ConstStridedMap hi(u.h[t].raw() + i * H, k, H, Eigen::OuterStride<>(N * H));
      ConstStridedMap dqi(dq_sum[t].raw() + i * A, k, A, Eigen::OuterStride<>(N * A));
      RowMat dsep = lam * dqi;
      kernels::linear_param_grad(hi, dsep, p[head_w_[i]].grad, p[head_b_[i]].grad);
    }
  }
  if (scope == GradScope::heads_only) return;

  RowMat carry;
  for (std::size_t t = u.steps(); t-- > 0;) {
    const Eigen::Index k = static_cast<Eigen::Index>(u.active[t]);
    const Eigen::Index R = k * static_cast<Eigen::Index>(N);
    const auto dq = mat(dq_sum[t]);
    const auto h = mat(u.h[t]);

    kernels::linear_param_grad(h, dq, p[fc2_w_].grad, p[fc2_b_].grad);
    RowMat dh = dq * mat(p[fc2_w_].value);
    for (std::size_t i = 0; i < N; ++i) {
      ConstStridedMap dqi(dq_sum[t].raw() + i * A, k, A, Eigen::OuterStride<>(N * A));
      StridedMap dhi(dh.data() + i * H, k, H, Eigen::OuterStride<>(N * H));
      dhi.noalias() += lam * (dqi * mat(p[head_w_[i]].value));
    }
    if (carry.size() > 0) dh.topRows(carry.rows()) += carry;

    const RowMat hprev = t == 0 ? RowMat::Zero(R, H) : RowMat(mat(u.h[t - 1]).topRows(R));
    const auto r = mat(u.r[t]).array();
    const auto z = mat(u.z[t]).array();
    const auto n = mat(u.n[t]).array();
    const auto un = mat(u.un[t]).array();

    const RowMat dn_pre = (dh.array() * (1.0 - z) * (1.0 - n * n)).matrix();
    const RowMat dz_pre = (dh.array() * (hprev.array() - n) * z * (1.0 - z)).matrix();
    const RowMat dun = (dn_pre.array() * r).matrix();
    const RowMat dr_pre = (dn_pre.array() * un * r * (1.0 - r)).matrix();

    const auto a1 = mat(u.a1[t]);
    kernels::linear_param_grad(a1, dr_pre, p[w_r_].grad, p[b_r_].grad);
    kernels::linear_param_grad(a1, dz_pre, p[w_z_].grad, p[b_z_].grad);
    kernels::linear_param_grad(hprev, dun, p[u_n_].grad, p[b_n_].grad);
    mat(p[w_n_].grad).noalias() += dn_pre.transpose() * a1;
    mat(p[u_r_].grad).noalias() += dr_pre.transpose() * hprev;
    mat(p[u_z_].grad).noalias() += dz_pre.transpose() * hprev;

    RowMat da1 = dr_pre * mat(p[w_r_].value);
    da1.noalias() += dz_pre * mat(p[w_z_].value);
    da1.noalias() += dn_pre * mat(p[w_n_].value);
    const RowMat dpre1 = (da1.array() * (a1.array() > 0.0).cast<double>()).matrix();
    kernels::linear_param_grad(mat(u.input[t]), dpre1, p[fc1_w_].grad, p[fc1_b_].grad);

    if (t > 0) {
      carry = (dh.array() * z).matrix();
      carry.noalias() += dr_pre * mat(p[u_r_].value);
      carry.noalias() += dz_pre * mat(p[u_z_].value);
      carry.noalias() += dun * mat(p[u_n_].value);
    }
  }
}

}  // namespace manger
