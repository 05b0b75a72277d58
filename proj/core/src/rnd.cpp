#include "manger/rnd.hpp"

#include <cmath>
#include <string>

#include "kernels.hpp"
#include "manger/errors.hpp"
#include "manger/ops.hpp"

namespace manger {

using kernels::mat;
using kernels::RowMat;

namespace {

// Entry order inside each store.
constexpr std::size_t kW0 = 0, kB0 = 1, kW2 = 2, kB2 = 3;

void add_mlp(ParamStore& store, std::size_t in, std::size_t k, RngStream* rng) {
  const double b0 = 1.0 / std::sqrt(static_cast<double>(in));
  const double b2 = 1.0 / std::sqrt(static_cast<double>(k));
  store.add("0.weight", rng ? init_uniform_fanin({k, in}, *rng) : Tensor({k, in}));
  store.add("0.bias", rng ? init_uniform({k}, b0, *rng) : Tensor({k}));
  store.add("2.weight", rng ? init_uniform_fanin({k, k}, *rng) : Tensor({k, k}));
  store.add("2.bias", rng ? init_uniform({k}, b2, *rng) : Tensor({k}));
}

RowMat embed_rows(const ParamStore& s, const Tensor& X, RowMat* hidden) {
  RowMat h(X.rows(), s[kW0].value.dim(0));
  kernels::linear(mat(X), s[kW0].value, s[kB0].value, h);
  h = h.cwiseMax(0.0);
  RowMat y(X.rows(), s[kW2].value.dim(0));
  kernels::linear(h, s[kW2].value, s[kB2].value, y);
  if (hidden) *hidden = std::move(h);
  return y;
}

}  // namespace

RndNet::RndNet(const RndConfig& config, RngStream& rng) : config_(config) { build(&rng); }

RndNet::RndNet(const RndConfig& config) : config_(config) { build(nullptr); }

void RndNet::build(RngStream* rng) {
  if (config_.obs_dim == 0 || config_.embed_dim == 0) throw ContractError("RndNet: dimensions must be positive");
  add_mlp(target_, config_.obs_dim, config_.embed_dim, rng);
  add_mlp(predictor_, config_.obs_dim, config_.embed_dim, rng);
}

double RndNet::novelty(std::span<const double> obs) const {
  if (obs.size() != config_.obs_dim)
    throw DimensionError("rnd: observation has " + std::to_string(obs.size()) + " entries, expected " +
                         std::to_string(config_.obs_dim));
  const Tensor x = Tensor::vector(obs);
  auto embed = [&](const ParamStore& s) {
    return affine(relu(affine(x, s[kW0].value, s[kB0].value)), s[kW2].value, s[kB2].value);
  };
  const Tensor a = embed(target_), b = embed(predictor_);
  double n = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) n += (a[k] - b[k]) * (a[k] - b[k]);
  return n;
}

std::vector<double> RndNet::novelty_rows(const Tensor& X) const {
  if (X.rank() != 2 || X.cols() != config_.obs_dim)
    throw DimensionError("rnd: observation rows have shape " + shape_string(X.shape()));
  const RowMat d = embed_rows(target_, X, nullptr) - embed_rows(predictor_, X, nullptr);
  std::vector<double> out(X.rows());
  for (Eigen::Index r = 0; r < d.rows(); ++r) out[r] = d.row(r).squaredNorm();
  return out;
}

double RndNet::predictor_gradient(const Tensor& X) {
  if (X.rank() != 2 || X.cols() != config_.obs_dim)
    throw DimensionError("rnd: observation rows have shape " + shape_string(X.shape()));
  const double rows = static_cast<double>(X.rows());
  RowMat hidden;
  const RowMat target = embed_rows(target_, X, nullptr);
  const RowMat pred = embed_rows(predictor_, X, &hidden);
  const RowMat diff = pred - target;
  const double loss = diff.squaredNorm() / rows;
  require_finite(loss, "rnd loss");

  const RowMat dy = (2.0 / rows) * diff;
  auto& s = predictor_;
  kernels::linear_param_grad(hidden, dy, s[kW2].grad, s[kB2].grad);
  RowMat dh = dy * mat(s[kW2].value);
  dh = (dh.array() * (hidden.array() > 0.0).cast<double>()).matrix();
  kernels::linear_param_grad(mat(X), dh, s[kW0].grad, s[kB0].grad);
  return loss;
}

void RndNet::copy_predictor_from_target() { predictor_.copy_values_from(target_); }

}  // namespace manger
