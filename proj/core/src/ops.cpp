#include "manger/ops.hpp"

#include <cmath>
#include <string>

#include "manger/errors.hpp"

namespace manger {

namespace {

template <class F>
Tensor map(const Tensor& x, F f) {
  Tensor y = x;
  for (double& v : y.data()) v = f(v);
  return y;
}

void require_vector(const Tensor& t, std::size_t n, const char* op, const char* operand) {
  if (t.rank() != 1 || t.size() != n)
    throw DimensionError(std::string(op) + ": operand " + operand + " has shape " + shape_string(t.shape()) +
                         ", expected [" + std::to_string(n) + "]");
}

void require_matrix(const Tensor& t, std::size_t r, std::size_t c, const char* op, const char* operand) {
  if (t.rank() != 2 || t.dim(0) != r || t.dim(1) != c)
    throw DimensionError(std::string(op) + ": operand " + operand + " has shape " + shape_string(t.shape()) +
                         ", expected [" + std::to_string(r) + "x" + std::to_string(c) + "]");
}

// y = W x (+ U h) + b, written as plain loops.
void matvec_acc(const Tensor& W, const Tensor& x, std::span<double> y) {
  const std::size_t out = W.dim(0), in = W.dim(1);
  for (std::size_t i = 0; i < out; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < in; ++j) s += W[i * in + j] * x[j];
    y[i] += s;
  }
}

void matvec_t_acc(const Tensor& W, std::span<const double> dy, std::span<double> dx) {
  const std::size_t out = W.dim(0), in = W.dim(1);
  for (std::size_t i = 0; i < out; ++i)
    for (std::size_t j = 0; j < in; ++j) dx[j] += W[i * in + j] * dy[i];
}

void outer_acc(std::span<const double> dy, const Tensor& x, Tensor& dW) {
  const std::size_t in = x.size();
  for (std::size_t i = 0; i < dy.size(); ++i)
    for (std::size_t j = 0; j < in; ++j) dW[i * in + j] += dy[i] * x[j];
}

void check_gru(const Tensor& x, const Tensor& h, const GruWeights& w) {
  const std::size_t H = h.size(), I = x.size();
  require_vector(h, H, "gru_cell", "h_prev");
  require_vector(x, I, "gru_cell", "x");
  require_matrix(w.w_r, H, I, "gru_cell", "w_r");
  require_matrix(w.w_z, H, I, "gru_cell", "w_z");
  require_matrix(w.w_n, H, I, "gru_cell", "w_n");
  require_matrix(w.u_r, H, H, "gru_cell", "u_r");
  require_matrix(w.u_z, H, H, "gru_cell", "u_z");
  require_matrix(w.u_n, H, H, "gru_cell", "u_n");
  require_vector(w.b_r, H, "gru_cell", "b_r");
  require_vector(w.b_z, H, "gru_cell", "b_z");
  require_vector(w.b_n, H, "gru_cell", "b_n");
}

struct GruGates {
  Tensor r, z, n, un;
};

GruGates gru_gates(const Tensor& x, const Tensor& h, const GruWeights& w) {
  const std::size_t H = h.size();
  GruGates g{w.b_r, w.b_z, Tensor({H}), w.b_n};
  matvec_acc(w.w_r, x, g.r.data());
  matvec_acc(w.u_r, h, g.r.data());
  matvec_acc(w.w_z, x, g.z.data());
  matvec_acc(w.u_z, h, g.z.data());
  matvec_acc(w.u_n, h, g.un.data());
  matvec_acc(w.w_n, x, g.n.data());
  for (std::size_t k = 0; k < H; ++k) {
    g.r[k] = sigmoid(g.r[k]);
    g.z[k] = sigmoid(g.z[k]);
    g.n[k] = std::tanh(g.n[k] + g.r[k] * g.un[k]);
  }
  return g;
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double elu(double x, double a) { return x >= 0.0 ? x : a * std::expm1(x); }

Tensor relu(const Tensor& x) {
  return map(x, [](double v) { return v > 0.0 ? v : 0.0; });
}

Tensor elu(const Tensor& x, double a) {
  return map(x, [a](double v) { return elu(v, a); });
}

Tensor sigmoid(const Tensor& x) {
  return map(x, [](double v) { return sigmoid(v); });
}

Tensor tanh(const Tensor& x) {
  return map(x, [](double v) { return std::tanh(v); });
}

Tensor affine(const Tensor& x, const Tensor& W, const Tensor& b) {
  if (W.rank() != 2) throw DimensionError("affine: operand W has shape " + shape_string(W.shape()) + ", expected rank 2");
  require_vector(x, W.dim(1), "affine", "x");
  require_vector(b, W.dim(0), "affine", "b");
  Tensor y = b;
  matvec_acc(W, x, y.data());
  return y;
}

Tensor affine_backward(const Tensor& x, const Tensor& W, const Tensor& dy, Tensor& dW, Tensor& db) {
  require_vector(dy, W.dim(0), "affine_backward", "dy");
  require_matrix(dW, W.dim(0), W.dim(1), "affine_backward", "dW");
  require_vector(db, W.dim(0), "affine_backward", "db");
  outer_acc(dy.data(), x, dW);
  for (std::size_t i = 0; i < dy.size(); ++i) db[i] += dy[i];
  Tensor dx({W.dim(1)});
  matvec_t_acc(W, dy.data(), dx.data());
  return dx;
}

Tensor gru_cell(const Tensor& x, const Tensor& h_prev, const GruWeights& w) {
  check_gru(x, h_prev, w);
  const GruGates g = gru_gates(x, h_prev, w);
  Tensor h({h_prev.size()});
  for (std::size_t k = 0; k < h.size(); ++k) h[k] = (1.0 - g.z[k]) * g.n[k] + g.z[k] * h_prev[k];
  return h;
}

GruCellGrad gru_cell_backward(const Tensor& x, const Tensor& h_prev, const GruWeights& w, const Tensor& dh_next,
                              GruGrads& grads) {
  check_gru(x, h_prev, w);
  const std::size_t H = h_prev.size();
  require_vector(dh_next, H, "gru_cell_backward", "dh_next");
  const GruGates g = gru_gates(x, h_prev, w);

  Tensor dr({H}), dz({H}), dn({H}), dun({H});
  GruCellGrad out{Tensor({x.size()}), Tensor({H})};
  for (std::size_t k = 0; k < H; ++k) {
    const double dh = dh_next[k];
    out.dh_prev[k] = dh * g.z[k];
    const double dn_k = dh * (1.0 - g.z[k]) * (1.0 - g.n[k] * g.n[k]);
    dn[k] = dn_k;
    dun[k] = dn_k * g.r[k];
    dr[k] = dn_k * g.un[k] * g.r[k] * (1.0 - g.r[k]);
    dz[k] = dh * (h_prev[k] - g.n[k]) * g.z[k] * (1.0 - g.z[k]);
  }
  outer_acc(dr.data(), x, grads.w_r);
  outer_acc(dz.data(), x, grads.w_z);
  outer_acc(dn.data(), x, grads.w_n);
  outer_acc(dr.data(), h_prev, grads.u_r);
  outer_acc(dz.data(), h_prev, grads.u_z);
  outer_acc(dun.data(), h_prev, grads.u_n);
  for (std::size_t k = 0; k < H; ++k) {
    grads.b_r[k] += dr[k];
    grads.b_z[k] += dz[k];
    grads.b_n[k] += dun[k];
  }
  matvec_t_acc(w.w_r, dr.data(), out.dx.data());
  matvec_t_acc(w.w_z, dz.data(), out.dx.data());
  matvec_t_acc(w.w_n, dn.data(), out.dx.data());
  matvec_t_acc(w.u_r, dr.data(), out.dh_prev.data());
  matvec_t_acc(w.u_z, dz.data(), out.dh_prev.data());
  matvec_t_acc(w.u_n, dun.data(), out.dh_prev.data());
  return out;
}

Tensor init_uniform(const Shape& shape, double bound, RngStream& rng) {
  Tensor t(shape);
  for (double& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

Tensor init_uniform_fanin(const Shape& shape, RngStream& rng) {
  if (shape.empty()) throw DimensionError("init_uniform_fanin: empty shape");
  return init_uniform(shape, 1.0 / std::sqrt(static_cast<double>(shape.back())), rng);
}

void require_finite(double value, std::string_view what) {
  if (!std::isfinite(value)) throw NumericError(std::string(what) + " is not finite (" + std::to_string(value) + ")");
}

}  // namespace manger
