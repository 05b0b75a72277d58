#pragma once

#include <string_view>

#include "manger/rng.hpp"
#include "manger/tensor.hpp"

namespace manger {

// Elementwise activations.
Tensor relu(const Tensor& x);
Tensor elu(const Tensor& x, double a = 1.0);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);

double sigmoid(double x);
double elu(double x, double a = 1.0);

/// y = W x + b for x[in], W[out x in], b[out].
Tensor affine(const Tensor& x, const Tensor& W, const Tensor& b);

/// Accumulates dW += dy x^T and db += dy; returns dx = W^T dy.
Tensor affine_backward(const Tensor& x, const Tensor& W, const Tensor& dy, Tensor& dW, Tensor& db);

/// Weights of a GRU cell with input size I and hidden size H.
/// w_* are [H x I], u_* are [H x H], b_* are [H].
struct GruWeights {
  const Tensor& w_r;
  const Tensor& w_z;
  const Tensor& w_n;
  const Tensor& u_r;
  const Tensor& u_z;
  const Tensor& u_n;
  const Tensor& b_r;
  const Tensor& b_z;
  const Tensor& b_n;
};

struct GruGrads {
  Tensor& w_r;
  Tensor& w_z;
  Tensor& w_n;
  Tensor& u_r;
  Tensor& u_z;
  Tensor& u_n;
  Tensor& b_r;
  Tensor& b_z;
  Tensor& b_n;
};

/// r = s(W_r x + U_r h + b_r), z = s(W_z x + U_z h + b_z),
/// n = tanh(W_n x + r * (U_n h + b_n)), h' = (1 - z) * n + z * h.
Tensor gru_cell(const Tensor& x, const Tensor& h_prev, const GruWeights& w);

struct GruCellGrad {
  Tensor dx;
  Tensor dh_prev;
};

/// Recomputes the gates from (x, h_prev), accumulates parameter gradients
/// for upstream gradient dh_next, and returns input gradients.
GruCellGrad gru_cell_backward(const Tensor& x, const Tensor& h_prev, const GruWeights& w,
                              const Tensor& dh_next, GruGrads& grads);

/// Entries drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)), fan_in = last dimension.
Tensor init_uniform_fanin(const Shape& shape, RngStream& rng);
/// Entries drawn from U(-bound, bound).
Tensor init_uniform(const Shape& shape, double bound, RngStream& rng);

/// Throws NumericError naming `what` if value is not finite.
void require_finite(double value, std::string_view what);

}  // namespace manger
