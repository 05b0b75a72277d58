#pragma once

// Eigen views over Tensor storage. Internal to manger_core.

#include <Eigen/Dense>

#include "manger/tensor.hpp"

namespace manger::kernels {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using ConstRowVecMap = Eigen::Map<const Eigen::RowVectorXd>;
using StridedMap = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;
using ConstStridedMap = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;

inline MatMap mat(Tensor& t) { return MatMap(t.raw(), t.rows(), t.cols()); }
inline ConstMatMap mat(const Tensor& t) { return ConstMatMap(t.raw(), t.rows(), t.cols()); }
inline VecMap vec(Tensor& t) { return VecMap(t.raw(), t.size()); }
inline ConstRowVecMap row_vec(const Tensor& t) { return ConstRowVecMap(t.raw(), t.size()); }

/// Y[rows x out] = X W^T + b (b broadcast over rows).
template <class XMat, class YMat>
void linear(const XMat& X, const Tensor& W, const Tensor& b, YMat&& Y) {
  Y.noalias() = X * mat(W).transpose();
  Y.rowwise() += row_vec(b);
}

/// dW += dY^T X, db += colsum(dY).
template <class XMat, class DYMat>
void linear_param_grad(const XMat& X, const DYMat& dY, Tensor& dW, Tensor& db) {
  mat(dW).noalias() += dY.transpose() * X;
  Eigen::Map<Eigen::RowVectorXd>(db.raw(), db.size()) += dY.colwise().sum();
}

inline RowMat relu(const RowMat& x) { return x.cwiseMax(0.0); }

}  // namespace manger::kernels
