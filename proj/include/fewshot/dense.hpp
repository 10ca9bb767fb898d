#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "fewshot/activations.hpp"
#include "fewshot/error.hpp"
#include "fewshot/rng.hpp"
#include "fewshot/tensor.hpp"

namespace fewshot {

template <typename T>
struct DenseParams {
  std::size_t in_size = 0;
  std::size_t out_size = 0;
  BasicTensor<T> W;  // out x in
  BasicTensor<T> b;  // out
  Activation activation = Activation::none;

  DenseParams() = default;
  DenseParams(std::size_t in, std::size_t out, Activation act)
      : in_size(in), out_size(out), W({out, in}), b({out}), activation(act) {}

  std::vector<std::span<T>> tensors() { return {W.values(), b.values()}; }
  std::vector<std::span<const T>> tensors() const { return {W.values(), b.values()}; }
  std::size_t parameter_count() const { return W.size() + b.size(); }

  friend bool operator==(const DenseParams&, const DenseParams&) = default;
};

template <typename T>
void init_dense(DenseParams<T>& p, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(p.in_size + p.out_size));
  for (T& w : p.W.values()) w = static_cast<T>(rng.uniform(-a, a));
  p.b.fill(T(0));
}

template <typename T>
std::vector<T> dense_forward(std::span<const T> x, const DenseParams<T>& p) {
  if (x.size() != p.in_size)
    throw DimensionError("dense_forward: input size " + std::to_string(x.size()) + " != " +
                         std::to_string(p.in_size));
  std::vector<T> y(p.b.values().begin(), p.b.values().end());
  VectorMap<T>(y.data(), y.size()).noalias() += as_matrix(p.W) * ConstVectorMap<T>(x.data(), x.size());
  apply_activation<T>(p.activation, y);
  return y;
}

/// Row-batched forward: returns activation(X W^T + b).
template <typename T>
RowMatrix<T> dense_forward_batch(const RowMatrix<T>& x, const DenseParams<T>& p) {
  if (static_cast<std::size_t>(x.cols()) != p.in_size)
    throw DimensionError("dense_forward_batch: input width " + std::to_string(x.cols()) + " != " +
                         std::to_string(p.in_size));
  RowMatrix<T> y = x * as_matrix(p.W).transpose();
  y.rowwise() += ConstVectorMap<T>(p.b.data(), p.out_size).transpose();
  for (Eigen::Index r = 0; r < y.rows(); ++r)
    apply_activation<T>(p.activation, std::span<T>(&y(r, 0), p.out_size));
  return y;
}

/// Given the layer input `x`, its output `y` and d(loss)/d(y), accumulates
/// parameter gradients and returns d(loss)/d(x).
template <typename T>
RowMatrix<T> dense_backward_batch(const RowMatrix<T>& x, const RowMatrix<T>& y, RowMatrix<T> dy,
                                  const DenseParams<T>& p, DenseParams<T>& grad) {
  for (Eigen::Index r = 0; r < dy.rows(); ++r)
    activation_backward<T>(p.activation, std::span<const T>(&y(r, 0), p.out_size),
                           std::span<T>(&dy(r, 0), p.out_size));
  as_matrix(grad.W).noalias() += dy.transpose() * x;
  VectorMap<T>(grad.b.data(), p.out_size) += dy.colwise().sum().transpose();
  return dy * as_matrix(p.W);
}

}  // namespace fewshot
