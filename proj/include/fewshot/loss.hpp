#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "fewshot/error.hpp"
#include "fewshot/tensor.hpp"

namespace fewshot {

inline constexpr double kLogClamp = 1e-12;

/// Mean squared error over every entry of two equally shaped matrices.
template <typename T>
T mse_loss(const BasicTensor<T>& scores, const BasicTensor<T>& targets) {
  if (scores.shape() != targets.shape())
    throw DimensionError("mse_loss: " + shape_string(scores.shape()) + " vs " +
                         shape_string(targets.shape()));
  T sum = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const T d = scores[i] - targets[i];
    sum += d * d;
  }
  return sum / static_cast<T>(scores.size());
}

template <typename T>
BasicTensor<T> mse_grad(const BasicTensor<T>& scores, const BasicTensor<T>& targets) {
  if (scores.shape() != targets.shape())
    throw DimensionError("mse_grad: " + shape_string(scores.shape()) + " vs " +
                         shape_string(targets.shape()));
  BasicTensor<T> g(scores.shape());
  const T scale = T(2) / static_cast<T>(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) g[i] = scale * (scores[i] - targets[i]);
  return g;
}

/// Rows x n_classes one-hot matrix.
template <typename T>
BasicTensor<T> one_hot(std::span<const std::size_t> labels, std::size_t n_classes) {
  BasicTensor<T> out({labels.size(), n_classes});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= n_classes)
      throw InvalidInputError("label " + std::to_string(labels[i]) + " out of range for " +
                              std::to_string(n_classes) + " classes");
    out(i, labels[i]) = T(1);
  }
  return out;
}

/// -mean(log p[i, label_i]) with probabilities clamped at 1e-12.
template <typename T>
T cross_entropy_loss(const BasicTensor<T>& probs, std::span<const std::size_t> labels) {
  if (probs.rank() != 2 || probs.rows() != labels.size())
    throw DimensionError("cross_entropy_loss: probs " + shape_string(probs.shape()) + " for " +
                         std::to_string(labels.size()) + " labels");
  double total = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto row = probs.row(i);
    double s = 0;
    for (T p : row) s += p;
    if (std::abs(s - 1.0) > 1e-5)
      throw InvalidInputError("cross_entropy_loss: row " + std::to_string(i) + " sums to " +
                              std::to_string(s));
    if (labels[i] >= probs.cols())
      throw InvalidInputError("label " + std::to_string(labels[i]) + " out of range for " +
                              std::to_string(probs.cols()) + " classes");
    total -= std::log(std::max(static_cast<double>(row[labels[i]]), kLogClamp));
  }
  return static_cast<T>(total / static_cast<double>(labels.size()));
}

/// d(cross-entropy of softmax(z))/dz = (p - onehot) / B.
template <typename T>
RowMatrix<T> softmax_cross_entropy_grad(const RowMatrix<T>& probs, std::span<const std::size_t> labels) {
  RowMatrix<T> g = probs;
  for (std::size_t i = 0; i < labels.size(); ++i) g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(labels[i])) -= T(1);
  g /= static_cast<T>(labels.size());
  return g;
}

}  // namespace fewshot
