#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <string_view>

#include "fewshot/error.hpp"

namespace fewshot {

enum class Activation { none, relu, sigmoid, softmax };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::none: return "none";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::softmax: return "softmax";
  }
  return "none";
}

inline Activation activation_from_string(std::string_view s) {
  if (s == "none") return Activation::none;
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "softmax") return Activation::softmax;
  throw InvalidInputError("unknown activation '" + std::string(s) + "'");
}

/// Logistic function, clamped so the result stays inside the open interval
/// (0, 1) even when exp() saturates.
template <typename T>
T sigmoid(T x) {
  constexpr T lo = std::numeric_limits<T>::min();
  constexpr T hi = T(1) - std::numeric_limits<T>::epsilon() / 2;
  T y;
  if (x >= T(0)) {
    y = T(1) / (T(1) + std::exp(-x));
  } else {
    const T e = std::exp(x);
    y = e / (T(1) + e);
  }
  return std::clamp(y, lo, hi);
}

template <typename T>
T relu(T x) {
  return x > T(0) ? x : T(0);
}

/// In-place softmax with max subtraction.
template <typename T>
void softmax_inplace(std::span<T> v) {
  if (v.empty()) return;
  const T mx = *std::max_element(v.begin(), v.end());
  T sum = 0;
  for (T& x : v) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (T& x : v) x /= sum;
}

template <typename T>
void apply_activation(Activation a, std::span<T> v) {
  switch (a) {
    case Activation::none: break;
    case Activation::relu:
      for (T& x : v) x = relu(x);
      break;
    case Activation::sigmoid:
      for (T& x : v) x = sigmoid(x);
      break;
    case Activation::softmax: softmax_inplace(v); break;
  }
}

/// Turns d(loss)/d(output) into d(loss)/d(pre-activation) for one row, given
/// the row's activated output `y`.
template <typename T>
void activation_backward(Activation a, std::span<const T> y, std::span<T> grad) {
  switch (a) {
    case Activation::none: break;
    case Activation::relu:
      for (std::size_t i = 0; i < y.size(); ++i)
        if (!(y[i] > T(0))) grad[i] = T(0);
      break;
    case Activation::sigmoid:
      for (std::size_t i = 0; i < y.size(); ++i) grad[i] *= y[i] * (T(1) - y[i]);
      break;
    case Activation::softmax: {
      T dot = 0;
      for (std::size_t i = 0; i < y.size(); ++i) dot += grad[i] * y[i];
      for (std::size_t i = 0; i < y.size(); ++i) grad[i] = y[i] * (grad[i] - dot);
      break;
    }
  }
}

}  // namespace fewshot
