#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fewshot/error.hpp"

namespace fewshot {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment accumulators, one buffer per parameter tensor.
template <typename T>
struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;

  AdamState() = default;
  explicit AdamState(AdamConfig c) : config(c) {}
};

/// One Adam step:
///   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2
///   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
/// with bias-corrected m_hat, v_hat. Throws DivergedError, leaving params and
/// state untouched, if any gradient is non-finite.
template <typename T>
void adam_update(const std::vector<std::span<T>>& params, const std::vector<std::span<const T>>& grads,
                 AdamState<T>& state) {
  if (params.size() != grads.size())
    throw DimensionError("adam_update: " + std::to_string(params.size()) + " parameter tensors but " +
                         std::to_string(grads.size()) + " gradients");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].size() != grads[k].size())
      throw DimensionError("adam_update: tensor " + std::to_string(k) + " has " +
                           std::to_string(params[k].size()) + " values but gradient has " +
                           std::to_string(grads[k].size()));
    for (T g : grads[k])
      if (!std::isfinite(g)) throw DivergedError("adam_update: non-finite gradient");
  }
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.size(), T(0));
      state.v.emplace_back(p.size(), T(0));
    }
  } else if (state.m.size() != params.size()) {
    throw DimensionError("adam_update: state was built for a different parameter list");
  }

  const AdamConfig& c = state.config;
  const std::int64_t t = state.step + 1;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));
  const T b1 = static_cast<T>(c.beta1), b2 = static_cast<T>(c.beta2);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = state.m[k];
    auto& v = state.v[k];
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      const T g = grads[k][i];
      m[i] = b1 * m[i] + (T(1) - b1) * g;
      v[i] = b2 * v[i] + (T(1) - b2) * g * g;
      const double m_hat = static_cast<double>(m[i]) / bc1;
      const double v_hat = static_cast<double>(v[i]) / bc2;
      params[k][i] -= static_cast<T>(c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon));
    }
  }
  state.step = t;
}

/// Scales gradients in place so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
template <typename T>
double clip_global_norm(const std::vector<std::span<T>>& grads, double max_norm) {
  double sq = 0;
  for (const auto& g : grads)
    for (T x : g) sq += static_cast<double>(x) * static_cast<double>(x);
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0) {
    const T scale = static_cast<T>(max_norm / norm);
    for (const auto& g : grads)
      for (T& x : g) x *= scale;
  }
  return norm;
}

}  // namespace fewshot
