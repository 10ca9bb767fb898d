#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "fewshot/activations.hpp"
#include "fewshot/error.hpp"
#include "fewshot/rng.hpp"
#include "fewshot/tensor.hpp"

namespace fewshot {

/// Packed LSTM weights. Gate blocks are stacked as [input, forget, candidate,
/// output], each `hidden_size` rows tall.
template <typename T>
struct LstmParams {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  BasicTensor<T> W;  // 4H x input
  BasicTensor<T> U;  // 4H x H
  BasicTensor<T> b;  // 4H

  LstmParams() = default;
  LstmParams(std::size_t input, std::size_t hidden)
      : input_size(input),
        hidden_size(hidden),
        W({4 * hidden, input}),
        U({4 * hidden, hidden}),
        b({4 * hidden}) {}

  std::vector<std::span<T>> tensors() { return {W.values(), U.values(), b.values()}; }
  std::vector<std::span<const T>> tensors() const { return {W.values(), U.values(), b.values()}; }

  std::size_t parameter_count() const { return W.size() + U.size() + b.size(); }

  friend bool operator==(const LstmParams&, const LstmParams&) = default;
};

enum LstmGate : std::size_t { kInputGate = 0, kForgetGate = 1, kCandidate = 2, kOutputGate = 3 };

/// Glorot-uniform weights, zero biases except the forget gate slice at 1.
template <typename T>
void init_lstm(LstmParams<T>& p, Rng& rng) {
  const auto glorot = [&](BasicTensor<T>& m) {
    const double a = std::sqrt(6.0 / static_cast<double>(m.dim(0) + m.dim(1)));
    for (T& w : m.values()) w = static_cast<T>(rng.uniform(-a, a));
  };
  glorot(p.W);
  glorot(p.U);
  p.b.fill(T(0));
  for (std::size_t j = 0; j < p.hidden_size; ++j) p.b[kForgetGate * p.hidden_size + j] = T(1);
}

/// One cell update: returns (h', c').
template <typename T>
std::pair<std::vector<T>, std::vector<T>> lstm_step(std::span<const T> x, std::span<const T> h,
                                                    std::span<const T> c, const LstmParams<T>& p) {
  const std::size_t H = p.hidden_size;
  if (x.size() != p.input_size || h.size() != H || c.size() != H)
    throw DimensionError("lstm_step: got x=" + std::to_string(x.size()) + " h=" +
                         std::to_string(h.size()) + " c=" + std::to_string(c.size()) +
                         ", expected x=" + std::to_string(p.input_size) + " h=c=" + std::to_string(H));
  Eigen::Matrix<T, Eigen::Dynamic, 1> z = ConstVectorMap<T>(p.b.data(), 4 * H);
  z.noalias() += as_matrix(p.W) * ConstVectorMap<T>(x.data(), x.size());
  z.noalias() += as_matrix(p.U) * ConstVectorMap<T>(h.data(), H);

  std::vector<T> h_next(H), c_next(H);
  for (std::size_t j = 0; j < H; ++j) {
    const T i = sigmoid(z[kInputGate * H + j]);
    const T f = sigmoid(z[kForgetGate * H + j]);
    const T g = std::tanh(z[kCandidate * H + j]);
    const T o = sigmoid(z[kOutputGate * H + j]);
    c_next[j] = f * c[j] + i * g;
    h_next[j] = o * std::tanh(c_next[j]);
  }
  return {std::move(h_next), std::move(c_next)};
}

/// Runs the cell over a T x input sequence from zero state and returns h_T.
template <typename T>
std::vector<T> lstm_forward(const BasicTensor<T>& seq, const LstmParams<T>& p) {
  if (seq.rank() != 2) throw InvalidInputError("lstm_forward: sequence must be a T x input matrix");
  if (seq.cols() != p.input_size)
    throw DimensionError("lstm_forward: frame size " + std::to_string(seq.cols()) + " != " +
                         std::to_string(p.input_size));
  std::vector<T> h(p.hidden_size, T(0)), c(p.hidden_size, T(0));
  for (std::size_t t = 0; t < seq.rows(); ++t) {
    auto [hn, cn] = lstm_step<T>(seq.row(t), h, c, p);
    h = std::move(hn);
    c = std::move(cn);
  }
  return h;
}

template <typename T>
std::vector<T> lstm_forward(std::span<const std::vector<T>> frames, const LstmParams<T>& p) {
  if (frames.empty()) throw InvalidInputError("lstm_forward: empty sequence");
  std::vector<T> h(p.hidden_size, T(0)), c(p.hidden_size, T(0));
  for (const auto& x : frames) {
    auto [hn, cn] = lstm_step<T>(x, h, c, p);
    h = std::move(hn);
    c = std::move(cn);
  }
  return h;
}

/// Activations of a batched forward pass, kept for backpropagation through
/// time. Inputs are time-major: row t*B + b is frame t of sequence b.
template <typename T>
struct LstmTrace {
  std::size_t steps = 0;
  std::size_t batch = 0;
  RowMatrix<T> inputs;  // (T*B) x input
  RowMatrix<T> gates;   // (T*B) x 4H, post-activation [i f g o]
  RowMatrix<T> cells;   // ((T+1)*B) x H, block 0 is c_0
  RowMatrix<T> hidden;  // ((T+1)*B) x H, block 0 is h_0

  auto h_at(std::size_t t) const { return hidden.middleRows(t * batch, batch); }
  auto c_at(std::size_t t) const { return cells.middleRows(t * batch, batch); }
  /// Final hidden state, B x H.
  auto final_hidden() const { return h_at(steps); }
  /// Hidden states h_1..h_T as a (T*B) x H block, the input of a stacked layer.
  auto output_sequence() const { return hidden.bottomRows(steps * batch); }
};

template <typename T>
LstmTrace<T> lstm_forward_batch(RowMatrix<T> inputs, std::size_t steps, const LstmParams<T>& p) {
  const std::size_t H = p.hidden_size;
  if (steps == 0) throw InvalidInputError("lstm_forward_batch: empty sequence");
  if (static_cast<std::size_t>(inputs.cols()) != p.input_size || inputs.rows() % steps != 0)
    throw DimensionError("lstm_forward_batch: input block does not match cell size");
  LstmTrace<T> tr;
  tr.steps = steps;
  tr.batch = static_cast<std::size_t>(inputs.rows()) / steps;
  const auto B = static_cast<Eigen::Index>(tr.batch);
  const auto H4 = static_cast<Eigen::Index>(4 * H);
  tr.inputs = std::move(inputs);
  tr.gates.resize(static_cast<Eigen::Index>(steps) * B, H4);
  tr.gates.noalias() = tr.inputs * as_matrix(p.W).transpose();
  tr.gates.rowwise() += ConstVectorMap<T>(p.b.data(), 4 * H).transpose();
  tr.cells.setZero(static_cast<Eigen::Index>(steps + 1) * B, static_cast<Eigen::Index>(H));
  tr.hidden.setZero(static_cast<Eigen::Index>(steps + 1) * B, static_cast<Eigen::Index>(H));

  const auto U = as_matrix(p.U);
  for (std::size_t t = 0; t < steps; ++t) {
    auto z = tr.gates.middleRows(static_cast<Eigen::Index>(t) * B, B);
    z.noalias() += tr.hidden.middleRows(static_cast<Eigen::Index>(t) * B, B) * U.transpose();
    for (Eigen::Index r = 0; r < B; ++r) {
      T* zr = &z(r, 0);
      const T* c_prev = &tr.cells(static_cast<Eigen::Index>(t) * B + r, 0);
      T* c_next = &tr.cells(static_cast<Eigen::Index>(t + 1) * B + r, 0);
      T* h_next = &tr.hidden(static_cast<Eigen::Index>(t + 1) * B + r, 0);
      for (std::size_t j = 0; j < H; ++j) {
        const T i = sigmoid(zr[kInputGate * H + j]);
        const T f = sigmoid(zr[kForgetGate * H + j]);
        const T g = std::tanh(zr[kCandidate * H + j]);
        const T o = sigmoid(zr[kOutputGate * H + j]);
        zr[kInputGate * H + j] = i;
        zr[kForgetGate * H + j] = f;
        zr[kCandidate * H + j] = g;
        zr[kOutputGate * H + j] = o;
        c_next[j] = f * c_prev[j] + i * g;
        h_next[j] = o * std::tanh(c_next[j]);
      }
    }
  }
  return tr;
}

/// Backpropagation through time. `d_hidden` holds d(loss)/d(h_t) for
/// t = 1..T as a (T*B) x H block. Accumulates into `grad` and returns
/// d(loss)/d(inputs) when `want_input_grad` is set (empty otherwise).
template <typename T>
RowMatrix<T> lstm_backward_batch(const LstmTrace<T>& tr, const LstmParams<T>& p,
                                 const RowMatrix<T>& d_hidden, LstmParams<T>& grad,
                                 bool want_input_grad) {
  const std::size_t H = p.hidden_size;
  const auto B = static_cast<Eigen::Index>(tr.batch);
  RowMatrix<T> dz(tr.gates.rows(), tr.gates.cols());
  RowMatrix<T> dh_next = RowMatrix<T>::Zero(B, static_cast<Eigen::Index>(H));
  RowMatrix<T> dc_next = RowMatrix<T>::Zero(B, static_cast<Eigen::Index>(H));
  const auto U = as_matrix(p.U);

  for (std::size_t tt = tr.steps; tt-- > 0;) {
    const Eigen::Index base = static_cast<Eigen::Index>(tt) * B;
    for (Eigen::Index r = 0; r < B; ++r) {
      const T* a = &tr.gates(base + r, 0);
      const T* c_prev = &tr.cells(base + r, 0);
      const T* c_cur = &tr.cells(base + B + r, 0);
      const T* dh_ext = &d_hidden(base + r, 0);
      T* dzr = &dz(base + r, 0);
      for (std::size_t j = 0; j < H; ++j) {
        const T i = a[kInputGate * H + j];
        const T f = a[kForgetGate * H + j];
        const T g = a[kCandidate * H + j];
        const T o = a[kOutputGate * H + j];
        const T tc = std::tanh(c_cur[j]);
        const T dh = dh_ext[j] + dh_next(r, static_cast<Eigen::Index>(j));
        const T dc = dc_next(r, static_cast<Eigen::Index>(j)) + dh * o * (T(1) - tc * tc);
        dzr[kInputGate * H + j] = dc * g * i * (T(1) - i);
        dzr[kForgetGate * H + j] = dc * c_prev[j] * f * (T(1) - f);
        dzr[kCandidate * H + j] = dc * i * (T(1) - g * g);
        dzr[kOutputGate * H + j] = dh * tc * o * (T(1) - o);
        dc_next(r, static_cast<Eigen::Index>(j)) = dc * f;
      }
    }
    dh_next.noalias() = dz.middleRows(base, B) * U;
  }

  as_matrix(grad.W).noalias() += dz.transpose() * tr.inputs;
  as_matrix(grad.U).noalias() += dz.transpose() * tr.hidden.topRows(tr.hidden.rows() - B);
  VectorMap<T>(grad.b.data(), 4 * H) += dz.colwise().sum().transpose();

  if (!want_input_grad) return {};
  return dz * as_matrix(p.W);
}

}  // namespace fewshot
