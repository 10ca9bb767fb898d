#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fewshot/activations.hpp"
#include "fewshot/dense.hpp"
#include "fewshot/episode.hpp"
#include "fewshot/error.hpp"
#include "fewshot/gesture.hpp"
#include "fewshot/loss.hpp"
#include "fewshot/lstm.hpp"
#include "fewshot/rng.hpp"
#include "fewshot/tensor.hpp"

namespace fewshot {

enum class Pooling { sum, mean };

inline std::string to_string(Pooling p) { return p == Pooling::sum ? "sum" : "mean"; }
inline Pooling pooling_from_string(const std::string& s) {
  if (s == "sum") return Pooling::sum;
  if (s == "mean") return Pooling::mean;
  throw InvalidInputError("unknown pooling '" + s + "' (expected sum or mean)");
}

struct RelationNetConfig {
  std::size_t input_size = kFrameValues;
  std::size_t hidden_size = 64;
  std::size_t lstm_layers = 1;
  /// ReLU layer widths between the concatenated pair and the sigmoid output.
  std::vector<std::size_t> relation_hidden = {128, 64};
  Pooling pooling = Pooling::sum;

  void validate() const {
    if (input_size == 0 || hidden_size == 0) throw InvalidInputError("relation net sizes must be positive");
    if (lstm_layers == 0) throw InvalidInputError("relation net needs at least one LSTM layer");
    for (std::size_t w : relation_hidden)
      if (w == 0) throw InvalidInputError("relation layer widths must be positive");
  }

  friend bool operator==(const RelationNetConfig&, const RelationNetConfig&) = default;
};

/// Embedding LSTM stack followed by the relation MLP (2H -> hidden... -> 1).
template <typename T>
struct RelationNetParams {
  RelationNetConfig config;
  std::vector<LstmParams<T>> embedding;
  std::vector<DenseParams<T>> relation;

  RelationNetParams() = default;
  explicit RelationNetParams(RelationNetConfig c) : config(std::move(c)) {
    config.validate();
    std::size_t in = config.input_size;
    for (std::size_t l = 0; l < config.lstm_layers; ++l) {
      embedding.emplace_back(in, config.hidden_size);
      in = config.hidden_size;
    }
    in = 2 * config.hidden_size;
    for (std::size_t w : config.relation_hidden) {
      relation.emplace_back(in, w, Activation::relu);
      in = w;
    }
    relation.emplace_back(in, 1, Activation::sigmoid);
  }

  /// Parameter tensors in checkpoint order: each LSTM layer (W, U, b), then
  /// each relation layer (W, b).
  std::vector<std::span<T>> tensors() {
    std::vector<std::span<T>> out;
    for (auto& l : embedding)
      for (auto s : l.tensors()) out.push_back(s);
    for (auto& l : relation)
      for (auto s : l.tensors()) out.push_back(s);
    return out;
  }
  std::vector<std::span<const T>> tensors() const {
    std::vector<std::span<const T>> out;
    for (const auto& l : embedding)
      for (auto s : l.tensors()) out.push_back(s);
    for (const auto& l : relation)
      for (auto s : l.tensors()) out.push_back(s);
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (auto s : tensors()) n += s.size();
    return n;
  }

  friend bool operator==(const RelationNetParams&, const RelationNetParams&) = default;
};

template <typename T>
RelationNetParams<T> make_relation_net(const RelationNetConfig& config, std::uint64_t seed) {
  RelationNetParams<T> p(config);
  Rng rng(seed);
  for (auto& l : p.embedding) init_lstm(l, rng);
  for (auto& l : p.relation) init_dense(l, rng);
  return p;
}

template <typename To, typename From>
RelationNetParams<To> params_cast(const RelationNetParams<From>& p) {
  RelationNetParams<To> out(p.config);
  auto dst = out.tensors();
  auto src = p.tensors();
  for (std::size_t k = 0; k < dst.size(); ++k)
    std::transform(src[k].begin(), src[k].end(), dst[k].begin(), [](From v) { return static_cast<To>(v); });
  return out;
}

/// 72 x 63 frame matrix; invalid frames contribute zeros.
template <typename T>
BasicTensor<T> sequence_matrix(const GestureSequence& s) {
  BasicTensor<T> m({kSequenceLength, kFrameValues});
  for (std::size_t t = 0; t < kSequenceLength; ++t)
    for (std::size_t v = 0; v < kFrameValues; ++v) m(t, v) = static_cast<T>(s.frames[t].coords[v]);
  return m;
}

/// Final hidden state of the embedding stack for one sequence.
template <typename T>
std::vector<T> embed(const GestureSequence& seq, const RelationNetParams<T>& p) {
  std::vector<std::vector<T>> inputs(kSequenceLength);
  for (std::size_t t = 0; t < kSequenceLength; ++t)
    inputs[t].assign(seq.frames[t].coords.begin(), seq.frames[t].coords.end());
  for (const auto& layer : p.embedding) {
    std::vector<T> h(layer.hidden_size, T(0)), c(layer.hidden_size, T(0));
    for (auto& x : inputs) {
      auto [hn, cn] = lstm_step<T>(x, h, c, layer);
      h = std::move(hn);
      c = std::move(cn);
      x = h;
    }
  }
  return inputs.back();
}

/// Summarises the K support features of one class. The vectors are combined
/// in a canonical (lexicographic) order so the result does not depend on
/// the order of the shots.
template <typename T>
std::vector<T> pool_support(std::vector<std::vector<T>> features, Pooling pooling = Pooling::sum) {
  if (features.empty()) throw InvalidInputError("pool_support: no support features");
  const std::size_t H = features.front().size();
  for (const auto& f : features)
    if (f.size() != H) throw DimensionError("pool_support: feature sizes differ");
  std::sort(features.begin(), features.end());
  std::vector<T> out = features.front();
  for (std::size_t k = 1; k < features.size(); ++k)
    for (std::size_t j = 0; j < H; ++j) out[j] += features[k][j];
  if (pooling == Pooling::mean && features.size() > 1)
    for (T& v : out) v /= static_cast<T>(features.size());
  return out;
}

/// Sigmoid relation score of concat(class_feat, query_feat).
template <typename T>
T relation_score(std::span<const T> class_feat, std::span<const T> query_feat, const RelationNetParams<T>& p) {
  const std::size_t H = p.config.hidden_size;
  if (class_feat.size() != H || query_feat.size() != H)
    throw DimensionError("relation_score: features must have size " + std::to_string(H));
  std::vector<T> x(class_feat.begin(), class_feat.end());
  x.insert(x.end(), query_feat.begin(), query_feat.end());
  for (const auto& layer : p.relation) x = dense_forward<T>(x, layer);
  return x.front();
}

/// Everything the backward pass needs from one episode forward pass.
template <typename T>
struct EpisodeTrace {
  std::vector<const GestureSequence*> sequences;  // batch rows, sorted by sample_id
  std::vector<std::size_t> support_row;           // class-major, into `sequences`
  std::vector<std::size_t> query_row;
  std::vector<LstmTrace<T>> lstm;
  RowMatrix<T> features;  // B x H
  RowMatrix<T> pooled;    // N x H
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (query, class) per relation row
  std::vector<RowMatrix<T>> layer_io;  // [pair inputs, output of layer 0, ...]
  BasicTensor<T> scores;               // Q x N
};

template <typename T>
EpisodeTrace<T> forward_episode_trace(const Episode& ep, const RelationNetParams<T>& p) {
  const std::size_t N = ep.n_way(), K = ep.k_shot;
  const std::size_t H = p.config.hidden_size;
  if (N == 0 || K == 0 || ep.support.size() != N * K || ep.query.empty() || ep.query_labels.size() != ep.query.size())
    throw InvalidInputError("forward_episode: malformed episode");

  EpisodeTrace<T> tr;
  // A canonical batch layout makes the scores independent of class and shot
  // order down to the last bit.
  std::vector<const GestureSequence*> all(ep.support);
  all.insert(all.end(), ep.query.begin(), ep.query.end());
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return all[a]->sample_id < all[b]->sample_id; });
  std::vector<std::size_t> row_of(all.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    tr.sequences.push_back(all[order[r]]);
    row_of[order[r]] = r;
  }
  for (std::size_t r = 1; r < tr.sequences.size(); ++r)
    if (tr.sequences[r]->sample_id == tr.sequences[r - 1]->sample_id)
      throw InvalidInputError("forward_episode: sample '" + tr.sequences[r]->sample_id + "' appears twice");
  tr.support_row.assign(row_of.begin(), row_of.begin() + static_cast<std::ptrdiff_t>(ep.support.size()));
  tr.query_row.assign(row_of.begin() + static_cast<std::ptrdiff_t>(ep.support.size()), row_of.end());

  const std::size_t B = tr.sequences.size();
  RowMatrix<T> x(static_cast<Eigen::Index>(kSequenceLength * B), static_cast<Eigen::Index>(p.config.input_size));
  if (p.config.input_size != kFrameValues) throw DimensionError("relation net input size must be 63");
  for (std::size_t t = 0; t < kSequenceLength; ++t)
    for (std::size_t b = 0; b < B; ++b) {
      const auto& c = tr.sequences[b]->frames[t].coords;
      T* row = &x(static_cast<Eigen::Index>(t * B + b), 0);
      for (std::size_t v = 0; v < kFrameValues; ++v) row[v] = static_cast<T>(c[v]);
    }
  for (std::size_t l = 0; l < p.embedding.size(); ++l) {
    RowMatrix<T> in = l == 0 ? std::move(x) : RowMatrix<T>(tr.lstm.back().output_sequence());
    tr.lstm.push_back(lstm_forward_batch<T>(std::move(in), kSequenceLength, p.embedding[l]));
  }
  tr.features = tr.lstm.back().final_hidden();

  tr.pooled.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(H));
  for (std::size_t c = 0; c < N; ++c) {
    std::vector<std::vector<T>> shots;
    for (std::size_t k = 0; k < K; ++k) {
      const auto r = static_cast<Eigen::Index>(tr.support_row[c * K + k]);
      shots.emplace_back(&tr.features(r, 0), &tr.features(r, 0) + H);
    }
    const auto pooled = pool_support<T>(std::move(shots), p.config.pooling);
    std::copy(pooled.begin(), pooled.end(), &tr.pooled(static_cast<Eigen::Index>(c), 0));
  }

  const std::size_t Q = ep.query.size();
  for (std::size_t i = 0; i < Q; ++i)
    for (std::size_t c = 0; c < N; ++c) tr.pairs.emplace_back(i, c);
  std::sort(tr.pairs.begin(), tr.pairs.end(), [&](const auto& a, const auto& b) {
    const auto& qa = ep.query[a.first]->sample_id;
    const auto& qb = ep.query[b.first]->sample_id;
    if (qa != qb) return qa < qb;
    return ep.class_order[a.second] < ep.class_order[b.second];
  });
  RowMatrix<T> z(static_cast<Eigen::Index>(tr.pairs.size()), static_cast<Eigen::Index>(2 * H));
  for (std::size_t r = 0; r < tr.pairs.size(); ++r) {
    const auto [i, c] = tr.pairs[r];
    z.row(static_cast<Eigen::Index>(r)).head(static_cast<Eigen::Index>(H)) = tr.pooled.row(static_cast<Eigen::Index>(c));
    z.row(static_cast<Eigen::Index>(r)).tail(static_cast<Eigen::Index>(H)) =
        tr.features.row(static_cast<Eigen::Index>(tr.query_row[i]));
  }
  tr.layer_io.push_back(std::move(z));
  for (const auto& layer : p.relation) tr.layer_io.push_back(dense_forward_batch<T>(tr.layer_io.back(), layer));

  tr.scores = BasicTensor<T>({Q, N});
  const auto& out = tr.layer_io.back();
  for (std::size_t r = 0; r < tr.pairs.size(); ++r)
    tr.scores(tr.pairs[r].first, tr.pairs[r].second) = out(static_cast<Eigen::Index>(r), 0);
  return tr;
}

/// Relation scores: row i, column j = query i against class_order[j].
template <typename T>
BasicTensor<T> forward_episode(const Episode& ep, const RelationNetParams<T>& p) {
  return forward_episode_trace(ep, p).scores;
}

/// Gradients of a loss with d(loss)/d(scores) = `d_scores`.
template <typename T>
RelationNetParams<T> backward_episode(const EpisodeTrace<T>& tr, const Episode& ep, const RelationNetParams<T>& p,
                                      const BasicTensor<T>& d_scores) {
  const std::size_t N = ep.n_way(), K = ep.k_shot, H = p.config.hidden_size;
  RelationNetParams<T> grad(p.config);

  RowMatrix<T> dy(static_cast<Eigen::Index>(tr.pairs.size()), 1);
  for (std::size_t r = 0; r < tr.pairs.size(); ++r) dy(static_cast<Eigen::Index>(r), 0) = d_scores(tr.pairs[r].first, tr.pairs[r].second);
  for (std::size_t l = p.relation.size(); l-- > 0;)
    dy = dense_backward_batch<T>(tr.layer_io[l], tr.layer_io[l + 1], std::move(dy), p.relation[l], grad.relation[l]);

  RowMatrix<T> d_pooled = RowMatrix<T>::Zero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(H));
  const std::size_t B = tr.sequences.size();
  RowMatrix<T> d_feat = RowMatrix<T>::Zero(static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(H));
  for (std::size_t r = 0; r < tr.pairs.size(); ++r) {
    const auto [i, c] = tr.pairs[r];
    d_pooled.row(static_cast<Eigen::Index>(c)) += dy.row(static_cast<Eigen::Index>(r)).head(static_cast<Eigen::Index>(H));
    d_feat.row(static_cast<Eigen::Index>(tr.query_row[i])) += dy.row(static_cast<Eigen::Index>(r)).tail(static_cast<Eigen::Index>(H));
  }
  const T pool_scale = (p.config.pooling == Pooling::mean) ? T(1) / static_cast<T>(K) : T(1);
  for (std::size_t c = 0; c < N; ++c)
    for (std::size_t k = 0; k < K; ++k)
      d_feat.row(static_cast<Eigen::Index>(tr.support_row[c * K + k])) += pool_scale * d_pooled.row(static_cast<Eigen::Index>(c));

  RowMatrix<T> d_hidden = RowMatrix<T>::Zero(static_cast<Eigen::Index>(kSequenceLength * B), static_cast<Eigen::Index>(H));
  d_hidden.bottomRows(static_cast<Eigen::Index>(B)) = d_feat;
  for (std::size_t l = p.embedding.size(); l-- > 0;)
    d_hidden = lstm_backward_batch<T>(tr.lstm[l], p.embedding[l], d_hidden, grad.embedding[l], l > 0);
  return grad;
}

struct LossValue {
  double mse = 0;
  double rmse = 0;
};

/// MSE between relation scores and one-hot query labels; RMSE alongside.
template <typename T>
LossValue episode_loss(const BasicTensor<T>& scores, std::span<const std::size_t> labels) {
  const auto target = one_hot<T>(labels, scores.cols());
  const double mse = static_cast<double>(mse_loss(scores, target));
  return {mse, std::sqrt(mse)};
}

/// Loss and parameter gradients for one episode.
template <typename T>
std::pair<LossValue, RelationNetParams<T>> episode_gradient(const Episode& ep, const RelationNetParams<T>& p) {
  const auto tr = forward_episode_trace(ep, p);
  const auto target = one_hot<T>(ep.query_labels, ep.n_way());
  const LossValue loss = episode_loss(tr.scores, ep.query_labels);
  return {loss, backward_episode(tr, ep, p, mse_grad(tr.scores, target))};
}

/// Row-wise argmax, ties to the lowest index.
template <typename T>
std::vector<std::size_t> predict(const BasicTensor<T>& scores) {
  std::vector<std::size_t> out(scores.rows());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < scores.cols(); ++j)
      if (scores(i, j) > scores(i, best)) best = j;
    out[i] = best;
  }
  return out;
}

}  // namespace fewshot
