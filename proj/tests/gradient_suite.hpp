#pragma once

#include <cstdint>
#include <vector>

#include "fewshot/baseline.hpp"
#include "fewshot/episode.hpp"
#include "fewshot/relation_net.hpp"
#include "fewshot/synthetic.hpp"
#include "oracles.hpp"

namespace gradsuite {

using namespace fewshot;

inline void jitter_parameters(std::vector<std::span<double>> tensors, Rng& rng) {
  for (auto t : tensors)
    for (double& v : t) v += rng.uniform(-0.1, 0.1);
}

/// Relation net with H=4 and one hidden relation layer of 8, on a 3-way
/// 2-shot 2-query episode of noisy synthetic data.
inline oracle::GradCheck relation_net_check(std::uint64_t seed, Pooling pooling = Pooling::sum,
                                           std::size_t lstm_layers = 1, double h = 1e-3) {
  const auto data = gen_synthetic(4, 5, 0.05, seed);
  const Episode ep = sample_episode(data, EpisodeSpec{3, 2, 2, seed}, 0);
  RelationNetConfig cfg;
  cfg.hidden_size = 4;
  cfg.relation_hidden = {8};
  cfg.pooling = pooling;
  cfg.lstm_layers = lstm_layers;
  auto p = make_relation_net<double>(cfg, derive_seed(seed, 77));
  Rng rng(derive_seed(seed, 78));
  jitter_parameters(p.tensors(), rng);

  const auto analytic = episode_gradient(ep, p).second;
  const auto probe = [&] {
    const auto tr = forward_episode_trace(ep, p);
    oracle::Probe out{episode_loss(tr.scores, ep.query_labels).mse, {}};
    for (std::size_t l = 1; l + 1 < tr.layer_io.size(); ++l)
      for (double v : tr.layer_io[l].reshaped()) out.relu_on.push_back(v > 0);
    return out;
  };
  return oracle::finite_difference(p.tensors(), analytic.tensors(), probe, h);
}

/// Baseline classifier with LSTM 4 and dense 8 over 3 classes, batch of 6.
inline oracle::GradCheck sml_check(std::uint64_t seed, double h = 1e-3) {
  const auto data = gen_synthetic(3, 2, 0.05, seed);
  std::vector<const GestureSequence*> batch;
  std::vector<std::size_t> labels;
  const auto classes = data.classes();
  for (std::size_t c = 0; c < classes.size(); ++c)
    for (std::size_t i : data.indices_of(classes[c])) {
      batch.push_back(&data[i]);
      labels.push_back(c);
    }
  SmlConfig cfg;
  cfg.hidden_size = 4;
  cfg.dense_size = 8;
  auto p = make_sml<double>(classes.size(), cfg, derive_seed(seed, 79));
  Rng rng(derive_seed(seed, 80));
  jitter_parameters(p.tensors(), rng);

  const auto analytic = sml_gradient<double>(p, batch, labels).second;
  const auto probe = [&] {
    const auto tr = sml_forward<double>(p, batch);
    oracle::Probe out;
    for (std::size_t i = 0; i < labels.size(); ++i)
      out.loss -= std::log(tr.probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(labels[i])));
    out.loss /= static_cast<double>(labels.size());
    for (double v : tr.hidden.reshaped()) out.relu_on.push_back(v > 0);
    return out;
  };
  return oracle::finite_difference(p.tensors(), analytic.tensors(), probe, h);
}

}  // namespace gradsuite
