#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fewshot/adam.hpp"
#include "fewshot/episode.hpp"
#include "fewshot/error.hpp"
#include "fewshot/gesture.hpp"
#include "fewshot/relation_net.hpp"

namespace fewshot {

struct TrainConfig {
  EpisodeSpec spec{5, 1, 5, 0};
  std::size_t episodes = 20000;
  AdamConfig adam{};
  std::size_t eval_every = 500;
  /// Validation episodes per evaluation, with `eval_queries` queries per class.
  std::size_t eval_episodes = 200;
  std::size_t eval_queries = 1;
  double clip_norm = 5.0;
  /// Seeds parameter initialisation and validation episodes; training
  /// episodes come from `spec.seed`.
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  void validate() const {
    spec.validate();
    if (episodes < 1) throw InvalidInputError("episodes must be at least 1");
    if (!(adam.learning_rate > 0)) throw InvalidInputError("learning_rate must be positive");
    if (eval_every < 1) throw InvalidInputError("eval_every must be at least 1");
    if (eval_episodes < 1 || eval_queries < 1) throw InvalidInputError("eval_episodes and eval_queries must be positive");
    if (!(clip_norm > 0)) throw InvalidInputError("clip_norm must be positive");
  }
};

struct EvalReport {
  std::size_t n_way = 0;
  std::size_t k_shot = 0;
  std::size_t q_queries = 0;
  std::uint64_t seed = 0;
  std::size_t episodes = 0;
  double accuracy = 0;
  double ci95_halfwidth = 0;
  std::map<std::string, double> per_class_accuracy;
  double mean_rmse = 0;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j;
  j["n_way"] = r.n_way;
  j["k_shot"] = r.k_shot;
  j["q_queries"] = r.q_queries;
  j["seed"] = r.seed;
  j["episodes"] = r.episodes;
  j["accuracy"] = r.accuracy;
  j["ci95_halfwidth"] = r.ci95_halfwidth;
  j["mean_rmse"] = r.mean_rmse;
  j["per_class_accuracy"] = r.per_class_accuracy;
  return j;
}

inline EvalReport eval_report_from_json(const nlohmann::json& j) {
  try {
    EvalReport r;
    r.n_way = j.at("n_way").get<std::size_t>();
    r.k_shot = j.at("k_shot").get<std::size_t>();
    r.q_queries = j.at("q_queries").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.episodes = j.at("episodes").get<std::size_t>();
    r.accuracy = j.at("accuracy").get<double>();
    r.ci95_halfwidth = j.at("ci95_halfwidth").get<double>();
    r.mean_rmse = j.at("mean_rmse").get<double>();
    r.per_class_accuracy = j.at("per_class_accuracy").get<std::map<std::string, double>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad evaluation report: ") + e.what(), 0);
  }
}

namespace detail {

/// Calls fn(i) for i in [0, n) on up to `threads` workers, contiguous chunks.
inline void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w * chunk; i < std::min(n, (w + 1) * chunk); ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

/// Accuracy of argmax relation scores over `n_episodes` deterministic
/// episodes of `spec` (episode i is sample_episode(data, spec, i)).
template <typename T>
EvalReport evaluate(const RelationNetParams<T>& params, const GestureDataset& data, const EpisodeSpec& spec,
                    std::size_t n_episodes = 1000, std::size_t threads = 1) {
  spec.validate();
  if (n_episodes == 0) throw InvalidInputError("evaluate: n_episodes must be positive");
  // Fail fast on capacity before spawning workers.
  (void)sample_episode(data, spec, 0);

  struct EpisodeResult {
    double rmse = 0;
    std::vector<std::pair<std::string, bool>> outcomes;
  };
  std::vector<EpisodeResult> results(n_episodes);
  detail::parallel_for(n_episodes, threads, [&](std::size_t e) {
    const Episode ep = sample_episode(data, spec, e);
    const auto scores = forward_episode(ep, params);
    const auto pred = predict(scores);
    auto& res = results[e];
    res.rmse = episode_loss(scores, ep.query_labels).rmse;
    for (std::size_t i = 0; i < pred.size(); ++i)
      res.outcomes.emplace_back(ep.class_order[ep.query_labels[i]], pred[i] == ep.query_labels[i]);
  });

  EvalReport r;
  r.n_way = spec.n_way;
  r.k_shot = spec.k_shot;
  r.q_queries = spec.q_queries;
  r.seed = spec.seed;
  r.episodes = n_episodes;
  std::size_t correct = 0, total = 0;
  double rmse_sum = 0;
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_class;
  for (const auto& res : results) {
    rmse_sum += res.rmse;
    for (const auto& [label, ok] : res.outcomes) {
      auto& pc = per_class[label];
      pc.first += ok ? 1 : 0;
      pc.second += 1;
      correct += ok ? 1 : 0;
      total += 1;
    }
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(total);
  r.ci95_halfwidth = 1.96 * std::sqrt(r.accuracy * (1.0 - r.accuracy) / static_cast<double>(n_episodes));
  r.mean_rmse = rmse_sum / static_cast<double>(n_episodes);
  for (const auto& [label, c] : per_class)
    r.per_class_accuracy[label] = static_cast<double>(c.first) / static_cast<double>(c.second);
  return r;
}

struct HistoryRow {
  std::size_t episode = 0;
  double loss_mse = 0;
  double loss_rmse = 0;
  std::optional<double> val_accuracy;
};

struct TrainResult {
  RelationNetParams<float> best;
  RelationNetParams<float> last;
  std::vector<HistoryRow> history;
  std::optional<EvalReport> best_val;
  std::optional<EvalReport> last_val;
  std::size_t best_episode = 0;
};

using ProgressFn = std::function<void(const HistoryRow&)>;

/// Episodic meta-training with Adam and global-norm gradient clipping. When
/// `val` is non-empty the parameters are evaluated every `eval_every`
/// episodes (and after the last one) and the best validation accuracy wins;
/// otherwise the final parameters are returned as best.
inline TrainResult meta_train(const GestureDataset& train, const GestureDataset& val,
                              const RelationNetConfig& net_config, const TrainConfig& config,
                              const ProgressFn& progress = {}) {
  config.validate();
  TrainResult out;
  auto params = make_relation_net<float>(net_config, derive_seed(config.seed, 1));
  AdamState<float> adam(config.adam);
  EpisodeSpec val_spec = config.spec;
  val_spec.q_queries = config.eval_queries;
  val_spec.seed = derive_seed(config.seed, 2);
  (void)sample_episode(train, config.spec, 0);
  if (!val.empty()) (void)sample_episode(val, val_spec, 0);

  out.history.reserve(config.episodes);
  for (std::size_t e = 0; e < config.episodes; ++e) {
    const Episode ep = sample_episode(train, config.spec, e);
    auto [loss, grad] = episode_gradient(ep, params);
    if (!std::isfinite(loss.mse)) throw DivergedError("non-finite training loss", static_cast<long long>(e));
    const auto grads = grad.tensors();
    clip_global_norm(grads, config.clip_norm);
    try {
      const auto cgrads = std::as_const(grad).tensors();
      adam_update(params.tensors(), cgrads, adam);
    } catch (const DivergedError& err) {
      throw DivergedError(err.what(), static_cast<long long>(e));
    }

    HistoryRow row{e, loss.mse, loss.rmse, std::nullopt};
    if (!val.empty() && ((e + 1) % config.eval_every == 0 || e + 1 == config.episodes)) {
      auto report = evaluate(params, val, val_spec, config.eval_episodes, config.threads);
      row.val_accuracy = report.accuracy;
      if (!out.best_val || report.accuracy > out.best_val->accuracy) {
        out.best = params;
        out.best_val = report;
        out.best_episode = e;
      }
      out.last_val = std::move(report);
    }
    if (progress) progress(row);
    out.history.push_back(row);
  }
  out.last = params;
  if (!out.best_val) {
    out.best = params;
    out.best_episode = config.episodes - 1;
  }
  return out;
}

inline void write_history_csv(std::ostream& out, const std::vector<HistoryRow>& history) {
  const auto num = [](double v) {
    char buf[32];
    return std::string(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
  };
  out << "episode,loss_mse,loss_rmse,val_accuracy\n";
  for (const auto& r : history) {
    out << r.episode << ',' << num(r.loss_mse) << ',' << num(r.loss_rmse) << ',';
    if (r.val_accuracy) out << num(*r.val_accuracy);
    out << '\n';
  }
}

struct SweepCandidate {
  std::string name;
  RelationNetConfig net;
  TrainConfig train;
};

struct SweepOutcome {
  std::string name;
  double val_rmse = 0;
  double val_accuracy = 0;
  std::size_t parameter_count = 0;
};

/// Orders by validation RMSE, then by parameter count (smaller first).
inline std::vector<SweepOutcome> rank_sweep(std::vector<SweepOutcome> outcomes) {
  std::stable_sort(outcomes.begin(), outcomes.end(), [](const SweepOutcome& a, const SweepOutcome& b) {
    if (a.val_rmse != b.val_rmse) return a.val_rmse < b.val_rmse;
    return a.parameter_count < b.parameter_count;
  });
  return outcomes;
}

/// Trains every candidate and ranks them by the RMSE of their best
/// checkpoint on `val`.
inline std::vector<SweepOutcome> sweep(const std::vector<SweepCandidate>& candidates, const GestureDataset& train,
                                       const GestureDataset& val) {
  if (candidates.empty()) throw InvalidInputError("sweep: no configurations");
  if (val.empty()) throw InvalidInputError("sweep: ranking needs a validation set");
  std::vector<SweepOutcome> outcomes;
  for (const auto& c : candidates) {
    const auto result = meta_train(train, val, c.net, c.train);
    outcomes.push_back({c.name, result.best_val->mean_rmse, result.best_val->accuracy, result.best.parameter_count()});
  }
  return rank_sweep(std::move(outcomes));
}

}  // namespace fewshot
