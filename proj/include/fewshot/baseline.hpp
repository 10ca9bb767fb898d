#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fewshot/adam.hpp"
#include "fewshot/dense.hpp"
#include "fewshot/error.hpp"
#include "fewshot/gesture.hpp"
#include "fewshot/loss.hpp"
#include "fewshot/lstm.hpp"
#include "fewshot/rng.hpp"
#include "fewshot/training.hpp"

namespace fewshot {

// Conventionally trained reference classifier: LSTM(64) -> dense(256, ReLU)
// -> softmax over the task's classes, trained with cross-entropy and Adam on
// a fixed number of samples per class.

struct SmlConfig {
  std::size_t hidden_size = 64;
  std::size_t dense_size = 256;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  AdamConfig adam{};
  /// Held-out samples per class, disjoint from every training pool.
  std::size_t test_per_class = 50;
  std::size_t max_samples = 512;
  std::uint64_t seed = 0;
};

template <typename T>
struct SmlParams {
  LstmParams<T> lstm;
  DenseParams<T> dense;
  DenseParams<T> out;

  SmlParams() = default;
  SmlParams(std::size_t n_classes, std::size_t hidden = 64, std::size_t dense_size = 256,
            std::size_t input = kFrameValues)
      : lstm(input, hidden), dense(hidden, dense_size, Activation::relu), out(dense_size, n_classes, Activation::softmax) {}

  std::size_t n_classes() const { return out.out_size; }

  std::vector<std::span<T>> tensors() {
    std::vector<std::span<T>> v = lstm.tensors();
    for (auto s : dense.tensors()) v.push_back(s);
    for (auto s : out.tensors()) v.push_back(s);
    return v;
  }
  std::vector<std::span<const T>> tensors() const {
    std::vector<std::span<const T>> v = lstm.tensors();
    for (auto s : dense.tensors()) v.push_back(s);
    for (auto s : out.tensors()) v.push_back(s);
    return v;
  }
  std::size_t parameter_count() const {
    return lstm.parameter_count() + dense.parameter_count() + out.parameter_count();
  }
};

template <typename T>
SmlParams<T> make_sml(std::size_t n_classes, const SmlConfig& config, std::uint64_t seed) {
  SmlParams<T> p(n_classes, config.hidden_size, config.dense_size);
  Rng rng(seed);
  init_lstm(p.lstm, rng);
  init_dense(p.dense, rng);
  init_dense(p.out, rng);
  return p;
}

template <typename T>
struct SmlTrace {
  LstmTrace<T> lstm;
  RowMatrix<T> features;
  RowMatrix<T> hidden;
  RowMatrix<T> probs;
};

template <typename T>
SmlTrace<T> sml_forward(const SmlParams<T>& p, std::span<const GestureSequence* const> batch) {
  if (batch.empty()) throw InvalidInputError("sml_forward: empty batch");
  const std::size_t B = batch.size();
  RowMatrix<T> x(static_cast<Eigen::Index>(kSequenceLength * B), static_cast<Eigen::Index>(kFrameValues));
  for (std::size_t t = 0; t < kSequenceLength; ++t)
    for (std::size_t b = 0; b < B; ++b) {
      const auto& c = batch[b]->frames[t].coords;
      T* row = &x(static_cast<Eigen::Index>(t * B + b), 0);
      for (std::size_t v = 0; v < kFrameValues; ++v) row[v] = static_cast<T>(c[v]);
    }
  SmlTrace<T> tr;
  tr.lstm = lstm_forward_batch<T>(std::move(x), kSequenceLength, p.lstm);
  tr.features = tr.lstm.final_hidden();
  tr.hidden = dense_forward_batch<T>(tr.features, p.dense);
  tr.probs = dense_forward_batch<T>(tr.hidden, p.out);
  return tr;
}

/// Mean cross-entropy of a batch and its parameter gradients.
template <typename T>
std::pair<double, SmlParams<T>> sml_gradient(const SmlParams<T>& p, std::span<const GestureSequence* const> batch,
                                             std::span<const std::size_t> labels) {
  if (labels.size() != batch.size()) throw DimensionError("sml_gradient: labels and batch differ in size");
  const auto tr = sml_forward(p, batch);
  BasicTensor<T> probs({batch.size(), p.n_classes()});
  as_matrix(probs) = tr.probs;
  const double loss = static_cast<double>(cross_entropy_loss(probs, labels));

  SmlParams<T> g(p.n_classes(), p.lstm.hidden_size, p.dense.out_size, p.lstm.input_size);
  // Softmax and cross-entropy are differentiated together; the output layer
  // is then treated as linear.
  RowMatrix<T> dz = softmax_cross_entropy_grad<T>(tr.probs, labels);
  as_matrix(g.out.W).noalias() += dz.transpose() * tr.hidden;
  VectorMap<T>(g.out.b.data(), p.n_classes()) += dz.colwise().sum().transpose();
  RowMatrix<T> d_hidden = dz * as_matrix(p.out.W);
  RowMatrix<T> d_feat = dense_backward_batch<T>(tr.features, tr.hidden, std::move(d_hidden), p.dense, g.dense);
  const auto B = static_cast<Eigen::Index>(batch.size());
  RowMatrix<T> d_seq = RowMatrix<T>::Zero(static_cast<Eigen::Index>(kSequenceLength) * B,
                                          static_cast<Eigen::Index>(p.lstm.hidden_size));
  d_seq.bottomRows(B) = d_feat;
  lstm_backward_batch<T>(tr.lstm, p.lstm, d_seq, g.lstm, false);
  return {loss, std::move(g)};
}

template <typename T>
std::vector<std::size_t> sml_predict(const SmlParams<T>& p, std::span<const GestureSequence* const> batch) {
  const auto tr = sml_forward(p, batch);
  std::vector<std::size_t> out(batch.size());
  for (Eigen::Index r = 0; r < tr.probs.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < tr.probs.cols(); ++c)
      if (tr.probs(r, c) > tr.probs(r, best)) best = c;
    out[static_cast<std::size_t>(r)] = static_cast<std::size_t>(best);
  }
  return out;
}

/// Per-class sample order: the first `test_per_class` indices are the test
/// pool, the rest feed training in order, so a run with s samples per class
/// trains on a prefix of the run with 2s.
struct SmlPools {
  std::vector<std::string> classes;
  std::vector<std::vector<std::size_t>> test;
  std::vector<std::vector<std::size_t>> train;
};

inline SmlPools make_sml_pools(const GestureDataset& data, const std::vector<std::string>& classes,
                               std::size_t test_per_class, std::uint64_t seed) {
  SmlPools pools;
  pools.classes = classes;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    std::vector<std::size_t> idx = data.indices_of(classes[c]);
    if (idx.size() <= test_per_class)
      throw CapacityError("class '" + classes[c] + "' has " + std::to_string(idx.size()) + " samples, " +
                          std::to_string(test_per_class) + " are reserved for testing");
    Rng rng(derive_seed(seed, 0x5e1, c));
    rng.shuffle<std::size_t>(idx);
    pools.test.emplace_back(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(test_per_class));
    pools.train.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(test_per_class), idx.end());
  }
  return pools;
}

struct SmlRun {
  SmlParams<float> params;
  double test_accuracy = 0;
  double best_train_loss = 0;
};

/// Trains on exactly `samples_per_class` samples of each listed class and
/// reports accuracy on the held-out pool. The parameters kept are those of
/// the epoch with the lowest mean training loss.
inline SmlRun train_sml(const GestureDataset& data, const std::vector<std::string>& classes,
                        std::size_t samples_per_class, const SmlConfig& config) {
  if (classes.size() < 2) throw InvalidInputError("train_sml: need at least 2 classes");
  if (samples_per_class == 0) throw InvalidInputError("train_sml: samples_per_class must be positive");
  const auto pools = make_sml_pools(data, classes, config.test_per_class, config.seed);
  std::vector<const GestureSequence*> train_set, test_set;
  std::vector<std::size_t> train_labels, test_labels;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (pools.train[c].size() < samples_per_class)
      throw CapacityError("class '" + classes[c] + "' has " + std::to_string(pools.train[c].size()) +
                          " training samples, " + std::to_string(samples_per_class) + " requested");
    for (std::size_t s = 0; s < samples_per_class; ++s) {
      train_set.push_back(&data[pools.train[c][s]]);
      train_labels.push_back(c);
    }
    for (std::size_t i : pools.test[c]) {
      test_set.push_back(&data[i]);
      test_labels.push_back(c);
    }
  }

  SmlRun run;
  auto params = make_sml<float>(classes.size(), config, derive_seed(config.seed, 0x1417));
  run.params = params;
  run.best_train_loss = std::numeric_limits<double>::infinity();
  AdamState<float> adam(config.adam);
  const std::size_t n = train_set.size();
  const std::size_t batch = std::max<std::size_t>(1, std::min(config.batch_size, n));
  std::vector<std::size_t> order(n);
  for (std::size_t e = 0; e < config.epochs; ++e) {
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(derive_seed(config.seed, 0xe90c, e));
    rng.shuffle<std::size_t>(order);
    double loss_sum = 0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      std::vector<const GestureSequence*> xb;
      std::vector<std::size_t> yb;
      for (std::size_t i = start; i < end; ++i) {
        xb.push_back(train_set[order[i]]);
        yb.push_back(train_labels[order[i]]);
      }
      auto [loss, grad] = sml_gradient<float>(params, xb, yb);
      if (!std::isfinite(loss)) throw DivergedError("non-finite SML training loss");
      adam_update(params.tensors(), std::as_const(grad).tensors(), adam);
      loss_sum += loss * static_cast<double>(end - start);
    }
    const double epoch_loss = loss_sum / static_cast<double>(n);
    if (epoch_loss < run.best_train_loss) {
      run.best_train_loss = epoch_loss;
      run.params = params;
    }
  }

  std::size_t correct = 0;
  for (std::size_t start = 0; start < test_set.size(); start += 256) {
    const std::size_t end = std::min(test_set.size(), start + 256);
    const auto pred = sml_predict<float>(run.params, std::span(test_set).subspan(start, end - start));
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == test_labels[start + i] ? 1 : 0;
  }
  run.test_accuracy = static_cast<double>(correct) / static_cast<double>(test_set.size());
  return run;
}

/// The n classes whose per-class FSL accuracy is closest to the overall
/// accuracy of the report (ties by label).
inline std::vector<std::string> select_classes(const EvalReport& report, std::size_t n) {
  if (report.per_class_accuracy.size() < n)
    throw CapacityError("report covers " + std::to_string(report.per_class_accuracy.size()) + " classes, " +
                        std::to_string(n) + " requested");
  std::vector<std::pair<double, std::string>> ranked;
  for (const auto& [label, acc] : report.per_class_accuracy)
    ranked.emplace_back(std::abs(acc - report.accuracy), label);
  std::sort(ranked.begin(), ranked.end());
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(ranked[i].second);
  return out;
}

struct SweepResult {
  std::size_t samples_per_class = 0;
  double test_accuracy = 0;
  friend bool operator==(const SweepResult&, const SweepResult&) = default;
};

struct SmlSweep {
  std::vector<std::string> classes;
  double fsl_accuracy = 0;
  std::vector<SweepResult> results;
  /// First point whose accuracy strictly exceeds the FSL accuracy.
  std::optional<SweepResult> crossing;
};

/// Trains at 1, 2, 4, ... samples per class up to `config.max_samples`.
/// With `stop_at_crossing` the sweep ends at the first point beating FSL.
inline SmlSweep sweep_sml(const GestureDataset& data, const std::vector<std::string>& classes, double fsl_accuracy,
                          const SmlConfig& config, bool stop_at_crossing = true) {
  SmlSweep sweep;
  sweep.classes = classes;
  sweep.fsl_accuracy = fsl_accuracy;
  for (std::size_t s = 1; s <= config.max_samples; s *= 2) {
    const auto run = train_sml(data, classes, s, config);
    sweep.results.push_back({s, run.test_accuracy});
    if (!sweep.crossing && run.test_accuracy > fsl_accuracy) {
      sweep.crossing = sweep.results.back();
      if (stop_at_crossing) break;
    }
  }
  return sweep;
}

inline nlohmann::json to_json(const SmlSweep& s) {
  nlohmann::json j;
  j["classes"] = s.classes;
  j["fsl_accuracy"] = s.fsl_accuracy;
  j["results"] = nlohmann::json::array();
  for (const auto& r : s.results)
    j["results"].push_back({{"samples_per_class", r.samples_per_class}, {"test_accuracy", r.test_accuracy}});
  if (s.crossing)
    j["crossing"] = {{"samples_per_class", s.crossing->samples_per_class}, {"test_accuracy", s.crossing->test_accuracy}};
  else
    j["crossing"] = nullptr;
  return j;
}

inline SmlSweep sml_sweep_from_json(const nlohmann::json& j) {
  try {
    SmlSweep s;
    s.classes = j.at("classes").get<std::vector<std::string>>();
    s.fsl_accuracy = j.at("fsl_accuracy").get<double>();
    for (const auto& r : j.at("results"))
      s.results.push_back({r.at("samples_per_class").get<std::size_t>(), r.at("test_accuracy").get<double>()});
    const auto& c = j.at("crossing");
    if (!c.is_null()) s.crossing = SweepResult{c.at("samples_per_class").get<std::size_t>(), c.at("test_accuracy").get<double>()};
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad sweep file: ") + e.what(), 0);
  }
}

/// Extra labelled samples the conventional model needs in total:
/// (sml_samples - k_shot) * n_way.
inline long long compute_savings(long long sml_samples, long long k_shot, long long n_way) {
  if (k_shot < 1 || n_way < 1) throw InvalidInputError("compute_savings: k_shot and n_way must be positive");
  if (sml_samples < k_shot)
    throw InvalidInputError("compute_savings: sml_samples (" + std::to_string(sml_samples) + ") < k_shot (" +
                            std::to_string(k_shot) + ")");
  return (sml_samples - k_shot) * n_way;
}

struct SavingsReport {
  std::size_t n_way = 0;
  std::size_t k_shot = 0;
  double fsl_accuracy = 0;
  std::size_t sml_samples = 0;
  double sml_accuracy = 0;
  long long savings = 0;
  friend bool operator==(const SavingsReport&, const SavingsReport&) = default;
};

inline SavingsReport make_savings_report(const EvalReport& fsl, const SmlSweep& sweep) {
  if (!sweep.crossing) throw InvalidInputError("SML sweep never exceeded the FSL accuracy; no savings to report");
  SavingsReport r;
  r.n_way = fsl.n_way;
  r.k_shot = fsl.k_shot;
  r.fsl_accuracy = fsl.accuracy;
  r.sml_samples = sweep.crossing->samples_per_class;
  r.sml_accuracy = sweep.crossing->test_accuracy;
  r.savings = compute_savings(static_cast<long long>(r.sml_samples), static_cast<long long>(r.k_shot),
                              static_cast<long long>(r.n_way));
  return r;
}

inline nlohmann::ordered_json to_json(const SavingsReport& r) {
  nlohmann::ordered_json j;
  j["n_way"] = r.n_way;
  j["k_shot"] = r.k_shot;
  j["fsl_accuracy"] = r.fsl_accuracy;
  j["sml_samples"] = r.sml_samples;
  j["sml_accuracy"] = r.sml_accuracy;
  j["savings"] = r.savings;
  return j;
}

inline SavingsReport savings_report_from_json(const nlohmann::json& j) {
  try {
    SavingsReport r;
    r.n_way = j.at("n_way").get<std::size_t>();
    r.k_shot = j.at("k_shot").get<std::size_t>();
    r.fsl_accuracy = j.at("fsl_accuracy").get<double>();
    r.sml_samples = j.at("sml_samples").get<std::size_t>();
    r.sml_accuracy = j.at("sml_accuracy").get<double>();
    r.savings = j.at("savings").get<long long>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad savings report: ") + e.what(), 0);
  }
}

}  // namespace fewshot
