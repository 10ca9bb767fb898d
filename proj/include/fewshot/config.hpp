#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <type_traits>

#include <json.hpp>

#include "fewshot/baseline.hpp"
#include "fewshot/error.hpp"
#include "fewshot/relation_net.hpp"
#include "fewshot/training.hpp"

namespace fewshot {

/// Everything a run needs besides data. JSON layout:
///   {"threads": N,
///    "model": {input_size, hidden_size, lstm_layers, relation_hidden, pooling},
///    "train": {n_way, k_shot, q_queries, episodes, learning_rate, beta1, beta2, epsilon,
///              clip_norm, eval_every, eval_episodes, eval_queries, seed, episode_seed},
///    "eval":  {episodes, queries, seed},
///    "sml":   {hidden_size, dense_size, epochs, batch_size, learning_rate, test_per_class,
///              max_samples, seed}}
/// Every key is optional; unknown keys are rejected.
struct RunConfig {
  RelationNetConfig net;
  TrainConfig train;
  std::size_t eval_episodes = 1000;
  std::size_t eval_queries = 1;
  std::uint64_t eval_seed = 0;
  SmlConfig sml;
  /// 0 means one worker per hardware thread.
  std::size_t threads = 0;

  std::size_t worker_count() const {
    if (threads) return threads;
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
  }
};

inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return s;
}

inline nlohmann::ordered_json to_json(const RelationNetConfig& c) {
  nlohmann::ordered_json j;
  j["input_size"] = c.input_size;
  j["hidden_size"] = c.hidden_size;
  j["lstm_layers"] = c.lstm_layers;
  j["relation_hidden"] = c.relation_hidden;
  j["pooling"] = to_string(c.pooling);
  return j;
}

inline nlohmann::ordered_json train_to_json(const TrainConfig& t) {
  nlohmann::ordered_json j;
  j["n_way"] = t.spec.n_way;
  j["k_shot"] = t.spec.k_shot;
  j["q_queries"] = t.spec.q_queries;
  j["episodes"] = t.episodes;
  j["learning_rate"] = t.adam.learning_rate;
  j["beta1"] = t.adam.beta1;
  j["beta2"] = t.adam.beta2;
  j["epsilon"] = t.adam.epsilon;
  j["clip_norm"] = t.clip_norm;
  j["eval_every"] = t.eval_every;
  j["eval_episodes"] = t.eval_episodes;
  j["eval_queries"] = t.eval_queries;
  j["seed"] = t.seed;
  j["episode_seed"] = t.spec.seed;
  return j;
}

inline nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["threads"] = c.threads;
  j["model"] = to_json(c.net);
  j["train"] = train_to_json(c.train);
  j["eval"] = {{"episodes", c.eval_episodes}, {"queries", c.eval_queries}, {"seed", c.eval_seed}};
  nlohmann::ordered_json s;
  s["hidden_size"] = c.sml.hidden_size;
  s["dense_size"] = c.sml.dense_size;
  s["epochs"] = c.sml.epochs;
  s["batch_size"] = c.sml.batch_size;
  s["learning_rate"] = c.sml.adam.learning_rate;
  s["test_per_class"] = c.sml.test_per_class;
  s["max_samples"] = c.sml.max_samples;
  s["seed"] = c.sml.seed;
  j["sml"] = s;
  return j;
}

namespace detail {

class ConfigReader {
 public:
  ConfigReader(const nlohmann::json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw InvalidInputError("config: '" + where_ + "' must be an object");
  }

  void only(std::initializer_list<const char*> keys) const {
    for (const auto& [k, _] : j_.items()) {
      bool known = false;
      for (const char* allowed : keys) known = known || k == allowed;
      if (!known) throw InvalidInputError("config: unknown key '" + path(k) + "'");
    }
  }

  template <typename V>
  void get(const char* key, V& out) const {
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      if constexpr (std::is_unsigned_v<V>) {
        if (!it->is_number_unsigned()) throw InvalidInputError("");
      } else if constexpr (std::is_floating_point_v<V>) {
        if (!it->is_number()) throw InvalidInputError("");
      }
      out = it->template get<V>();
    } catch (const std::exception&) {
      throw InvalidInputError("config: bad value for '" + path(key) + "'");
    }
  }

  const nlohmann::json* section(const char* key) const {
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

 private:
  const nlohmann::json& j_;
  std::string where_;
};

}  // namespace detail

/// Applies the keys present in `j` on top of `base`.
inline RunConfig apply_config_json(RunConfig base, const nlohmann::json& j) {
  detail::ConfigReader top(j, "");
  top.only({"threads", "model", "train", "eval", "sml"});
  top.get("threads", base.threads);
  if (const auto* m = top.section("model")) {
    detail::ConfigReader r(*m, "model");
    r.only({"input_size", "hidden_size", "lstm_layers", "relation_hidden", "pooling"});
    r.get("input_size", base.net.input_size);
    r.get("hidden_size", base.net.hidden_size);
    r.get("lstm_layers", base.net.lstm_layers);
    r.get("relation_hidden", base.net.relation_hidden);
    std::string pooling = to_string(base.net.pooling);
    r.get("pooling", pooling);
    base.net.pooling = pooling_from_string(pooling);
  }
  if (const auto* t = top.section("train")) {
    detail::ConfigReader r(*t, "train");
    r.only({"n_way", "k_shot", "q_queries", "episodes", "learning_rate", "beta1", "beta2", "epsilon", "clip_norm",
            "eval_every", "eval_episodes", "eval_queries", "seed", "episode_seed"});
    auto& c = base.train;
    r.get("n_way", c.spec.n_way);
    r.get("k_shot", c.spec.k_shot);
    r.get("q_queries", c.spec.q_queries);
    r.get("episodes", c.episodes);
    r.get("learning_rate", c.adam.learning_rate);
    r.get("beta1", c.adam.beta1);
    r.get("beta2", c.adam.beta2);
    r.get("epsilon", c.adam.epsilon);
    r.get("clip_norm", c.clip_norm);
    r.get("eval_every", c.eval_every);
    r.get("eval_episodes", c.eval_episodes);
    r.get("eval_queries", c.eval_queries);
    r.get("seed", c.seed);
    r.get("episode_seed", c.spec.seed);
  }
  if (const auto* e = top.section("eval")) {
    detail::ConfigReader r(*e, "eval");
    r.only({"episodes", "queries", "seed"});
    r.get("episodes", base.eval_episodes);
    r.get("queries", base.eval_queries);
    r.get("seed", base.eval_seed);
  }
  if (const auto* s = top.section("sml")) {
    detail::ConfigReader r(*s, "sml");
    r.only({"hidden_size", "dense_size", "epochs", "batch_size", "learning_rate", "test_per_class", "max_samples",
            "seed"});
    r.get("hidden_size", base.sml.hidden_size);
    r.get("dense_size", base.sml.dense_size);
    r.get("epochs", base.sml.epochs);
    r.get("batch_size", base.sml.batch_size);
    r.get("learning_rate", base.sml.adam.learning_rate);
    r.get("test_per_class", base.sml.test_per_class);
    r.get("max_samples", base.sml.max_samples);
    r.get("seed", base.sml.seed);
  }
  base.net.validate();
  base.train.validate();
  return base;
}

inline RunConfig parse_run_config(const std::string& text, RunConfig base = {}) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what(), 0);
  }
  return apply_config_json(std::move(base), j);
}

inline RunConfig load_run_config(const std::string& path, RunConfig base = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), std::move(base));
}

/// Digest of the settings that determine a trained model: architecture and
/// training section.
inline std::string config_digest(const RelationNetConfig& net, const TrainConfig& train) {
  nlohmann::ordered_json j;
  j["model"] = to_json(net);
  j["train"] = train_to_json(train);
  return hex64(fnv1a64(j.dump()));
}

}  // namespace fewshot
