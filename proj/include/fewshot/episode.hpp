#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fewshot/error.hpp"
#include "fewshot/gesture.hpp"
#include "fewshot/rng.hpp"

namespace fewshot {

struct EpisodeSpec {
  std::size_t n_way = 5;
  std::size_t k_shot = 1;
  std::size_t q_queries = 5;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_way < 2) throw InvalidInputError("n_way must be at least 2");
    if (k_shot < 1) throw InvalidInputError("k_shot must be at least 1");
    if (q_queries < 1) throw InvalidInputError("q_queries must be at least 1");
  }
};

/// One N-way K-shot task. Support and query hold pointers into the dataset
/// the episode was drawn from, grouped class-major in `class_order` order.
struct Episode {
  std::vector<std::string> class_order;
  std::size_t k_shot = 0;
  std::size_t q_queries = 0;
  std::vector<const GestureSequence*> support;  // n_way * k_shot
  std::vector<const GestureSequence*> query;    // n_way * q_queries
  std::vector<std::size_t> query_labels;        // index into class_order

  std::size_t n_way() const { return class_order.size(); }
  const GestureSequence& shot(std::size_t cls, std::size_t k) const { return *support[cls * k_shot + k]; }
};

/// Draws episode `index` of the stream identified by `spec.seed`: n_way
/// distinct classes uniformly from the eligible ones (at least k+q samples),
/// then k+q distinct samples per class, the first k becoming support.
inline Episode sample_episode(const GestureDataset& data, const EpisodeSpec& spec, std::uint64_t index) {
  spec.validate();
  const std::size_t per_class = spec.k_shot + spec.q_queries;
  std::vector<std::string> eligible;
  for (const auto& [label, idx] : data.class_index())
    if (idx.size() >= per_class) eligible.push_back(label);
  if (eligible.size() < spec.n_way)
    throw CapacityError("episode needs " + std::to_string(spec.n_way) + " classes with >= " +
                        std::to_string(per_class) + " samples each, dataset has " + std::to_string(eligible.size()) +
                        " (of " + std::to_string(data.class_count()) + " classes)");

  Rng rng(derive_seed(spec.seed, index));
  rng.partial_shuffle<std::string>(eligible, spec.n_way);

  Episode ep;
  ep.k_shot = spec.k_shot;
  ep.q_queries = spec.q_queries;
  ep.class_order.assign(eligible.begin(), eligible.begin() + static_cast<std::ptrdiff_t>(spec.n_way));
  ep.support.reserve(spec.n_way * spec.k_shot);
  ep.query.reserve(spec.n_way * spec.q_queries);
  std::vector<std::vector<std::size_t>> picks;
  for (const auto& label : ep.class_order) {
    std::vector<std::size_t> idx = data.indices_of(label);
    rng.partial_shuffle<std::size_t>(idx, per_class);
    idx.resize(per_class);
    picks.push_back(std::move(idx));
  }
  for (std::size_t c = 0; c < spec.n_way; ++c)
    for (std::size_t k = 0; k < spec.k_shot; ++k) ep.support.push_back(&data[picks[c][k]]);
  for (std::size_t c = 0; c < spec.n_way; ++c)
    for (std::size_t q = 0; q < spec.q_queries; ++q) {
      ep.query.push_back(&data[picks[c][spec.k_shot + q]]);
      ep.query_labels.push_back(c);
    }
  return ep;
}

}  // namespace fewshot
