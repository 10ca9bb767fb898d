#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fewshot/error.hpp"
#include "fewshot/gesture.hpp"
#include "fewshot/rng.hpp"

namespace fewshot {

namespace detail {

/// `n` frame indices spread uniformly over [0, len), first and last kept.
inline std::vector<std::size_t> uniform_indices(std::size_t len, std::size_t n, bool keep_last) {
  std::vector<std::size_t> idx;
  if (n >= len) {
    for (std::size_t i = 0; i < len; ++i) idx.push_back(i);
    return idx;
  }
  if (n == 1) return {keep_last ? len - 1 : 0};
  for (std::size_t i = 0; i < n; ++i) {
    const double pos = static_cast<double>(i) * static_cast<double>(len - 1) / static_cast<double>(n - 1);
    idx.push_back(static_cast<std::size_t>(std::lround(pos)));
  }
  return idx;
}

}  // namespace detail

/// Appends `b` after `a`. `a` contributes frames up to its last valid one,
/// `b` its span from first to last valid frame. Every valid frame of `b` is
/// translated by wrist(a_last) - wrist(b_first) so the wrist does not jump at
/// the junction. When the two spans exceed 72 frames the longer one is
/// uniformly subsampled (junction frames kept); shorter results are padded
/// with invalid frames.
inline GestureSequence concat_gestures(const GestureSequence& a, const GestureSequence& b,
                                       std::string sample_id = {}) {
  const auto a_last = a.last_valid();
  const auto b_first = b.first_valid();
  const auto b_last = b.last_valid();
  if (!a_last) throw InvalidInputError("concat_gestures: '" + a.sample_id + "' has no valid frame");
  if (!b_first) throw InvalidInputError("concat_gestures: '" + b.sample_id + "' has no valid frame");

  const auto wa = a.frames[*a_last].wrist();
  const auto wb = b.frames[*b_first].wrist();
  const std::array<float, 3> delta{wa[0] - wb[0], wa[1] - wb[1], wa[2] - wb[2]};

  std::vector<LandmarkFrame> part_a(a.frames.begin(), a.frames.begin() + static_cast<std::ptrdiff_t>(*a_last + 1));
  std::vector<LandmarkFrame> part_b(b.frames.begin() + static_cast<std::ptrdiff_t>(*b_first),
                                    b.frames.begin() + static_cast<std::ptrdiff_t>(*b_last + 1));
  for (auto& f : part_b) {
    if (!f.valid) continue;
    for (std::size_t i = 0; i < kFrameValues; ++i) f.coords[i] += delta[i % 3];
  }

  std::size_t keep_a = part_a.size(), keep_b = part_b.size();
  const std::size_t total = keep_a + keep_b;
  if (total > kSequenceLength) {
    // Each part keeps at least its two end frames; if the longer part
    // cannot absorb the excess on its own, both shrink proportionally.
    const std::size_t excess = total - kSequenceLength;
    const std::size_t min_a = std::min<std::size_t>(2, keep_a), min_b = std::min<std::size_t>(2, keep_b);
    if (keep_a >= keep_b && keep_a >= excess + min_a) {
      keep_a -= excess;
    } else if (keep_b > keep_a && keep_b >= excess + min_b) {
      keep_b -= excess;
    } else {
      keep_a = std::clamp((keep_a * kSequenceLength) / total, min_a, kSequenceLength - min_b);
      keep_b = kSequenceLength - keep_a;
    }
  }

  GestureSequence out;
  std::size_t t = 0;
  for (std::size_t i : detail::uniform_indices(part_a.size(), keep_a, /*keep_last=*/true)) out.frames[t++] = part_a[i];
  for (std::size_t i : detail::uniform_indices(part_b.size(), keep_b, /*keep_last=*/false)) out.frames[t++] = part_b[i];
  out.class_label = a.class_label + "+" + b.class_label;
  out.original_pair = {a.class_label, b.class_label};
  out.sample_id = sample_id.empty() ? a.sample_id + "+" + b.sample_id : std::move(sample_id);
  return out;
}

/// Builds combined classes "c1+c2" from ordered pairs of distinct base
/// classes. With `pairs` unset every ordered pair is used; otherwise a seeded
/// subset of that many pairs. Source samples are drawn without replacement.
inline GestureDataset build_combined_dataset(const GestureDataset& base, std::size_t samples_per_class,
                                             std::uint64_t seed, std::optional<std::size_t> pairs = {}) {
  const auto classes = base.classes();
  if (classes.size() < 2) throw InvalidInputError("build_combined_dataset: need at least 2 base classes");
  if (samples_per_class == 0) throw InvalidInputError("build_combined_dataset: samples_per_class must be positive");
  for (const auto& c : classes) {
    const std::size_t have = base.indices_of(c).size();
    if (have < samples_per_class)
      throw CapacityError("class '" + c + "' has " + std::to_string(have) + " samples, " +
                          std::to_string(samples_per_class) + " needed");
  }

  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (std::size_t i = 0; i < classes.size(); ++i)
    for (std::size_t j = 0; j < classes.size(); ++j)
      if (i != j) all.emplace_back(i, j);

  std::vector<std::size_t> chosen(all.size());
  for (std::size_t i = 0; i < chosen.size(); ++i) chosen[i] = i;
  if (pairs && *pairs < all.size()) {
    Rng rng(derive_seed(seed, 0));
    rng.partial_shuffle<std::size_t>(chosen, *pairs);
    chosen.resize(*pairs);
    std::sort(chosen.begin(), chosen.end());
  }

  GestureDataset out;
  for (std::size_t pair_index : chosen) {
    const auto [ci, cj] = all[pair_index];
    Rng rng(derive_seed(seed, 1, pair_index));
    std::vector<std::size_t> src_a = base.indices_of(classes[ci]);
    std::vector<std::size_t> src_b = base.indices_of(classes[cj]);
    rng.partial_shuffle<std::size_t>(src_a, samples_per_class);
    rng.partial_shuffle<std::size_t>(src_b, samples_per_class);
    const std::string label = classes[ci] + "+" + classes[cj];
    for (std::size_t s = 0; s < samples_per_class; ++s)
      out.add(concat_gestures(base[src_a[s]], base[src_b[s]], label + "#" + std::to_string(s)));
  }
  return out;
}

struct SplitSpec {
  std::size_t train = 1;
  std::size_t val = 1;
  std::size_t test = 1;
  std::uint64_t seed = 0;
};

struct DatasetSplit {
  GestureDataset train, val, test;
  /// Original class names assigned to each split.
  std::array<std::vector<std::string>, 3> groups;
  /// Combined classes dropped because their originals straddle groups.
  std::size_t dropped_classes = 0;
};

/// Partitions the original class names into disjoint train/val/test groups
/// and keeps a class only where all of its originals fall in one group.
inline DatasetSplit split_by_original_class(const GestureDataset& data, const SplitSpec& spec) {
  if (spec.train == 0 || spec.val == 0 || spec.test == 0)
    throw InvalidInputError("split: every group needs at least one original class");
  std::set<std::string> originals_set;
  std::vector<std::pair<std::string, std::vector<std::string>>> class_origins;
  for (const auto& [label, idx] : data.class_index()) {
    auto orig = original_classes(data[idx.front()]);
    originals_set.insert(orig.begin(), orig.end());
    class_origins.emplace_back(label, std::move(orig));
  }
  std::vector<std::string> originals(originals_set.begin(), originals_set.end());
  const std::size_t wanted = spec.train + spec.val + spec.test;
  if (wanted > originals.size())
    throw InfeasibleSplitError("split asks for " + std::to_string(wanted) + " original classes but only " +
                               std::to_string(originals.size()) + " exist");
  Rng rng(spec.seed);
  rng.shuffle<std::string>(originals);

  DatasetSplit out;
  std::map<std::string, int> group_of;
  const std::array<std::size_t, 3> counts{spec.train, spec.val, spec.test};
  std::size_t pos = 0;
  for (int g = 0; g < 3; ++g) {
    for (std::size_t i = 0; i < counts[static_cast<std::size_t>(g)]; ++i, ++pos) {
      group_of[originals[pos]] = g;
      out.groups[static_cast<std::size_t>(g)].push_back(originals[pos]);
    }
    std::sort(out.groups[static_cast<std::size_t>(g)].begin(), out.groups[static_cast<std::size_t>(g)].end());
  }

  std::array<std::vector<std::string>, 3> labels;
  for (const auto& [label, orig] : class_origins) {
    std::optional<int> g;
    bool ok = true;
    for (const auto& o : orig) {
      auto it = group_of.find(o);
      if (it == group_of.end() || (g && *g != it->second)) {
        ok = false;
        break;
      }
      g = it->second;
    }
    if (ok && g)
      labels[static_cast<std::size_t>(*g)].push_back(label);
    else
      ++out.dropped_classes;
  }
  static constexpr const char* kNames[3] = {"train", "val", "test"};
  for (std::size_t g = 0; g < 3; ++g)
    if (labels[g].empty())
      throw InfeasibleSplitError(std::string(kNames[g]) + " split receives no classes whose originals all fall in its group");
  out.train = data.restrict_to(labels[0]);
  out.val = data.restrict_to(labels[1]);
  out.test = data.restrict_to(labels[2]);
  return out;
}

/// Moves `per_class` seeded-random samples of every class into a second
/// dataset (e.g. a validation pool drawn from the training classes).
inline std::pair<GestureDataset, GestureDataset> hold_out_samples(const GestureDataset& data, std::size_t per_class,
                                                                  std::uint64_t seed) {
  std::set<std::size_t> held;
  std::size_t k = 0;
  for (const auto& [label, idx] : data.class_index()) {
    if (idx.size() <= per_class)
      throw CapacityError("class '" + label + "' has " + std::to_string(idx.size()) +
                          " samples, cannot hold out " + std::to_string(per_class));
    std::vector<std::size_t> order = idx;
    Rng rng(derive_seed(seed, k++));
    rng.partial_shuffle<std::size_t>(order, per_class);
    held.insert(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(per_class));
  }
  GestureDataset rest, out;
  for (std::size_t i = 0; i < data.size(); ++i) (held.count(i) ? out : rest).add(data[i]);
  return {std::move(rest), std::move(out)};
}

}  // namespace fewshot
