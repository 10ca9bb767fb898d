#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fewshot/error.hpp"

namespace fewshot {

inline constexpr std::size_t kSequenceLength = 72;
inline constexpr std::size_t kLandmarks = 21;
inline constexpr std::size_t kFrameValues = 3 * kLandmarks;
inline constexpr std::size_t kWrist = 0;

/// 21 hand landmarks (x, y, z interleaved, wrist first). Invalid frames carry
/// all-zero coordinates; the flag is authoritative.
struct LandmarkFrame {
  std::array<float, kFrameValues> coords{};
  bool valid = false;

  std::array<float, 3> landmark(std::size_t i) const {
    return {coords[3 * i], coords[3 * i + 1], coords[3 * i + 2]};
  }
  std::array<float, 3> wrist() const { return landmark(kWrist); }

  friend bool operator==(const LandmarkFrame&, const LandmarkFrame&) = default;
};

struct GestureSequence {
  std::array<LandmarkFrame, kSequenceLength> frames{};
  std::string class_label;
  std::pair<std::string, std::string> original_pair;
  std::string sample_id;

  std::size_t valid_count() const {
    return static_cast<std::size_t>(
        std::count_if(frames.begin(), frames.end(), [](const LandmarkFrame& f) { return f.valid; }));
  }
  std::optional<std::size_t> first_valid() const {
    for (std::size_t t = 0; t < kSequenceLength; ++t)
      if (frames[t].valid) return t;
    return std::nullopt;
  }
  std::optional<std::size_t> last_valid() const {
    for (std::size_t t = kSequenceLength; t-- > 0;)
      if (frames[t].valid) return t;
    return std::nullopt;
  }

  friend bool operator==(const GestureSequence&, const GestureSequence&) = default;
};

inline constexpr const char* kSyntheticOrigin = "synthetic";

/// Original (pre-combination) class names a sample is built from. Synthetic
/// and other single-source samples count as their own original.
inline std::vector<std::string> original_classes(const GestureSequence& s) {
  const auto& [a, b] = s.original_pair;
  if (a == kSyntheticOrigin || a.empty()) return {s.class_label};
  if (b.empty() || a == b) return {a};
  return {a, b};
}

/// Checks the per-sequence invariants; `line` is attached to the error.
inline void validate_sequence(const GestureSequence& s, std::size_t line = 0) {
  for (std::size_t t = 0; t < kSequenceLength; ++t) {
    const auto& f = s.frames[t];
    if (!f.valid) {
      for (float v : f.coords)
        if (v != 0.0f)
          throw SchemaError("frame " + std::to_string(t) + " is invalid but has nonzero coordinates", line);
    }
  }
  if (s.valid_count() == 0) throw SchemaError("no valid frame", line);
  if (s.class_label.empty()) throw SchemaError("empty class label", line);
  if (s.sample_id.empty()) throw SchemaError("empty sample_id", line);
}

/// Samples grouped by class label. Classes iterate in label order.
class GestureDataset {
 public:
  GestureDataset() = default;
  explicit GestureDataset(std::vector<GestureSequence> samples) {
    samples_.reserve(samples.size());
    for (auto& s : samples) add(std::move(s));
  }

  void add(GestureSequence s) {
    if (!ids_.insert(s.sample_id).second) throw SchemaError("duplicate sample_id '" + s.sample_id + "'", 0);
    class_index_[s.class_label].push_back(samples_.size());
    samples_.push_back(std::move(s));
  }

  const std::vector<GestureSequence>& samples() const noexcept { return samples_; }
  const std::map<std::string, std::vector<std::size_t>>& class_index() const noexcept { return class_index_; }
  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  std::size_t class_count() const noexcept { return class_index_.size(); }

  std::vector<std::string> classes() const {
    std::vector<std::string> out;
    out.reserve(class_index_.size());
    for (const auto& [label, _] : class_index_) out.push_back(label);
    return out;
  }

  const std::vector<std::size_t>& indices_of(const std::string& label) const {
    auto it = class_index_.find(label);
    if (it == class_index_.end()) throw InvalidInputError("unknown class '" + label + "'");
    return it->second;
  }

  const GestureSequence& operator[](std::size_t i) const { return samples_[i]; }

  /// Subset holding only the given classes, in their original sample order.
  GestureDataset restrict_to(const std::vector<std::string>& labels) const {
    std::set<std::size_t> keep;
    for (const auto& l : labels)
      for (std::size_t i : indices_of(l)) keep.insert(i);
    GestureDataset out;
    for (std::size_t i : keep) out.add(samples_[i]);
    return out;
  }

  friend bool operator==(const GestureDataset& a, const GestureDataset& b) { return a.samples_ == b.samples_; }

 private:
  std::vector<GestureSequence> samples_;
  std::map<std::string, std::vector<std::size_t>> class_index_;
  std::set<std::string> ids_;
};

}  // namespace fewshot
