#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "fewshot/error.hpp"
#include "fewshot/gesture.hpp"
#include "fewshot/rng.hpp"

namespace fewshot {

// Dataset-free stand-in for extracted hand landmarks. Each class moves a
// fixed 21-point hand along its own wrist trajectory; samples of a class
// differ only by i.i.d. Gaussian coordinate noise.

inline constexpr std::array<const char*, 6> kSyntheticFamilies = {"line",   "circle", "figure8",
                                                                   "zigzag", "spiral", "arc"};

namespace detail {

// Landmark offsets from the wrist in hand units (image y grows downward).
inline constexpr std::array<std::array<float, 3>, kLandmarks> kHandTemplate = {{
    {0.00f, 0.00f, 0.00f},
    {-0.25f, -0.15f, -0.02f}, {-0.45f, -0.30f, -0.03f}, {-0.60f, -0.45f, -0.04f}, {-0.72f, -0.58f, -0.05f},
    {-0.20f, -0.65f, 0.00f}, {-0.22f, -0.90f, -0.01f}, {-0.23f, -1.05f, -0.02f}, {-0.24f, -1.18f, -0.03f},
    {0.00f, -0.68f, 0.00f}, {0.00f, -0.95f, -0.01f}, {0.00f, -1.12f, -0.02f}, {0.00f, -1.26f, -0.03f},
    {0.18f, -0.63f, 0.00f}, {0.20f, -0.86f, -0.01f}, {0.21f, -1.00f, -0.02f}, {0.22f, -1.12f, -0.03f},
    {0.34f, -0.55f, 0.00f}, {0.38f, -0.72f, -0.01f}, {0.40f, -0.83f, -0.02f}, {0.42f, -0.93f, -0.03f},
}};

struct ClassShape {
  std::size_t family = 0;
  double angle = 0;       // trajectory orientation
  double sign = 1;        // direction of travel
  double freq = 1;
  double amplitude = 0.25;
  double hand_scale = 0.1;
  double hand_angle = 0;  // initial in-plane hand rotation
  double hand_spin = 0;   // rotation accumulated over the gesture
  std::size_t length = 49;
  std::size_t start = 0;
};

inline ClassShape class_shape(std::size_t id) {
  ClassShape s;
  const std::size_t v = id / kSyntheticFamilies.size();
  s.family = id % kSyntheticFamilies.size();
  const double turn = 0.6180339887498949 * static_cast<double>(v) + 0.17 * static_cast<double>(s.family);
  s.angle = 2.0 * std::numbers::pi * (turn - std::floor(turn));
  s.sign = (v % 2 == 0) ? 1.0 : -1.0;
  s.freq = 1.0 + static_cast<double>((v / 2) % 2);
  s.amplitude = 0.22 + 0.04 * static_cast<double>(v % 3);
  s.hand_scale = 0.10 + 0.01 * static_cast<double>(id % 3);
  s.hand_angle = 0.5 * std::sin(static_cast<double>(id));
  s.hand_spin = 0.6 * s.sign * (static_cast<double>(id % 4) - 1.5) / 1.5;
  s.length = 38 + (7 * id) % 17;
  s.start = (5 * id) % (kSequenceLength - s.length + 1);
  return s;
}

inline double triangle_wave(double x) {
  const double f = x - std::floor(x);
  return f < 0.5 ? 4.0 * f - 1.0 : 3.0 - 4.0 * f;
}

/// Wrist offset from the image centre at gesture phase u in [0, 1].
inline std::array<double, 2> trajectory(const ClassShape& s, double u) {
  const double A = s.amplitude;
  const double tau = 2.0 * std::numbers::pi;
  double qx = 0, qy = 0;
  switch (s.family) {
    case 0:  // line
      qx = A * (u - 0.5);
      break;
    case 1:  // circle
      qx = 0.5 * A * std::cos(s.sign * tau * s.freq * u);
      qy = 0.5 * A * std::sin(s.sign * tau * s.freq * u);
      break;
    case 2:  // figure eight
      qx = 0.5 * A * std::sin(tau * u);
      qy = 0.25 * A * s.sign * std::sin(2.0 * tau * u);
      break;
    case 3:  // zigzag
      qx = A * (u - 0.5);
      qy = 0.25 * A * triangle_wave(2.0 * (s.freq + 1.0) * u);
      break;
    case 4: {  // spiral
      const double r = 0.5 * A * u;
      qx = r * std::cos(s.sign * tau * (s.freq + 0.5) * u);
      qy = r * std::sin(s.sign * tau * (s.freq + 0.5) * u);
      break;
    }
    default:  // arc
      qx = 0.5 * A * std::cos(s.sign * std::numbers::pi * u);
      qy = 0.5 * A * std::sin(s.sign * std::numbers::pi * u);
      break;
  }
  const double c = std::cos(s.angle), sn = std::sin(s.angle);
  return {c * qx - sn * qy, sn * qx + c * qy};
}

inline std::string class_label(std::size_t id) {
  std::string n = std::to_string(id);
  if (n.size() < 3) n.insert(0, 3 - n.size(), '0');
  return std::string(kSyntheticFamilies[id % kSyntheticFamilies.size()]) + "-" + n;
}

}  // namespace detail

/// Inverse of the generated labels ("circle-007" -> 7).
inline std::size_t synthetic_class_id(const std::string& label) {
  const auto dash = label.rfind('-');
  if (dash == std::string::npos || dash + 1 == label.size())
    throw InvalidInputError("'" + label + "' is not a synthetic class label");
  std::size_t id = 0;
  for (std::size_t i = dash + 1; i < label.size(); ++i) {
    if (label[i] < '0' || label[i] > '9') throw InvalidInputError("'" + label + "' is not a synthetic class label");
    id = id * 10 + static_cast<std::size_t>(label[i] - '0');
  }
  if (detail::class_label(id) != label) throw InvalidInputError("'" + label + "' is not a synthetic class label");
  return id;
}

/// Generates `samples_per_class` samples for each listed class id. Sample
/// `i` of class `c` depends only on (c, i, noise_sigma, seed), so subsets and
/// larger draws agree on the samples they share.
inline GestureDataset gen_synthetic_classes(std::span<const std::size_t> class_ids, std::size_t samples_per_class,
                                            double noise_sigma, std::uint64_t seed) {
  if (noise_sigma < 0) throw InvalidInputError("gen_synthetic: noise_sigma must be non-negative");
  GestureDataset out;
  for (std::size_t id : class_ids) {
    const auto shape = detail::class_shape(id);
    const std::string label = detail::class_label(id);

    GestureSequence clean;
    clean.class_label = label;
    clean.original_pair = {kSyntheticOrigin, kSyntheticFamilies[shape.family]};
    for (std::size_t k = 0; k < shape.length; ++k) {
      const double u = shape.length > 1 ? static_cast<double>(k) / static_cast<double>(shape.length - 1) : 0.0;
      const auto w = detail::trajectory(shape, u);
      const double rot = shape.hand_angle + shape.hand_spin * u;
      const double c = std::cos(rot), sn = std::sin(rot);
      auto& frame = clean.frames[shape.start + k];
      frame.valid = true;
      for (std::size_t j = 0; j < kLandmarks; ++j) {
        const auto& p = detail::kHandTemplate[j];
        const double lx = shape.hand_scale * p[0], ly = shape.hand_scale * p[1];
        frame.coords[3 * j] = static_cast<float>(0.5 + w[0] + c * lx - sn * ly);
        frame.coords[3 * j + 1] = static_cast<float>(0.55 + w[1] + sn * lx + c * ly);
        frame.coords[3 * j + 2] = static_cast<float>(shape.hand_scale * p[2]);
      }
    }

    for (std::size_t i = 0; i < samples_per_class; ++i) {
      GestureSequence s = clean;
      std::string n = std::to_string(i);
      if (n.size() < 4) n.insert(0, 4 - n.size(), '0');
      s.sample_id = label + "/" + n;
      if (noise_sigma > 0) {
        Rng rng(derive_seed(seed, id, i));
        for (auto& f : s.frames) {
          if (!f.valid) continue;
          for (std::size_t v = 0; v < kFrameValues; ++v) {
            const double x = f.coords[v] + noise_sigma * rng.normal();
            f.coords[v] = static_cast<float>(v % 3 == 2 ? std::clamp(x, -1.0, 1.0) : std::clamp(x, 0.0, 1.0));
          }
        }
      }
      out.add(std::move(s));
    }
  }
  return out;
}

inline GestureDataset gen_synthetic(std::size_t n_classes, std::size_t samples_per_class, double noise_sigma,
                                    std::uint64_t seed) {
  if (n_classes < 2) throw InvalidInputError("gen_synthetic: need at least 2 classes");
  std::vector<std::size_t> ids(n_classes);
  for (std::size_t i = 0; i < n_classes; ++i) ids[i] = i;
  return gen_synthetic_classes(ids, samples_per_class, noise_sigma, seed);
}

}  // namespace fewshot
