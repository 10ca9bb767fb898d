#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "fewshot/adam.hpp"
#include "fewshot/rng.hpp"
#include "oracles.hpp"

using namespace fewshot;

namespace {

double first_step(double g) {
  std::vector<double> theta{0.0}, grad{g};
  AdamState<double> s(AdamConfig{});
  adam_update<double>({std::span<double>(theta)}, {std::span<const double>(grad)}, s);
  return std::abs(theta[0]);
}

}  // namespace

TEST(Adam, FirstStepMagnitudeNearLearningRate) {
  // |dtheta| = lr * |g| / (|g| + eps) on the first step.
  for (double g : {1.0, -1.0, 1e3, -1e3}) EXPECT_NEAR(first_step(g) / 1e-3, 1.0, 1e-6) << g;
  EXPECT_NEAR(first_step(1e-3) / 1e-3, 1.0 / (1.0 + 1e-5), 1e-12);
}

TEST(Adam, ZeroGradientIsFixedPoint) {
  std::vector<float> theta{1.5f, -2.f}, grad{0.f, 0.f};
  AdamState<float> s(AdamConfig{});
  for (int i = 0; i < 5; ++i) adam_update<float>({std::span<float>(theta)}, {std::span<const float>(grad)}, s);
  EXPECT_EQ(theta, (std::vector<float>{1.5f, -2.f}));
  EXPECT_EQ(s.step, 5);
}

TEST(Adam, QuadraticTraceMatchesScalarReference) {
  AdamConfig c;
  c.learning_rate = 0.1;
  AdamState<double> s(c);
  oracle::ScalarAdam ref{0.1};
  std::vector<double> w{1.0};
  double wr = 1.0;
  const double frozen[3] = {0.9000000005, 0.8004122286917928, 0.7015862729460303};
  for (int t = 0; t < 3; ++t) {
    std::vector<double> g{2.0 * w[0]};
    wr = ref.step(wr, 2.0 * wr);
    adam_update<double>({std::span<double>(w)}, {std::span<const double>(g)}, s);
    EXPECT_NEAR(w[0], wr, 1e-15);
    EXPECT_NEAR(w[0], frozen[t], 1e-15);
  }
}

TEST(Adam, SecondMomentNonNegativeAndStepCounts) {
  Rng rng(3);
  std::vector<float> theta(50), grad(50);
  AdamState<float> s(AdamConfig{});
  for (int t = 0; t < 100; ++t) {
    for (float& g : grad) g = static_cast<float>(rng.normal() * 10);
    adam_update<float>({std::span<float>(theta)}, {std::span<const float>(grad)}, s);
    EXPECT_EQ(s.step, t + 1);
    for (float v : s.v[0]) EXPECT_GE(v, 0.f);
  }
}

TEST(Adam, NonFiniteGradientLeavesStateUntouched) {
  std::vector<float> theta{1.f}, grad{std::numeric_limits<float>::quiet_NaN()};
  AdamState<float> s(AdamConfig{});
  EXPECT_THROW(adam_update<float>({std::span<float>(theta)}, {std::span<const float>(grad)}, s), DivergedError);
  EXPECT_EQ(theta[0], 1.f);
  EXPECT_EQ(s.step, 0);
  grad[0] = std::numeric_limits<float>::infinity();
  EXPECT_THROW(adam_update<float>({std::span<float>(theta)}, {std::span<const float>(grad)}, s), DivergedError);
}

TEST(Adam, ShapeMismatchThrows) {
  std::vector<float> theta{1.f, 2.f}, grad{1.f};
  AdamState<float> s(AdamConfig{});
  EXPECT_THROW(adam_update<float>({std::span<float>(theta)}, {std::span<const float>(grad)}, s), DimensionError);
}

TEST(Adam, ClipGlobalNorm) {
  std::vector<float> a{3.f}, b{4.f};
  const double n = clip_global_norm<float>({std::span<float>(a), std::span<float>(b)}, 1.0);
  EXPECT_DOUBLE_EQ(n, 5.0);
  EXPECT_NEAR(a[0], 0.6f, 1e-7);
  EXPECT_NEAR(b[0], 0.8f, 1e-7);
  std::vector<float> c{0.1f};
  clip_global_norm<float>({std::span<float>(c)}, 1.0);
  EXPECT_EQ(c[0], 0.1f);
}
