#include <gtest/gtest.h>

#include <random>

#include "fewshot/tensor.hpp"
#include "oracles.hpp"

using fewshot::DimensionError;
using fewshot::Tensor;

namespace {

Tensor to_tensor(const oracle::Mat& m) {
  Tensor t({m.size(), m[0].size()});
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m[0].size(); ++j) t(i, j) = static_cast<float>(m[i][j]);
  return t;
}

oracle::Mat to_mat(const Tensor& t) {
  oracle::Mat m(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) m[i][j] = t(i, j);
  return m;
}

}  // namespace

TEST(Tensor, ShapeAndVolume) {
  Tensor t({2, 3, 4}, 1.5f);
  EXPECT_EQ(t.size(), 24u);
  EXPECT_EQ(t.rank(), 3u);
  EXPECT_THROW(t.rows(), DimensionError);
  EXPECT_THROW(Tensor({2, 0}), DimensionError);
  EXPECT_THROW(Tensor({2, 2}, std::vector<float>{1, 2, 3}), DimensionError);
  EXPECT_THROW(Tensor::matrix({{1, 2}, {3}}), DimensionError);
}

TEST(Tensor, MatmulIdentity) {
  const auto I = Tensor::matrix({{1, 0}, {0, 1}});
  const auto B = Tensor::matrix({{3, 4}, {5, 6}});
  EXPECT_EQ(fewshot::matmul(I, B), B);
}

TEST(Tensor, MatmulRowTimesColumn) {
  const auto r = fewshot::matmul(Tensor::matrix({{1, 2}}), Tensor::matrix({{3}, {4}}));
  EXPECT_EQ(r.shape(), (fewshot::Shape{1, 1}));
  EXPECT_EQ(r(0, 0), 11.0f);
}

TEST(Tensor, MatmulMatchesTripleLoop) {
  std::mt19937_64 g(42);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = oracle::random_matrix(7, 5, g);
    const auto b = oracle::random_matrix(5, 3, g);
    const auto got = fewshot::matmul(to_tensor(a), to_tensor(b));
    // Compare against the oracle applied to the float-rounded inputs.
    const auto want = oracle::matmul(to_mat(to_tensor(a)), to_mat(to_tensor(b)));
    for (std::size_t i = 0; i < 7; ++i)
      for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(got(i, j), want[i][j], 1e-6);
  }
}

TEST(Tensor, MatmulShapeMismatchNamesBothShapes) {
  try {
    fewshot::matmul(Tensor({2, 3}), Tensor({2, 3}));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("[2x3] x [2x3]"), std::string::npos) << what;
  }
}

TEST(Tensor, MatmulAssociativity) {
  std::mt19937_64 g(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = to_tensor(oracle::random_matrix(4, 6, g));
    const auto b = to_tensor(oracle::random_matrix(6, 5, g));
    const auto c = to_tensor(oracle::random_matrix(5, 3, g));
    const auto left = fewshot::matmul(fewshot::matmul(a, b), c);
    const auto right = fewshot::matmul(a, fewshot::matmul(b, c));
    for (std::size_t i = 0; i < left.size(); ++i) EXPECT_NEAR(left[i], right[i], 1e-4);
  }
}

TEST(Tensor, TransposeAndCast) {
  const auto a = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  const auto t = fewshot::transpose(a);
  EXPECT_EQ(t, Tensor::matrix({{1, 4}, {2, 5}, {3, 6}}));
  const auto d = fewshot::tensor_cast<double>(a);
  EXPECT_EQ(d(1, 2), 6.0);
}
