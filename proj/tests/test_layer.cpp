#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hadseg/codes.hpp"
#include "hadseg/error.hpp"
#include "hadseg/layer.hpp"
#include "hadseg/metrics.hpp"
#include "oracles.hpp"

namespace hadseg::layer {
namespace {

Tensor codeword_pixels(const codes::Codebook& cb, double c) {
  Tensor t({1, cb.n(), cb.n()});
  for (std::size_t p = 0; p < cb.n(); ++p) {
    for (std::size_t ch = 0; ch < cb.n(); ++ch) t.at({0, p, ch}) = c * cb.entry(p, ch);
  }
  return t;
}

double weighted_output(const codes::Codebook& cb, const Tensor& y, const Tensor& g) {
  const auto act = hadamard_forward(cb, y);
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * act.output[i];
  return s;
}

TEST(HadamardForward, CodewordPixelProbability) {
  const auto cb = codes::sylvester(3);
  const auto act = hadamard_forward(cb, codeword_pixels(cb, 1.0));
  const double expected = std::exp(8.0) / (std::exp(8.0) + 7.0);
  for (std::size_t p = 0; p < 8; ++p) {
    for (std::size_t ch = 0; ch < 8; ++ch) {
      const double want = ch == p ? expected : 1.0 / (std::exp(8.0) + 7.0);
      EXPECT_NEAR(act.output.at({0, p, ch}), want, 1e-15);
    }
  }
}

TEST(HadamardForward, ZeroPixelIsUniform) {
  const auto cb = codes::sylvester(3);
  const auto act = hadamard_forward(cb, Tensor({2, 2, 8}));
  for (double v : act.output.data()) EXPECT_DOUBLE_EQ(v, 0.125);
}

TEST(HadamardForward, ArgmaxRecoversEveryClass) {
  for (int k = 0; k <= 8; ++k) {
    const auto cb = codes::sylvester(k);
    for (double c : {1.0, 3.5}) {
      const auto act = hadamard_forward(cb, codeword_pixels(cb, c));
      const auto lm = metrics::argmax_map(act.output, cb.n());
      for (std::size_t p = 0; p < cb.n(); ++p) ASSERT_EQ(lm(0, p), p) << "k=" << k;
    }
  }
}

TEST(HadamardForward, TransformedMatchesFwhtAndRowsAreDistributions) {
  std::mt19937_64 rng(3);
  const auto cb = codes::sylvester(4);
  const Tensor y = oracle::random_tensor({3, 5, 16}, rng, -1e4, 1e4);
  const auto act = hadamard_forward(cb, y);
  for (std::size_t p = 0; p < 15; ++p) {
    std::vector<double> v(y.data().begin() + p * 16, y.data().begin() + (p + 1) * 16);
    const auto ref = oracle::hadamard_times(v);
    double sum = 0.0;
    for (std::size_t c = 0; c < 16; ++c) {
      EXPECT_NEAR(act.transformed[p * 16 + c], ref[c], 1e-9 * std::abs(ref[c]) + 1e-9);
      EXPECT_GE(act.output[p * 16 + c], 0.0);
      sum += act.output[p * 16 + c];
    }
    EXPECT_NEAR(sum, 1.0, 1e-6);
  }
}

TEST(HadamardForward, OrderZeroIsPlainSoftmax) {
  const auto cb = codes::sylvester(0);
  const Tensor y({3, 1}, std::vector<double>{-2.0, 0.0, 5.0});
  const auto act = hadamard_forward(cb, y);
  for (double v : act.output.data()) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(HadamardForward, ScaleActsAsTemperature) {
  const auto cb = codes::sylvester(2);
  const Tensor y({1, 4}, std::vector<double>{0.3, -0.1, 0.2, 0.05});
  const auto act = hadamard_forward(cb, y, 0.25);
  std::vector<double> z = oracle::hadamard_times({0.3, -0.1, 0.2, 0.05});
  for (double& v : z) v *= 0.25;
  const auto ref = oracle::softmax(z);
  for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(act.output[c], ref[c], 1e-15);
}

TEST(HadamardForward, ChannelMismatchIsShapeError) {
  EXPECT_THROW(hadamard_forward(codes::sylvester(3), Tensor({2, 2, 4})), ShapeError);
}

TEST(HadamardBackward, ZeroAndConstantGradientsVanish) {
  std::mt19937_64 rng(9);
  const auto cb = codes::sylvester(3);
  const auto act = hadamard_forward(cb, oracle::random_tensor({2, 3, 8}, rng));
  const Tensor from_zero = hadamard_backward(act, Tensor({2, 3, 8}));
  for (double v : from_zero.data()) EXPECT_EQ(v, 0.0);
  const Tensor from_constant = hadamard_backward(act, Tensor({2, 3, 8}, 2.5));
  for (double v : from_constant.data()) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(HadamardBackward, SinglePixelFiniteDifference) {
  std::mt19937_64 rng(4);
  const auto cb = codes::sylvester(2);
  Tensor y = oracle::random_tensor({1, 4}, rng);
  const Tensor g = oracle::random_tensor({1, 4}, rng);
  const auto analytic = hadamard_backward(hadamard_forward(cb, y), g);
  const auto numeric = oracle::numeric_grad([&] { return weighted_output(cb, y, g); }, y, 1e-4);
  EXPECT_LT(oracle::rel_error(analytic, numeric), 1e-5);
}

TEST(HadamardBackward, SeededFiniteDifferenceCases) {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 1 + trial % 3;
    const auto cb = codes::sylvester(k);
    Tensor y = oracle::random_tensor({2, 2, cb.n()}, rng);
    const Tensor g = oracle::random_tensor({2, 2, cb.n()}, rng);
    const auto analytic = hadamard_backward(hadamard_forward(cb, y), g);
    const auto numeric = oracle::numeric_grad([&] { return weighted_output(cb, y, g); }, y);
    ASSERT_LT(oracle::rel_error(analytic, numeric), 1e-4) << "trial " << trial;
  }
}

TEST(HadamardBackward, ShapeMismatchIsShapeError) {
  const auto cb = codes::sylvester(2);
  const auto act = hadamard_forward(cb, Tensor({2, 4}));
  EXPECT_THROW(hadamard_backward(act, Tensor({3, 4})), ShapeError);
}

}  // namespace
}  // namespace hadseg::layer
