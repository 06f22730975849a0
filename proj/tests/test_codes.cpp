#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "hadseg/codes.hpp"
#include "hadseg/error.hpp"
#include "oracles.hpp"

namespace hadseg::codes {
namespace {

const std::vector<std::vector<int>> kPaperH8 = {
    {1, 1, 1, 1, 1, 1, 1, 1},     {1, -1, 1, -1, 1, -1, 1, -1},
    {1, 1, -1, -1, 1, 1, -1, -1}, {1, -1, -1, 1, 1, -1, -1, 1},
    {1, 1, 1, 1, -1, -1, -1, -1}, {1, -1, 1, -1, -1, 1, -1, 1},
    {1, 1, -1, -1, -1, -1, 1, 1}, {1, -1, -1, 1, -1, 1, 1, -1},
};

std::vector<double> row_as_reals(const Codebook& cb, std::size_t r) {
  const auto row = cb.row(r);
  return {row.begin(), row.end()};
}

TEST(Sylvester, BaseCases) {
  const auto h1 = sylvester(0);
  EXPECT_EQ(h1.n(), 1u);
  EXPECT_EQ(h1.entry(0, 0), 1);

  const auto h2 = sylvester(1);
  EXPECT_EQ(h2.entry(0, 0), 1);
  EXPECT_EQ(h2.entry(0, 1), 1);
  EXPECT_EQ(h2.entry(1, 0), 1);
  EXPECT_EQ(h2.entry(1, 1), -1);
}

TEST(Sylvester, MatchesPrintedEightByEight) {
  const auto cb = sylvester(3);
  ASSERT_EQ(cb.n(), 8u);
  for (std::size_t i = 0; i < 8; ++i) {
    for (std::size_t j = 0; j < 8; ++j) EXPECT_EQ(cb.entry(i, j), kPaperH8[i][j]) << i << "," << j;
  }
}

TEST(Sylvester, AgreesWithParityFormula) {
  for (int k = 0; k <= 10; ++k) {
    const auto cb = sylvester(k);
    for (std::size_t i = 0; i < cb.n(); ++i) {
      for (std::size_t j = 0; j < cb.n(); ++j) {
        ASSERT_EQ(cb.entry(i, j), oracle::hadamard_entry(i, j)) << "k=" << k;
      }
    }
  }
}

TEST(Sylvester, GramMatrixIsScaledIdentity) {
  for (int k = 0; k <= 8; ++k) {
    const auto cb = sylvester(k);
    const std::size_t n = cb.n();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        long long dot = 0;
        for (std::size_t c = 0; c < n; ++c) dot += cb.entry(i, c) * cb.entry(j, c);
        ASSERT_EQ(dot, i == j ? static_cast<long long>(n) : 0) << "k=" << k;
      }
    }
    EXPECT_TRUE(verify_invariants(cb).empty());
  }
}

TEST(Sylvester, RejectsOversizedOrder) {
  EXPECT_THROW(sylvester(17), CapacityError);
  EXPECT_THROW(sylvester(-1), CapacityError);
  EXPECT_THROW(sylvester(3, 9), CapacityError);
  EXPECT_THROW(sylvester(3, 0), CapacityError);
}

TEST(Sylvester, TruncatedClassCountKeepsMatrix) {
  const auto cb = sylvester(3, 5);
  EXPECT_EQ(cb.num_classes(), 5u);
  EXPECT_EQ(cb.n(), 8u);
  EXPECT_EQ(cb.entry(7, 7), -1);
}

TEST(Fwht, SmallExamples) {
  const auto h2 = sylvester(1);
  const std::vector<double> e0 = {1, 0};
  EXPECT_EQ(fwht_apply(h2, e0), (std::vector<double>{1, 1}));

  const auto h8 = sylvester(3);
  const auto out = fwht_apply(h8, row_as_reals(h8, 2));
  EXPECT_EQ(out, (std::vector<double>{0, 0, 8, 0, 0, 0, 0, 0}));
}

TEST(Fwht, MatchesDenseOracleOnSeededVectors) {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> dist(-10.0, 10.0);
  for (int k = 0; k <= 10; ++k) {
    const auto cb = sylvester(k);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> v(cb.n());
      for (double& x : v) x = dist(rng);
      const auto fast = fwht_apply(cb, v);
      const auto ref = oracle::hadamard_times(v);
      double worst = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) worst = std::max(worst, std::abs(fast[i] - ref[i]));
      ASSERT_LT(worst, 1e-9) << "k=" << k;
    }
  }
}

TEST(Fwht, DenseApplyMatchesOracle) {
  std::mt19937_64 rng(5);
  const auto cb = sylvester(5);
  std::vector<double> v(32);
  for (double& x : v) x = std::uniform_real_distribution<double>(-1, 1)(rng);
  const auto dense = dense_apply(cb, v);
  const auto ref = oracle::hadamard_times(v);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(dense[i], ref[i], 1e-12);
}

TEST(Fwht, LengthMismatchIsShapeError) {
  const auto cb = sylvester(3);
  std::vector<double> v(7);
  EXPECT_THROW(fwht_apply(cb, v), ShapeError);
  EXPECT_THROW(dense_apply(cb, v), ShapeError);
  EXPECT_THROW(fwht_inplace(v), ShapeError);
  EXPECT_THROW(decode_correlation(cb, v), ShapeError);
}

TEST(Encode, RowsOfPrintedMatrix) {
  const auto cb = sylvester(3);
  EXPECT_EQ(encode_class(cb, 0).values, kPaperH8[0]);
  EXPECT_EQ(encode_class(cb, 1).values, kPaperH8[1]);
  EXPECT_EQ(encode_class(cb, 1).class_index, 1u);
  EXPECT_EQ(encode_class(sylvester(1), 1).values, (std::vector<int>{1, -1}));
  EXPECT_THROW(encode_class(sylvester(3, 4), 4), ClassIndexError);
}

std::size_t nearest_codeword(const Codebook& cb, const std::vector<double>& v) {
  std::size_t best = 0, best_d = cb.n() + 1;
  for (std::size_t r = 0; r < cb.num_classes(); ++r) {
    std::size_t d = 0;
    for (std::size_t c = 0; c < cb.n(); ++c) d += (v[c] > 0) != (cb.entry(r, c) > 0);
    if (d < best_d) {
      best_d = d;
      best = r;
    }
  }
  return best;
}

TEST(Decode, RoundTripForAllClasses) {
  for (int k = 0; k <= 8; ++k) {
    const auto cb = sylvester(k);
    for (std::size_t j = 0; j < cb.num_classes(); ++j) {
      const auto cw = encode_class(cb, j);
      const std::vector<double> v(cw.values.begin(), cw.values.end());
      ASSERT_EQ(decode_correlation(cb, v), j) << "k=" << k;
    }
  }
}

TEST(Decode, ThreeFlipsOnRowFiveFollowNearestCodeword) {
  const auto cb = sylvester(3);
  auto v = row_as_reals(cb, 5);
  for (int p : {0, 1, 2}) v[p] = -v[p];
  const std::size_t expected = nearest_codeword(cb, v);
  EXPECT_EQ(decode_correlation(cb, v), expected);
  // Rows 2, 5 and 6 all sit at distance 3; the lowest index wins.
  EXPECT_EQ(expected, 2u);
}

TEST(Decode, ZeroVectorTiesToClassZero) {
  const auto cb = sylvester(3);
  std::vector<double> v(8, 0.0);
  EXPECT_EQ(decode_correlation(cb, v), 0u);
}

TEST(Decode, AgreesWithNearestCodewordOnSignVectors) {
  std::mt19937_64 rng(77);
  for (int k = 1; k <= 6; ++k) {
    const auto cb = sylvester(k);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> v(cb.n());
      for (double& x : v) x = (rng() & 1) ? 1.0 : -1.0;
      ASSERT_EQ(decode_correlation(cb, v), nearest_codeword(cb, v)) << "k=" << k;
    }
  }
}

TEST(Distance, MinimumPairwiseDistance) {
  EXPECT_EQ(min_pairwise_distance(sylvester(1)), 1u);
  EXPECT_EQ(min_pairwise_distance(sylvester(3)), 4u);
  EXPECT_EQ(min_pairwise_distance(sylvester(6)), 32u);
  EXPECT_THROW(min_pairwise_distance(sylvester(0)), CapacityError);
}

TEST(Distance, EveryDistinctPairIsHalfTheLength) {
  for (int k = 1; k <= 8; ++k) {
    const auto cb = sylvester(k);
    for (std::size_t a = 0; a < cb.n(); ++a) {
      for (std::size_t b = a + 1; b < cb.n(); ++b) {
        std::size_t d = 0;
        for (std::size_t c = 0; c < cb.n(); ++c) d += cb.entry(a, c) != cb.entry(b, c);
        ASSERT_EQ(d, cb.n() / 2);
        ASSERT_EQ(hamming_distance(cb, a, b), d);
      }
    }
  }
}

TEST(Csv, RoundTrip) {
  const auto cb = sylvester(4);
  std::stringstream ss;
  write_csv(ss, cb);
  const auto back = read_csv(ss);
  EXPECT_EQ(back.k(), 4);
  EXPECT_TRUE(std::equal(cb.matrix().begin(), cb.matrix().end(), back.matrix().begin()));
}

TEST(Csv, RejectsNonSylvesterMatrix) {
  std::stringstream bad("1,1\n1,1\n");
  EXPECT_THROW(read_csv(bad), FormatError);
  std::stringstream ragged("1,1\n1\n");
  EXPECT_THROW(read_csv(ragged), FormatError);
}

}  // namespace
}  // namespace hadseg::codes
