#include <gtest/gtest.h>

#include <cmath>

#include "common/oracles.hpp"
#include "sketchprec/fwht.hpp"

using namespace sketchprec;

namespace {

std::vector<double> dense_apply(const oracle::Dense& h, const std::vector<double>& x) {
  std::vector<double> y(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) y[i] += h[i][j] * x[j];
  return y;
}

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

TEST(Fwht, BasisExamples) {
  std::vector<double> e0{1, 0, 0, 0};
  fwht_inplace(e0);
  EXPECT_EQ(e0, (std::vector<double>{1, 1, 1, 1}));
  std::vector<double> ones{1, 1, 1, 1};
  fwht_inplace(ones);
  EXPECT_EQ(ones, (std::vector<double>{4, 0, 0, 0}));
  std::vector<double> one{7.5};
  fwht_inplace(one);
  EXPECT_EQ(one[0], 7.5);
}

TEST(Fwht, MatchesSylvesterOracle) {
  SplitMix64 rng(1);
  for (std::size_t d = 2; d <= 256; d *= 2) {
    const auto h = oracle::sylvester(d);
    std::vector<double> xi(d), xr(d);
    for (std::size_t i = 0; i < d; ++i) {
      xi[i] = static_cast<double>(static_cast<int>(rng.below(2001)) - 1000);
      xr[i] = rng.gaussian();
    }
    const auto yi = dense_apply(h, xi);
    auto zi = xi;
    fwht_inplace(zi);
    EXPECT_EQ(zi, yi) << "integer input, d=" << d;

    const auto yr = dense_apply(h, xr);
    auto zr = xr;
    fwht_inplace(zr);
    double err = 0.0;
    for (std::size_t i = 0; i < d; ++i) err += (zr[i] - yr[i]) * (zr[i] - yr[i]);
    EXPECT_LE(std::sqrt(err), 1e-12 * std::sqrt(norm2(yr))) << "d=" << d;
  }
}

TEST(Fwht, InvolutionUpToScale) {
  SplitMix64 rng(2);
  for (std::size_t d = 1; d <= 1024; d *= 2) {
    std::vector<double> x(d), r(d);
    for (std::size_t i = 0; i < d; ++i) {
      x[i] = static_cast<double>(static_cast<int>(rng.below(201)) - 100);
      r[i] = rng.gaussian();
    }
    auto y = x;
    fwht_inplace(y);
    fwht_inplace(y);
    for (std::size_t i = 0; i < d; ++i) EXPECT_EQ(y[i], static_cast<double>(d) * x[i]);

    auto z = r;
    fwht_inplace(z);
    fwht_inplace(z);
    double err = 0.0;
    for (std::size_t i = 0; i < d; ++i) err += std::pow(z[i] - static_cast<double>(d) * r[i], 2);
    EXPECT_LE(std::sqrt(err), 1e-12 * static_cast<double>(d) * std::sqrt(norm2(r)));
  }
}

TEST(Fwht, ParsevalAndLinearity) {
  SplitMix64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = std::size_t{1} << rng.below(11);
    std::vector<double> x(d), y(d), comb(d);
    const double a = rng.gaussian(), b = rng.gaussian();
    for (std::size_t i = 0; i < d; ++i) {
      x[i] = rng.gaussian();
      y[i] = rng.gaussian();
      comb[i] = a * x[i] + b * y[i];
    }
    const double nx = norm2(x);
    fwht_inplace(x);
    fwht_inplace(y);
    fwht_inplace(comb);
    EXPECT_NEAR(norm2(x), static_cast<double>(d) * nx, 1e-10 * static_cast<double>(d) * nx);
    double err = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double lin = a * x[i] + b * y[i];
      err += std::pow(comb[i] - lin, 2);
      ref += lin * lin;
    }
    EXPECT_LE(std::sqrt(err), 1e-12 * std::sqrt(ref) + 1e-300);
  }
}

TEST(Fwht, RejectsNonPowerOfTwo) {
  std::vector<double> x(6, 1.0);
  EXPECT_THROW(fwht_inplace(x), std::invalid_argument);
  std::vector<double> empty;
  EXPECT_THROW(fwht_inplace(empty), std::invalid_argument);
  EXPECT_THROW(HadamardVector(std::vector<double>(3)), std::invalid_argument);
}

TEST(PadPow2, Examples) {
  const std::vector<double> three{1.5, -2, 3};
  EXPECT_EQ(pad_pow2(three).values(), (std::vector<double>{1.5, -2, 3, 0}));
  const std::vector<double> four{1, 2, 3, 4};
  EXPECT_EQ(pad_pow2(four).values(), four);
  const std::vector<double> five{1, 2, 3, 4, 5};
  EXPECT_EQ(pad_pow2(five).values(), (std::vector<double>{1, 2, 3, 4, 5, 0, 0, 0}));
  EXPECT_THROW(pad_pow2(std::vector<double>{}), std::invalid_argument);
}

TEST(PadPow2, NextPow2) {
  EXPECT_EQ(next_pow2(1), 1u);
  EXPECT_EQ(next_pow2(5), 8u);
  EXPECT_EQ(next_pow2(64), 64u);
  EXPECT_EQ(next_pow2(65), 128u);
  EXPECT_TRUE(is_pow2(1024));
  EXPECT_FALSE(is_pow2(0));
}
