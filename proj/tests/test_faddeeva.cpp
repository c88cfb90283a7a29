#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "hom/faddeeva.hpp"
#include "oracle/faddeeva_oracle.hpp"

namespace {

using cd = std::complex<double>;

double rel_err(cd a, cd b) { return std::abs(a - b) / std::abs(b); }

// 40-digit values computed with mpmath as exp(-z^2) erfc(-iz).
struct Frozen {
  cd z;
  cd w;
};
const std::vector<Frozen> frozen = {
    {{1.0, 1.0}, {0.30474420525691259246, 0.20821893820283162729}},
    {{0.0, 0.001}, {0.9988726200811514086, 0.0}},
    {{0.3, 0.01}, {0.90463532833083975417, 0.31349158639684871419}},
    {{5.0, 0.001}, {0.000024080463967103413858, 0.11524595667450372977}},
    {{7.9, 0.2}, {0.0018520516741750167019, 0.071954811371968231696}},
    {{11.9, 0.5}, {0.0020098978920371701397, 0.047494728375299377456}},
    {{0.0, 11.99}, {0.046893031655408324146, 0.0}},
    {{12.5, 0.0}, {1.385119369922601677e-68, 0.04528100846614441743}},
    {{30.0, 0.001}, {6.2792502343067086033e-7, 0.018816784847694872542}},
    {{1000.0, 1.0}, {5.6418986564240701139e-7, 0.00056418930145225927447}},
    {{200.0, 300.0}, {0.0013019771175652139882, 0.00086797806830293283479}},
    {{3.0, 4.0}, {0.09093390419476534246, 0.065592330527914277737}},
};

}  // namespace

TEST(FaddeevaOracle, AgreesWithFrozenValues) {
  for (const auto& f : frozen) EXPECT_LT(rel_err(hom::oracle::faddeeva_reference(f.z), f.w), 1e-15) << f.z;
}

TEST(Faddeeva, FrozenValues) {
  for (const auto& f : frozen) EXPECT_LT(rel_err(hom::faddeeva(f.z), f.w), 1e-13) << f.z;
}

TEST(Faddeeva, OriginIsOne) {
  const cd w = hom::faddeeva({0.0, 0.0});
  EXPECT_DOUBLE_EQ(w.real(), 1.0);
  EXPECT_DOUBLE_EQ(w.imag(), 0.0);
}

TEST(Faddeeva, ImaginaryAxisIsScaledErfc) {
  for (double y : {1e-3, 0.1, 0.49, 0.5, 1.0, 2.5, 5.0, 7.99, 8.0, 26.0}) {
    const cd w = hom::faddeeva({0.0, y});
    EXPECT_EQ(w.imag(), 0.0) << y;
    if (y < 26.0) {
      EXPECT_NEAR(w.real(), std::exp(y * y) * std::erfc(y), 1e-13 * w.real()) << y;
    }
    EXPECT_LE(std::abs(w), 1.0);
  }
}

TEST(Faddeeva, RejectsLowerHalfPlane) {
  EXPECT_THROW(hom::faddeeva({1.0, -1e-12}), std::domain_error);
  EXPECT_THROW(hom::faddeeva({std::nan(""), 1.0}), std::domain_error);
}

TEST(Faddeeva, ReflectionSymmetry) {
  for (double x : {0.2, 1.3, 4.0, 9.0, 50.0})
    for (double y : {0.0, 0.01, 1.0, 6.0}) {
      const cd a = hom::faddeeva({-x, y});
      const cd b = std::conj(hom::faddeeva({x, y}));
      EXPECT_LT(std::abs(a - b), 1e-15 * std::abs(b));
    }
}

TEST(Faddeeva, NeighbouringRegionsAgreeOnTheBoundary) {
  for (double angle : {0.0, 0.3, 0.8, 1.5, 2.5, 3.1}) {
    const cd inner = std::polar(hom::detail::faddeeva_series_radius, angle);
    const cd z1{std::abs(inner.real()), std::max(0.0, inner.imag())};
    EXPECT_LT(rel_err(hom::detail::faddeeva_series(z1), hom::detail::faddeeva_trapezoid(z1)), 1e-14) << angle;
    const cd outer = std::polar(hom::detail::faddeeva_fraction_radius, angle);
    const cd z2{std::abs(outer.real()), std::max(0.0, outer.imag())};
    EXPECT_LT(rel_err(hom::detail::faddeeva_trapezoid(z2), hom::detail::faddeeva_fraction(z2)), 1e-14) << angle;
  }
}

TEST(Faddeeva, CoarseGridAgainstOracle) {
  // The full 10^4-point sweep runs in the acceptance binary.
  double worst = 0.0;
  for (int i = 0; i < 60; ++i) {
    const double r = std::pow(10.0, -3.0 + 6.0 * i / 59.0);
    for (int j = 0; j < 15; ++j) {
      const cd z = std::polar(r, std::numbers::pi * j / 14.0);
      const cd zz{z.real(), std::max(0.0, z.imag())};
      worst = std::max(worst, rel_err(hom::faddeeva(zz), hom::oracle::faddeeva_reference(zz)));
    }
  }
  EXPECT_LT(worst, 1e-10);
}

TEST(Faddeeva, Erfcx) {
  EXPECT_NEAR(hom::erfcx(1.0), std::exp(1.0) * std::erfc(1.0), 1e-15);
  EXPECT_NEAR(hom::erfcx(100.0), 1.0 / (std::sqrt(std::numbers::pi) * 100.0) * (1 - 0.5e-4 + 7.5e-9), 1e-13);
}
