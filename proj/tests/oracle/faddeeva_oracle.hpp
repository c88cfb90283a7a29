#pragma once

// Slow, high-precision reference for w(z) used only by the tests.
//
// |z| < 12 : Taylor series sum_n (iz)^n / Gamma(n/2 + 1) summed in 100-digit
//            binary floating point. Terms peak near exp(|z|^2) ~ 1e62, so about
//            36 significant digits survive the cancellation.
// |z| >= 12: Laplace continued fraction with 40 levels in the same precision.
//
// The arithmetic is done on separate real and imaginary parts because
// boost's generic complex wrapper is several times slower here.

#include <complex>

#include <boost/multiprecision/cpp_bin_float.hpp>

namespace hom::oracle {

using real100 = boost::multiprecision::cpp_bin_float_100;

struct cplx100 {
  real100 re, im;
};

inline cplx100 mul(const cplx100& a, const cplx100& b) {
  return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}

inline cplx100 div(const cplx100& a, const cplx100& b) {
  const real100 d = b.re * b.re + b.im * b.im;
  return {(a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d};
}

inline std::complex<double> faddeeva_reference(std::complex<double> z) {
  const cplx100 zz{real100(z.real()), real100(z.imag())};
  const real100 r = boost::multiprecision::sqrt(zz.re * zz.re + zz.im * zz.im);
  const real100 pi = boost::math::constants::pi<real100>();
  const real100 sqrt_pi = boost::multiprecision::sqrt(pi);

  if (r < 12) {
    const cplx100 iz{-zz.im, zz.re};
    const cplx100 iz2 = mul(iz, iz);
    // even: (iz)^(2m) / m!, odd: (iz)^(2m+1) / Gamma(m + 3/2)
    cplx100 even{real100(1), real100(0)};
    const real100 g32 = sqrt_pi / 2;
    cplx100 odd{iz.re / g32, iz.im / g32};
    cplx100 sum{even.re + odd.re, even.im + odd.im};
    const real100 tiny("1e-60");
    for (int m = 1; m < 5000; ++m) {
      even = mul(even, iz2);
      even.re /= m;
      even.im /= m;
      odd = mul(odd, iz2);
      odd.re /= (m + real100(0.5));
      odd.im /= (m + real100(0.5));
      sum.re += even.re + odd.re;
      sum.im += even.im + odd.im;
      const real100 size = abs(even.re) + abs(even.im) + abs(odd.re) + abs(odd.im);
      if (size < tiny) break;
    }
    return {static_cast<double>(sum.re), static_cast<double>(sum.im)};
  }

  cplx100 f = zz;
  for (int k = 40; k >= 1; --k) {
    const cplx100 q = div(cplx100{real100(k) / 2, real100(0)}, f);
    f = {zz.re - q.re, zz.im - q.im};
  }
  const cplx100 w = div(cplx100{real100(0), 1 / sqrt_pi}, f);
  return {static_cast<double>(w.re), static_cast<double>(w.im)};
}

}  // namespace hom::oracle
