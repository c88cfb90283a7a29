#pragma once

// Coincidence histograms: A-B cross-correlation of a time-tag stream,
// Gaussian detector-response smoothing and accidental-floor subtraction.
//
// Lags are t_B - t_A in integer picoseconds. A histogram with bin width w and
// range R has exactly 2R/w bins covering [-R, R); bin i spans
// [-R + i w, -R + (i + 1) w).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include "hom/errors.hpp"
#include "hom/model.hpp"
#include "hom/timetag.hpp"

namespace hom {

template <class T>
struct BasicHistogram {
  std::int64_t bin_width_ps = 1;
  std::int64_t range_ps = 0;
  std::vector<T> counts;
  // Per-bin variance. Empty means Poisson (variance = counts).
  std::vector<double> variance;
  double acquisition_time = 0.0;  // s
  std::uint64_t singles_a = 0;
  std::uint64_t singles_b = 0;
  // Accidental floor already subtracted per bin, and its relative
  // uncertainty (fully correlated between bins).
  double background_floor = 0.0;
  double background_floor_rel_error = 0.0;
  std::map<std::string, std::string> metadata;

  std::size_t size() const { return counts.size(); }
  double bin_width() const { return static_cast<double>(bin_width_ps) * 1e-12; }
  double lag_range() const { return static_cast<double>(range_ps) * 1e-12; }

  /// Lower edge and center of bin i, in ps.
  std::int64_t lower_ps(std::size_t i) const { return -range_ps + static_cast<std::int64_t>(i) * bin_width_ps; }
  double center_ps(std::size_t i) const { return static_cast<double>(lower_ps(i)) + 0.5 * static_cast<double>(bin_width_ps); }

  double variance_at(std::size_t i) const {
    return variance.empty() ? static_cast<double>(counts[i]) : variance[i];
  }

  double total() const {
    double s = 0.0;
    for (const auto& c : counts) s += static_cast<double>(c);
    return s;
  }

  /// Sum over [lo_ps, hi_ps), with partially covered bins weighted by the
  /// covered fraction. Returns {area, variance}.
  std::pair<double, double> integrate(double lo_ps, double hi_ps) const {
    lo_ps = std::max(lo_ps, static_cast<double>(-range_ps));
    hi_ps = std::min(hi_ps, static_cast<double>(range_ps));
    if (!(hi_ps > lo_ps)) return {0.0, 0.0};
    const double w = static_cast<double>(bin_width_ps);
    const auto first = static_cast<std::size_t>(std::floor((lo_ps + range_ps) / w));
    const auto last = std::min(size() - 1, static_cast<std::size_t>(std::ceil((hi_ps + range_ps) / w)) - 1);
    double area = 0.0, var = 0.0;
    for (std::size_t i = first; i <= last; ++i) {
      const double a = static_cast<double>(lower_ps(i));
      const double f = (std::min(a + w, hi_ps) - std::max(a, lo_ps)) / w;
      if (f <= 0.0) continue;
      area += f * static_cast<double>(counts[i]);
      var += f * f * variance_at(i);
    }
    return {area, var};
  }
};

using CorrelationHistogram = BasicHistogram<std::uint64_t>;
using RealHistogram = BasicHistogram<double>;

inline RealHistogram to_real(const CorrelationHistogram& h) {
  RealHistogram r;
  r.bin_width_ps = h.bin_width_ps;
  r.range_ps = h.range_ps;
  r.counts.assign(h.counts.begin(), h.counts.end());
  r.variance = h.variance;
  if (r.variance.empty()) r.variance.assign(h.counts.begin(), h.counts.end());
  r.acquisition_time = h.acquisition_time;
  r.singles_a = h.singles_a;
  r.singles_b = h.singles_b;
  r.background_floor = h.background_floor;
  r.background_floor_rel_error = h.background_floor_rel_error;
  r.metadata = h.metadata;
  return r;
}

inline std::int64_t to_ps(double seconds, const char* key) {
  const double ps = std::round(seconds * 1e12);
  if (!(ps >= 1.0) || ps > 9e15) throw ConfigError(key, "must be at least 1 ps");
  return static_cast<std::int64_t>(ps);
}

/// A-B cross-correlation over lags [-lag_range, lag_range) in a single pass.
/// For each A tag a window over the B tags slides forward, so the cost is
/// O(N k) with k the mean number of B tags within the lag range. The stream
/// must be sorted by timestamp. `acquisition_time` <= 0 takes the span of the
/// stream.
inline CorrelationHistogram correlate(const TimeTagStream& stream, double bin_width, double lag_range,
                                      double acquisition_time = 0.0, unsigned threads = 1) {
  const std::int64_t w = to_ps(bin_width, "bin_width");
  const std::int64_t R = to_ps(lag_range, "lag_range");
  if (R % w != 0) throw ConfigError("lag_range", "must be a whole number of bins");
  if (!stream.is_sorted()) throw ConfigError("stream", "time tags must be sorted by timestamp");

  std::vector<std::int64_t> a, b;
  for (const auto& t : stream.tags)
    (t.channel == Channel::A ? a : b).push_back(static_cast<std::int64_t>(t.timestamp));

  CorrelationHistogram h;
  h.bin_width_ps = w;
  h.range_ps = R;
  h.counts.assign(static_cast<std::size_t>(2 * R / w), 0);
  h.singles_a = a.size();
  h.singles_b = b.size();
  h.acquisition_time = acquisition_time > 0.0 ? acquisition_time
                       : stream.empty()     ? 0.0
                                            : static_cast<double>(stream.tags.back().timestamp + 1) * 1e-12;

  auto run = [&](std::size_t begin, std::size_t end, std::vector<std::uint64_t>& out) {
    if (begin >= end) return;
    std::size_t lo = static_cast<std::size_t>(std::lower_bound(b.begin(), b.end(), a[begin] - R) - b.begin());
    for (std::size_t i = begin; i < end; ++i) {
      const std::int64_t ta = a[i];
      while (lo < b.size() && b[lo] < ta - R) ++lo;
      for (std::size_t j = lo; j < b.size() && b[j] < ta + R; ++j)
        ++out[static_cast<std::size_t>((b[j] - ta + R) / w)];
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(a.size() / 4096 + 1)));
  if (workers == 1) {
    run(0, a.size(), h.counts);
    return h;
  }
  std::vector<std::vector<std::uint64_t>> partial(workers, std::vector<std::uint64_t>(h.counts.size(), 0));
  {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < workers; ++k)
      pool.emplace_back([&, k] { run(a.size() * k / workers, a.size() * (k + 1) / workers, partial[k]); });
  }
  for (const auto& p : partial)
    for (std::size_t i = 0; i < p.size(); ++i) h.counts[i] += p[i];
  return h;
}

namespace detail {

/// Fraction of a Gaussian (std. dev. `sigma`, in bins) centered in bin 0
/// that falls into bin m.
inline double gaussian_bin_weight(int m, double sigma) {
  const double s = sigma * std::numbers::sqrt2;
  return 0.5 * (std::erf((m + 0.5) / s) - std::erf((m - 0.5) / s));
}

}  // namespace detail

/// Smooths with a Gaussian of the given FWHM. Each input bin is spread with
/// bin-integrated weights and renormalized over the bins that exist, so the
/// total area is preserved exactly, also at the edges. Variances are carried
/// through with the squared weights.
template <class T>
RealHistogram convolve_response(const BasicHistogram<T>& hist, double jitter_fwhm) {
  if (!(jitter_fwhm >= 0.0)) throw ConfigError("jitter_fwhm", "must be >= 0");
  RealHistogram in = [&] {
    if constexpr (std::is_same_v<T, double>) return hist;
    else return to_real(hist);
  }();
  if (in.variance.empty()) in.variance.assign(in.counts.begin(), in.counts.end());
  const double sigma_bins = jitter_fwhm / fwhm_per_sigma / in.bin_width();
  if (sigma_bins < 1e-3) return in;

  const int half = static_cast<int>(std::ceil(8.0 * sigma_bins)) + 1;
  std::vector<double> kernel(2 * half + 1);
  for (int m = -half; m <= half; ++m) kernel[m + half] = detail::gaussian_bin_weight(m, sigma_bins);

  RealHistogram out = in;
  std::fill(out.counts.begin(), out.counts.end(), 0.0);
  std::fill(out.variance.begin(), out.variance.end(), 0.0);
  const auto n = static_cast<std::ptrdiff_t>(in.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double c = in.counts[i];
    const double v = in.variance[i];
    if (c == 0.0 && v == 0.0) continue;
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - half);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + half);
    double norm = 0.0;
    for (std::ptrdiff_t j = lo; j <= hi; ++j) norm += kernel[j - i + half];
    for (std::ptrdiff_t j = lo; j <= hi; ++j) {
      const double k = kernel[j - i + half] / norm;
      out.counts[j] += k * c;
      out.variance[j] += k * k * v;
    }
  }
  out.metadata["response_fwhm_ps"] = std::to_string(jitter_fwhm * 1e12);
  return out;
}

/// Rates of the flat noise on each detector (Hz).
struct NoiseRates {
  double a = 0.0;
  double b = 0.0;
};

/// Subtracts the flat accidental floor produced by uncorrelated noise:
///   per bin  w T (n_A r_B + r_A n_B - n_A n_B),
/// with n the noise rates and r = singles / T the measured total rates. The
/// noise-noise term is counted once. Bins may go negative and are kept. The
/// floor and its relative uncertainty from the singles counts are recorded
/// on the result.
template <class T>
RealHistogram background_correct(const BasicHistogram<T>& hist, NoiseRates dark, NoiseRates background) {
  if (dark.a < 0 || dark.b < 0 || background.a < 0 || background.b < 0)
    throw ConfigError("background_rates", "rates must be >= 0");
  RealHistogram out = [&] {
    if constexpr (std::is_same_v<T, double>) return hist;
    else return to_real(hist);
  }();
  if (out.variance.empty()) out.variance.assign(out.counts.begin(), out.counts.end());
  const double na = dark.a + background.a;
  const double nb = dark.b + background.b;
  if (na == 0.0 && nb == 0.0) return out;
  if (!(out.acquisition_time > 0.0)) throw ConfigError("acquisition_time", "needed for background correction");

  const double t_acq = out.acquisition_time;
  const double ra = static_cast<double>(out.singles_a) / t_acq;
  const double rb = static_cast<double>(out.singles_b) / t_acq;
  const double floor = out.bin_width() * t_acq * (na * rb + ra * nb - na * nb);
  for (auto& c : out.counts) c -= floor;
  // d floor / floor from Poisson singles counts
  const double dfa = na * std::sqrt(static_cast<double>(out.singles_b)) / t_acq;
  const double dfb = nb * std::sqrt(static_cast<double>(out.singles_a)) / t_acq;
  const double rate_term = na * rb + ra * nb - na * nb;
  const double rel = rate_term > 0.0 ? std::hypot(dfa, dfb) / rate_term : 0.0;
  out.background_floor += floor;
  out.background_floor_rel_error = rel;
  return out;
}

}  // namespace hom
