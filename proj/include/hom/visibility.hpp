#pragma once

// Two-photon interference visibility from a coincidence histogram.
//
// Poissonian normalization: coincidences between photons of different pulses
// are uncorrelated, so the peaks at |tau| = k * rep_period far from zero give
// the level A_p a fully distinguishable pair would reach. With the center peak
// area A_c,
//   V = 1 - 2 A_c / A_p.
// The factor 2 reflects that a distinguishable pair splits with probability
// 1/2 while uncorrelated pulses always can. When the two arms deliver photons
// with unequal probabilities s1, s2 the far peaks scale with ((s1 + s2)/2)^2
// and the center with s1 s2, so A_p is multiplied by 4 r / (1 + r)^2 with
// r = s1/s2 (`arm_ratio`).
//
// Orthogonal reference: V = 1 - A_c / A_c,orth, each center area first divided
// by its own Poissonian level when the histograms reach far enough.

#include <cmath>
#include <optional>
#include <vector>

#include "hom/errors.hpp"
#include "hom/histogram.hpp"

namespace hom {

enum class NormalizationMode { poissonian, orthogonal_hist };

struct VisibilityOptions {
  double rep_period = 1.0 / 76.2e6;  // s
  // Full width of the integration window around each peak; <= 0 selects
  // rep_period / 2, the widest window that keeps neighbouring peaks apart.
  double integration_window = 0.0;
  double far_threshold = 1e-6;  // |tau| beyond which peaks count as uncorrelated
  double arm_ratio = 1.0;       // s1 / s2, see header comment
  NormalizationMode mode = NormalizationMode::poissonian;
};

struct VisibilityResult {
  double visibility = 0.0;
  double std_error = 0.0;
  double center_area = 0.0;
  double center_error = 0.0;
  double poisson_level_area = 0.0;  // mean far-peak area (or reference center area)
  double poisson_level_error = 0.0;
  int far_peaks = 0;
  double window = 0.0;  // s, full width
};

/// Mean area of all complete far peaks and its standard error, the larger of
/// the counting error and the peak-to-peak scatter.
struct PeakLevel {
  double area = 0.0;
  double error = 0.0;
  int peaks = 0;
};

template <class T>
PeakLevel poissonian_level(const BasicHistogram<T>& h, double rep_period, double window, double far_threshold) {
  const double T_ps = rep_period * 1e12;
  const double half = 0.5 * window * 1e12;
  const double R = static_cast<double>(h.range_ps);
  std::vector<double> areas;
  double var_sum = 0.0;
  const auto k_max = static_cast<long>(std::floor((R - half) / T_ps));
  for (long k = -k_max; k <= k_max; ++k) {
    const double c = static_cast<double>(k) * T_ps;
    if (std::abs(c) * 1e-12 <= far_threshold) continue;
    if (c - half < -R || c + half > R) continue;
    const auto [a, v] = h.integrate(c - half, c + half);
    areas.push_back(a);
    var_sum += v;
  }
  PeakLevel level;
  level.peaks = static_cast<int>(areas.size());
  if (areas.empty()) return level;
  const double n = static_cast<double>(areas.size());
  double mean = 0.0;
  for (double a : areas) mean += a;
  mean /= n;
  double scatter = 0.0;
  for (double a : areas) scatter += (a - mean) * (a - mean);
  scatter = areas.size() > 1 ? scatter / (n - 1) : 0.0;
  level.area = mean;
  level.error = std::sqrt(std::max(var_sum / (n * n), scatter / n));
  return level;
}

/// s1 / s2 for an experiment: emission, conversion and fiber transmission of
/// each arm up to the beamsplitter.
inline double arm_ratio(const ExperimentSpec& exp) {
  auto s = [&](int i) {
    return exp.emitters[i].emission_probability * exp.converters[i].efficiency * exp.channels[i].transmission();
  };
  if (!(s(1) > 0.0)) throw ConfigError("converters[1].efficiency", "arm 2 delivers no photons");
  return s(0) / s(1);
}

namespace detail {

inline double resolve_window(const VisibilityOptions& opt) {
  if (!(opt.rep_period > 0.0)) throw ConfigError("rep_period", "must be > 0");
  const double w = opt.integration_window > 0.0 ? opt.integration_window : 0.5 * opt.rep_period;
  if (w > 0.5 * opt.rep_period * (1.0 + 1e-12))
    throw ConfigError("integration_window", "exceeds half the repetition period; neighbouring peaks would overlap");
  return w;
}

/// Center-peak area with the background floor's (fully correlated)
/// uncertainty added to the counting variance.
template <class T>
std::pair<double, double> center_peak(const BasicHistogram<T>& h, double window) {
  const double half = 0.5 * window * 1e12;
  auto [a, v] = h.integrate(-half, half);
  const double floor_area = h.background_floor * window * 1e12 / static_cast<double>(h.bin_width_ps);
  const double floor_err = floor_area * h.background_floor_rel_error;
  return {a, std::sqrt(v + floor_err * floor_err)};
}

}  // namespace detail

/// Visibility from a single histogram normalized on its Poissonian level.
template <class T>
VisibilityResult extract_visibility(const BasicHistogram<T>& hist, const VisibilityOptions& opt) {
  if (opt.mode != NormalizationMode::poissonian)
    throw ConfigError("normalization", "orthogonal_hist mode needs a reference histogram");
  const double window = detail::resolve_window(opt);
  if (!(hist.lag_range() > opt.far_threshold + window))
    throw ConfigError("lag_range", "must extend past the far-peak threshold by at least one window");
  if (!(opt.arm_ratio > 0.0)) throw ConfigError("arm_ratio", "must be > 0");

  const auto [ac, sc] = detail::center_peak(hist, window);
  const PeakLevel level = poissonian_level(hist, opt.rep_period, window, opt.far_threshold);
  if (level.peaks == 0 || !(level.area > 0.0))
    throw NumericalError("no far peaks with positive area to normalize on");

  const double balance = 4.0 * opt.arm_ratio / ((1.0 + opt.arm_ratio) * (1.0 + opt.arm_ratio));
  const double ap = level.area * balance;
  const double sp = level.error * balance;
  VisibilityResult r;
  r.visibility = 1.0 - 2.0 * ac / ap;
  r.std_error = 2.0 * std::hypot(sc / ap, ac * sp / (ap * ap));
  r.center_area = ac;
  r.center_error = sc;
  r.poisson_level_area = level.area;
  r.poisson_level_error = level.error;
  r.far_peaks = level.peaks;
  r.window = window;
  return r;
}

/// Visibility relative to a measurement with orthogonal polarizations.
template <class T, class U>
VisibilityResult extract_visibility(const BasicHistogram<T>& parallel, const BasicHistogram<U>& orthogonal,
                                    const VisibilityOptions& opt) {
  const double window = detail::resolve_window(opt);
  const auto [ac, sc] = detail::center_peak(parallel, window);
  const auto [ao, so] = detail::center_peak(orthogonal, window);

  // Normalize each run on its own Poissonian level when both reach far enough,
  // so different acquisition times and count rates cancel.
  double np = 1.0, snp = 0.0, no = 1.0, sno = 0.0;
  int far = 0;
  const bool far_ok = parallel.lag_range() > opt.far_threshold + window &&
                      orthogonal.lag_range() > opt.far_threshold + window;
  if (far_ok) {
    const PeakLevel lp = poissonian_level(parallel, opt.rep_period, window, opt.far_threshold);
    const PeakLevel lo = poissonian_level(orthogonal, opt.rep_period, window, opt.far_threshold);
    if (lp.peaks > 0 && lo.peaks > 0 && lp.area > 0.0 && lo.area > 0.0) {
      np = lp.area;
      snp = lp.error;
      no = lo.area;
      sno = lo.error;
      far = lp.peaks;
    }
  }
  const double x = ac / np;  // normalized parallel center
  const double y = ao / no;  // normalized orthogonal center
  if (!(y > 0.0)) throw NumericalError("orthogonal reference has no center-peak counts");
  const double sx = x * std::hypot(ac > 0 ? sc / ac : 0.0, snp / np);
  const double sy = y * std::hypot(so / ao, sno / no);

  VisibilityResult r;
  r.visibility = 1.0 - x / y;
  r.std_error = std::hypot(sx / y, x * sy / (y * y));
  r.center_area = ac;
  r.center_error = sc;
  r.poisson_level_area = ao;
  r.poisson_level_error = so;
  r.far_peaks = far;
  r.window = window;
  return r;
}

}  // namespace hom
