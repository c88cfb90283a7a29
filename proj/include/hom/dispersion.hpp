#pragma once

// Spectral-domain propagation of single-photon wave packets through
// dispersive fiber and the resulting two-photon overlap.
//
// A Fourier-limited photon has the Lorentzian amplitude
//   A(nu) ~ 1 / (1/(2 tau) + i 2 pi (nu - nu_c)),
// whose intensity has FWHM 1/(2 pi tau). Fiber of length L multiplies it by
// exp(i (beta2/2) L (2 pi (nu - nu_ref))^2) once the common group delay is
// removed. For two photons from identical emitters only beta2 (L1 - L2)
// survives in the overlap, and the integral has the closed form
//   |<1|2>|^2 = |w(gamma sqrt(a) exp(i pi/4))|^2,
//   gamma = 1/(4 pi tau), a = |beta2 (L1 - L2)| (2 pi)^2 / 2,
// which the tests use to check the sampled route.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "hom/errors.hpp"
#include "hom/faddeeva.hpp"
#include "hom/model.hpp"

namespace hom {

/// Uniform frequency grid: frequency(i) = center + (i - n/2) * spacing.
struct FrequencyGrid {
  double center = 0.0;
  double spacing = 0.0;
  std::size_t n = 0;

  double span() const { return spacing * static_cast<double>(n); }
  double frequency(std::size_t i) const {
    return center + (static_cast<double>(i) - 0.5 * static_cast<double>(n)) * spacing;
  }
  friend bool operator==(const FrequencyGrid&, const FrequencyGrid&) = default;
};

struct SpectralAmplitude {
  FrequencyGrid grid;
  std::vector<std::complex<double>> values;
  // Fraction of the untruncated Lorentzian's norm that falls on the grid, and
  // the accumulated quadratic phase coefficient beta2 L / 2 (s^2). Both feed
  // the tail correction in overlap_visibility.
  double captured = 1.0;
  double chirp = 0.0;

  /// sum |values|^2 * spacing
  double norm() const {
    double s = 0.0;
    for (const auto& v : values) s += std::norm(v);
    return s * grid.spacing;
  }
};

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// Lorentzian amplitude of `emitter` sampled on `grid`, normalized on the grid.
/// The grid must span at least 100 homogeneous linewidths with at least ten
/// points per linewidth.
inline SpectralAmplitude spectral_amplitude(const EmitterSpec& emitter, const FrequencyGrid& grid) {
  emitter.validate();
  const double linewidth = emitter.homogeneous_linewidth();
  if (!is_power_of_two(grid.n)) throw ConfigError("grid.n_points", "must be a power of two");
  if (!(grid.span() >= 100.0 * linewidth))
    throw ConfigError("grid.span", "must cover at least 100 homogeneous linewidths");
  if (!(grid.spacing <= 0.1 * linewidth))
    throw ConfigError("grid.n_points", "grid spacing is coarser than a tenth of the homogeneous linewidth");

  SpectralAmplitude amp{grid, std::vector<std::complex<double>>(grid.n)};
  const double half_rate = 0.5 / emitter.lifetime;
  const double unit = 1.0 / std::sqrt(emitter.lifetime);  // unit norm over all frequencies
  for (std::size_t i = 0; i < grid.n; ++i) {
    const double d = 2.0 * std::numbers::pi * (grid.frequency(i) - emitter.center_frequency);
    amp.values[i] = unit / std::complex<double>(half_rate, d);
  }
  amp.captured = amp.norm();
  const double scale = 1.0 / std::sqrt(amp.captured);
  for (auto& v : amp.values) v *= scale;
  return amp;
}

/// Grid of `n_points` over `grid_span`, centered on the emitter.
inline SpectralAmplitude spectral_amplitude(const EmitterSpec& emitter, double grid_span, std::size_t n_points) {
  if (n_points == 0) throw ConfigError("grid.n_points", "must be a power of two");
  return spectral_amplitude(emitter, FrequencyGrid{emitter.center_frequency, grid_span / static_cast<double>(n_points), n_points});
}

/// Applies the quadratic spectral phase of `channel` about the grid center.
inline SpectralAmplitude propagate(SpectralAmplitude amp, const ChannelSpec& channel) {
  channel.validate();
  const double k = 0.5 * channel.gvd_beta2 * channel.fiber_length;
  if (k == 0.0) return amp;
  amp.chirp += k;
  for (std::size_t i = 0; i < amp.values.size(); ++i) {
    const double w = 2.0 * std::numbers::pi * (amp.grid.frequency(i) - amp.grid.center);
    const double phase = k * w * w;
    amp.values[i] *= std::complex<double>(std::cos(phase), std::sin(phase));
  }
  return amp;
}

namespace detail {

/// Phase average of the off-grid overlap relative to its value without
/// dispersion, for 1/nu^2 tails beyond |nu| = X with relative phase K nu^2:
///   y J(y) with J(y) = int_y^inf u^-2 exp(i u^2) du, y = X sqrt|K|,
///   y J(y) = exp(i y^2) [1 + i sqrt(pi) y e^{i pi/4} w(e^{i pi/4} y)].
/// `edge_phase` replaces exp(i y^2) so any constant phase between the two
/// amplitudes carries over to the tail as well.
inline std::complex<double> tail_phase_ratio(double K, double X, std::complex<double> edge_phase) {
  if (K == 0.0) return edge_phase;
  const double y = X * std::sqrt(std::abs(K));
  const std::complex<double> e45 = std::polar(1.0, std::numbers::pi / 4.0);
  const std::complex<double> i{0.0, 1.0};
  const std::complex<double> r = 1.0 + i * std::sqrt(std::numbers::pi) * y * e45 * faddeeva(e45 * y);
  return edge_phase * (K > 0.0 ? r : std::conj(r));
}

}  // namespace detail

/// |<1|2>|^2 from the sampled amplitudes.
///
/// The grid sum sum conj(a1) a2 dnu covers the on-grid part of the overlap.
/// The Lorentzian tails beyond the grid carry 1 - sqrt(c1 c2) of it without
/// dispersion (c = captured norm fraction); with a relative chirp the tails
/// are reweighted by their analytic phase average, so a symmetric link stays
/// exactly at 1 and a strongly dispersed one loses its tails.
inline double overlap_visibility(const SpectralAmplitude& a1, const SpectralAmplitude& a2) {
  if (!(a1.grid == a2.grid) || a1.values.size() != a2.values.size())
    throw ConfigError("grid", "overlap needs identical frequency grids");
  std::complex<double> s = 0.0;
  for (std::size_t i = 0; i < a1.values.size(); ++i) s += std::conj(a1.values[i]) * a2.values[i];
  const double on_grid = std::sqrt(a1.captured * a2.captured);
  const double K = (a2.chirp - a1.chirp) * 4.0 * std::numbers::pi * std::numbers::pi;
  const std::complex<double> edge = std::conj(a1.values.front()) * a2.values.front();
  const std::complex<double> edge_phase = std::abs(edge) > 0.0 ? edge / std::abs(edge) : 1.0;
  const std::complex<double> tail =
      (1.0 - on_grid) * detail::tail_phase_ratio(K, 0.5 * a1.grid.span(), edge_phase);
  return std::norm(s * a1.grid.spacing * on_grid + tail);
}

/// Closed-form overlap of two identical Fourier-limited photons whose fibers
/// differ by `delta_length` (see the header comment).
inline double dispersion_overlap_exact(double lifetime, double beta2, double delta_length) {
  const double a = std::abs(beta2 * delta_length) * 2.0 * std::numbers::pi * std::numbers::pi;
  if (a == 0.0) return 1.0;
  const double gamma = 1.0 / (4.0 * std::numbers::pi * lifetime);
  const std::complex<double> z = std::polar(gamma * std::sqrt(a), std::numbers::pi / 4.0);
  return std::norm(faddeeva(z));
}

/// Grid for an overlap with relative phase curvature beta2 * delta_length.
///
/// The Lorentzian tails decay only as 1/nu^2, so a fixed span leaves a
/// span-dependent truncation error once the phase wraps. The span is chosen so
/// the relative phase reaches about 1e4 rad at the edge (tails beyond cancel),
/// clamped to [200, 20000] linewidths, and the spacing keeps the phase step at
/// the edge below 0.05 rad and below a tenth of a linewidth.
inline FrequencyGrid dispersion_grid(double lifetime, double center, double beta2, double delta_length) {
  const double linewidth = 1.0 / (2.0 * std::numbers::pi * lifetime);
  const double a = std::abs(beta2 * delta_length) * 2.0 * std::numbers::pi * std::numbers::pi;
  constexpr double edge_phase = 1e4;
  double span = a > 0.0 ? 2.0 * std::sqrt(edge_phase / a) : 200.0 * linewidth;
  span = std::clamp(span, 200.0 * linewidth, 20000.0 * linewidth);
  double spacing = 0.1 * linewidth;
  if (a > 0.0) spacing = std::min(spacing, 0.05 / (a * span));
  std::size_t n = 1024;
  while (span / static_cast<double>(n) > spacing) n *= 2;
  return {center, span / static_cast<double>(n), n};
}

enum class ScanMode { asymmetric, symmetric };

struct DispersionPoint {
  double length;      // m, the scanned fiber length X
  double visibility;  // overlap of the two propagated photons
};

/// Overlap of two photons from `emitter` for the fiber pair (0:X) in the
/// asymmetric mode, where arm 1 keeps `channel_fixed`, or (X:X) in the
/// symmetric mode. Dispersion of the scanned arm is taken from `channel_fixed`.
inline std::vector<DispersionPoint> dispersion_scan(const EmitterSpec& emitter, const ChannelSpec& channel_fixed,
                                                    const std::vector<double>& lengths,
                                                    ScanMode mode = ScanMode::asymmetric) {
  channel_fixed.validate("channel");
  std::vector<DispersionPoint> out;
  out.reserve(lengths.size());
  for (double x : lengths) {
    if (!(x >= 0.0)) throw ConfigError("lengths", "fiber lengths must be >= 0");
    ChannelSpec arm1 = channel_fixed, arm2 = channel_fixed;
    arm2.fiber_length = x;
    if (mode == ScanMode::symmetric) arm1.fiber_length = x;
    const double dl = arm1.fiber_length - arm2.fiber_length;
    const FrequencyGrid grid = dispersion_grid(emitter.lifetime, emitter.center_frequency, channel_fixed.gvd_beta2, dl);
    const SpectralAmplitude base = spectral_amplitude(emitter, grid);
    out.push_back({x, overlap_visibility(propagate(base, arm1), propagate(base, arm2))});
  }
  return out;
}

/// Dispersion together with spectral diffusion: the mean of |<1|2>|^2 over
/// center frequencies drawn from each emitter's Gaussian. Emitter centers and
/// widths are used as given (pass converted offsets for converted photons).
inline double diffusion_averaged_overlap(const EmitterSpec& e1, const EmitterSpec& e2, const ChannelSpec& c1,
                                         const ChannelSpec& c2, int samples, std::uint64_t seed) {
  if (samples < 1) throw ConfigError("samples", "must be >= 1");
  const double tau_long = std::max(e1.lifetime, e2.lifetime);
  const double widest = 1.0 / (2.0 * std::numbers::pi * std::min(e1.lifetime, e2.lifetime));
  const double dl = c1.fiber_length - c2.fiber_length;
  const double beta2 = std::max(std::abs(c1.gvd_beta2), std::abs(c2.gvd_beta2));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n1(e1.center_frequency, e1.sigma()), n2(e2.center_frequency, e2.sigma());
  double sum = 0.0;
  for (int s = 0; s < samples; ++s) {
    EmitterSpec a = e1, b = e2;
    a.center_frequency = e1.sigma() > 0.0 ? n1(rng) : e1.center_frequency;
    b.center_frequency = e2.sigma() > 0.0 ? n2(rng) : e2.center_frequency;
    // Spacing set by the narrower line; widened until both lines sit at
    // least 100 of the wider linewidths inside the edges.
    FrequencyGrid grid = dispersion_grid(tau_long, 0.5 * (a.center_frequency + b.center_frequency), beta2, dl);
    const double half_need = 0.5 * std::abs(a.center_frequency - b.center_frequency) + 100.0 * widest;
    while (0.5 * grid.span() < half_need) grid.n *= 2;
    sum += overlap_visibility(propagate(spectral_amplitude(a, grid), c1), propagate(spectral_amplitude(b, grid), c2));
  }
  return sum / samples;
}

}  // namespace hom
