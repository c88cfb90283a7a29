#pragma once

// Closed-form two-photon interference of photons from two spontaneously
// decaying two-level emitters with Gaussian spectral diffusion.
//
// All correlation densities are per pulse pair: integrating g2 over the time
// lag gives the probability that the two photons leave the beamsplitter by
// different ports, so V = 1 - 2 * integral(g2).

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "hom/errors.hpp"
#include "hom/faddeeva.hpp"
#include "hom/model.hpp"

namespace hom {

/// Lifetimes, spectral-diffusion widths and mean detuning of the two photons.
struct AnalyticPair {
  double tau_1 = 580e-12;
  double tau_2 = 600e-12;
  double sigma_1 = 0.0;
  double sigma_2 = 0.0;
  double delta_nu = 0.0;

  /// 1/T = 1/tau_1 + 1/tau_2.
  double T() const { return tau_1 * tau_2 / (tau_1 + tau_2); }
  /// Sigma^2 = sigma_1^2 + sigma_2^2.
  double Sigma() const { return std::hypot(sigma_1, sigma_2); }

  static AnalyticPair from_fwhm(double tau_1, double tau_2, double fwhm_1, double fwhm_2,
                                double delta_nu) {
    return {tau_1, tau_2, fwhm_1 / fwhm_per_sigma, fwhm_2 / fwhm_per_sigma, delta_nu};
  }

  void validate() const {
    if (!(tau_1 > 0.0)) throw ConfigError("pair.tau_1", "must be > 0");
    if (!(tau_2 > 0.0)) throw ConfigError("pair.tau_2", "must be > 0");
    if (!(sigma_1 >= 0.0)) throw ConfigError("pair.sigma_1", "must be >= 0");
    if (!(sigma_2 >= 0.0)) throw ConfigError("pair.sigma_2", "must be >= 0");
    if (!std::isfinite(delta_nu)) throw ConfigError("pair.delta_nu", "must be finite");
  }
};

/// Pair as seen after conversion: pump jitter joins each arm's inhomogeneous width.
inline AnalyticPair analytic_pair(const ExperimentSpec& exp) {
  return {exp.emitters[0].lifetime, exp.emitters[1].lifetime,
          converted_sigma(exp.emitters[0], exp.converters[0]),
          converted_sigma(exp.emitters[1], exp.converters[1]), effective_detuning(exp)};
}

/// Single-photon wave packet (1/sqrt(tau)) H(t) exp(-t/2tau - i 2 pi nu t).
inline std::complex<double> wavefunction(double t, double tau, double nu) {
  if (t < 0.0) return 0.0;
  const double phase = -2.0 * std::numbers::pi * nu * t;
  return std::exp(-t / (2.0 * tau)) / std::sqrt(tau) * std::complex<double>(std::cos(phase), std::sin(phase));
}

/// |zeta(t)|^2 = H(t) exp(-t/tau) / tau; integrates to one.
inline double wavefunction_density(double t, const EmitterSpec& emitter) {
  if (t < 0.0) return 0.0;
  return std::exp(-t / emitter.lifetime) / emitter.lifetime;
}

/// Cross-port coincidence density for a fixed instantaneous detuning.
inline double g2_instantaneous(double tau, double tau_1, double tau_2, double delta_nu_inst) {
  const double a = std::abs(tau);
  const double T = tau_1 * tau_2 / (tau_1 + tau_2);
  const double bracket = std::exp(-a / tau_1) + std::exp(-a / tau_2) -
                         2.0 * std::exp(-a / (2.0 * T)) * std::cos(2.0 * std::numbers::pi * delta_nu_inst * tau);
  return bracket / (4.0 * (tau_1 + tau_2));
}

/// g2_instantaneous averaged over the Gaussian distribution of detunings
/// (mean delta_nu, width Sigma).
inline double g2_averaged(double tau, const AnalyticPair& pair) {
  const double a = std::abs(tau);
  const double S = pair.Sigma();
  const double pi = std::numbers::pi;
  const double damping = std::exp(-a / (2.0 * pair.T()) - 2.0 * pi * pi * S * S * tau * tau);
  const double bracket = std::exp(-a / pair.tau_1) + std::exp(-a / pair.tau_2) -
                         2.0 * damping * std::cos(2.0 * pi * pair.delta_nu * tau);
  return bracket / (4.0 * (pair.tau_1 + pair.tau_2));
}

/// Visibility for a fixed detuning: |<zeta_1|zeta_2>|^2 =
/// 4T / ((tau_1 + tau_2)(1 + (4 pi T dnu)^2)).
inline double instantaneous_visibility(double tau_1, double tau_2, double delta_nu_inst) {
  const double T = tau_1 * tau_2 / (tau_1 + tau_2);
  const double u = 4.0 * std::numbers::pi * T * delta_nu_inst;
  return 4.0 * T / ((tau_1 + tau_2) * (1.0 + u * u));
}

/// Two-photon interference visibility V = 1 - 2 P of the spectrally averaged
/// correlation,
///
///   V = Re w(z) / (sqrt(2 pi) Sigma (tau_1 + tau_2)),
///   z = (2 pi delta_nu + i/(2T)) / (2 pi sqrt(2) Sigma).
///
/// Writing w(z) = exp(-z^2) erfc(-iz) gives the equivalent
/// [exp(-z^2) erfc(-iz) + c.c.] / (2 sqrt(2 pi) Sigma (tau_1 + tau_2)) form.
/// As a function of delta_nu this is a Voigt profile. Sigma = 0 takes the
/// Lorentzian limit directly instead of evaluating w at infinity.
inline double tpi_visibility(const AnalyticPair& pair) {
  pair.validate();
  const double S = pair.Sigma();
  if (S == 0.0) return instantaneous_visibility(pair.tau_1, pair.tau_2, pair.delta_nu);
  const double pi = std::numbers::pi;
  const double scale = 2.0 * pi * std::numbers::sqrt2 * S;
  const std::complex<double> z{2.0 * pi * pair.delta_nu / scale, 1.0 / (2.0 * pair.T() * scale)};
  return faddeeva(z).real() / (std::sqrt(2.0 * pi) * S * (pair.tau_1 + pair.tau_2));
}

/// Normalized Voigt profile: Gaussian of standard deviation `sigma` convolved
/// with a Lorentzian of half width `lorentz_hwhm`, evaluated at `detuning`.
inline double voigt_profile(double detuning, double sigma, double lorentz_hwhm) {
  const double pi = std::numbers::pi;
  if (sigma == 0.0) {
    if (lorentz_hwhm == 0.0) return detuning == 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return lorentz_hwhm / (pi * (detuning * detuning + lorentz_hwhm * lorentz_hwhm));
  }
  if (lorentz_hwhm == 0.0)
    return std::exp(-0.5 * detuning * detuning / (sigma * sigma)) / (sigma * std::sqrt(2.0 * pi));
  const std::complex<double> z{detuning / (sigma * std::numbers::sqrt2), lorentz_hwhm / (sigma * std::numbers::sqrt2)};
  return faddeeva(z).real() / (sigma * std::sqrt(2.0 * pi));
}

/// Time-integrated emission spectrum of an emitter (per Hz): homogeneous
/// Lorentzian of FWHM 1/(2 pi tau) broadened by the emitter's Gaussian.
/// An infinite lifetime gives the pure Gaussian.
inline double voigt_spectrum(double nu, const EmitterSpec& emitter) {
  if (!(emitter.lifetime > 0.0)) throw ConfigError("emitter.lifetime", "must be > 0");
  const double hwhm = std::isinf(emitter.lifetime) ? 0.0 : 0.5 * emitter.homogeneous_linewidth();
  return voigt_profile(nu - emitter.center_frequency, emitter.sigma(), hwhm);
}

}  // namespace hom
