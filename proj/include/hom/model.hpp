#pragma once

// Domain types shared by every module: emitters, frequency converters, fiber
// channels, detectors and the experiment that ties them together.
//
// Units are SI throughout (s, Hz, m, s^2/m). Optical frequencies are stored as
// offsets from a FrequencyReference so that GHz-scale detunings keep full
// double precision instead of riding on a ~300 THz constant.

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "hom/errors.hpp"

namespace hom {

inline constexpr double speed_of_light = 299'792'458.0;  // m/s

/// FWHM = fwhm_per_sigma * sigma for a Gaussian.
inline const double fwhm_per_sigma = 2.0 * std::sqrt(2.0 * std::numbers::ln2);

inline double frequency_from_wavelength(double wavelength) { return speed_of_light / wavelength; }
inline double wavelength_from_frequency(double frequency) { return speed_of_light / frequency; }

enum class Polarization { parallel, orthogonal };

/// Absolute anchors for the offset frequencies used everywhere else. Emitter
/// centers are offsets from `nir`, converter pumps are offsets from `pump()`,
/// converted photons are offsets from `telecom`.
struct FrequencyReference {
  double nir = frequency_from_wavelength(904.431e-9);
  double telecom = frequency_from_wavelength(1557.28e-9);

  double pump() const { return nir - telecom; }
};

struct EmitterSpec {
  std::string name = "emitter";
  double lifetime = 600e-12;        // radiative lifetime tau (s)
  double center_frequency = 0.0;    // Hz, offset from the NIR reference
  double inhom_fwhm = 0.0;          // Gaussian spectral-diffusion FWHM (Hz)
  double emission_probability = 1.0;

  /// Standard deviation of the spectral-diffusion distribution.
  double sigma() const { return inhom_fwhm / fwhm_per_sigma; }

  /// Lorentzian FWHM of a Fourier-limited photon, 1/(2 pi tau).
  double homogeneous_linewidth() const { return 1.0 / (2.0 * std::numbers::pi * lifetime); }

  void validate(const std::string& key = "emitter") const {
    if (!(lifetime > 0.0) || !std::isfinite(lifetime))
      throw ConfigError(key + ".lifetime", "must be > 0");
    if (!(inhom_fwhm >= 0.0) || !std::isfinite(inhom_fwhm))
      throw ConfigError(key + ".inhom_fwhm", "must be >= 0");
    if (!std::isfinite(center_frequency))
      throw ConfigError(key + ".center_frequency", "must be finite");
    if (!(emission_probability >= 0.0 && emission_probability <= 1.0))
      throw ConfigError(key + ".emission_probability", "must lie in [0, 1]");
  }
};

/// Default pump jitter: 3 sigma = 20 MHz on the relative pump detuning, split
/// evenly between the two converters so the quadrature sum reproduces it.
inline const double default_pump_jitter_sigma = (20e6 / 3.0) / std::numbers::sqrt2;

struct ConverterSpec {
  double pump_frequency = 0.0;  // Hz; absolute, or offset from FrequencyReference::pump()
  double pump_jitter_sigma = default_pump_jitter_sigma;
  double efficiency = 1.0;

  void validate(const std::string& key = "converter") const {
    if (!(efficiency >= 0.0 && efficiency <= 1.0))
      throw ConfigError(key + ".efficiency", "must lie in [0, 1]");
    if (!(pump_jitter_sigma >= 0.0) || !std::isfinite(pump_jitter_sigma))
      throw ConfigError(key + ".pump_jitter_sigma", "must be >= 0");
    if (!std::isfinite(pump_frequency))
      throw ConfigError(key + ".pump_frequency", "must be finite");
  }
};

/// Standard single-mode fiber at 1550 nm, D ~ 17 ps/(nm km).
inline constexpr double default_gvd_beta2 = -21.7e-27;  // s^2/m (-21.7 ps^2/km)

struct ChannelSpec {
  double fiber_length = 0.0;               // m
  double gvd_beta2 = default_gvd_beta2;    // s^2/m
  double loss_db_per_km = 0.0;

  double transmission() const {
    return std::pow(10.0, -loss_db_per_km * (fiber_length / 1000.0) / 10.0);
  }

  void validate(const std::string& key = "channel") const {
    if (!(fiber_length >= 0.0) || !std::isfinite(fiber_length))
      throw ConfigError(key + ".fiber_length", "must be >= 0");
    if (!std::isfinite(gvd_beta2)) throw ConfigError(key + ".gvd_beta2", "must be finite");
    if (!(loss_db_per_km >= 0.0)) throw ConfigError(key + ".loss_db_per_km", "must be >= 0");
  }
};

struct DetectorSpec {
  double jitter_fwhm = 100e-12;  // s
  double efficiency = 0.35;
  double dark_rate = 55.0;       // counts/s

  double jitter_sigma() const { return jitter_fwhm / fwhm_per_sigma; }

  void validate(const std::string& key = "detector") const {
    if (!(jitter_fwhm >= 0.0) || !std::isfinite(jitter_fwhm))
      throw ConfigError(key + ".jitter_fwhm", "must be >= 0");
    if (!(efficiency >= 0.0 && efficiency <= 1.0))
      throw ConfigError(key + ".efficiency", "must lie in [0, 1]");
    if (!(dark_rate >= 0.0) || !std::isfinite(dark_rate))
      throw ConfigError(key + ".dark_rate", "must be >= 0");
  }
};

struct ExperimentSpec {
  std::array<EmitterSpec, 2> emitters;
  std::array<ConverterSpec, 2> converters;
  std::array<ChannelSpec, 2> channels;
  std::array<DetectorSpec, 2> detectors;  // [0] = output port A, [1] = port B
  double repetition_rate = 76.2e6;        // Hz
  Polarization polarization = Polarization::parallel;
  double background_rate = 500.0;         // flat noise per detector (counts/s)
  double acquisition_time = 1.0;          // s
  FrequencyReference reference;

  double repetition_period() const { return 1.0 / repetition_rate; }

  void validate() const;
};

/// Difference-frequency generation: the converted photon carries the input
/// frequency minus the pump frequency. Arguments are absolute frequencies, or
/// offsets when the converter pump is an offset from the matching reference.
inline double converted_frequency(double nir_frequency, const ConverterSpec& converter) {
  const double out = nir_frequency - converter.pump_frequency;
  if (!(out > 0.0))
    throw ConfigError("converter.pump_frequency",
                      "converted frequency is not positive (pump must lie below the input)");
  return out;
}

/// Offset-domain version: the result is relative to FrequencyReference::telecom
/// and may be negative.
inline double converted_offset(double nir_offset, const ConverterSpec& converter) {
  return nir_offset - converter.pump_frequency;
}

/// Pump wavelength satisfying 1/lambda_p = 1/lambda_in - 1/lambda_out.
inline double pump_wavelength_for(double input_wavelength, double output_wavelength) {
  return 1.0 / (1.0 / input_wavelength - 1.0 / output_wavelength);
}

/// Mean detuning of the two converted photons (arm 1 minus arm 2). Pump jitter
/// broadens the distribution but does not move its mean.
inline double effective_detuning(const ExperimentSpec& exp) {
  return converted_offset(exp.emitters[0].center_frequency, exp.converters[0]) -
         converted_offset(exp.emitters[1].center_frequency, exp.converters[1]);
}

/// Spectral-diffusion sigma of the converted photon in one arm: emitter
/// inhomogeneous width and pump jitter added in quadrature.
inline double converted_sigma(const EmitterSpec& emitter, const ConverterSpec& converter) {
  return std::hypot(emitter.sigma(), converter.pump_jitter_sigma);
}

inline void ExperimentSpec::validate() const {
  for (int i = 0; i < 2; ++i) {
    const std::string idx = "[" + std::to_string(i) + "]";
    emitters[i].validate("emitters" + idx);
    converters[i].validate("converters" + idx);
    channels[i].validate("channels" + idx);
    detectors[i].validate("detectors" + idx);
    // Absolute converted frequency must be physical.
    ConverterSpec absolute = converters[i];
    absolute.pump_frequency += reference.pump();
    try {
      converted_frequency(reference.nir + emitters[i].center_frequency, absolute);
    } catch (const ConfigError& e) {
      throw ConfigError("converters" + idx + ".pump_frequency", e.what());
    }
  }
  if (!(repetition_rate > 0.0) || !std::isfinite(repetition_rate))
    throw ConfigError("experiment.repetition_rate", "must be > 0");
  if (!(background_rate >= 0.0)) throw ConfigError("experiment.background_rate", "must be >= 0");
  if (!(acquisition_time >= 0.0)) throw ConfigError("experiment.acquisition_time", "must be >= 0");
  if (!(reference.nir > reference.telecom && reference.telecom > 0.0))
    throw ConfigError("experiment.reference", "NIR reference must exceed the telecom reference");
}

/// The remote-emitter configuration used throughout the examples and tests:
/// two charged-exciton lines near 904.4 nm, converters set so the telecom
/// photons are resonant, 60 m of fiber per arm and 100 ps / 35 % detectors.
inline ExperimentSpec reference_experiment() {
  ExperimentSpec exp;
  const double nir_r = frequency_from_wavelength(904.442e-9) - exp.reference.nir;
  const double nir_b = frequency_from_wavelength(904.420e-9) - exp.reference.nir;
  exp.emitters[0] = {"QDR", 580e-12, nir_r, 2.0e9, 1.0};
  exp.emitters[1] = {"QDB", 600e-12, nir_b, 1.3e9, 1.0};
  exp.converters[0] = {nir_r, default_pump_jitter_sigma, 0.347};
  exp.converters[1] = {nir_b, default_pump_jitter_sigma, 0.314};
  exp.channels[0] = {60.0, default_gvd_beta2, 0.2};
  exp.channels[1] = {60.0, default_gvd_beta2, 0.2};
  exp.detectors[0] = {100e-12, 0.35, 55.0};
  exp.detectors[1] = {100e-12, 0.35, 55.0};
  return exp;
}

}  // namespace hom
