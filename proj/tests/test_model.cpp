#include <cmath>

#include <gtest/gtest.h>

#include "hom/model.hpp"

using namespace hom;

TEST(Model, SigmaRoundTrip) {
  for (double fwhm : {0.0, 1e6, 1.3e9, 2.0e9, 7.7e12}) {
    EmitterSpec e;
    e.inhom_fwhm = fwhm;
    EXPECT_DOUBLE_EQ(e.sigma() * fwhm_per_sigma, fwhm);
  }
}

TEST(Model, HomogeneousLinewidth) {
  EmitterSpec e;
  e.lifetime = 1000e-12;
  EXPECT_NEAR(e.homogeneous_linewidth(), 0.159e9, 0.001e9);
  e.lifetime = 100e-12;
  EXPECT_NEAR(e.homogeneous_linewidth(), 1.59e9, 0.01e9);
}

TEST(Model, EmitterValidation) {
  EmitterSpec e;
  e.lifetime = 0.0;
  try {
    e.validate("emitters[1]");
    FAIL();
  } catch (const ConfigError& err) {
    EXPECT_EQ(err.key(), "emitters[1].lifetime");
  }
  e.lifetime = 1e-9;
  e.inhom_fwhm = -1.0;
  EXPECT_THROW(e.validate(), ConfigError);
}

TEST(Model, ConverterAndDetectorValidation) {
  ConverterSpec c;
  c.efficiency = 1.2;
  EXPECT_THROW(c.validate(), ConfigError);
  DetectorSpec d;
  d.dark_rate = -1.0;
  EXPECT_THROW(d.validate(), ConfigError);
  ChannelSpec ch;
  ch.fiber_length = -5.0;
  EXPECT_THROW(ch.validate(), ConfigError);
}

TEST(Converter, TelecomWavelengthFromPump) {
  ConverterSpec c;
  c.pump_frequency = frequency_from_wavelength(2157.46e-9);
  const double out = converted_frequency(frequency_from_wavelength(904.442e-9), c);
  EXPECT_NEAR(wavelength_from_frequency(out) * 1e9, 1557.28, 0.01);
}

TEST(Converter, IdentityPump) {
  ConverterSpec c;
  c.pump_frequency = 0.0;
  EXPECT_DOUBLE_EQ(converted_frequency(3.3e14, c), 3.3e14);
}

TEST(Converter, InversePumpWavelength) {
  EXPECT_NEAR(pump_wavelength_for(904.420e-9, 1557.28e-9) * 1e9, 2157.32, 0.02);
}

TEST(Converter, RejectsNonPositiveOutput) {
  ConverterSpec c;
  c.pump_frequency = 4e14;
  EXPECT_THROW(converted_frequency(3e14, c), ConfigError);
}

TEST(Converter, MonotoneInInput) {
  ConverterSpec c;
  c.pump_frequency = 1.39e14;
  double prev = 0.0;
  for (double nu = 3.31e14; nu < 3.32e14; nu += 1e11) {
    const double out = converted_frequency(nu, c);
    EXPECT_GT(out, prev);
    prev = out;
  }
}

TEST(Detuning, IdenticalPairIsZero) {
  ExperimentSpec exp;
  EXPECT_EQ(effective_detuning(exp), 0.0);
}

TEST(Detuning, ReferencePairIsCompensated) {
  const ExperimentSpec exp = reference_experiment();
  // The emitters sit about 8 GHz apart in the NIR ...
  const double nir = exp.emitters[0].center_frequency - exp.emitters[1].center_frequency;
  EXPECT_NEAR(nir / 1e9, -8.063, 0.01);
  // ... and the converters remove it.
  EXPECT_NEAR(effective_detuning(exp), 0.0, 1e-3);
  EXPECT_NO_THROW(exp.validate());
}

TEST(Detuning, PumpOffsetShiftsDetuning) {
  ExperimentSpec exp = reference_experiment();
  exp.converters[1].pump_frequency += 6e9;
  EXPECT_NEAR(effective_detuning(exp), 6e9, 1e-3);
}

TEST(Detuning, AntisymmetricUnderSwap) {
  ExperimentSpec exp = reference_experiment();
  exp.converters[0].pump_frequency += 1.7e9;
  ExperimentSpec swapped = exp;
  std::swap(swapped.emitters[0], swapped.emitters[1]);
  std::swap(swapped.converters[0], swapped.converters[1]);
  EXPECT_DOUBLE_EQ(effective_detuning(swapped), -effective_detuning(exp));
}

TEST(Detuning, PumpJitterDoesNotMoveTheMean) {
  ExperimentSpec exp = reference_experiment();
  const double before = effective_detuning(exp);
  exp.converters[0].pump_jitter_sigma = 1e9;
  EXPECT_EQ(effective_detuning(exp), before);
  EXPECT_GT(converted_sigma(exp.emitters[0], exp.converters[0]), exp.emitters[0].sigma());
}

TEST(Experiment, ValidationNamesTheKey) {
  ExperimentSpec exp = reference_experiment();
  exp.repetition_rate = 0.0;
  try {
    exp.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "experiment.repetition_rate");
  }
  exp = reference_experiment();
  exp.converters[1].pump_frequency = 1e16;
  try {
    exp.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "converters[1].pump_frequency");
  }
}

TEST(Experiment, RepetitionPeriod) {
  ExperimentSpec exp;
  EXPECT_NEAR(exp.repetition_period() * 1e9, 13.12, 0.01);
}
