#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hom/histogram.hpp"
#include "hom/montecarlo.hpp"

using namespace hom;

namespace {

TimeTagStream poisson_stream(double rate_a, double rate_b, double duration, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TimeTagStream s;
  for (auto [ch, rate] : {std::pair{Channel::A, rate_a}, std::pair{Channel::B, rate_b}}) {
    std::poisson_distribution<std::uint64_t> n(rate * duration);
    std::uniform_int_distribution<std::uint64_t> t(0, static_cast<std::uint64_t>(duration * 1e12) - 1);
    for (std::uint64_t i = n(rng); i > 0; --i) s.tags.push_back({ch, t(rng)});
  }
  s.sort();
  return s;
}

}  // namespace

TEST(Correlate, EmptyStream) {
  const auto h = correlate(TimeTagStream{}, 1e-12, 1e-9);
  EXPECT_EQ(h.size(), 2000u);
  EXPECT_EQ(h.total(), 0.0);
}

TEST(Correlate, SinglePair) {
  TimeTagStream s;
  s.tags = {{Channel::A, 0}, {Channel::B, 500}};
  const auto h = correlate(s, 1e-12, 1e-9);
  EXPECT_EQ(h.total(), 1.0);
  EXPECT_EQ(h.counts[1500], 1u);
  EXPECT_EQ(h.lower_ps(1500), 500);
}

TEST(Correlate, BinCountIsExact) {
  EXPECT_EQ(correlate(TimeTagStream{}, 10e-12, 1.5e-6).size(), 300000u);
  EXPECT_THROW(correlate(TimeTagStream{}, 7e-12, 1e-9), ConfigError);
  EXPECT_THROW(correlate(TimeTagStream{}, 0.0, 1e-9), ConfigError);
}

TEST(Correlate, RejectsUnsortedInput) {
  TimeTagStream s;
  s.tags = {{Channel::A, 10}, {Channel::B, 5}};
  EXPECT_THROW(correlate(s, 1e-12, 1e-9), ConfigError);
}

TEST(Correlate, MatchesBruteForce) {
  const auto s = poisson_stream(2e6, 3e6, 2e-3, 1);
  const auto h = correlate(s, 25e-12, 50e-9);
  std::vector<std::uint64_t> brute(h.size(), 0);
  for (const auto& a : s.tags) {
    if (a.channel != Channel::A) continue;
    for (const auto& b : s.tags) {
      if (b.channel != Channel::B) continue;
      const auto lag = static_cast<std::int64_t>(b.timestamp) - static_cast<std::int64_t>(a.timestamp);
      if (lag >= -h.range_ps && lag < h.range_ps) ++brute[static_cast<std::size_t>((lag + h.range_ps) / h.bin_width_ps)];
    }
  }
  EXPECT_EQ(h.counts, brute);
}

TEST(Correlate, PoissonStreamsAreFlat) {
  const double ra = 4e5, rb = 6e5, T = 1.0;
  const auto s = poisson_stream(ra, rb, T, 2);
  const auto h = correlate(s, 1e-9, 100e-9, T);
  const double expected = static_cast<double>(h.singles_a) * static_cast<double>(h.singles_b) / T * 1e-9;
  EXPECT_NEAR(expected, ra * rb * T * 1e-9, 5 * std::sqrt(ra * rb * T * 1e-9) * 3);
  double chi2 = 0.0;
  for (auto c : h.counts) chi2 += (c - expected) * (c - expected) / expected;
  const double dof = static_cast<double>(h.size());
  EXPECT_LT(std::abs(chi2 - dof), 5 * std::sqrt(2 * dof));
}

TEST(Correlate, ThreadedMatchesSerial) {
  const auto s = poisson_stream(1e6, 1e6, 0.05, 3);
  EXPECT_EQ(correlate(s, 10e-12, 20e-9, 0.05, 1).counts, correlate(s, 10e-12, 20e-9, 0.05, 3).counts);
}

TEST(Correlate, AdditiveOverDisjointStreams) {
  auto s1 = poisson_stream(1e6, 1e6, 0.01, 4);
  auto s2 = poisson_stream(1e6, 1e6, 0.01, 5);
  TimeTagStream both = s1;
  for (auto t : s2.tags) both.tags.push_back({t.channel, t.timestamp + 20'000'000'000ull});
  const auto h1 = correlate(s1, 10e-12, 20e-9), h2 = correlate(s2, 10e-12, 20e-9), h = correlate(both, 10e-12, 20e-9);
  for (std::size_t i = 0; i < h.size(); ++i) ASSERT_EQ(h.counts[i], h1.counts[i] + h2.counts[i]);
}

TEST(Correlate, SidePeaksAtRepetitionPeriod) {
  ExperimentSpec exp = reference_experiment();
  exp.polarization = Polarization::orthogonal;
  exp.background_rate = 0.0;
  for (auto& d : exp.detectors) d.dark_rate = 0.0;
  SimulationOptions opt;
  opt.n_pulses = 300'000;
  const auto sim = simulate_experiment(exp, opt);
  const auto h = correlate(sim.stream, 100e-12, 60e-9, sim.acquisition_time);
  // Peak maxima near k * 13.12 ns, empty halfway between.
  for (int k = -3; k <= 3; ++k) {
    const double c = k * 13.1234e3;
    const auto [on, v1] = h.integrate(c - 1000, c + 1000);
    const auto [off, v2] = h.integrate(c + 5560, c + 7560);
    EXPECT_GT(on, 50 * (off + 1)) << k;
  }
  double best = 0.0, where = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i)
    if (h.center_ps(i) > 6000 && h.center_ps(i) < 20000 && h.counts[i] > best) {
      best = static_cast<double>(h.counts[i]);
      where = h.center_ps(i);
    }
  EXPECT_NEAR(where, 13123.4, 300);
}

TEST(Convolve, ZeroJitterIsIdentity) {
  const auto s = poisson_stream(1e6, 1e6, 0.02, 6);
  const auto h = correlate(s, 10e-12, 10e-9);
  const auto r = convolve_response(h, 0.0);
  for (std::size_t i = 0; i < h.size(); ++i) EXPECT_EQ(r.counts[i], static_cast<double>(h.counts[i]));
}

TEST(Convolve, DeltaBecomesGaussianOfGivenFwhm) {
  RealHistogram h;
  h.bin_width_ps = 1;
  h.range_ps = 2000;
  h.counts.assign(4000, 0.0);
  h.counts[2000] = 1000.0;
  const auto r = convolve_response(h, 100e-12);
  double m0 = 0, m1 = 0, m2 = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    m0 += r.counts[i];
    m1 += r.counts[i] * r.center_ps(i);
    m2 += r.counts[i] * r.center_ps(i) * r.center_ps(i);
  }
  const double mean = m1 / m0;
  const double sd = std::sqrt(m2 / m0 - mean * mean);
  EXPECT_NEAR(m0, 1000.0, 1e-9);
  EXPECT_NEAR(mean, 0.5, 1e-6);
  EXPECT_NEAR(sd * fwhm_per_sigma, 100.0, 0.1);
  // Half maximum at +-50 ps.
  const double peak = r.counts[2000];
  EXPECT_NEAR(0.5 * (r.counts[2050] + r.counts[2051]) / peak, 0.5, 0.01);
}

TEST(Convolve, PreservesAreaIncludingEdges) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 100);
  RealHistogram h;
  h.bin_width_ps = 4;
  h.range_ps = 400;
  for (int i = 0; i < 200; ++i) h.counts.push_back(u(rng));
  const auto r = convolve_response(h, 150e-12);
  EXPECT_NEAR(r.total(), h.total(), 1e-9 * h.total());
}

TEST(BackgroundCorrect, ZeroRatesAreIdentity) {
  const auto s = poisson_stream(1e6, 1e6, 0.02, 9);
  const auto h = correlate(s, 10e-12, 10e-9, 0.02);
  const auto r = background_correct(h, {}, {});
  for (std::size_t i = 0; i < h.size(); ++i) EXPECT_EQ(r.counts[i], static_cast<double>(h.counts[i]));
  EXPECT_THROW(background_correct(h, {-1.0, 0.0}, {}), ConfigError);
}

TEST(BackgroundCorrect, PureNoiseGoesToZero) {
  ExperimentSpec exp = reference_experiment();
  for (auto& c : exp.converters) c.efficiency = 0.0;
  exp.background_rate = 1e6;  // raised so the floor is well populated
  SimulationOptions opt;
  opt.n_pulses = 15'240'000;  // 0.2 s
  const auto sim = simulate_experiment(exp, opt);
  const auto h = correlate(sim.stream, 1e-9, 1e-6, sim.acquisition_time);
  const double n = exp.detectors[0].dark_rate;
  const auto r = background_correct(h, {n, n}, {exp.background_rate, exp.background_rate});
  const double sum = r.total();
  double var = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) var += r.variance_at(i);
  EXPECT_LT(std::abs(sum), 3 * std::sqrt(var)) << sum << " vs sd " << std::sqrt(var);
  EXPECT_GT(r.background_floor, 0.0);
}
