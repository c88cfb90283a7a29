#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "hom/montecarlo.hpp"

using namespace hom;

namespace {

// |x - mean| within 5 binomial standard deviations
void expect_binomial(std::uint64_t hits, std::uint64_t trials, double p) {
  const double mean = p * static_cast<double>(trials);
  const double sd = std::sqrt(static_cast<double>(trials) * p * (1 - p));
  EXPECT_LT(std::abs(static_cast<double>(hits) - mean), 5 * sd) << hits << " of " << trials << ", p = " << p;
}

ExperimentSpec quiet_reference() {
  ExperimentSpec exp = reference_experiment();
  exp.background_rate = 0.0;
  for (auto& d : exp.detectors) d.dark_rate = 0.0;
  return exp;
}

}  // namespace

TEST(SampleFrequency, ZeroWidthIsCenter) {
  std::mt19937_64 rng(1);
  DiffusionState st;
  for (int k = 0; k < 10; ++k) EXPECT_EQ(sample_frequency(3e9, 0.0, {}, 1e-8, k, st, rng), 3e9);
}

TEST(SampleFrequency, IidMoments) {
  std::mt19937_64 rng(7);
  DiffusionState st;
  const double sigma = 0.85e9;
  const int n = 1'000'000;
  double sum = 0.0, sum2 = 0.0;
  for (int k = 0; k < n; ++k) {
    const double x = sample_frequency(1e9, sigma, {}, 1e-8, k, st, rng) - 1e9;
    sum += x;
    sum2 += x * x;
  }
  EXPECT_LT(std::abs(sum / n), 5 * sigma / std::sqrt(n));
  EXPECT_NEAR(std::sqrt(sum2 / n), sigma, 0.01 * sigma);
}

TEST(SampleFrequency, OrnsteinUhlenbeckCorrelation) {
  DiffusionProcess ou{DiffusionProcess::Mode::ornstein_uhlenbeck, 1e-6};
  const double period = 1.0 / 76.2e6;
  const double sigma = 1e9;
  std::mt19937_64 rng(11);
  DiffusionState st;
  const int n = 400'000;
  std::vector<double> x(n);
  for (int k = 0; k < n; ++k) x[k] = sample_frequency(0.0, sigma, ou, period, k, st, rng);
  const double var = std::inner_product(x.begin(), x.end(), x.begin(), 0.0) / n;
  EXPECT_NEAR(std::sqrt(var), sigma, 0.05 * sigma);  // ~1500 correlation times
  for (int lag : {1, 76, 300}) {
    double c = 0.0;
    for (int k = lag; k < n; ++k) c += x[k] * x[k - lag];
    c /= (n - lag) * var;
    EXPECT_NEAR(c, std::exp(-lag * period / 1e-6), 0.05) << lag;
  }
}

TEST(SampleFrequency, OrnsteinUhlenbeckVisibilityOrdering) {
  EmitterSpec qdb{"QDB", 600e-12, 0.0, 1.3e9, 1.0};
  DiffusionProcess ou{DiffusionProcess::Mode::ornstein_uhlenbeck, 1e-6};
  const double v_4ns = consecutive_photon_visibility(qdb, ou, 4e-9);
  const double v_10us = consecutive_photon_visibility(qdb, ou, 10e-6);
  EXPECT_GT(v_4ns, v_10us);
  EXPECT_GT(v_4ns, 0.9);
  EXPECT_NEAR(v_10us, consecutive_photon_visibility(qdb, {}, 10e-6), 1e-3);

  // The same ordering from sampled frequency pairs.
  std::mt19937_64 rng(3);
  const double period = 4e-9;
  DiffusionState st;
  double sum_short = 0.0, sum_long = 0.0;
  const int gap = 2500;  // 10 us in 4 ns steps
  std::vector<double> x(200'000);
  for (std::size_t k = 0; k < x.size(); ++k)
    x[k] = sample_frequency(qdb, ou, period, static_cast<std::int64_t>(k), st, rng);
  int n_short = 0, n_long = 0;
  for (std::size_t k = gap; k < x.size(); ++k) {
    sum_short += instantaneous_visibility(600e-12, 600e-12, x[k] - x[k - 1]);
    sum_long += instantaneous_visibility(600e-12, 600e-12, x[k] - x[k - gap]);
    ++n_short;
    ++n_long;
  }
  EXPECT_NEAR(sum_short / n_short, v_4ns, 0.01);
  EXPECT_NEAR(sum_long / n_long, v_10us, 0.03);
}

TEST(Beamsplitter, AcceptanceBounds) {
  std::mt19937_64 rng(5);
  std::exponential_distribution<double> e(1.0 / 600e-12);
  for (int i = 0; i < 100000; ++i) {
    const double a = split_acceptance(e(rng), e(rng), 580e-12, 600e-12, 3e9 * (i % 5), Polarization::parallel);
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0);
  }
  EXPECT_EQ(split_acceptance(1e-10, 3e-10, 6e-10, 6e-10, 0.0, Polarization::parallel), 0.0);
  EXPECT_EQ(split_acceptance(1e-10, 3e-10, 6e-10, 6e-10, 0.0, Polarization::orthogonal), 0.5);
}

TEST(Beamsplitter, IdenticalFourierLimitedNeverSplit) {
  ExperimentSpec exp;
  std::mt19937_64 rng(9);
  for (int i = 0; i < 100000; ++i) EXPECT_FALSE(sample_coincidence(0.0, 0.0, exp, rng).has_value());
}

TEST(Beamsplitter, OrthogonalSplitsHalf) {
  ExperimentSpec exp = reference_experiment();
  exp.polarization = Polarization::orthogonal;
  std::mt19937_64 rng(13);
  std::uint64_t hits = 0;
  const std::uint64_t n = 1'000'000;
  for (std::uint64_t i = 0; i < n; ++i) hits += sample_coincidence(0.0, 2e9, exp, rng).has_value();
  expect_binomial(hits, n, 0.5);
}

TEST(Beamsplitter, RemotePairSplitFraction) {
  const ExperimentSpec exp = reference_experiment();
  const AnalyticPair pair = analytic_pair(exp);
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n1(0.0, pair.sigma_1), n2(0.0, pair.sigma_2);
  std::uint64_t hits = 0;
  const std::uint64_t n = 1'000'000;
  for (std::uint64_t i = 0; i < n; ++i) hits += sample_coincidence(n1(rng), n2(rng), exp, rng).has_value();
  expect_binomial(hits, n, (1 - tpi_visibility(pair)) / 2);
}

TEST(Beamsplitter, LagDensityMatchesCorrelation) {
  // Fixed detuning, no diffusion: the accepted tau histogram follows g2_instantaneous.
  ExperimentSpec exp = reference_experiment();
  const double dnu = 2e9;
  std::mt19937_64 rng(19);
  const double width = 50e-12, range = 2.5e-9;
  const int bins = static_cast<int>(2 * range / width);
  std::vector<double> counts(bins, 0.0);
  std::uint64_t accepted = 0;
  const std::uint64_t n = 2'000'000;
  for (std::uint64_t i = 0; i < n; ++i) {
    auto s = sample_coincidence(dnu, 0.0, exp, rng);
    if (!s) continue;
    ++accepted;
    const int b = static_cast<int>(std::floor((s->tau + range) / width));
    if (b >= 0 && b < bins) counts[b] += 1;
  }
  double chi2 = 0.0;
  int dof = 0;
  for (int b = 0; b < bins; ++b) {
    // Simpson over the bin
    const double lo = -range + b * width, hi = lo + width, mid = 0.5 * (lo + hi);
    const double integral = width / 6 *
                            (g2_instantaneous(lo, 580e-12, 600e-12, dnu) + 4 * g2_instantaneous(mid, 580e-12, 600e-12, dnu) +
                             g2_instantaneous(hi, 580e-12, 600e-12, dnu));
    const double expected = integral * static_cast<double>(n);
    if (expected < 20) continue;
    chi2 += (counts[b] - expected) * (counts[b] - expected) / expected;
    ++dof;
  }
  EXPECT_GT(dof, 50);
  EXPECT_LT(chi2 / dof, 1.5);
  expect_binomial(accepted, n, (1 - instantaneous_visibility(580e-12, 600e-12, dnu)) / 2);
}

TEST(Simulate, NoiseOnlyWhenEfficienciesAreZero) {
  ExperimentSpec exp = reference_experiment();
  for (auto& c : exp.converters) c.efficiency = 0.0;
  SimulationOptions opt;
  opt.n_pulses = 76'200'000 / 10;  // 0.1 s
  const auto r = simulate_experiment(exp, opt);
  const double expected = (55.0 + 500.0) * r.acquisition_time;
  for (Channel ch : {Channel::A, Channel::B})
    EXPECT_LT(std::abs(static_cast<double>(r.stream.count(ch)) - expected), 5 * std::sqrt(expected));
  EXPECT_EQ(r.stats.pairs_at_splitter, 0u);
  EXPECT_TRUE(r.stream.is_sorted());
}

TEST(Simulate, SeedDeterminismAndThreadIndependence) {
  ExperimentSpec exp = reference_experiment();
  SimulationOptions opt;
  opt.n_pulses = 300'000;
  opt.seed = 42;
  opt.block_size = 1 << 14;
  opt.diffusion = {DiffusionProcess::Mode::ornstein_uhlenbeck, 1e-6};
  const auto a = simulate_experiment(exp, opt);
  const auto b = simulate_experiment(exp, opt);
  opt.threads = 3;
  const auto c = simulate_experiment(exp, opt);
  EXPECT_EQ(a.stream, b.stream);
  EXPECT_EQ(a.stream, c.stream);
  opt.seed = 43;
  EXPECT_NE(simulate_experiment(exp, opt).stream, a.stream);
}

TEST(Simulate, RatesFollowEfficiencies) {
  const ExperimentSpec exp = quiet_reference();
  SimulationOptions opt;
  opt.n_pulses = 1'000'000;
  const auto r = simulate_experiment(exp, opt);
  const double s1 = 0.347 * exp.channels[0].transmission();
  const double s2 = 0.314 * exp.channels[1].transmission();
  expect_binomial(r.stats.pairs_at_splitter, opt.n_pulses, s1 * s2);
  expect_binomial(r.stats.single_photons, opt.n_pulses, s1 * (1 - s2) + s2 * (1 - s1));
  expect_binomial(r.stats.split_pairs, r.stats.pairs_at_splitter, (1 - tpi_visibility(analytic_pair(exp))) / 2);
  // Every photon reaching a detector is registered with probability 0.35.
  const std::uint64_t photons = 2 * r.stats.pairs_at_splitter + r.stats.single_photons;
  expect_binomial(r.stream.size() + r.stats.dropped_tags, photons, 0.35);
  EXPECT_EQ(r.stats.noise_tags, 0u);
}

TEST(Simulate, RejectsBadOptions) {
  SimulationOptions opt;
  opt.n_pulses = 0;
  EXPECT_THROW(simulate_experiment(reference_experiment(), opt), ConfigError);
  ExperimentSpec exp = reference_experiment();
  exp.repetition_rate = 0.0;
  EXPECT_THROW(simulate_experiment(exp, {}), ConfigError);
}
