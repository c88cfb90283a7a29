#pragma once

// Monte Carlo time-tag generator for a pulsed two-photon interference
// experiment.
//
// Each excitation pulse k fires both emitters at k / repetition_rate. A photon
// reaches the beamsplitter with probability
//   emission_probability * converter efficiency * fiber transmission,
// and is then registered by the detector on its output port with that
// detector's efficiency. Detectors resolve photon number and have no dead
// time, so two photons leaving through the same port give two tags.
//
// Beamsplitter. When both photons arrive, emission delays t1 ~ Exp(tau_1) and
// t2 ~ Exp(tau_2) are drawn and assigned to ports at random. That proposal has
// density 2D(tA, tB) with
//   D = (|zeta_1(tA) zeta_2(tB)|^2 + |zeta_2(tA) zeta_1(tB)|^2) / 4,
// so accepting the split with probability P / 2D, where
//   P = |zeta_1(tA) zeta_2(tB) - zeta_2(tA) zeta_1(tB)|^2 / 4,
// leaves exactly the two-photon density P on the accepted events. The
// acceptance ratio works out to 1/2 - |a||b| cos(2 pi dnu (tB - tA)) / (|a|^2 + |b|^2)
// and never needs complex arithmetic. A rejected proposal is the bunched
// outcome: both photons leave through one port chosen at random. Orthogonal
// polarization has no cross term and accepts with probability 1/2.
//
// Blocks of pulses are simulated independently with RNG streams seeded from
// (seed, block), then concatenated in block order and sorted, so the output
// does not depend on the number of worker threads.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "hom/analytic.hpp"
#include "hom/errors.hpp"
#include "hom/model.hpp"
#include "hom/timetag.hpp"

namespace hom {

struct DiffusionProcess {
  enum class Mode { iid, ornstein_uhlenbeck };
  Mode mode = Mode::iid;
  double correlation_time = 1e-6;  // s; only used by the OU mode, not a measured value

  void validate() const {
    if (mode == Mode::ornstein_uhlenbeck && !(correlation_time > 0.0))
      throw ConfigError("experiment.correlation_time_us", "must be > 0");
  }
};

/// Current deviation of one emitter from its center frequency, plus the
/// pulse index it belongs to (-1 before the first draw).
struct DiffusionState {
  double deviation = 0.0;
  std::int64_t pulse = -1;
};

/// Draws the instantaneous frequency for `pulse_index`.
///
/// iid: independent Normal(center, sigma) per pulse.
/// OU: exact AR(1) update over the elapsed pulses,
///   x' = rho x + sigma sqrt(1 - rho^2) n,  rho = exp(-dt / correlation_time),
/// started from the stationary law. Both modes have the same stationary
/// distribution.
template <class URBG>
double sample_frequency(double center, double sigma, const DiffusionProcess& process, double rep_period,
                        std::int64_t pulse_index, DiffusionState& state, URBG& rng) {
  if (sigma == 0.0) {
    state.pulse = pulse_index;
    state.deviation = 0.0;
    return center;
  }
  std::normal_distribution<double> normal;
  if (process.mode == DiffusionProcess::Mode::iid || state.pulse < 0) {
    state.deviation = sigma * normal(rng);
  } else {
    const double dt = static_cast<double>(pulse_index - state.pulse) * rep_period;
    const double rho = std::exp(-dt / process.correlation_time);
    state.deviation = rho * state.deviation + sigma * std::sqrt(1.0 - rho * rho) * normal(rng);
  }
  state.pulse = pulse_index;
  return center + state.deviation;
}

template <class URBG>
double sample_frequency(const EmitterSpec& emitter, const DiffusionProcess& process, double rep_period,
                        std::int64_t pulse_index, DiffusionState& state, URBG& rng) {
  return sample_frequency(emitter.center_frequency, emitter.sigma(), process, rep_period, pulse_index, state, rng);
}

/// Emission delays of the two photons after the beamsplitter. `split` means
/// one photon per port (t_a on A, t_b on B); otherwise both left through
/// `bunched_port` with delays t_a and t_b.
struct BeamsplitterOutcome {
  bool split = false;
  double t_a = 0.0;
  double t_b = 0.0;
  Channel bunched_port = Channel::A;
};

/// Acceptance probability P / 2D of a proposed split (tA on A, tB on B).
inline double split_acceptance(double t_a, double t_b, double tau_1, double tau_2, double delta_nu,
                               Polarization polarization) {
  if (polarization == Polarization::orthogonal) return 0.5;
  // log|a|^2 and log|b|^2 up to the common 1/(tau_1 tau_2) factor
  const double la = -t_a / tau_1 - t_b / tau_2;
  const double lb = -t_a / tau_2 - t_b / tau_1;
  // |a||b| / (|a|^2 + |b|^2) = 1 / (2 cosh((la - lb)/2))
  const double ratio = 0.5 / std::cosh(0.5 * (la - lb));
  const double accept = 0.5 - ratio * std::cos(2.0 * std::numbers::pi * delta_nu * (t_b - t_a));
  return std::clamp(accept, 0.0, 1.0);
}

template <class URBG>
BeamsplitterOutcome beamsplitter(double nu_1, double nu_2, double tau_1, double tau_2, Polarization polarization,
                                 URBG& rng) {
  std::exponential_distribution<double> exp1(1.0 / tau_1), exp2(1.0 / tau_2);
  std::uniform_real_distribution<double> uni;
  const double t1 = exp1(rng);
  const double t2 = exp2(rng);
  const bool photon1_on_a = uni(rng) < 0.5;
  BeamsplitterOutcome out;
  out.t_a = photon1_on_a ? t1 : t2;
  out.t_b = photon1_on_a ? t2 : t1;
  out.split = uni(rng) < split_acceptance(out.t_a, out.t_b, tau_1, tau_2, nu_1 - nu_2, polarization);
  if (!out.split) out.bunched_port = uni(rng) < 0.5 ? Channel::A : Channel::B;
  return out;
}

/// One cross-port detection pair for two photons with the given instantaneous
/// frequencies, or nothing when they bunched. Returns (t0, tau) with t0 the
/// delay of the photon on port A and tau = t_B - t_A.
struct CoincidenceSample {
  double t0;
  double tau;
};

template <class URBG>
std::optional<CoincidenceSample> sample_coincidence(double nu_1, double nu_2, const ExperimentSpec& exp, URBG& rng) {
  const auto o = beamsplitter(nu_1, nu_2, exp.emitters[0].lifetime, exp.emitters[1].lifetime, exp.polarization, rng);
  if (!o.split) return std::nullopt;
  return CoincidenceSample{o.t_a, o.t_b - o.t_a};
}

// -- full experiment ---------------------------------------------------------

inline constexpr double default_group_index = 1.468;  // SMF-28 near 1550 nm

struct SimulationOptions {
  std::uint64_t n_pulses = 1'000'000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  DiffusionProcess diffusion;
  double group_index = default_group_index;
  std::uint64_t block_size = 1u << 16;
};

/// Event counts over the whole run, for rate summaries and tests.
struct SimulationStats {
  std::uint64_t pulses = 0;
  std::uint64_t pairs_at_splitter = 0;  // both photons reached the beamsplitter
  std::uint64_t split_pairs = 0;        // ... and left through different ports
  std::uint64_t single_photons = 0;     // exactly one photon reached it
  std::uint64_t noise_tags = 0;
  std::uint64_t dropped_tags = 0;       // outside [0, acquisition) after delay and jitter

  SimulationStats& operator+=(const SimulationStats& o) {
    pulses += o.pulses;
    pairs_at_splitter += o.pairs_at_splitter;
    split_pairs += o.split_pairs;
    single_photons += o.single_photons;
    noise_tags += o.noise_tags;
    dropped_tags += o.dropped_tags;
    return *this;
  }
};

struct SimulationResult {
  TimeTagStream stream;
  SimulationStats stats;
  double acquisition_time = 0.0;  // s, n_pulses / repetition_rate
};

namespace detail {

inline std::mt19937_64 block_rng(std::uint64_t seed, std::uint64_t block, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

struct ArmModel {
  double center = 0.0;   // converted offset (Hz)
  double sigma = 0.0;    // emitter diffusion and pump jitter in quadrature
  double survival = 0.0;
  double lifetime = 0.0;
};

struct BlockJob {
  std::uint64_t first = 0;
  std::uint64_t count = 0;
  std::array<DiffusionState, 2> start{};
};

/// Advances both arms' diffusion through a block using the block's own
/// diffusion stream. Used both by the prepass (to find where the block ends)
/// and by the worker (to replay it).
class BlockDiffusion {
 public:
  BlockDiffusion(const std::array<ArmModel, 2>& arms, const DiffusionProcess& process, double period,
                 std::uint64_t seed, std::uint64_t block, const std::array<DiffusionState, 2>& start)
      : arms_(arms), process_(process), period_(period), rng_(block_rng(seed, block, 1)), state_(start) {}

  std::array<double, 2> next(std::int64_t pulse) {
    return {sample_frequency(arms_[0].center, arms_[0].sigma, process_, period_, pulse, state_[0], rng_),
            sample_frequency(arms_[1].center, arms_[1].sigma, process_, period_, pulse, state_[1], rng_)};
  }

  const std::array<DiffusionState, 2>& state() const { return state_; }

 private:
  const std::array<ArmModel, 2>& arms_;
  const DiffusionProcess& process_;
  double period_;
  std::mt19937_64 rng_;
  std::array<DiffusionState, 2> state_;
};

struct BlockOutput {
  std::vector<TimeTagRecord> tags;
  SimulationStats stats;
};

inline BlockOutput run_block(const ExperimentSpec& exp, const SimulationOptions& opt,
                             const std::array<ArmModel, 2>& arms, std::uint64_t block, const BlockJob& job,
                             double delay, double acquisition) {
  const double period = exp.repetition_period();
  std::mt19937_64 rng = block_rng(opt.seed, block, 0);
  BlockDiffusion diffusion(arms, opt.diffusion, period, opt.seed, block, job.start);
  std::uniform_real_distribution<double> uni;
  std::normal_distribution<double> normal;
  const std::array<double, 2> jitter = {exp.detectors[0].jitter_sigma(), exp.detectors[1].jitter_sigma()};
  const std::array<double, 2> eta = {exp.detectors[0].efficiency, exp.detectors[1].efficiency};
  const double acquisition_ps = acquisition * 1e12;

  BlockOutput out;
  out.stats.pulses = job.count;
  auto detect = [&](Channel port, double t) {
    const int p = static_cast<int>(port);
    if (!(uni(rng) < eta[p])) return;
    const double ps = std::round((t + delay + jitter[p] * normal(rng)) * 1e12);
    if (ps < 0.0 || ps >= acquisition_ps) {
      ++out.stats.dropped_tags;
      return;
    }
    out.tags.push_back({port, static_cast<std::uint64_t>(ps)});
  };

  for (std::uint64_t k = job.first; k < job.first + job.count; ++k) {
    const auto nu = diffusion.next(static_cast<std::int64_t>(k));
    const double t_pulse = static_cast<double>(k) * period;
    const bool arrive_1 = uni(rng) < arms[0].survival;
    const bool arrive_2 = uni(rng) < arms[1].survival;
    if (arrive_1 && arrive_2) {
      ++out.stats.pairs_at_splitter;
      const auto o = beamsplitter(nu[0], nu[1], arms[0].lifetime, arms[1].lifetime, exp.polarization, rng);
      if (o.split) {
        ++out.stats.split_pairs;
        detect(Channel::A, t_pulse + o.t_a);
        detect(Channel::B, t_pulse + o.t_b);
      } else {
        detect(o.bunched_port, t_pulse + o.t_a);
        detect(o.bunched_port, t_pulse + o.t_b);
      }
    } else if (arrive_1 || arrive_2) {
      ++out.stats.single_photons;
      std::exponential_distribution<double> decay(1.0 / arms[arrive_1 ? 0 : 1].lifetime);
      const Channel port = uni(rng) < 0.5 ? Channel::A : Channel::B;
      detect(port, t_pulse + decay(rng));
    }
  }

  // Flat noise on each detector over this block's slice of the acquisition.
  const double t_begin = static_cast<double>(job.first) * period;
  const double t_end = std::min(acquisition, static_cast<double>(job.first + job.count) * period);
  for (int p = 0; p < 2; ++p) {
    const double rate = exp.detectors[p].dark_rate + exp.background_rate;
    if (rate <= 0.0 || t_end <= t_begin) continue;
    std::poisson_distribution<std::uint64_t> count(rate * (t_end - t_begin));
    std::uniform_real_distribution<double> when(t_begin * 1e12, t_end * 1e12);
    const std::uint64_t n = count(rng);
    for (std::uint64_t i = 0; i < n; ++i) {
      const double ps = std::floor(when(rng));
      if (ps >= acquisition_ps) continue;
      out.tags.push_back({static_cast<Channel>(p), static_cast<std::uint64_t>(ps)});
      ++out.stats.noise_tags;
    }
  }
  return out;
}

}  // namespace detail

/// Runs the whole acquisition of `opt.n_pulses` pulses. The result is a
/// sorted stream that is bit-identical for equal (exp, options) regardless of
/// `opt.threads`.
inline SimulationResult simulate_experiment(const ExperimentSpec& exp, const SimulationOptions& opt) {
  exp.validate();
  opt.diffusion.validate();
  if (opt.n_pulses < 1) throw ConfigError("n_pulses", "must be >= 1");
  if (opt.block_size < 1) throw ConfigError("block_size", "must be >= 1");
  if (!(opt.group_index > 0.0)) throw ConfigError("group_index", "must be > 0");

  std::array<detail::ArmModel, 2> arms;
  for (int i = 0; i < 2; ++i) {
    arms[i].center = converted_offset(exp.emitters[i].center_frequency, exp.converters[i]);
    arms[i].sigma = converted_sigma(exp.emitters[i], exp.converters[i]);
    arms[i].survival =
        exp.emitters[i].emission_probability * exp.converters[i].efficiency * exp.channels[i].transmission();
    arms[i].lifetime = exp.emitters[i].lifetime;
  }
  // Both arms are timed to meet at the beamsplitter, so every tag carries the
  // longer arm's propagation delay.
  const double delay =
      std::max(exp.channels[0].fiber_length, exp.channels[1].fiber_length) * opt.group_index / speed_of_light;
  const double acquisition = static_cast<double>(opt.n_pulses) * exp.repetition_period();

  const std::uint64_t n_blocks = (opt.n_pulses + opt.block_size - 1) / opt.block_size;
  std::vector<detail::BlockJob> jobs(n_blocks);
  std::array<DiffusionState, 2> carry{};
  for (std::uint64_t b = 0; b < n_blocks; ++b) {
    jobs[b].first = b * opt.block_size;
    jobs[b].count = std::min(opt.block_size, opt.n_pulses - jobs[b].first);
    jobs[b].start = carry;
    if (opt.diffusion.mode == DiffusionProcess::Mode::ornstein_uhlenbeck && b + 1 < n_blocks) {
      // Sequential prepass: replay this block's diffusion to find the state it hands on.
      detail::BlockDiffusion d(arms, opt.diffusion, exp.repetition_period(), opt.seed, b, carry);
      for (std::uint64_t k = jobs[b].first; k < jobs[b].first + jobs[b].count; ++k)
        d.next(static_cast<std::int64_t>(k));
      carry = d.state();
    }
  }

  std::vector<detail::BlockOutput> outputs(n_blocks);
  const unsigned workers = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(n_blocks)));
  std::atomic<std::uint64_t> next{0};
  auto work = [&] {
    for (std::uint64_t b; (b = next.fetch_add(1)) < n_blocks;)
      outputs[b] = detail::run_block(exp, opt, arms, b, jobs[b], delay, acquisition);
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(work);
  }

  SimulationResult result;
  result.acquisition_time = acquisition;
  std::size_t total = 0;
  for (const auto& o : outputs) total += o.tags.size();
  result.stream.tags.reserve(total);
  for (auto& o : outputs) {
    result.stream.tags.insert(result.stream.tags.end(), o.tags.begin(), o.tags.end());
    result.stats += o.stats;
    std::vector<TimeTagRecord>().swap(o.tags);
  }
  result.stream.sort();
  return result;
}

/// Expected visibility between consecutive photons of one emitter separated
/// by `delay` (unbalanced interferometer), when its frequency follows the OU
/// process: the two draws differ by a Gaussian of variance 2 sigma^2 (1 - rho).
/// For the iid mode rho = 0.
inline double consecutive_photon_visibility(const EmitterSpec& emitter, const DiffusionProcess& process,
                                            double delay) {
  const double rho =
      process.mode == DiffusionProcess::Mode::iid ? 0.0 : std::exp(-delay / process.correlation_time);
  const double s = emitter.sigma() * std::sqrt(1.0 - rho);
  return tpi_visibility({emitter.lifetime, emitter.lifetime, s, s, 0.0});
}

}  // namespace hom
