// homsim: command-line front end.
//
//   homsim [--config FILE] [--seed N] [--out DIR] [--threads N] <command> ...
//
// Exit codes: 0 success, 2 configuration error, 3 I/O or format error,
// 4 numerical failure.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hom/hom.hpp"

namespace fs = std::filesystem;
using namespace hom;

namespace {

struct Globals {
  std::string config_path;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  unsigned threads = 1;
};

struct Context {
  RunConfig config;
  Globals globals;
  std::vector<std::string> arguments;
  std::chrono::steady_clock::time_point start;

  fs::path output(const std::string& name) const { return fs::path(globals.out_dir) / name; }

  RunManifest manifest(const std::string& command) const {
    RunManifest m;
    m.command = command;
    m.config = to_json(config);
    m.seed = globals.seed;
    m.arguments = arguments;
    m.duration_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return m;
  }

  void publish(const fs::path& file, const std::string& command) const {
    write_manifest(file, manifest(command));
    std::cout << "wrote " << file.string() << '\n';
  }
};

std::string ghz(double hz) { return format_number(hz * 1e-9); }

int emitter_index(const RunConfig& cfg, const std::string& which) {
  if (which == "0" || which == "1") return which[0] - '0';
  for (int i = 0; i < 2; ++i)
    if (cfg.experiment.emitters[i].name == which) return i;
  throw ConfigError("--emitter", "no emitter named '" + which + "' (use 0, 1 or a name)");
}

// -- visibility-curve ----------------------------------------------------------

struct CurveArgs {
  double min_ghz = -6.0;
  double max_ghz = 6.0;
  int points = 241;
};

void cmd_visibility_curve(const Context& ctx, const CurveArgs& a) {
  if (a.points < 2) throw ConfigError("--points", "must be >= 2");
  if (!(a.max_ghz > a.min_ghz)) throw ConfigError("--max-ghz", "must exceed --min-ghz");
  AnalyticPair pair = analytic_pair(ctx.config.experiment);
  CsvTable t;
  t.metadata = {{"command", "visibility-curve"},
                {"tau_1_ps", format_number(pair.tau_1 * 1e12)},
                {"tau_2_ps", format_number(pair.tau_2 * 1e12)},
                {"sigma_total_ghz", ghz(pair.Sigma())},
                {"configured_delta_nu_ghz", ghz(pair.delta_nu)}};
  t.columns = {"delta_nu_ghz", "visibility"};
  for (int i = 0; i < a.points; ++i) {
    const double d = a.min_ghz + (a.max_ghz - a.min_ghz) * i / (a.points - 1);
    pair.delta_nu = d * 1e9;
    t.rows.push_back({d, tpi_visibility(pair)});
  }
  const fs::path file = ctx.output("visibility_curve.csv");
  write_csv(file, t);
  ctx.publish(file, "visibility-curve");
}

// -- simulate ------------------------------------------------------------------

struct SimulateArgs {
  std::uint64_t pulses = 0;
  std::string format = "csv";
  std::string name;
};

void cmd_simulate(const Context& ctx, const SimulateArgs& a) {
  const ExperimentSpec& exp = ctx.config.experiment;
  SimulationOptions opt;
  opt.seed = ctx.globals.seed;
  opt.threads = ctx.globals.threads;
  opt.diffusion = ctx.config.diffusion;
  opt.n_pulses = a.pulses;
  if (opt.n_pulses == 0) {
    const double n = std::round(exp.acquisition_time * exp.repetition_rate);
    if (!(n >= 1.0)) throw ConfigError("experiment.acquisition_s", "gives no pulses; set it or pass --pulses");
    opt.n_pulses = static_cast<std::uint64_t>(n);
  }
  const TagFormat format = a.format == "binary" ? TagFormat::binary : TagFormat::csv;
  const SimulationResult sim = simulate_experiment(exp, opt);

  const fs::path file = ctx.output(a.name.empty() ? (format == TagFormat::binary ? "tags.ttag" : "tags.csv") : a.name);
  write_time_tags(file, sim.stream, format);
  ctx.publish(file, "simulate");

  const double t = sim.acquisition_time;
  const auto& s = sim.stats;
  std::cout << "pulses            " << s.pulses << "  (" << format_number(t) << " s)\n"
            << "pairs at splitter " << s.pairs_at_splitter << "  (" << format_number(s.pairs_at_splitter / t)
            << " /s)\n"
            << "split pairs       " << s.split_pairs << '\n'
            << "single photons    " << s.single_photons << '\n'
            << "noise tags        " << s.noise_tags << '\n'
            << "tags A / B        " << sim.stream.count(Channel::A) << " / " << sim.stream.count(Channel::B) << "  ("
            << format_number(sim.stream.count(Channel::A) / t) << " / "
            << format_number(sim.stream.count(Channel::B) / t) << " /s)\n";
}

// -- analyze -------------------------------------------------------------------

struct AnalyzeArgs {
  std::string tags;
  std::string reference;
  double bin_ps = 10.0;
  double range_ns = 1500.0;
  double window_ns = 0.0;
  std::string mode = "poissonian";
  bool no_background = false;
  bool fit = false;
  double fit_range_ns = 3.0;
  double sign_hint = 0.0;
  double acquisition_s = 0.0;
};

CorrelationHistogram histogram_of(const fs::path& path, const AnalyzeArgs& a, unsigned threads) {
  TimeTagStream stream = read_time_tags(path);
  if (!stream.is_sorted()) stream.sort();
  return correlate(stream, a.bin_ps * 1e-12, a.range_ns * 1e-9, a.acquisition_s, threads);
}

void cmd_analyze(const Context& ctx, const AnalyzeArgs& a) {
  const ExperimentSpec& exp = ctx.config.experiment;
  const bool orthogonal_mode = a.mode == "orthogonal_hist";
  if (orthogonal_mode && a.reference.empty())
    throw ConfigError("--reference", "orthogonal_hist mode needs the orthogonal-polarization tag file");

  const CorrelationHistogram raw = histogram_of(a.tags, a, ctx.globals.threads);
  const NoiseRates dark{exp.detectors[0].dark_rate, exp.detectors[1].dark_rate};
  const NoiseRates background{exp.background_rate, exp.background_rate};
  auto corrected = [&](const CorrelationHistogram& h) {
    return a.no_background ? to_real(h) : background_correct(h, dark, background);
  };
  const RealHistogram hist = corrected(raw);

  VisibilityOptions vo;
  vo.rep_period = exp.repetition_period();
  vo.integration_window = a.window_ns * 1e-9;
  vo.arm_ratio = arm_ratio(exp);
  VisibilityResult v;
  if (orthogonal_mode) {
    vo.mode = NormalizationMode::orthogonal_hist;
    v = extract_visibility(hist, corrected(histogram_of(a.reference, a, ctx.globals.threads)), vo);
  } else {
    v = extract_visibility(hist, vo);
  }

  json result = {{"visibility", v.visibility},
                 {"std_error", v.std_error},
                 {"delta_nu_ghz", nullptr},
                 {"chi2_dof", nullptr},
                 {"normalization", a.mode},
                 {"window_ns", v.window * 1e9},
                 {"center_area", v.center_area},
                 {"center_error", v.center_error},
                 {"poisson_level_area", v.poisson_level_area},
                 {"poisson_level_error", v.poisson_level_error},
                 {"far_peaks", v.far_peaks},
                 {"background_floor_per_bin", hist.background_floor},
                 {"model_visibility", tpi_visibility(analytic_pair(exp))}};
  if (a.fit) {
    G2FitOptions fo;
    fo.half_range = a.fit_range_ns * 1e-9;
    fo.jitter_fwhm = std::hypot(exp.detectors[0].jitter_fwhm, exp.detectors[1].jitter_fwhm);
    const double configured = effective_detuning(exp);
    fo.sign_hint = a.sign_hint != 0.0 ? a.sign_hint : (configured < 0.0 ? -1.0 : 1.0);
    const G2FitResult f = fit_g2_center(hist, analytic_pair(exp), fo);
    result["delta_nu_ghz"] = f.delta_nu * 1e-9;
    result["delta_nu_error_ghz"] = std::isfinite(f.delta_nu_error) ? json(f.delta_nu_error * 1e-9) : json(nullptr);
    result["chi2_dof"] = f.chi2_dof;
    result["fit_amplitude"] = f.amplitude;
    result["fit_bins"] = f.bins;
  }

  const fs::path hist_file = ctx.output("histogram.csv");
  CsvTable table = histogram_table(raw);
  table.metadata.insert(table.metadata.begin(), {"command", "analyze"});
  table.metadata.emplace_back("source", fs::path(a.tags).filename().string());
  write_csv(hist_file, table);
  ctx.publish(hist_file, "analyze");

  const fs::path result_file = ctx.output("result.json");
  const std::string text = result.dump(2) + "\n";
  atomic_write(result_file, [&](std::ostream& o) { o << text; });
  ctx.publish(result_file, "analyze");
  std::cout << text;
}

// -- dispersion-scan -----------------------------------------------------------

struct DispersionArgs {
  std::vector<double> lengths_km = {0, 1, 2, 5, 10, 20, 50, 100};
  std::string emitter = "0";
  double fixed_km = 0.0;
};

void cmd_dispersion_scan(const Context& ctx, const DispersionArgs& a) {
  const int idx = emitter_index(ctx.config, a.emitter);
  const EmitterSpec& e = ctx.config.experiment.emitters[idx];
  ChannelSpec channel = ctx.config.experiment.channels[idx];
  channel.fiber_length = a.fixed_km * 1e3;
  std::vector<double> lengths;
  for (double km : a.lengths_km) lengths.push_back(km * 1e3);
  const auto asym = dispersion_scan(e, channel, lengths, ScanMode::asymmetric);
  const auto sym = dispersion_scan(e, channel, lengths, ScanMode::symmetric);
  CsvTable t;
  t.metadata = {{"command", "dispersion-scan"},
                {"emitter", e.name},
                {"lifetime_ps", format_number(e.lifetime * 1e12)},
                {"beta2_ps2_per_km", format_number(channel.gvd_beta2 * 1e27)},
                {"fixed_arm_km", format_number(channel.fiber_length * 1e-3)},
                {"note", "asymmetric = fixed arm : X, symmetric = X : X; Fourier-limited photons"}};
  t.columns = {"length_km", "asymmetric", "symmetric"};
  for (std::size_t i = 0; i < lengths.size(); ++i) t.rows.push_back({a.lengths_km[i], asym[i].visibility, sym[i].visibility});
  const fs::path file = ctx.output("dispersion_scan.csv");
  write_csv(file, t);
  ctx.publish(file, "dispersion-scan");
}

// -- spectrum ------------------------------------------------------------------

struct SpectrumArgs {
  std::string emitter = "0";
  double span_ghz = 10.0;
  int points = 2001;
};

void cmd_spectrum(const Context& ctx, const SpectrumArgs& a) {
  if (a.points < 2) throw ConfigError("--points", "must be >= 2");
  if (!(a.span_ghz > 0.0)) throw ConfigError("--span-ghz", "must be > 0");
  const int idx = emitter_index(ctx.config, a.emitter);
  const EmitterSpec& e = ctx.config.experiment.emitters[idx];
  CsvTable t;
  t.metadata = {{"command", "spectrum"},
                {"emitter", e.name},
                {"center_offset_ghz", ghz(e.center_frequency)},
                {"lorentz_fwhm_ghz", ghz(e.homogeneous_linewidth())},
                {"gaussian_fwhm_ghz", ghz(e.inhom_fwhm)},
                {"voigt_fwhm_ghz", ghz(voigt_fwhm(e.inhom_fwhm, e.homogeneous_linewidth()))}};
  t.columns = {"detuning_ghz", "intensity_per_ghz"};
  for (int i = 0; i < a.points; ++i) {
    const double d = -0.5 * a.span_ghz + a.span_ghz * i / (a.points - 1);
    t.rows.push_back({d, voigt_spectrum(e.center_frequency + d * 1e9, e) * 1e9});
  }
  const fs::path file = ctx.output("spectrum_" + e.name + ".csv");
  write_csv(file, t);
  ctx.publish(file, "spectrum");
}

}  // namespace

int main(int argc, char** argv) {
  Context ctx;
  ctx.start = std::chrono::steady_clock::now();
  ctx.arguments.assign(argv, argv + argc);

  CLI::App app{"Two-photon interference of remote emitters: model, simulation and analysis"};
  app.set_version_flag("--version", std::string(tool_version));
  app.add_option("--config", ctx.globals.config_path, "JSON configuration or run manifest (default: built-in remote pair)");
  app.add_option("--seed", ctx.globals.seed, "RNG seed");
  app.add_option("--out", ctx.globals.out_dir, "output directory");
  app.add_option("--threads", ctx.globals.threads, "worker threads")->check(CLI::PositiveNumber);
  app.require_subcommand(1);
  app.fallthrough();

  CurveArgs curve;
  auto* c_curve = app.add_subcommand("visibility-curve", "visibility against detuning");
  c_curve->add_option("--min-ghz", curve.min_ghz);
  c_curve->add_option("--max-ghz", curve.max_ghz);
  c_curve->add_option("--points", curve.points);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Monte Carlo time-tag stream");
  c_sim->add_option("--pulses", sim.pulses, "excitation pulses (default: acquisition_s * rep rate)");
  c_sim->add_option("--format", sim.format)->check(CLI::IsMember({"csv", "binary"}));
  c_sim->add_option("--name", sim.name, "output file name");

  AnalyzeArgs an;
  auto* c_an = app.add_subcommand("analyze", "histogram, visibility and optional fit");
  c_an->add_option("tags", an.tags, "time-tag file")->required();
  c_an->add_option("--reference", an.reference, "orthogonal-polarization tag file");
  c_an->add_option("--bin-ps", an.bin_ps);
  c_an->add_option("--range-ns", an.range_ns);
  c_an->add_option("--window-ns", an.window_ns, "full integration window (default: half the repetition period)");
  c_an->add_option("--mode", an.mode)->check(CLI::IsMember({"poissonian", "orthogonal_hist"}));
  c_an->add_option("--acquisition-s", an.acquisition_s, "acquisition time (default: span of the stream)");
  c_an->add_flag("--no-background", an.no_background, "skip the accidental-floor subtraction");
  c_an->add_flag("--fit", an.fit, "fit the detuning to the central peak");
  c_an->add_option("--fit-range-ns", an.fit_range_ns);
  c_an->add_option("--sign-hint", an.sign_hint, "sign of the detuning (default: sign of the configured one)");

  DispersionArgs disp;
  auto* c_disp = app.add_subcommand("dispersion-scan", "overlap against fiber length");
  c_disp->add_option("--lengths-km", disp.lengths_km)->delimiter(',');
  c_disp->add_option("--emitter", disp.emitter, "emitter index or name");
  c_disp->add_option("--fixed-km", disp.fixed_km, "fiber length of the fixed arm in the asymmetric scan");

  SpectrumArgs spec;
  auto* c_spec = app.add_subcommand("spectrum", "emission line shape");
  c_spec->add_option("--emitter", spec.emitter, "emitter index or name");
  c_spec->add_option("--span-ghz", spec.span_ghz);
  c_spec->add_option("--points", spec.points);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    ctx.config = ctx.globals.config_path.empty() ? default_config() : load_config(ctx.globals.config_path);
    fs::create_directories(ctx.globals.out_dir);
    if (*c_curve) cmd_visibility_curve(ctx, curve);
    if (*c_sim) cmd_simulate(ctx, sim);
    if (*c_an) cmd_analyze(ctx, an);
    if (*c_disp) cmd_dispersion_scan(ctx, disp);
    if (*c_spec) cmd_spectrum(ctx, spec);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return 3;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 3;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
