#pragma once

// JSON run configuration. Keys carry their units and are converted to SI
// here, once:
//
//   {
//     "emitters":   [{"name": "QDR", "lifetime_ps": 580, "center_offset_ghz": 0,
//                     "inhom_fwhm_ghz": 2.0}, {...}],
//     "converters": [{"pump_detuning_ghz": 0, "jitter_sigma_mhz": 4.714,
//                     "efficiency": 0.347}, {...}],
//     "channels":   [{"length_km": 0.06, "beta2_ps2_per_km": -21.7,
//                     "loss_db_per_km": 0.2}, {...}],
//     "detectors":  [{"jitter_fwhm_ps": 100, "efficiency": 0.35,
//                     "dark_rate_hz": 55}, {...}],
//     "experiment": {"rep_rate_mhz": 76.2, "polarization": "parallel",
//                    "background_rate_hz": 500, "acquisition_s": 1,
//                    "diffusion": "iid", "correlation_time_us": 1}
//   }
//
// center_offset_ghz is relative to the NIR reference line. pump_detuning_ghz
// is the pump offset from the frequency that would map this emitter's mean
// line exactly onto the telecom reference, so the converted photon sits at
// -pump_detuning_ghz and the pair detuning is d2 - d1 whatever the emitter
// offsets are.
//
// Optional: emitters[].emission_probability, converters[].jitter_sigma_mhz,
// channels[].beta2_ps2_per_km, channels[].loss_db_per_km, detectors[].dark_rate_hz,
// experiment.{background_rate_hz, acquisition_s, diffusion,
// correlation_time_us, nir_reference_nm, telecom_reference_nm}.
// Unknown keys are rejected so typos do not silently fall back to defaults.

#include <cmath>
#include <filesystem>
#include <set>
#include <string>

#include <json.hpp>

#include "hom/errors.hpp"
#include "hom/io.hpp"
#include "hom/model.hpp"
#include "hom/montecarlo.hpp"

namespace hom {

using json = nlohmann::json;

struct RunConfig {
  ExperimentSpec experiment;
  DiffusionProcess diffusion;
  // The parsed input with defaults filled in; empty for built-in configs.
  json snapshot;
};

inline json to_json(const RunConfig& cfg);

namespace detail {

inline const json& require(const json& obj, const std::string& key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(path + "." + key, "missing required field");
  return *it;
}

inline double number(const json& obj, const std::string& key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_number()) throw ConfigError(path + "." + key, "must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path + "." + key, "must be finite");
  return x;
}

inline double number_or(const json& obj, const std::string& key, const std::string& path, double fallback) {
  return obj.contains(key) ? number(obj, key, path) : fallback;
}

inline void only_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(path, "must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!ok.count(it.key())) throw ConfigError(path + "." + it.key(), "unknown field");
}

inline const json& pair_array(const json& root, const std::string& key) {
  const json& a = require(root, key, "config");
  if (!a.is_array() || a.size() != 2) throw ConfigError(key, "must be an array of exactly two entries");
  return a;
}

}  // namespace detail

/// Builds and validates a configuration. Errors name the offending key, e.g.
/// "detectors[1].efficiency: must lie in [0, 1]".
inline RunConfig parse_config(const json& root) {
  using namespace detail;
  only_keys(root, "config", {"emitters", "converters", "channels", "detectors", "experiment"});
  RunConfig cfg;
  ExperimentSpec& exp = cfg.experiment;

  const json& ex = require(root, "experiment", "config");
  only_keys(ex, "experiment",
            {"rep_rate_mhz", "polarization", "background_rate_hz", "acquisition_s", "diffusion",
             "correlation_time_us", "nir_reference_nm", "telecom_reference_nm"});
  exp.repetition_rate = number(ex, "rep_rate_mhz", "experiment") * 1e6;
  const json& pol = require(ex, "polarization", "experiment");
  if (pol == "parallel")
    exp.polarization = Polarization::parallel;
  else if (pol == "orthogonal")
    exp.polarization = Polarization::orthogonal;
  else
    throw ConfigError("experiment.polarization", "must be \"parallel\" or \"orthogonal\"");
  exp.background_rate = number_or(ex, "background_rate_hz", "experiment", 0.0);
  exp.acquisition_time = number_or(ex, "acquisition_s", "experiment", exp.acquisition_time);
  if (ex.contains("nir_reference_nm"))
    exp.reference.nir = frequency_from_wavelength(number(ex, "nir_reference_nm", "experiment") * 1e-9);
  if (ex.contains("telecom_reference_nm"))
    exp.reference.telecom = frequency_from_wavelength(number(ex, "telecom_reference_nm", "experiment") * 1e-9);
  if (ex.contains("diffusion")) {
    const json& d = ex["diffusion"];
    if (d == "iid")
      cfg.diffusion.mode = DiffusionProcess::Mode::iid;
    else if (d == "ou")
      cfg.diffusion.mode = DiffusionProcess::Mode::ornstein_uhlenbeck;
    else
      throw ConfigError("experiment.diffusion", "must be \"iid\" or \"ou\"");
  }
  cfg.diffusion.correlation_time =
      number_or(ex, "correlation_time_us", "experiment", cfg.diffusion.correlation_time * 1e6) * 1e-6;

  const json& em = pair_array(root, "emitters");
  const json& cv = pair_array(root, "converters");
  const json& ch = pair_array(root, "channels");
  const json& dt = pair_array(root, "detectors");
  for (std::size_t i = 0; i < 2; ++i) {
    const std::string idx = "[" + std::to_string(i) + "]";

    const std::string ep = "emitters" + idx;
    only_keys(em[i], ep, {"name", "lifetime_ps", "center_offset_ghz", "inhom_fwhm_ghz", "emission_probability"});
    EmitterSpec& e = exp.emitters[i];
    if (em[i].contains("name")) {
      if (!em[i]["name"].is_string()) throw ConfigError(ep + ".name", "must be a string");
      e.name = em[i]["name"].get<std::string>();
    }
    e.lifetime = number(em[i], "lifetime_ps", ep) * 1e-12;
    e.center_frequency = number(em[i], "center_offset_ghz", ep) * 1e9;
    e.inhom_fwhm = number(em[i], "inhom_fwhm_ghz", ep) * 1e9;
    e.emission_probability = number_or(em[i], "emission_probability", ep, 1.0);
    if (!(e.lifetime > 0.0)) throw ConfigError(ep + ".lifetime_ps", "must be > 0");
    if (!(e.inhom_fwhm >= 0.0)) throw ConfigError(ep + ".inhom_fwhm_ghz", "must be >= 0");
    if (!(e.emission_probability >= 0.0 && e.emission_probability <= 1.0))
      throw ConfigError(ep + ".emission_probability", "must lie in [0, 1]");

    const std::string cp = "converters" + idx;
    only_keys(cv[i], cp, {"pump_detuning_ghz", "jitter_sigma_mhz", "efficiency"});
    ConverterSpec& c = exp.converters[i];
    c.pump_frequency = e.center_frequency + number(cv[i], "pump_detuning_ghz", cp) * 1e9;
    c.pump_jitter_sigma = number_or(cv[i], "jitter_sigma_mhz", cp, default_pump_jitter_sigma * 1e-6) * 1e6;
    c.efficiency = number(cv[i], "efficiency", cp);
    if (!(c.pump_jitter_sigma >= 0.0)) throw ConfigError(cp + ".jitter_sigma_mhz", "must be >= 0");
    if (!(c.efficiency >= 0.0 && c.efficiency <= 1.0)) throw ConfigError(cp + ".efficiency", "must lie in [0, 1]");

    const std::string hp = "channels" + idx;
    only_keys(ch[i], hp, {"length_km", "beta2_ps2_per_km", "loss_db_per_km"});
    ChannelSpec& h = exp.channels[i];
    h.fiber_length = number(ch[i], "length_km", hp) * 1e3;
    h.gvd_beta2 = number_or(ch[i], "beta2_ps2_per_km", hp, default_gvd_beta2 * 1e27) * 1e-27;
    h.loss_db_per_km = number_or(ch[i], "loss_db_per_km", hp, 0.0);
    if (!(h.fiber_length >= 0.0)) throw ConfigError(hp + ".length_km", "must be >= 0");
    if (!(h.loss_db_per_km >= 0.0)) throw ConfigError(hp + ".loss_db_per_km", "must be >= 0");

    const std::string dp = "detectors" + idx;
    only_keys(dt[i], dp, {"jitter_fwhm_ps", "efficiency", "dark_rate_hz"});
    DetectorSpec& d = exp.detectors[i];
    d.jitter_fwhm = number(dt[i], "jitter_fwhm_ps", dp) * 1e-12;
    d.efficiency = number(dt[i], "efficiency", dp);
    d.dark_rate = number_or(dt[i], "dark_rate_hz", dp, 0.0);
    if (!(d.jitter_fwhm >= 0.0)) throw ConfigError(dp + ".jitter_fwhm_ps", "must be >= 0");
    if (!(d.efficiency >= 0.0 && d.efficiency <= 1.0)) throw ConfigError(dp + ".efficiency", "must lie in [0, 1]");
    if (!(d.dark_rate >= 0.0)) throw ConfigError(dp + ".dark_rate_hz", "must be >= 0");
  }
  if (!(exp.repetition_rate > 0.0)) throw ConfigError("experiment.rep_rate_mhz", "must be > 0");
  if (!(exp.background_rate >= 0.0)) throw ConfigError("experiment.background_rate_hz", "must be >= 0");
  if (!(exp.acquisition_time >= 0.0)) throw ConfigError("experiment.acquisition_s", "must be >= 0");
  if (cfg.diffusion.mode == DiffusionProcess::Mode::ornstein_uhlenbeck && !(cfg.diffusion.correlation_time > 0.0))
    throw ConfigError("experiment.correlation_time_us", "must be > 0");
  exp.validate();

  // Keep the input numbers verbatim so a snapshot reparses bit-identically,
  // and add whatever the defaults supplied.
  json resolved = root;
  const json full = to_json(cfg);
  for (auto section = full.begin(); section != full.end(); ++section) {
    if (section->is_array()) {
      for (std::size_t i = 0; i < section->size(); ++i)
        for (auto it = (*section)[i].begin(); it != (*section)[i].end(); ++it)
          if (!resolved[section.key()][i].contains(it.key())) resolved[section.key()][i][it.key()] = it.value();
    } else {
      for (auto it = section->begin(); it != section->end(); ++it)
        if (!resolved[section.key()].contains(it.key())) resolved[section.key()][it.key()] = it.value();
    }
  }
  cfg.snapshot = std::move(resolved);
  return cfg;
}

/// Resolved configuration in the input format, defaults filled in. Parsing
/// the result gives back the same configuration.
inline json to_json(const RunConfig& cfg) {
  if (!cfg.snapshot.is_null()) return cfg.snapshot;
  const ExperimentSpec& exp = cfg.experiment;
  json root;
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& e = exp.emitters[i];
    const auto& c = exp.converters[i];
    const auto& h = exp.channels[i];
    const auto& d = exp.detectors[i];
    root["emitters"].push_back({{"name", e.name},
                                {"lifetime_ps", e.lifetime * 1e12},
                                {"center_offset_ghz", e.center_frequency * 1e-9},
                                {"inhom_fwhm_ghz", e.inhom_fwhm * 1e-9},
                                {"emission_probability", e.emission_probability}});
    root["converters"].push_back({{"pump_detuning_ghz", (c.pump_frequency - e.center_frequency) * 1e-9},
                                  {"jitter_sigma_mhz", c.pump_jitter_sigma * 1e-6},
                                  {"efficiency", c.efficiency}});
    root["channels"].push_back({{"length_km", h.fiber_length * 1e-3},
                                {"beta2_ps2_per_km", h.gvd_beta2 * 1e27},
                                {"loss_db_per_km", h.loss_db_per_km}});
    root["detectors"].push_back({{"jitter_fwhm_ps", d.jitter_fwhm * 1e12},
                                 {"efficiency", d.efficiency},
                                 {"dark_rate_hz", d.dark_rate}});
  }
  root["experiment"] = {
      {"rep_rate_mhz", exp.repetition_rate * 1e-6},
      {"polarization", exp.polarization == Polarization::parallel ? "parallel" : "orthogonal"},
      {"background_rate_hz", exp.background_rate},
      {"acquisition_s", exp.acquisition_time},
      {"diffusion", cfg.diffusion.mode == DiffusionProcess::Mode::iid ? "iid" : "ou"},
      {"correlation_time_us", cfg.diffusion.correlation_time * 1e6},
      {"nir_reference_nm", wavelength_from_frequency(exp.reference.nir) * 1e9},
      {"telecom_reference_nm", wavelength_from_frequency(exp.reference.telecom) * 1e9}};
  return root;
}

/// The built-in remote-pair configuration.
inline RunConfig default_config() {
  RunConfig cfg;
  cfg.experiment = reference_experiment();
  return cfg;
}

/// Reads a configuration file. A run manifest is accepted too: its embedded
/// config snapshot is used, which makes every run reproducible from its
/// manifest.
inline RunConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what(), e.byte > 0 ? e.byte - 1 : 0);
  }
  if (root.is_object() && root.contains("config") && root.contains("command")) return parse_config(root["config"]);
  return parse_config(root);
}

}  // namespace hom
