#pragma once

// Plot-ready output files. CSVs start with `# key: value` metadata lines, then
// a column header. Every output file gets a sibling `<file>.manifest.json`
// recording how it was made.

#include <charconv>
#include <filesystem>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hom/histogram.hpp"
#include "hom/io.hpp"

namespace hom {

#ifndef HOM_VERSION
#define HOM_VERSION "0.0.0"
#endif

inline constexpr const char* tool_version = HOM_VERSION;

/// Shortest representation that reads back to the same double.
inline std::string format_number(double x) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

struct CsvTable {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

inline void write_csv(std::ostream& out, const CsvTable& table) {
  for (const auto& [k, v] : table.metadata) out << "# " << k << ": " << v << '\n';
  for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << table.columns[i];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
    out << '\n';
  }
}

inline void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  atomic_write(path, [&](std::ostream& o) { write_csv(o, table); });
}

/// Histogram as (lag_ps, counts), lag at the bin center.
template <class T>
CsvTable histogram_table(const BasicHistogram<T>& h) {
  CsvTable t;
  t.metadata = {{"bin_width_ps", std::to_string(h.bin_width_ps)},
                {"lag_range_ps", std::to_string(h.range_ps)},
                {"acquisition_s", format_number(h.acquisition_time)},
                {"singles_a", std::to_string(h.singles_a)},
                {"singles_b", std::to_string(h.singles_b)},
                {"background_floor", format_number(h.background_floor)}};
  for (const auto& [k, v] : h.metadata) t.metadata.emplace_back(k, v);
  t.columns = {"lag_ps", "counts"};
  t.rows.reserve(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) t.rows.push_back({h.center_ps(i), static_cast<double>(h.counts[i])});
  return t;
}

struct RunManifest {
  std::string command;
  nlohmann::json config;  // resolved snapshot
  std::uint64_t seed = 0;
  std::vector<std::string> arguments;  // full command line
  std::vector<std::string> outputs;
  std::string version = tool_version;
  double duration_s = 0.0;
};

inline nlohmann::json to_json(const RunManifest& m) {
  return {{"command", m.command},     {"config", m.config},   {"seed", m.seed},
          {"arguments", m.arguments}, {"outputs", m.outputs}, {"tool_version", m.version},
          {"duration_s", m.duration_s}};
}

inline std::filesystem::path manifest_path(const std::filesystem::path& output) {
  return output.string() + ".manifest.json";
}

/// Writes the manifest for one output file next to it.
inline void write_manifest(const std::filesystem::path& output, RunManifest m) {
  m.outputs = {output.filename().string()};
  const std::string text = to_json(m).dump(2) + "\n";
  atomic_write(manifest_path(output), [&](std::ostream& o) { o << text; });
}

}  // namespace hom
