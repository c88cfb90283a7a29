#pragma once

// Small file helpers shared by the time-tag codecs and the CLI writers.

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "hom/errors.hpp"

namespace hom {

/// Writes through `fill(std::ostream&)` into a sibling temporary file and
/// renames it over `path` once the stream has been flushed successfully, so
/// readers never observe a half-written file.
template <class Fill>
void atomic_write(const std::filesystem::path& path, Fill&& fill, bool binary = false) {
  namespace fs = std::filesystem;
  std::random_device rd;
  const fs::path tmp = path.string() + ".tmp" + std::to_string(rd() & 0xffffff);
  {
    std::ofstream out(tmp, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    fill(out);
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("write to " + tmp.string() + " failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename onto " + path.string() + ": " + ec.message());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read from " + path.string() + " failed");
  return std::move(buf).str();
}

}  // namespace hom
