#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <string>

namespace hom {

/// Invalid parameter or configuration value. `key()` names the offending field.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::invalid_argument(key + ": " + message), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Malformed time-tag or curve file. `offset()` is the byte offset of the problem.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& message, std::uint64_t offset)
      : std::runtime_error(message + " (byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

/// A file could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical routine could not produce a trustworthy result (non-convergence,
/// degenerate fit, empty normalization window).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hom
