#pragma once

#include <stdexcept>
#include <string>

namespace fbmbt {

/// Requested grid exceeds what the exact samplers can produce.
class CapacityError : public std::length_error {
 public:
  explicit CapacityError(const std::string& what) : std::length_error(what) {}
};

/// Raised when an internal consistency check fails (should not happen on
/// valid input).
class InternalError : public std::logic_error {
 public:
  explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

/// Bad or unresolvable experiment configuration; `key` names the field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace fbmbt
