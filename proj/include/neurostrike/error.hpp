#pragma once

#include <stdexcept>
#include <string>

namespace neurostrike {

// Invalid user-supplied configuration. `field()` names the offending key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// API misuse by the caller, e.g. comparing series of different lengths.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace neurostrike
