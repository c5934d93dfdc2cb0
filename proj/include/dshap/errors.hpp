#pragma once

#include <stdexcept>
#include <string>

namespace dshap {

// Raised for malformed or inconsistent input data (CSV parse failures,
// dimension mismatches, id collisions). Maps to CLI exit code 3.
class data_error : public std::runtime_error {
 public:
  explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

// Raised for invalid run configuration. Maps to CLI exit code 2.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dshap
