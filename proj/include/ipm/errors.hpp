#pragma once

#include <stdexcept>
#include <string>

namespace ipm {

/// Input outside the physical domain of an operation (wavelength outside
/// transparency, non-positive wavelength, invalid query).
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// Exit-face refraction has no real solution.
class TotalInternalReflection : public std::domain_error {
 public:
  TotalInternalReflection(const std::string& what, double sine)
      : std::domain_error(what), violating_sine_(sine) {}
  double violating_sine() const { return violating_sine_; }

 private:
  double violating_sine_;
};

/// Crystal database file could not be loaded or a record violates its
/// invariants. The message names the offending record.
class CrystalDbError : public std::runtime_error {
 public:
  explicit CrystalDbError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ipm
