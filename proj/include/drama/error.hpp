#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace drama {

enum class ErrorKind {
  Inconsistent,
  Underdetermined,
  UnknownPreset,
  InvalidConfig,
  UnknownPin,
  RegionTooSmall,
  NoGapFound,
  NoFunctionsFound,
  InvalidFraming,
  ClockLost,
  NoTemplateFound,
  NoPairsFound,
  Parse,
};

std::string_view to_string(ErrorKind kind);

/// Every fallible operation in the toolkit throws this; `kind()` is the
/// machine-readable tag that the CLI reports.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Underdetermined carries the unconstrained bit indices so reports are reproducible.
class UnderdeterminedError : public Error {
 public:
  UnderdeterminedError(const std::string &message, std::vector<unsigned> free_bits)
      : Error(ErrorKind::Underdetermined, message), free_bits_(std::move(free_bits)) {}

  const std::vector<unsigned> &free_bits() const noexcept { return free_bits_; }

 private:
  std::vector<unsigned> free_bits_;
};

}  // namespace drama
