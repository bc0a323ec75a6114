#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pdmp {

enum class ErrorKind {
  InvalidParam,
  DomainExit,
  NonFinite,
  MissingBound,
  DivergentIntegral,
  JumpBudgetExceeded,
  PopulationBlowup,
  NoInteriorRoots,
  QuadratureFailure,
  DerivativeDegenerate,
  CflViolation,
  GridNotDyadic,
  DtMisaligned,
  EmptySample,
  GridMismatch,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorKind kind);

/// Base of every error raised by the library. `key()` names the offending
/// parameter or config key when there is one.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string key = {});

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& key() const noexcept { return key_; }

 private:
  ErrorKind kind_;
  std::string key_;
};

/// Raised when a flow leaves its declared domain before the requested time.
class DomainExit : public Error {
 public:
  DomainExit(double exit_time, std::vector<double> boundary_state);

  double exit_time() const noexcept { return exit_time_; }
  const std::vector<double>& boundary_state() const noexcept { return state_; }

 private:
  double exit_time_;
  std::vector<double> state_;
};

[[noreturn]] void throw_invalid_param(std::string_view model, std::string_view constraint,
                                      std::string key = {});

}  // namespace pdmp
