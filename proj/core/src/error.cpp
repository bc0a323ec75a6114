#include "pdmp/error.hpp"

#include <sstream>

namespace pdmp {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidParam: return "InvalidParam";
    case ErrorKind::DomainExit: return "DomainExit";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::MissingBound: return "MissingBound";
    case ErrorKind::DivergentIntegral: return "DivergentIntegral";
    case ErrorKind::JumpBudgetExceeded: return "JumpBudgetExceeded";
    case ErrorKind::PopulationBlowup: return "PopulationBlowup";
    case ErrorKind::NoInteriorRoots: return "NoInteriorRoots";
    case ErrorKind::QuadratureFailure: return "QuadratureFailure";
    case ErrorKind::DerivativeDegenerate: return "DerivativeDegenerate";
    case ErrorKind::CflViolation: return "CflViolation";
    case ErrorKind::GridNotDyadic: return "GridNotDyadic";
    case ErrorKind::DtMisaligned: return "DtMisaligned";
    case ErrorKind::EmptySample: return "EmptySample";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message, std::string key)
    : std::runtime_error(message), kind_(kind), key_(std::move(key)) {}

namespace {
std::string domain_exit_message(double t) {
  std::ostringstream os;
  os << "flow left its domain at t = " << t;
  return os.str();
}
}  // namespace

DomainExit::DomainExit(double exit_time, std::vector<double> boundary_state)
    : Error(ErrorKind::DomainExit, domain_exit_message(exit_time)),
      exit_time_(exit_time),
      state_(std::move(boundary_state)) {}

void throw_invalid_param(std::string_view model, std::string_view constraint, std::string key) {
  std::string msg(model);
  msg += ": constraint violated: ";
  msg += constraint;
  throw Error(ErrorKind::InvalidParam, msg, std::move(key));
}

}  // namespace pdmp
