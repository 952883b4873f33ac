#pragma once

#include <stdexcept>
#include <string>

namespace rte {

enum class ErrorKind {
  PointOutsideDomain,
  TangentialRay,
  InvalidDomain,
  InvalidPhantomParams,
  CoefficientOrdering,
  NotConverged,
  LinearSolveFailed,
  MonotonicityViolated,
  SupportEscapesPatch,
  ParallelRays,
  IntersectionOutsideDomain,
  ScheduleInfeasible,
  ForwardSolveFailed,
  NonPositiveTransmission,
  UnderdeterminedCoverage,
  SolverStagnation,
  GeometryInfeasible,
  ContaminationTooLarge,
  Unsupported,
  ConfigInvalid,
  StageFailed,
  OracleBudgetExceeded,
  Io,
};

inline const char* kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::PointOutsideDomain: return "PointOutsideDomain";
    case ErrorKind::TangentialRay: return "TangentialRay";
    case ErrorKind::InvalidDomain: return "InvalidDomain";
    case ErrorKind::InvalidPhantomParams: return "InvalidPhantomParams";
    case ErrorKind::CoefficientOrdering: return "CoefficientOrdering";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::LinearSolveFailed: return "LinearSolveFailed";
    case ErrorKind::MonotonicityViolated: return "MonotonicityViolated";
    case ErrorKind::SupportEscapesPatch: return "SupportEscapesPatch";
    case ErrorKind::ParallelRays: return "ParallelRays";
    case ErrorKind::IntersectionOutsideDomain: return "IntersectionOutsideDomain";
    case ErrorKind::ScheduleInfeasible: return "ScheduleInfeasible";
    case ErrorKind::ForwardSolveFailed: return "ForwardSolveFailed";
    case ErrorKind::NonPositiveTransmission: return "NonPositiveTransmission";
    case ErrorKind::UnderdeterminedCoverage: return "UnderdeterminedCoverage";
    case ErrorKind::SolverStagnation: return "SolverStagnation";
    case ErrorKind::GeometryInfeasible: return "GeometryInfeasible";
    case ErrorKind::ContaminationTooLarge: return "ContaminationTooLarge";
    case ErrorKind::Unsupported: return "Unsupported";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    case ErrorKind::StageFailed: return "StageFailed";
    case ErrorKind::OracleBudgetExceeded: return "OracleBudgetExceeded";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the kinds above.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(kind_name(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace rte
