#include "fgm/core.hpp"

#include <cstdlib>
#include <thread>

namespace fgm {

const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NotWatertight: return "NotWatertight";
    case ErrorCode::InvertedOrientation: return "InvertedOrientation";
    case ErrorCode::DegenerateMesh: return "DegenerateMesh";
    case ErrorCode::SamplingFailure: return "SamplingFailure";
    case ErrorCode::IsolatedVertex: return "IsolatedVertex";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NonUnitNormal: return "NonUnitNormal";
    case ErrorCode::SingularMoments: return "SingularMoments";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::ZeroRadius: return "ZeroRadius";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NonEquilibrium: return "NonEquilibrium";
    case ErrorCode::SolveFailure: return "SolveFailure";
    case ErrorCode::DegenerateTriangle: return "DegenerateTriangle";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::DegenerateSpan: return "DegenerateSpan";
    case ErrorCode::SolverFailure: return "SolverFailure";
    case ErrorCode::NoProgress: return "NoProgress";
    case ErrorCode::EmptyComplement: return "EmptyComplement";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::BudgetExhausted: return "BudgetExhausted";
    case ErrorCode::CacheMismatch: return "CacheMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "UnknownError";
}

int worker_count() {
  if (const char* env = std::getenv("FG_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc ? int(hc) : 1;
}

}  // namespace fgm
