#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace fgm {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

/// A wrench is (force, torque-about-origin) stacked into 6 entries.
using Wrench = Vec6;

enum class ErrorCode {
  ParseError,
  NotWatertight,
  InvertedOrientation,
  DegenerateMesh,
  SamplingFailure,
  IsolatedVertex,
  LengthMismatch,
  NonUnitNormal,
  SingularMoments,
  NotSymmetric,
  ZeroRadius,
  QuadratureFailure,
  SingularSystem,
  NonEquilibrium,
  SolveFailure,
  DegenerateTriangle,
  NumericalFailure,
  DegenerateSpan,
  SolverFailure,
  NoProgress,
  EmptyComplement,
  TooLarge,
  BudgetExhausted,
  CacheMismatch,
  InvalidArgument,
};

const char* error_code_name(ErrorCode c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

/// Deterministic RNG with portable uniform/gaussian draws (libstdc++
/// distributions are not pinned across platforms, the raw engine is).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

  std::uint64_t next_u64() {
    // splitmix64
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0,1).
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Index in [0, n).
  std::size_t index(std::size_t n) { return std::size_t(uniform() * double(n)) % n; }

  double gaussian() {
    // Box-Muller; cache the second draw.
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 1e-300) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  Vec3 gaussian3() { return Vec3(gaussian(), gaussian(), gaussian()); }

  VecX gaussian_vec(int n) {
    VecX v(n);
    for (int i = 0; i < n; ++i) v[i] = gaussian();
    return v;
  }

  /// Uniform direction on the unit sphere of R^n.
  VecX unit_vec(int n) {
    VecX v = gaussian_vec(n);
    double nv = v.norm();
    while (nv < 1e-12) {
      v = gaussian_vec(n);
      nv = v.norm();
    }
    return v / nv;
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Worker count honoring the FG_THREADS environment variable.
int worker_count();

}  // namespace fgm
