#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace armgeo {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

inline constexpr double kPi = std::numbers::pi;

constexpr double deg2rad(double deg) { return deg * (kPi / 180.0); }
constexpr double rad2deg(double rad) { return rad * (180.0 / kPi); }

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  double w = std::remainder(a, 2.0 * kPi);
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

/// Closed interval [lo, hi].
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const { return v >= lo && v <= hi; }
  double mid() const { return 0.5 * (lo + hi); }
  bool empty() const { return !(lo <= hi); }
};

enum class ErrorCode {
  kNonConvergent,
  kInconsistent,
  kUnreachable,
  kLimitViolation,
  kNonFinite,
  kNoConvergence,
  kNoFeasibleAlpha,
  kAllSolvesFailed,
  kSingular,
  kOutOfLimits,
  kInconsistentLengths,
  kZeroVariance,
  kInvalidArgument,
  kParse,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::kNonConvergent: return "NonConvergent";
    case ErrorCode::kInconsistent: return "Inconsistent";
    case ErrorCode::kUnreachable: return "Unreachable";
    case ErrorCode::kLimitViolation: return "LimitViolation";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kNoFeasibleAlpha: return "NoFeasibleAlpha";
    case ErrorCode::kAllSolvesFailed: return "AllSolvesFailed";
    case ErrorCode::kSingular: return "Singular";
    case ErrorCode::kOutOfLimits: return "OutOfLimits";
    case ErrorCode::kInconsistentLengths: return "InconsistentLengths";
    case ErrorCode::kZeroVariance: return "ZeroVariance";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kParse: return "ParseError";
  }
  return "Unknown";
}

/// Base for every failure raised by the library. `code()` identifies the kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), message_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// The text without the code prefix, for rethrowing with added context.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace armgeo
