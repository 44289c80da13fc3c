#pragma once

// Forward and inverse kinematics of the 4-DoF arm (3 shoulder rotations plus
// elbow flexion) whose shoulder pivot follows the scapulohumeral rhythm, and
// the swivel-angle family of elbow positions for a given wrist target.
//
// Configuration q = (theta, eta, zeta, phi):
//   theta  elevation of the upper arm from the downward vertical
//   eta    azimuth of the elevation plane
//   zeta   humeral axial rotation
//   phi    elbow flexion (0 = fully extended)
//
// Upper-arm direction  u  = (-sin t sin e, sin t cos e, -cos t)
// Elevation tangent    e2 = (-cos t sin e, cos t cos e,  sin t) = du/dtheta
// Flexion-plane normal e3 = u x e2 = (cos e, sin e, 0)
// Forearm direction    f  = cos phi u + sin phi (cos zeta e2 + sin zeta e3)

#include <array>
#include <vector>

#include "armgeo/rhythm.hpp"

namespace armgeo {

struct ArmConfiguration {
  double theta = 0.0;
  double eta = 0.0;
  double zeta = 0.0;
  double phi = 0.0;

  Vec4 vec() const { return {theta, eta, zeta, phi}; }
  static ArmConfiguration from(const Vec4& v) { return {v[0], v[1], v[2], v[3]}; }

  /// eta and zeta wrapped into (-pi, pi].
  ArmConfiguration normalized() const { return {theta, wrap_angle(eta), wrap_angle(zeta), phi}; }
  bool finite() const { return vec().allFinite(); }
};

struct ArmGeometry {
  double l_u = 0.30;  ///< upper arm, m
  double l_f = 0.28;  ///< forearm to the wrist point, m
  /// Joint limits for (theta, eta, zeta, phi), radians.
  std::array<Interval, 4> limits{Interval{deg2rad(0.0), deg2rad(180.0)}, Interval{deg2rad(-45.0), deg2rad(135.0)},
                                 Interval{deg2rad(-90.0), deg2rad(90.0)}, Interval{deg2rad(0.0), deg2rad(150.0)}};

  void validate() const {
    if (!(l_u > 0.0) || !(l_f > 0.0))
      throw Error(ErrorCode::kInvalidArgument, "link lengths must be positive");
    for (const auto& iv : limits)
      if (iv.empty()) throw Error(ErrorCode::kInvalidArgument, "empty joint limit interval");
    if (limits[3].lo < 0.0 || limits[3].hi > kPi)
      throw Error(ErrorCode::kInvalidArgument, "elbow limits must lie within [0, pi]");
  }
};

struct CartesianArmPose {
  Vec3 x_sh = Vec3::Zero();
  Vec3 x_e = Vec3::Zero();
  Vec3 x_w = Vec3::Zero();
};

/// Orthonormal frame attached to the elevation/azimuth pair.
struct ArmFrame {
  Vec3 u, e2, e3;
};

inline ArmFrame arm_frame(double theta, double eta) {
  const double st = std::sin(theta), ct = std::cos(theta);
  const double se = std::sin(eta), ce = std::cos(eta);
  return {Vec3(-st * se, st * ce, -ct), Vec3(-ct * se, ct * ce, st), Vec3(ce, se, 0.0)};
}

inline Vec3 forearm_direction(const ArmConfiguration& q, const ArmFrame& fr) {
  return std::cos(q.phi) * fr.u + std::sin(q.phi) * (std::cos(q.zeta) * fr.e2 + std::sin(q.zeta) * fr.e3);
}

/// Pose of the arm for shoulder center `x_sh`, bypassing the rhythm model.
inline CartesianArmPose forward_kinematics_at(const ArmConfiguration& q, const ArmGeometry& geom, const Vec3& x_sh) {
  const ArmFrame fr = arm_frame(q.theta, q.eta);
  CartesianArmPose pose;
  pose.x_sh = x_sh;
  pose.x_e = x_sh + geom.l_u * fr.u;
  pose.x_w = pose.x_e + geom.l_f * forearm_direction(q, fr);
  return pose;
}

inline CartesianArmPose forward_kinematics(const ArmConfiguration& q, const ArmGeometry& geom,
                                           const RhythmParams& rhythm) {
  return forward_kinematics_at(q, geom, gh_center(rad2deg(q.theta), rhythm));
}

struct JointAngles {
  ArmConfiguration q;
  bool eta_degenerate = false;   ///< upper arm vertical, eta set to 0
  bool zeta_degenerate = false;  ///< elbow fully extended or folded, zeta set to 0
};

/// Joint angles from three measured points with the shoulder taken as given.
/// Directions are normalized by the measured segment lengths, so marker sets
/// whose lengths drift from the nominal geometry still resolve.
inline JointAngles angles_from_points(const Vec3& x_sh, const Vec3& x_e, const Vec3& x_w) {
  const Vec3 upper = x_e - x_sh;
  const Vec3 fore = x_w - x_e;
  JointAngles out;
  const double rho = std::hypot(upper.x(), upper.y());
  out.q.theta = std::atan2(rho, -upper.z());
  if (std::sin(out.q.theta) < 1e-9) {
    out.eta_degenerate = true;
    out.q.eta = 0.0;
  } else {
    out.q.eta = std::atan2(-upper.x(), upper.y());
  }
  // elbow angle between the two segments
  out.q.phi = std::atan2(upper.cross(fore).norm(), upper.dot(fore));

  const ArmFrame fr = arm_frame(out.q.theta, out.q.eta);
  const double fn = fore.norm();
  const double c2 = fore.dot(fr.e2) / fn;
  const double c3 = fore.dot(fr.e3) / fn;
  if (std::hypot(c2, c3) < 1e-12) {
    out.zeta_degenerate = true;
    out.q.zeta = 0.0;
  } else {
    out.q.zeta = std::atan2(c3, c2);
  }
  out.q = out.q.normalized();
  return out;
}

struct IkSolution {
  ArmConfiguration q;
  Vec3 x_sh = Vec3::Zero();
  bool eta_degenerate = false;
  bool zeta_degenerate = false;
  int iterations = 0;
};

inline constexpr int kMaxFixedPointIterations = 50;
inline constexpr double kFixedPointTolerance = 1e-10;
inline constexpr double kLinkLengthTolerance = 1e-6;

/// Recovers q from elbow and wrist positions. The elevation enters the
/// shoulder position through the rhythm, so it is found by fixed-point
/// iteration on theta -> x_sh(theta) -> theta. The map's contraction factor
/// is about |dX_sh/dtheta| / l_u.
///
/// Throws NonConvergent or Inconsistent (link lengths off by more than 1e-6 m).
inline IkSolution inverse_kinematics(const Vec3& x_e, const Vec3& x_w, const ArmGeometry& geom,
                                     const RhythmParams& rhythm) {
  auto elevation_at = [&](const Vec3& x_sh) {
    const Vec3 upper = x_e - x_sh;
    return std::atan2(std::hypot(upper.x(), upper.y()), -upper.z());
  };

  double theta = elevation_at(gh_center(90.0, rhythm));
  int it = 0;
  bool converged = false;
  while (it < kMaxFixedPointIterations) {
    ++it;
    const double next = elevation_at(gh_center(rad2deg(theta), rhythm));
    const double step = std::abs(next - theta);
    theta = next;
    if (step < kFixedPointTolerance) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw Error(ErrorCode::kNonConvergent, "shoulder fixed point did not settle in 50 iterations");

  IkSolution sol;
  sol.iterations = it;
  sol.x_sh = gh_center(rad2deg(theta), rhythm);
  const double ru = std::abs((x_e - sol.x_sh).norm() - geom.l_u);
  const double rf = std::abs((x_w - x_e).norm() - geom.l_f);
  if (ru > kLinkLengthTolerance || rf > kLinkLengthTolerance)
    throw Error(ErrorCode::kInconsistent, "link length residuals " + std::to_string(ru) + ", " + std::to_string(rf));

  const JointAngles ja = angles_from_points(sol.x_sh, x_e, x_w);
  sol.q = ja.q;
  sol.eta_degenerate = ja.eta_degenerate;
  sol.zeta_degenerate = ja.zeta_degenerate;
  return sol;
}

struct SwivelAngle {
  double alpha = 0.0;  ///< radians, (-pi, pi]
};

struct SwivelElbow {
  Vec3 x_e = Vec3::Zero();
  Vec3 center = Vec3::Zero();  ///< center of the elbow circle
  double radius = 0.0;
  bool reference_singular = false;  ///< wrist axis vertical; zero reference taken from -x
};

/// Elbow position on the circle of admissible elbows for wrist target `x_f`.
/// alpha = 0 is the lowest point of the circle ("elbow down").
inline SwivelElbow swivel_elbow(const Vec3& x_f, SwivelAngle alpha, const ArmGeometry& geom, const Vec3& x_sh) {
  const Vec3 span = x_f - x_sh;
  const double dist = span.norm();
  const double lo = std::abs(geom.l_u - geom.l_f) + 1e-9;
  const double hi = geom.l_u + geom.l_f - 1e-9;
  if (!(dist >= lo && dist <= hi))
    throw Error(ErrorCode::kUnreachable, "wrist target at distance " + std::to_string(dist) + " m from the shoulder");

  const Vec3 w = span / dist;
  const double cos_beta = std::clamp(
      (geom.l_u * geom.l_u + dist * dist - geom.l_f * geom.l_f) / (2.0 * geom.l_u * dist), -1.0, 1.0);
  const double sin_beta = std::sqrt(std::max(0.0, 1.0 - cos_beta * cos_beta));

  SwivelElbow out;
  out.center = x_sh + geom.l_u * cos_beta * w;
  out.radius = geom.l_u * sin_beta;

  Vec3 ref = Vec3(0.0, 0.0, -1.0);
  if (w.cross(Vec3::UnitZ()).norm() < 1e-9) {
    out.reference_singular = true;
    ref = Vec3(-1.0, 0.0, 0.0);
  }
  const Vec3 uhat = (ref - ref.dot(w) * w).normalized();
  const Vec3 vhat = w.cross(uhat);
  out.x_e = out.center + out.radius * (std::cos(alpha.alpha) * uhat + std::sin(alpha.alpha) * vhat);
  return out;
}

/// Swivel angle of an elbow position `x_e` about the shoulder-wrist axis,
/// measured with the same reference as swivel_elbow.
inline SwivelAngle swivel_angle_of(const Vec3& x_sh, const Vec3& x_e, const Vec3& x_w) {
  const Vec3 w = (x_w - x_sh).normalized();
  Vec3 ref = Vec3(0.0, 0.0, -1.0);
  if (w.cross(Vec3::UnitZ()).norm() < 1e-9) ref = Vec3(-1.0, 0.0, 0.0);
  const Vec3 uhat = (ref - ref.dot(w) * w).normalized();
  const Vec3 vhat = w.cross(uhat);
  const Vec3 d = x_e - x_sh;
  return {std::atan2(d.dot(vhat), d.dot(uhat))};
}

struct LimitCheck {
  bool feasible = true;
  std::vector<int> violations;  ///< indices into (theta, eta, zeta, phi)
};

inline LimitCheck check_limits(const ArmConfiguration& q, const ArmGeometry& geom) {
  LimitCheck out;
  const Vec4 v = q.vec();
  for (int i = 0; i < 4; ++i) {
    if (!geom.limits[static_cast<std::size_t>(i)].contains(v[i])) {
      out.feasible = false;
      out.violations.push_back(i);
    }
  }
  return out;
}

inline const char* joint_name(int i) {
  static constexpr const char* kNames[] = {"theta", "eta", "zeta", "phi"};
  return (i >= 0 && i < 4) ? kNames[i] : "?";
}

struct FinalConfiguration {
  ArmConfiguration q;
  Vec3 x_sh = Vec3::Zero();
  Vec3 x_e = Vec3::Zero();
  int iterations = 0;
  bool reference_singular = false;
};

/// Arm configuration that puts the wrist on `x_f` with swivel angle `alpha`.
/// Outer fixed point on theta because the circle of elbows depends on the
/// shoulder position. Throws Unreachable, NonConvergent or LimitViolation.
inline FinalConfiguration final_configuration(const Vec3& x_f, SwivelAngle alpha, const ArmGeometry& geom,
                                              const RhythmParams& rhythm) {
  double theta = kPi / 2.0;
  FinalConfiguration out;
  bool converged = false;
  JointAngles ja;
  while (out.iterations < kMaxFixedPointIterations) {
    ++out.iterations;
    out.x_sh = gh_center(rad2deg(theta), rhythm);
    const SwivelElbow el = swivel_elbow(x_f, alpha, geom, out.x_sh);
    out.x_e = el.x_e;
    out.reference_singular = el.reference_singular;
    ja = angles_from_points(out.x_sh, el.x_e, x_f);
    const double step = std::abs(ja.q.theta - theta);
    theta = ja.q.theta;
    if (step < kFixedPointTolerance) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw Error(ErrorCode::kNonConvergent, "swivel fixed point did not settle in 50 iterations");
  out.q = ja.q;

  const LimitCheck lc = check_limits(out.q, geom);
  if (!lc.feasible) {
    std::string names;
    for (int i : lc.violations) names += std::string(names.empty() ? "" : ",") + joint_name(i);
    throw Error(ErrorCode::kLimitViolation, "joint limits violated: " + names);
  }
  return out;
}

}  // namespace armgeo
