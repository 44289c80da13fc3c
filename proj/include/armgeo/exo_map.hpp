#pragma once

// Mapping from the human arm parameterization to the joint space of an
// exoskeleton whose shoulder is a serial chain of three revolute joints with
// fixed, pairwise non-parallel axes (a generalized Euler triple):
//
//   R_humerus = Rot(a1, q1) Rot(a2, q2) Rot(a3, q3)
//
// plus an elbow joint that is an affine image of the human elbow flexion.

#include <Eigen/Geometry>
#include <array>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "armgeo/kinematics.hpp"
#include "armgeo/planner.hpp"

namespace armgeo {

inline constexpr Interval kUnbounded{-std::numeric_limits<double>::infinity(),
                                      std::numeric_limits<double>::infinity()};

struct ExoKinematicDescription {
  std::string name = "exo";
  std::array<Vec3, 3> shoulder_axes{Vec3::UnitZ(), Vec3::UnitX(), Vec3::UnitY()};
  int elbow_axis_sign = 1;
  double elbow_offset = 0.0;  ///< rad
  /// Limits of the four output joints, rad. Unbounded by default so branch
  /// continuity alone decides the turn.
  std::array<Interval, 4> joint_limits{kUnbounded, kUnbounded, kUnbounded, kUnbounded};
  /// Output slot k carries the chain angle output_order[k].
  std::array<int, 3> output_order{0, 1, 2};

  void validate() const {
    for (const Vec3& a : shoulder_axes)
      if (std::abs(a.norm() - 1.0) > 1e-12) throw Error(ErrorCode::kInvalidArgument, name + ": axes must be unit vectors");
    for (int i = 0; i < 2; ++i)
      if (std::abs(shoulder_axes[static_cast<std::size_t>(i)].dot(shoulder_axes[static_cast<std::size_t>(i) + 1])) >=
          1.0 - 1e-9)
        throw Error(ErrorCode::kInvalidArgument, name + ": consecutive axes must not be parallel");
    if (elbow_axis_sign != 1 && elbow_axis_sign != -1)
      throw Error(ErrorCode::kInvalidArgument, name + ": elbow_axis_sign must be +1 or -1");
    std::array<bool, 3> seen{};
    for (int k : output_order) {
      if (k < 0 || k > 2 || seen[static_cast<std::size_t>(k)])
        throw Error(ErrorCode::kInvalidArgument, name + ": output_order must be a permutation of 0,1,2");
      seen[static_cast<std::size_t>(k)] = true;
    }
    for (const auto& iv : joint_limits)
      if (iv.empty()) throw Error(ErrorCode::kInvalidArgument, name + ": empty joint limit interval");
  }

  /// Serial chain that reproduces the human parameterization:
  /// R = Rz(eta) Rx(theta) Rot(-z, zeta), reported in (theta, eta, zeta, phi) order.
  static ExoKinematicDescription human_equivalent(const ArmGeometry& geom) {
    ExoKinematicDescription d;
    d.name = "identity";
    d.shoulder_axes = {Vec3::UnitZ(), Vec3::UnitX(), -Vec3::UnitZ()};
    d.output_order = {1, 0, 2};
    d.joint_limits = geom.limits;
    return d;
  }
};

inline Mat3 axis_rotation(const Vec3& axis, double angle) { return Eigen::AngleAxisd(angle, axis).toRotationMatrix(); }

/// Rotation taking the zero-pose humerus frame (u = -z, flexion normal = x)
/// to the frame of configuration q.
inline Mat3 humerus_orientation(const ArmConfiguration& q) {
  const ArmFrame fr = arm_frame(q.theta, q.eta);
  const double cz = std::cos(q.zeta), sz = std::sin(q.zeta);
  Mat3 posed;
  posed.col(0) = fr.u;
  posed.col(1) = cz * fr.e2 + sz * fr.e3;
  posed.col(2) = cz * fr.e3 - sz * fr.e2;
  Mat3 zero;
  zero.col(0) = Vec3(0.0, 0.0, -1.0);
  zero.col(1) = Vec3(0.0, 1.0, 0.0);
  zero.col(2) = Vec3(1.0, 0.0, 0.0);
  Mat3 r = posed * zero.transpose();
  // one Newton step of polar orthonormalization
  r = 0.5 * (r + r.transpose().inverse());
  return r;
}

/// Shoulder rotation of the exoskeleton for output joint values `q_r`.
inline Mat3 compose_shoulder(const ExoKinematicDescription& desc, const Vec4& q_r) {
  std::array<double, 3> chain{};
  for (std::size_t k = 0; k < 3; ++k) chain[static_cast<std::size_t>(desc.output_order[k])] = q_r[static_cast<int>(k)];
  return axis_rotation(desc.shoulder_axes[0], chain[0]) * axis_rotation(desc.shoulder_axes[1], chain[1]) *
         axis_rotation(desc.shoulder_axes[2], chain[2]);
}

namespace detail {

// Signed angle about `axis` carrying the projection of `from` onto that of `to`.
inline double angle_about(const Vec3& axis, const Vec3& from, const Vec3& to) {
  const Vec3 f = from - from.dot(axis) * axis;
  const Vec3 t = to - to.dot(axis) * axis;
  return std::atan2(axis.dot(f.cross(t)), f.dot(t));
}

inline Vec3 any_perpendicular(const Vec3& a) {
  const Vec3 trial = std::abs(a.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  return (trial - trial.dot(a) * a).normalized();
}

// Third angle from the residual rotation once the first two are fixed.
inline double residual_angle(const Vec3& a1, const Vec3& a2, const Vec3& a3, double t1, double t2, const Mat3& r) {
  const Mat3 n = (axis_rotation(a1, t1) * axis_rotation(a2, t2)).transpose() * r;
  const Vec3 p = any_perpendicular(a3);
  return std::atan2(a3.dot(p.cross(n * p)), p.dot(n * p));
}

inline double nearest_turn(double a, double ref) { return a + 2.0 * kPi * std::round((ref - a) / (2.0 * kPi)); }

}  // namespace detail

inline constexpr double kExoSingularityTolerance = 1e-6;

/// T: q_h -> q_r. Of the two decomposition branches, keeps those inside the
/// exoskeleton limits and picks the one closest to `prev` (or with the
/// smaller middle angle). Throws Singular or OutOfLimits.
inline Vec4 map_to_exo(const ArmConfiguration& q_h, const ExoKinematicDescription& desc,
                       const std::optional<Vec4>& prev = std::nullopt) {
  const Vec3& a1 = desc.shoulder_axes[0];
  const Vec3& a2 = desc.shoulder_axes[1];
  const Vec3& a3 = desc.shoulder_axes[2];
  const Mat3 r = humerus_orientation(q_h);

  // a1^T Rot(a2, t2) a3 = a1^T R a3  ->  A cos t2 + B sin t2 = d - C
  const double c_coef = a1.dot(a2) * a2.dot(a3);
  const double a_coef = a1.dot(a3) - c_coef;
  const double b_coef = a1.dot(a2.cross(a3));
  const double rho = std::hypot(a_coef, b_coef);
  const double delta = std::atan2(b_coef, a_coef);
  const double cos_arg = std::clamp((a1.dot(r * a3) - c_coef) / rho, -1.0, 1.0);
  const double gamma = std::acos(cos_arg);
  const bool singular = std::min(gamma, kPi - gamma) < kExoSingularityTolerance;

  std::optional<std::array<double, 3>> prev_chain;
  if (prev) {
    std::array<double, 3> pc{};
    for (std::size_t k = 0; k < 3; ++k) pc[static_cast<std::size_t>(desc.output_order[k])] = (*prev)[static_cast<int>(k)];
    prev_chain = pc;
  }
  if (singular && !prev_chain)
    throw Error(ErrorCode::kSingular, desc.name + ": shoulder decomposition singular and no previous sample");

  std::vector<std::array<double, 3>> branches;
  for (double sgn : {1.0, -1.0}) {
    const double t2 = wrap_angle(delta + sgn * gamma);
    double t1;
    if (singular) {
      t1 = (*prev_chain)[0];
    } else {
      t1 = detail::angle_about(a1, axis_rotation(a2, t2) * a3, r * a3);
    }
    const double t3 = detail::residual_angle(a1, a2, a3, t1, t2, r);
    branches.push_back({wrap_angle(t1), t2, t3});
    if (singular) break;
  }

  const double elbow = desc.elbow_axis_sign * q_h.phi + desc.elbow_offset;
  std::optional<Vec4> best;
  double best_score = std::numeric_limits<double>::infinity();
  for (auto chain : branches) {
    if (prev_chain)
      for (std::size_t k = 0; k < 3; ++k) chain[k] = detail::nearest_turn(chain[k], (*prev_chain)[k]);
    Vec4 out;
    bool inside = true;
    for (std::size_t k = 0; k < 3; ++k) {
      double v = chain[static_cast<std::size_t>(desc.output_order[k])];
      const Interval& lim = desc.joint_limits[k];
      if (!lim.contains(v)) {
        // try the other turns of the same angle
        for (double shift : {2.0 * kPi, -2.0 * kPi})
          if (lim.contains(v + shift)) {
            v += shift;
            break;
          }
      }
      inside = inside && lim.contains(v);
      out[static_cast<int>(k)] = v;
    }
    out[3] = elbow;
    inside = inside && desc.joint_limits[3].contains(elbow);
    if (!inside) continue;
    double score;
    if (prev) {
      score = (out.head<3>() - prev->head<3>()).norm();
    } else {
      score = std::abs(chain[1]);
    }
    if (score < best_score) {
      best_score = score;
      best = out;
    }
  }
  if (!best) throw Error(ErrorCode::kOutOfLimits, desc.name + ": no decomposition branch within joint limits");
  return *best;
}

struct ExoTrajectory {
  std::vector<double> t;
  std::vector<Vec4> q_r;
  double max_jump = 0.0;  ///< largest inter-sample change of any joint, rad
};

/// Maps a timed human trajectory sample by sample, threading the previous
/// exoskeleton configuration for branch continuity.
inline ExoTrajectory map_trajectory(const std::vector<TrajectorySample>& traj, const ExoKinematicDescription& desc) {
  ExoTrajectory out;
  out.t.reserve(traj.size());
  out.q_r.reserve(traj.size());
  std::optional<Vec4> prev;
  for (const auto& s : traj) {
    Vec4 q_r;
    try {
      q_r = map_to_exo(ArmConfiguration::from(s.q), desc, prev);
    } catch (const Error& e) {
      throw Error(e.code(), e.message() + " at t=" + std::to_string(s.t));
    }
    if (prev) out.max_jump = std::max(out.max_jump, (q_r - *prev).cwiseAbs().maxCoeff());
    out.t.push_back(s.t);
    out.q_r.push_back(q_r);
    prev = q_r;
  }
  return out;
}

/// Inverse of the affine elbow map.
inline double human_elbow_from_exo(double q_r_elbow, const ExoKinematicDescription& desc) {
  return (q_r_elbow - desc.elbow_offset) / desc.elbow_axis_sign;
}

}  // namespace armgeo
