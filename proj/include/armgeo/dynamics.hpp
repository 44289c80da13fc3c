#pragma once

// Mass-inertia matrix of the two-link arm (upper arm, forearm+hand) pivoting at
// the GH center, used as the Riemannian metric of the configuration space.

#include "armgeo/kinematics.hpp"
#include "armgeo/metric.hpp"

namespace armgeo {

struct RigidLink {
  double mass = 1.0;       ///< kg
  double com_ratio = 0.5;  ///< COM distance from the proximal joint / link length
  /// Principal moments about the COM: (transverse, transverse, axial), kg m^2.
  Vec3 inertia = Vec3::Zero();

  /// Slender rod: transverse m l^2 / 12, axial 10% of transverse.
  static RigidLink rod(double mass, double com_ratio, double length) {
    const double t = mass * length * length / 12.0;
    return {mass, com_ratio, Vec3(t, t, 0.1 * t)};
  }
};

struct LinkParams {
  RigidLink upper;
  RigidLink forearm;

  static LinkParams anthropometric(const ArmGeometry& geom) {
    return {RigidLink::rod(2.0, 0.436, geom.l_u), RigidLink::rod(1.7, 0.530, geom.l_f)};
  }

  void validate() const {
    for (const RigidLink* l : {&upper, &forearm}) {
      if (!(l->mass > 0.0)) throw Error(ErrorCode::kInvalidArgument, "link mass must be positive");
      if (!(l->com_ratio > 0.0 && l->com_ratio < 1.0))
        throw Error(ErrorCode::kInvalidArgument, "link com_ratio must lie in (0, 1)");
      if ((l->inertia.array() < 0.0).any()) throw Error(ErrorCode::kInvalidArgument, "link inertia must be >= 0");
    }
  }
};

inline constexpr double kMetricRegularization = 1e-9;

struct MetricEval {
  Mat4 m;
  std::array<Mat4, 4> dm;  ///< dm[k] = dM/dq_k
  Mat4 c;
};

namespace detail {

// Inertia tensor in the torso frame for principal axes given as columns.
inline Mat3 world_inertia(const Vec3& moments, const Vec3& t1, const Vec3& t2, const Vec3& axial) {
  Mat3 r;
  r.col(0) = t1;
  r.col(1) = t2;
  r.col(2) = axial;
  return r * moments.asDiagonal() * r.transpose();
}

}  // namespace detail

/// M(q) = sum over links of m Jv^T Jv + Jw^T I Jw, plus 1e-9 I.
/// Jacobians are analytic. With `couple_shoulder` the rhythm-driven motion of
/// the GH center enters the theta column of both position Jacobians; without
/// it the rhythm parameters are not read at all.
inline Mat4 inertia_matrix(const ArmConfiguration& q, const LinkParams& links, const ArmGeometry& geom,
                           const RhythmParams& rhythm, bool couple_shoulder = false) {
  const ArmFrame fr = arm_frame(q.theta, q.eta);
  const double cz = std::cos(q.zeta), sz = std::sin(q.zeta);
  const Vec3 e2r = cz * fr.e2 + sz * fr.e3;  // humerus transverse axis after axial rotation
  const Vec3 e3r = cz * fr.e3 - sz * fr.e2;  // flexion axis
  const double cp = std::cos(q.phi), sp = std::sin(q.phi);
  const Vec3 f = cp * fr.u + sp * e2r;
  const Vec3 f_perp = cp * e2r - sp * fr.u;
  const Vec3 zhat = Vec3::UnitZ();
  const double st = std::sin(q.theta);

  Eigen::Matrix<double, 3, 4> w_upper;
  w_upper << fr.e3, zhat, fr.u, Vec3::Zero();
  Eigen::Matrix<double, 3, 4> w_fore;
  w_fore << fr.e3, zhat, fr.u, e3r;

  const double lu = geom.l_u, lf = geom.l_f;
  const double cu = links.upper.com_ratio * lu;
  const double cf = links.forearm.com_ratio * lf;

  Eigen::Matrix<double, 3, 4> v_upper;
  v_upper << cu * fr.e2, -cu * st * fr.e3, Vec3::Zero(), Vec3::Zero();
  Eigen::Matrix<double, 3, 4> v_fore;
  for (int j = 0; j < 4; ++j) {
    const Vec3 wu = w_upper.col(j);
    const Vec3 wf = w_fore.col(j);
    v_fore.col(j) = lu * wu.cross(fr.u) + cf * wf.cross(f);
  }
  if (couple_shoulder) {
    const Vec3 dsh = gh_center_derivative(rad2deg(q.theta), rhythm);
    v_upper.col(0) += dsh;
    v_fore.col(0) += dsh;
  }

  const Mat3 i_upper = detail::world_inertia(links.upper.inertia, e2r, e3r, fr.u);
  const Mat3 i_fore = detail::world_inertia(links.forearm.inertia, f_perp, e3r, f);

  Mat4 m = links.upper.mass * v_upper.transpose() * v_upper + w_upper.transpose() * i_upper * w_upper +
           links.forearm.mass * v_fore.transpose() * v_fore + w_fore.transpose() * i_fore * w_fore;
  m = (0.5 * (m + m.transpose())).eval();
  m.diagonal().array() += kMetricRegularization;
  return m;
}

/// C(q, q') by finite differences of inertia_matrix (h = 1e-6 rad).
inline Mat4 coriolis_matrix(const ArmConfiguration& q, const Vec4& qdot, const LinkParams& links,
                            const ArmGeometry& geom, const RhythmParams& rhythm, bool couple_shoulder = false) {
  auto inertia = [&](const Vec4& x) {
    return inertia_matrix(ArmConfiguration::from(x), links, geom, rhythm, couple_shoulder);
  };
  return christoffel_coriolis(inertia_partials(inertia, q.vec()), qdot);
}

inline MetricEval evaluate_metric(const ArmConfiguration& q, const Vec4& qdot, const LinkParams& links,
                                  const ArmGeometry& geom, const RhythmParams& rhythm, bool couple_shoulder = false) {
  auto inertia = [&](const Vec4& x) {
    return inertia_matrix(ArmConfiguration::from(x), links, geom, rhythm, couple_shoulder);
  };
  MetricEval ev;
  ev.m = inertia(q.vec());
  ev.dm = inertia_partials(inertia, q.vec());
  ev.c = christoffel_coriolis(ev.dm, qdot);
  return ev;
}

/// q'' = -M^-1 C q' for the arm metric.
inline Vec4 geodesic_rhs(const ArmConfiguration& q, const Vec4& qdot, const LinkParams& links, const ArmGeometry& geom,
                         const RhythmParams& rhythm, bool couple_shoulder = false) {
  const Mat4 m = inertia_matrix(q, links, geom, rhythm, couple_shoulder);
  const Mat4 c = coriolis_matrix(q, qdot, links, geom, rhythm, couple_shoulder);
  return m.llt().solve(-(c * qdot));
}

/// Metric callback for the geodesic solver. Captures parameters by value.
inline Metric arm_metric(const LinkParams& links, const ArmGeometry& geom, const RhythmParams& rhythm,
                         bool couple_shoulder = false) {
  return metric_from_inertia([links, geom, rhythm, couple_shoulder](const Vec4& x) {
    return inertia_matrix(ArmConfiguration::from(x), links, geom, rhythm, couple_shoulder);
  });
}

}  // namespace armgeo
