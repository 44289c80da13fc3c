#pragma once

#include <Eigen/Cholesky>
#include <array>
#include <functional>

#include "armgeo/types.hpp"

namespace armgeo {

/// Riemannian metric on the 4-D configuration space, given as the inertia
/// matrix and its Coriolis matrix. Both callables must be safe to invoke
/// concurrently.
struct Metric {
  std::function<Mat4(const Vec4&)> inertia;
  std::function<Mat4(const Vec4&, const Vec4&)> coriolis;

  /// Geodesic acceleration q'' = -M(q)^-1 C(q, q') q'.
  Vec4 acceleration(const Vec4& q, const Vec4& qd) const {
    const Mat4 m = inertia(q);
    const Vec4 rhs = -(coriolis(q, qd) * qd);
    return m.llt().solve(rhs);
  }

  double speed_squared(const Vec4& q, const Vec4& qd) const { return qd.dot(inertia(q) * qd); }
};

/// Coriolis matrix from the first partial derivatives of M (Christoffel
/// symbols of the first kind contracted with the velocity).
inline Mat4 christoffel_coriolis(const std::array<Mat4, 4>& dm, const Vec4& qd) {
  Mat4 c = Mat4::Zero();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += 0.5 * (dm[k](i, j) + dm[j](i, k) - dm[i](j, k)) * qd[k];
      c(i, j) = acc;
    }
  return c;
}

/// Central differences of M along each coordinate.
inline std::array<Mat4, 4> inertia_partials(const std::function<Mat4(const Vec4&)>& inertia, const Vec4& q,
                                            double h = 1e-6) {
  std::array<Mat4, 4> dm;
  for (int k = 0; k < 4; ++k) {
    Vec4 qp = q, qm = q;
    qp[k] += h;
    qm[k] -= h;
    dm[static_cast<std::size_t>(k)] = (inertia(qp) - inertia(qm)) / (2.0 * h);
  }
  return dm;
}

/// Metric whose Coriolis term is derived from `inertia` by finite differences.
inline Metric metric_from_inertia(std::function<Mat4(const Vec4&)> inertia) {
  Metric m;
  m.inertia = inertia;
  m.coriolis = [inertia](const Vec4& q, const Vec4& qd) {
    return christoffel_coriolis(inertia_partials(inertia, q), qd);
  };
  return m;
}

/// Flat metric: constant M0, zero Coriolis.
inline Metric constant_metric(const Mat4& m0) {
  Metric m;
  m.inertia = [m0](const Vec4&) { return m0; };
  m.coriolis = [](const Vec4&, const Vec4&) { return Mat4::Zero().eval(); };
  return m;
}

/// (1 - s) I + s M, used as a continuation path from flat space.
inline Metric blended_metric(const Metric& base, double s) {
  Metric m;
  m.inertia = [base, s](const Vec4& q) { return ((1.0 - s) * Mat4::Identity() + s * base.inertia(q)).eval(); };
  m.coriolis = [base, s](const Vec4& q, const Vec4& qd) { return (s * base.coriolis(q, qd)).eval(); };
  return m;
}

}  // namespace armgeo
