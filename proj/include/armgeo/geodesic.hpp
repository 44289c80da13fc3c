#pragma once

// Geodesics of a configuration-space metric: fixed-step RK4 initial-value
// integration over lambda in [0, 1] and single-shooting boundary-value solves.

#include <Eigen/LU>
#include <limits>
#include <vector>

#include "armgeo/metric.hpp"

namespace armgeo {

struct GeodesicPath {
  std::vector<double> lambdas;
  std::vector<Vec4> qs;
  std::vector<Vec4> qdots;   ///< dq/dlambda
  std::vector<Vec4> qddots;  ///< d2q/dlambda2 from the geodesic equation
  double energy = 0.0;
  double length = 0.0;
  double richardson_error = 0.0;  ///< max endpoint change when the step count doubles
  double endpoint_residual = 0.0;
  int newton_iterations = 0;
  bool used_homotopy = false;
  bool used_continuation = false;
  Vec4 v0 = Vec4::Zero();
};

class SolveError : public Error {
 public:
  SolveError(const std::string& what, double best_residual)
      : Error(ErrorCode::kNoConvergence, what + " (best residual " + std::to_string(best_residual) + ")"),
        best_residual_(best_residual) {}
  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

namespace detail {

struct PhaseState {
  Vec4 q;
  Vec4 v;
};

inline void throw_if_nonfinite(const PhaseState& s, double lambda) {
  if (!s.q.allFinite() || !s.v.allFinite())
    throw Error(ErrorCode::kNonFinite, "geodesic state left the finite range at lambda=" + std::to_string(lambda));
}

// One RK4 step; `a0` is the acceleration at the start of the step.
inline PhaseState rk4_step(const Metric& metric, const PhaseState& s, const Vec4& a0, double h) {
  const Vec4 k1q = s.v, k1v = a0;
  const Vec4 q2 = s.q + 0.5 * h * k1q, v2 = s.v + 0.5 * h * k1v;
  const Vec4 k2q = v2, k2v = metric.acceleration(q2, v2);
  const Vec4 q3 = s.q + 0.5 * h * k2q, v3 = s.v + 0.5 * h * k2v;
  const Vec4 k3q = v3, k3v = metric.acceleration(q3, v3);
  const Vec4 q4 = s.q + h * k3q, v4 = s.v + h * k3v;
  const Vec4 k4q = v4, k4v = metric.acceleration(q4, v4);
  return {s.q + (h / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q), s.v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)};
}

inline Vec4 integrate_endpoint(const Vec4& q0, const Vec4& v0, const Metric& metric, int n_steps) {
  const double h = 1.0 / n_steps;
  PhaseState s{q0, v0};
  for (int i = 0; i < n_steps; ++i) {
    s = rk4_step(metric, s, metric.acceleration(s.q, s.v), h);
    throw_if_nonfinite(s, (i + 1) * h);
  }
  return s.q;
}

// Composite Simpson on a uniform grid; the 3/8 rule closes an odd interval count.
inline double simpson(const std::vector<double>& y, double h) {
  const auto n = static_cast<int>(y.size()) - 1;
  if (n < 1) return 0.0;
  if (n == 1) return 0.5 * h * (y[0] + y[1]);
  const int even_end = (n % 2 == 0) ? n : n - 3;
  double acc = 0.0;
  for (int i = 0; i + 2 <= even_end; i += 2) acc += (h / 3.0) * (y[i] + 4.0 * y[i + 1] + y[i + 2]);
  if (n % 2 != 0) {
    const int i = even_end;
    acc += (3.0 * h / 8.0) * (y[i] + 3.0 * y[i + 1] + 3.0 * y[i + 2] + y[i + 3]);
  }
  return acc;
}

}  // namespace detail

/// Energy  int q'^T M q' dlambda  of a sampled path.
inline double path_energy(const GeodesicPath& path, const Metric& metric) {
  std::vector<double> y(path.qs.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = metric.speed_squared(path.qs[i], path.qdots[i]);
  const double h = path.lambdas.size() > 1 ? path.lambdas[1] - path.lambdas[0] : 0.0;
  return detail::simpson(y, h);
}

/// Riemannian length  int sqrt(q'^T M q') dlambda.
inline double path_length(const GeodesicPath& path, const Metric& metric) {
  std::vector<double> y(path.qs.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::sqrt(std::max(0.0, metric.speed_squared(path.qs[i], path.qdots[i])));
  const double h = path.lambdas.size() > 1 ? path.lambdas[1] - path.lambdas[0] : 0.0;
  return detail::simpson(y, h);
}

/// Integrates the geodesic equation from (q0, v0) with fixed-step RK4.
/// With `richardson` set, the endpoint is recomputed at twice the step count
/// and the difference stored in `richardson_error`. Throws NonFinite.
inline GeodesicPath integrate_geodesic(const Vec4& q0, const Vec4& v0, const Metric& metric, int n_steps = 200,
                                       bool richardson = true) {
  if (n_steps < 1) throw Error(ErrorCode::kInvalidArgument, "n_steps must be positive");
  const double h = 1.0 / n_steps;
  GeodesicPath path;
  path.v0 = v0;
  path.lambdas.resize(static_cast<std::size_t>(n_steps) + 1);
  path.qs.reserve(path.lambdas.size());
  path.qdots.reserve(path.lambdas.size());
  path.qddots.reserve(path.lambdas.size());

  detail::PhaseState s{q0, v0};
  for (int i = 0; i <= n_steps; ++i) {
    path.lambdas[static_cast<std::size_t>(i)] = (i == n_steps) ? 1.0 : i * h;
    const Vec4 a = metric.acceleration(s.q, s.v);
    path.qs.push_back(s.q);
    path.qdots.push_back(s.v);
    path.qddots.push_back(a);
    if (i == n_steps) break;
    s = detail::rk4_step(metric, s, a, h);
    detail::throw_if_nonfinite(s, (i + 1) * h);
  }
  path.energy = path_energy(path, metric);
  path.length = path_length(path, metric);
  if (richardson) {
    const Vec4 fine = detail::integrate_endpoint(q0, v0, metric, 2 * n_steps);
    path.richardson_error = (fine - path.qs.back()).cwiseAbs().maxCoeff();
  }
  return path;
}

struct GeodesicProblem {
  Metric metric;
  Vec4 q0 = Vec4::Zero();
  Vec4 q1 = Vec4::Zero();
  int n_steps = 200;
  double tol_endpoint = 1e-9;
  int max_newton = 50;
  int max_halvings = 20;
  double jacobian_step = 1e-6;
  std::vector<double> homotopy{0.25, 0.5, 0.75, 1.0};
  /// Stages of the endpoint continuation q0 -> q0 + s (q1 - q0); 0 disables it.
  int continuation_stages = 8;

  void validate() const {
    if (n_steps < 16) throw Error(ErrorCode::kInvalidArgument, "n_steps must be at least 16");
    if (!(tol_endpoint > 0.0)) throw Error(ErrorCode::kInvalidArgument, "tol_endpoint must be positive");
    if (!q0.allFinite() || !q1.allFinite()) throw Error(ErrorCode::kInvalidArgument, "boundary values must be finite");
  }
};

namespace detail {

struct ShootingOutcome {
  bool converged = false;
  Vec4 v0 = Vec4::Zero();
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

// Damped Newton on r(v0) = q(1; v0) - q1 with a forward-difference Jacobian.
inline ShootingOutcome shoot(const GeodesicProblem& pb, const Metric& metric, Vec4 v) {
  auto residual = [&](const Vec4& vv) -> Vec4 {
    return integrate_endpoint(pb.q0, vv, metric, pb.n_steps) - pb.q1;
  };
  ShootingOutcome out;
  Vec4 r;
  try {
    r = residual(v);
  } catch (const Error&) {
    return out;
  }
  out.v0 = v;
  out.residual = r.cwiseAbs().maxCoeff();

  int stalled = 0;
  for (int it = 0; it < pb.max_newton; ++it) {
    if (out.residual < pb.tol_endpoint) {
      out.converged = true;
      return out;
    }
    out.iterations = it + 1;
    Mat4 jac;
    try {
      for (int k = 0; k < 4; ++k) {
        Vec4 vp = v;
        vp[k] += pb.jacobian_step;
        jac.col(k) = (residual(vp) - r) / pb.jacobian_step;
      }
    } catch (const Error&) {
      return out;
    }
    const Vec4 step = jac.partialPivLu().solve(-r);
    if (!step.allFinite()) return out;

    double t = 1.0;
    bool accepted = false;
    const double norm0 = r.norm();
    for (int k = 0; k <= pb.max_halvings; ++k, t *= 0.5) {
      const Vec4 trial = v + t * step;
      Vec4 rt;
      try {
        rt = residual(trial);
      } catch (const Error&) {
        continue;
      }
      if (rt.norm() < norm0) {
        v = trial;
        r = rt;
        accepted = true;
        break;
      }
    }
    if (!accepted) return out;
    out.v0 = v;
    out.residual = r.cwiseAbs().maxCoeff();
    // crawling along a valley of |r| with tiny steps: a local minimum, give up
    stalled = (r.norm() > 0.999 * norm0) ? stalled + 1 : 0;
    if (stalled >= 3) return out;
  }
  out.converged = out.residual < pb.tol_endpoint;
  return out;
}

// Walks the target out from q0 in equal stages, warm-starting each stage
// with the previous initial velocity rescaled to the longer segment.
inline ShootingOutcome continuation(const GeodesicProblem& pb) {
  ShootingOutcome stage;
  GeodesicProblem sub = pb;
  Vec4 v = Vec4::Zero();
  const int n = pb.continuation_stages;
  for (int k = 1; k <= n; ++k) {
    const double s = static_cast<double>(k) / n;
    sub.q1 = pb.q0 + s * (pb.q1 - pb.q0);
    const Vec4 guess = (k == 1) ? Vec4(sub.q1 - pb.q0) : Vec4(v * (static_cast<double>(k) / (k - 1)));
    stage = shoot(sub, pb.metric, guess);
    if (!stage.converged) return stage;
    v = stage.v0;
  }
  return stage;
}

}  // namespace detail

/// Two-point boundary-value geodesic q(0) = q0, q(1) = q1 by single shooting.
/// When direct Newton fails, tries endpoint continuation and then
/// continuation through (1 - s) I + s M. Throws SolveError (NoConvergence)
/// with the best residual seen.
inline GeodesicPath solve_bvp(const GeodesicProblem& pb) {
  pb.validate();
  const Vec4 guess = pb.q1 - pb.q0;
  detail::ShootingOutcome best = detail::shoot(pb, pb.metric, guess);
  bool homotopy = false, continued = false;
  double best_residual = best.residual;
  if (!best.converged && pb.continuation_stages > 0) {
    const detail::ShootingOutcome c = detail::continuation(pb);
    if (c.converged) {
      best = c;
      continued = true;
    }
  }
  if (!best.converged) {
    homotopy = true;
    Vec4 v = guess;
    detail::ShootingOutcome stage;
    for (double s : pb.homotopy) {
      stage = detail::shoot(pb, blended_metric(pb.metric, s), v);
      if (!stage.converged) break;
      v = stage.v0;
    }
    if (!stage.converged) {
      best_residual = std::min(best_residual, stage.residual);
      throw SolveError("geodesic shooting failed", best_residual);
    }
    best = stage;
  }
  GeodesicPath path = integrate_geodesic(pb.q0, best.v0, pb.metric, pb.n_steps, true);
  path.qs.front() = pb.q0;
  path.endpoint_residual = (path.qs.back() - pb.q1).cwiseAbs().maxCoeff();
  path.newton_iterations = best.iterations;
  path.used_homotopy = homotopy;
  path.used_continuation = continued;
  return path;
}

}  // namespace armgeo
