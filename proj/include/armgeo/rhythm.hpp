#pragma once

// Scapulohumeral rhythm: position of the glenohumeral (GH) joint center as a
// function of arm elevation. The center sits on a sphere-like surface around a
// fixed proximal origin, described by an elevation/depression angle, a
// protraction/retraction angle and a radial distance, each a polynomial in the
// arm elevation.
//
// Torso frame: x anterior, y lateral toward the moving arm, z up.

#include <algorithm>
#include <array>
#include <span>

#include "armgeo/types.hpp"

namespace armgeo {

/// Unit of the argument fed to the protraction/retraction polynomial.
enum class ProtractionInput {
  kNormalized,  ///< theta / 180, in [0, 1]
  kDegrees,
  kRadians,
};

struct RhythmParams {
  double d0 = 0.18;  ///< GH distance from the origin at zero elevation, m
  /// Elevation/depression, degrees; degree 5 -> 0, argument theta in degrees.
  std::array<double, 6> coeffs_ed{1.49e-9, -4.28e-7, 1.44e-5, 5.2e-3, -0.1357, 0.7078};
  /// Protraction/retraction, degrees; degree 3 -> 1 (no constant term).
  std::array<double, 3> coeffs_pr{1.82, -8.073, -3.99};
  /// Distance ratio d_SG / d0; degree 2 -> 0, argument theta in degrees.
  std::array<double, 3> coeffs_dsg{-1.6e-5, 3e-4, 1.0};
  Vec3 origin = Vec3::Zero();
  ProtractionInput pr_input = ProtractionInput::kNormalized;

  /// Throws Error(kInvalidArgument) when d0 <= 0 or the distance polynomial
  /// does not pass through 1 at zero elevation.
  void validate() const {
    if (!(d0 > 0.0) || !std::isfinite(d0))
      throw Error(ErrorCode::kInvalidArgument, "rhythm d0 must be positive");
    if (coeffs_dsg[2] != 1.0)
      throw Error(ErrorCode::kInvalidArgument, "rhythm distance polynomial constant term must be 1");
    if (!origin.allFinite()) throw Error(ErrorCode::kInvalidArgument, "rhythm origin must be finite");
  }

  /// Rhythm with the GH center pinned at `center` for every elevation.
  static RhythmParams fixed_shoulder(const Vec3& center, double d0 = 0.18) {
    RhythmParams p;
    p.d0 = d0;
    p.coeffs_ed.fill(0.0);
    p.coeffs_pr.fill(0.0);
    p.coeffs_dsg = {0.0, 0.0, 1.0};
    p.origin = center - Vec3(0.0, d0, 0.0);
    return p;
  }
};

struct GhState {
  double theta = 0.0;   ///< elevation used for evaluation (after clamping), degrees
  double phi_ed = 0.0;  ///< degrees
  double phi_pr = 0.0;  ///< degrees
  double d_sg = 0.0;    ///< m
  Vec3 x_sh = Vec3::Zero();
  bool out_of_range = false;  ///< requested elevation was outside [0, 180] and got clamped
};

namespace detail {

// Horner evaluation, coefficients highest degree first.
inline double horner(std::span<const double> c, double x) {
  double acc = 0.0;
  for (double a : c) acc = acc * x + a;
  return acc;
}

inline double horner_derivative(std::span<const double> c, double x) {
  double acc = 0.0;
  const auto n = static_cast<int>(c.size()) - 1;
  for (int i = 0; i < n; ++i) acc = acc * x + c[static_cast<std::size_t>(i)] * (n - i);
  return acc;
}

inline double pr_argument(double theta_deg, ProtractionInput unit) {
  switch (unit) {
    case ProtractionInput::kNormalized: return theta_deg / 180.0;
    case ProtractionInput::kDegrees: return theta_deg;
    case ProtractionInput::kRadians: return deg2rad(theta_deg);
  }
  return theta_deg / 180.0;
}

// d(pr argument) / d(theta in degrees)
inline double pr_argument_rate(ProtractionInput unit) {
  switch (unit) {
    case ProtractionInput::kNormalized: return 1.0 / 180.0;
    case ProtractionInput::kDegrees: return 1.0;
    case ProtractionInput::kRadians: return kPi / 180.0;
  }
  return 1.0 / 180.0;
}

inline double pr_polynomial(const RhythmParams& p, double x) {
  return ((p.coeffs_pr[0] * x + p.coeffs_pr[1]) * x + p.coeffs_pr[2]) * x;
}

inline double pr_polynomial_derivative(const RhythmParams& p, double x) {
  return (3.0 * p.coeffs_pr[0] * x + 2.0 * p.coeffs_pr[1]) * x + p.coeffs_pr[2];
}

inline Vec3 sphere_direction(double ed_rad, double pr_rad) {
  const double ce = std::cos(ed_rad);
  return {ce * std::sin(pr_rad), ce * std::cos(pr_rad), std::sin(ed_rad)};
}

}  // namespace detail

/// Evaluates the rhythm polynomials at `theta_deg`, clamping into [0, 180].
inline GhState eval_rhythm(double theta_deg, const RhythmParams& p) {
  GhState s;
  s.out_of_range = !(theta_deg >= 0.0 && theta_deg <= 180.0);
  const double th = std::isnan(theta_deg) ? 0.0 : std::clamp(theta_deg, 0.0, 180.0);
  s.theta = th;
  s.phi_ed = detail::horner(p.coeffs_ed, th);
  s.phi_pr = detail::pr_polynomial(p, detail::pr_argument(th, p.pr_input));
  s.d_sg = p.d0 * detail::horner(p.coeffs_dsg, th);
  s.x_sh = p.origin + s.d_sg * detail::sphere_direction(deg2rad(s.phi_ed), deg2rad(s.phi_pr));
  return s;
}

inline Vec3 gh_center(double theta_deg, const RhythmParams& p) { return eval_rhythm(theta_deg, p).x_sh; }

/// dX_sh / d(theta) in meters per radian of elevation. Zero outside the
/// clamped range, where the center no longer moves.
inline Vec3 gh_center_derivative(double theta_deg, const RhythmParams& p) {
  if (!(theta_deg >= 0.0 && theta_deg <= 180.0)) return Vec3::Zero();
  const double th = theta_deg;
  const double ed = deg2rad(detail::horner(p.coeffs_ed, th));
  const double pr = deg2rad(detail::pr_polynomial(p, detail::pr_argument(th, p.pr_input)));
  const double d = p.d0 * detail::horner(p.coeffs_dsg, th);

  // rates per degree of elevation
  const double ded = deg2rad(detail::horner_derivative(p.coeffs_ed, th));
  const double dpr = deg2rad(detail::pr_polynomial_derivative(p, detail::pr_argument(th, p.pr_input)) *
                             detail::pr_argument_rate(p.pr_input));
  const double dd = p.d0 * detail::horner_derivative(p.coeffs_dsg, th);

  const double ce = std::cos(ed), se = std::sin(ed);
  const double cp = std::cos(pr), sp = std::sin(pr);
  const Vec3 dir(ce * sp, ce * cp, se);
  const Vec3 ddir_ded(-se * sp, -se * cp, ce);
  const Vec3 ddir_dpr(ce * cp, -ce * sp, 0.0);
  const Vec3 per_degree = dd * dir + d * (ded * ddir_ded + dpr * ddir_dpr);
  return per_degree * (180.0 / kPi);
}

}  // namespace armgeo
