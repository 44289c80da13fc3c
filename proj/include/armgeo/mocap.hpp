#pragma once

// Motion-capture traces, per-frame joint-angle extraction and the r^2
// agreement measure between model and measured angle traces.

#include <algorithm>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "armgeo/kinematics.hpp"

namespace armgeo {

struct MocapFrame {
  double t = 0.0;
  Vec3 shoulder = Vec3::Zero();
  Vec3 elbow = Vec3::Zero();
  Vec3 wrist = Vec3::Zero();
};

struct MocapTrace {
  std::vector<MocapFrame> frames;

  /// Throws InvalidArgument unless time strictly increases and every
  /// coordinate is finite.
  void validate() const {
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const auto& f = frames[i];
      if (!std::isfinite(f.t) || !f.shoulder.allFinite() || !f.elbow.allFinite() || !f.wrist.allFinite())
        throw Error(ErrorCode::kInvalidArgument, "non-finite value in frame " + std::to_string(i));
      if (i > 0 && !(f.t > frames[i - 1].t))
        throw Error(ErrorCode::kInvalidArgument, "time not strictly increasing at frame " + std::to_string(i));
    }
  }
};

inline constexpr double kMarkerLengthTolerance = 0.05;

/// Joint angles per frame using the measured shoulder marker as the GH center.
/// Degenerate frames keep their flags. Throws InconsistentLengths listing the
/// frames whose segment lengths deviate from the geometry by more than 5%.
inline std::vector<JointAngles> mocap_to_angles(const MocapTrace& trace, const ArmGeometry& geom) {
  std::vector<JointAngles> out;
  out.reserve(trace.frames.size());
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < trace.frames.size(); ++i) {
    const auto& f = trace.frames[i];
    const double lu = (f.elbow - f.shoulder).norm();
    const double lf = (f.wrist - f.elbow).norm();
    if (std::abs(lu - geom.l_u) > kMarkerLengthTolerance * geom.l_u ||
        std::abs(lf - geom.l_f) > kMarkerLengthTolerance * geom.l_f)
      bad.push_back(i);
    out.push_back(angles_from_points(f.shoulder, f.elbow, f.wrist));
  }
  if (!bad.empty()) {
    std::string list;
    for (std::size_t k = 0; k < bad.size() && k < 20; ++k) list += (k ? "," : "") + std::to_string(bad[k]);
    if (bad.size() > 20) list += ",...";
    throw Error(ErrorCode::kInconsistentLengths, "segment lengths off by more than 5% at frames " + list);
  }
  return out;
}

/// Natural cubic spline through (x_i, y_i), x strictly increasing.
class CubicSpline {
 public:
  CubicSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw Error(ErrorCode::kInvalidArgument, "spline needs >= 2 matching samples");
    m_.assign(n, 0.0);
    if (n == 2) return;
    // tridiagonal system for second derivatives, natural ends
    std::vector<double> c(n, 0.0), d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
      const double a = h0 / 6.0, b = (h0 + h1) / 3.0, cc = h1 / 6.0;
      const double rhs = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
      const double denom = b - a * c[i - 1];
      c[i] = cc / denom;
      d[i] = (rhs - a * d[i - 1]) / denom;
    }
    for (std::size_t i = n - 1; i-- > 1;) m_[i] = d[i] - c[i] * m_[i + 1];
  }

  double operator()(double xq) const {
    const std::size_t n = x_.size();
    if (xq <= x_.front()) return y_.front();
    if (xq >= x_.back()) return y_.back();
    const auto it = std::upper_bound(x_.begin(), x_.end(), xq);
    const auto i = static_cast<std::size_t>(it - x_.begin()) - 1;
    if (xq == x_[i]) return y_[i];
    if (i + 1 >= n) return y_.back();
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - xq) / h, b = (xq - x_[i]) / h;
    return a * y_[i] + b * y_[i + 1] + ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
  }

 private:
  std::vector<double> x_, y_, m_;
};

/// Resamples a 4-channel trace onto new timestamps by cubic interpolation.
inline std::vector<Vec4> resample(const std::vector<double>& t_src, const std::vector<Vec4>& q_src,
                                  const std::vector<double>& t_dst) {
  std::vector<Vec4> out(t_dst.size());
  for (int k = 0; k < 4; ++k) {
    std::vector<double> y(q_src.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = q_src[i][k];
    const CubicSpline sp(t_src, std::move(y));
    for (std::size_t i = 0; i < t_dst.size(); ++i) out[i][k] = sp(t_dst[i]);
  }
  return out;
}

struct R2Report {
  std::array<std::optional<double>, 4> per_dof;  ///< empty when the reference DoF is constant
  double mean = 0.0;
  std::vector<std::string> notes;
};

/// Coefficient of determination per DoF, 1 - SS_res / SS_tot, and its mean
/// over the DoFs whose reference varies. Throws ZeroVariance if none does.
inline R2Report compute_r2(const std::vector<Vec4>& model, const std::vector<Vec4>& reference) {
  if (model.size() != reference.size() || reference.size() < 2)
    throw Error(ErrorCode::kInvalidArgument, "r2 needs equal-length traces with at least 2 samples");
  R2Report rep;
  const auto n = static_cast<double>(reference.size());
  double sum = 0.0;
  int used = 0;
  for (int k = 0; k < 4; ++k) {
    double mean = 0.0;
    for (const auto& r : reference) mean += r[k];
    mean /= n;
    double ss_tot = 0.0, ss_res = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
      ss_tot += (reference[i][k] - mean) * (reference[i][k] - mean);
      ss_res += (reference[i][k] - model[i][k]) * (reference[i][k] - model[i][k]);
    }
    if (!(ss_tot > 0.0)) {
      rep.notes.push_back(std::string(joint_name(k)) + ": reference has zero variance, excluded from mean");
      continue;
    }
    const double r2 = 1.0 - ss_res / ss_tot;
    rep.per_dof[static_cast<std::size_t>(k)] = r2;
    sum += r2;
    ++used;
  }
  if (used == 0) throw Error(ErrorCode::kZeroVariance, "every reference DoF is constant");
  rep.mean = sum / used;
  return rep;
}

}  // namespace armgeo
