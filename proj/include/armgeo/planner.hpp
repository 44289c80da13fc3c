#pragma once

// Reference-trajectory planner: sweeps the swivel-angle family of final
// configurations, solves one geodesic per candidate, keeps the minimum-energy
// member (grid search plus golden-section refinement) and times the winner
// with a minimum-jerk profile.

#include <algorithm>
#include <atomic>
#include <optional>
#include <thread>

#include "armgeo/dynamics.hpp"
#include "armgeo/geodesic.hpp"
#include "armgeo/kinematics.hpp"

namespace armgeo {

struct PlanRequest {
  ArmConfiguration q_start;
  Vec3 x_f = Vec3::Zero();
  double alpha_grid_step = deg2rad(5.0);
  double alpha_refine_tol = deg2rad(0.1);
  double duration = 2.0;  ///< s
  int n_samples = 200;

  void validate() const {
    if (!(duration > 0.0)) throw Error(ErrorCode::kInvalidArgument, "duration must be positive");
    if (!(alpha_refine_tol > 0.0) || !(alpha_grid_step > alpha_refine_tol))
      throw Error(ErrorCode::kInvalidArgument, "need alpha_grid_step > alpha_refine_tol > 0");
    if (n_samples < 2) throw Error(ErrorCode::kInvalidArgument, "n_samples must be at least 2");
    if (!q_start.finite() || !x_f.allFinite()) throw Error(ErrorCode::kInvalidArgument, "non-finite request");
  }
};

struct PlannerOptions {
  int n_steps = 200;
  double tol_endpoint = 1e-9;
  int max_newton = 50;
  double min_sin_theta = 0.05;  ///< keeps both boundary values off the metric singularity
  bool couple_shoulder = false;
  unsigned threads = 0;  ///< 0 = hardware concurrency
};

struct Candidate {
  double alpha = 0.0;
  bool feasible = false;
  double energy = std::numeric_limits<double>::quiet_NaN();
  std::string fail_reason;
  bool refinement = false;  ///< produced by the golden-section stage
  bool start_swivel = false;

  bool solved() const { return feasible && std::isfinite(energy); }
};

struct TrajectorySample {
  double t = 0.0;
  Vec4 q = Vec4::Zero();
  Vec4 qd = Vec4::Zero();
  Vec4 qdd = Vec4::Zero();
};

struct PlanResult {
  SwivelAngle alpha_star;
  ArmConfiguration q_final;
  GeodesicPath geodesic;
  std::vector<TrajectorySample> trajectory;
  double energy_star = 0.0;
  std::vector<Candidate> candidates;
};

class PlanError : public Error {
 public:
  PlanError(ErrorCode code, const std::string& what, std::vector<Candidate> candidates)
      : Error(code, what), candidates_(std::move(candidates)) {}
  const std::vector<Candidate>& candidates() const noexcept { return candidates_; }

 private:
  std::vector<Candidate> candidates_;
};

/// Quintic minimum-jerk progress s(tau) and its first two derivatives.
struct MinJerk {
  static double s(double tau) { return tau * tau * tau * (10.0 + tau * (-15.0 + 6.0 * tau)); }
  static double ds(double tau) { return tau * tau * (30.0 + tau * (-60.0 + 30.0 * tau)); }
  static double dds(double tau) { return tau * (60.0 + tau * (-180.0 + 120.0 * tau)); }
};

namespace detail {

struct PathPoint {
  Vec4 q, qd, qdd;
};

// Cubic Hermite interpolation of the uniform lambda grid: q from (q, q'),
// q' from (q', q''), q'' linear.
inline PathPoint sample_path(const GeodesicPath& path, double s) {
  const auto n = static_cast<int>(path.qs.size()) - 1;
  if (n <= 0) return {path.qs.front(), path.qdots.front(), path.qddots.front()};
  const double h = 1.0 / n;
  const double pos = std::clamp(s, 0.0, 1.0) * n;
  int i = std::min(static_cast<int>(std::floor(pos)), n - 1);
  const double x = pos - i;
  const auto a = static_cast<std::size_t>(i), b = a + 1;
  const double h00 = (1.0 + 2.0 * x) * (1.0 - x) * (1.0 - x);
  const double h10 = x * (1.0 - x) * (1.0 - x);
  const double h01 = x * x * (3.0 - 2.0 * x);
  const double h11 = x * x * (x - 1.0);
  PathPoint p;
  p.q = h00 * path.qs[a] + h10 * h * path.qdots[a] + h01 * path.qs[b] + h11 * h * path.qdots[b];
  p.qd = h00 * path.qdots[a] + h10 * h * path.qddots[a] + h01 * path.qdots[b] + h11 * h * path.qddots[b];
  p.qdd = (1.0 - x) * path.qddots[a] + x * path.qddots[b];
  return p;
}

}  // namespace detail

/// Times a geodesic with the minimum-jerk profile s = 10 tau^3 - 15 tau^4 + 6 tau^5.
inline std::vector<TrajectorySample> time_parameterize(const GeodesicPath& path, double duration, int n_samples) {
  if (!(duration > 0.0) || n_samples < 2)
    throw Error(ErrorCode::kInvalidArgument, "time_parameterize needs duration > 0 and n_samples >= 2");
  std::vector<TrajectorySample> out(static_cast<std::size_t>(n_samples));
  const double inv_t = 1.0 / duration;
  for (int k = 0; k < n_samples; ++k) {
    const double tau = (k == n_samples - 1) ? 1.0 : static_cast<double>(k) / (n_samples - 1);
    const double s = MinJerk::s(tau), ds = MinJerk::ds(tau), dds = MinJerk::dds(tau);
    const detail::PathPoint p = detail::sample_path(path, s);
    auto& smp = out[static_cast<std::size_t>(k)];
    smp.t = tau * duration;
    smp.q = p.q;
    smp.qd = p.qd * ds * inv_t;
    smp.qdd = p.qdd * ds * ds * inv_t * inv_t + p.qd * dds * inv_t * inv_t;
  }
  return out;
}

/// Evenly spaced swivel angles covering (-pi, pi].
inline std::vector<double> alpha_grid(double step) {
  const int n = std::max(2, static_cast<int>(std::lround(2.0 * kPi / step)));
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) g[static_cast<std::size_t>(k)] = (2 * (k + 1) - n) * (kPi / n);
  return g;
}

/// True when `a` beats `b` under the selection order: lower energy, then
/// (within 1e-9 relative) smaller |alpha|, then smaller alpha.
inline bool better_candidate(const Candidate& a, const Candidate& b) {
  if (!a.solved()) return false;
  if (!b.solved()) return true;
  const double scale = std::max({std::abs(a.energy), std::abs(b.energy), 1e-300});
  if (std::abs(a.energy - b.energy) > 1e-9 * scale) return a.energy < b.energy;
  if (std::abs(a.alpha) != std::abs(b.alpha)) return std::abs(a.alpha) < std::abs(b.alpha);
  return a.alpha < b.alpha;
}

class Planner {
 public:
  Planner(ArmGeometry geom, RhythmParams rhythm, Metric metric, PlannerOptions opts = {})
      : geom_(std::move(geom)), rhythm_(std::move(rhythm)), metric_(std::move(metric)), opts_(opts) {}

  Planner(ArmGeometry geom, const LinkParams& links, RhythmParams rhythm, PlannerOptions opts = {})
      : Planner(geom, rhythm, arm_metric(links, geom, rhythm, opts.couple_shoulder), opts) {}

  struct Evaluation {
    Candidate candidate;
    std::optional<FinalConfiguration> final_config;
    std::optional<GeodesicPath> path;
  };

  /// Final configuration and geodesic for one swivel angle. Never throws:
  /// failures land in the candidate's fail_reason.
  Evaluation evaluate(const ArmConfiguration& q_start, const Vec3& x_f, double alpha) const {
    Evaluation ev;
    ev.candidate.alpha = alpha;
    try {
      ev.final_config = final_configuration(x_f, {alpha}, geom_, rhythm_);
    } catch (const Error& e) {
      ev.candidate.fail_reason = to_string(e.code());
      return ev;
    }
    if (std::sin(ev.final_config->q.theta) < opts_.min_sin_theta) {
      ev.candidate.fail_reason = "ElevationSingular";
      return ev;
    }
    ev.candidate.feasible = true;
    GeodesicProblem pb;
    pb.metric = metric_;
    pb.q0 = q_start.vec();
    pb.q1 = ev.final_config->q.vec();
    pb.n_steps = opts_.n_steps;
    pb.tol_endpoint = opts_.tol_endpoint;
    pb.max_newton = opts_.max_newton;
    try {
      ev.path = solve_bvp(pb);
      ev.candidate.energy = ev.path->energy;
    } catch (const Error& e) {
      ev.candidate.fail_reason = to_string(e.code());
    }
    return ev;
  }

  /// Coarse sweep over the alpha grid, solved concurrently.
  std::vector<Evaluation> sweep(const PlanRequest& req) const {
    check_start(req);
    const std::vector<double> grid = alpha_grid(req.alpha_grid_step);
    return evaluate_all(req, grid);
  }

  PlanResult plan(const PlanRequest& req) const {
    req.validate();
    check_start(req);

    std::vector<double> alphas = alpha_grid(req.alpha_grid_step);
    // the start configuration's own swivel is always a candidate
    const CartesianArmPose start_pose = forward_kinematics(req.q_start, geom_, rhythm_);
    const double start_alpha = swivel_angle_of_target(start_pose, req.x_f);
    alphas.push_back(start_alpha);
    std::vector<Evaluation> evals = evaluate_all(req, alphas);
    evals.back().candidate.start_swivel = true;

    const std::size_t n_grid = alphas.size() - 1;
    if (std::none_of(evals.begin(), evals.begin() + static_cast<std::ptrdiff_t>(n_grid),
                     [](const Evaluation& e) { return e.candidate.feasible; }) &&
        !evals.back().candidate.feasible)
      throw PlanError(ErrorCode::kNoFeasibleAlpha, "no swivel angle gives a feasible final configuration",
                      candidates_of(evals));

    std::size_t best = pick_best(evals);
    if (!evals[best].candidate.solved())
      throw PlanError(ErrorCode::kAllSolvesFailed, "no geodesic converged", candidates_of(evals));

    refine(req, evals, best, n_grid);
    best = pick_best(evals);

    Evaluation& win = evals[best];
    PlanResult res;
    res.alpha_star = {win.candidate.alpha};
    res.q_final = win.final_config->q;
    res.geodesic = std::move(*win.path);
    res.energy_star = win.candidate.energy;
    res.trajectory = time_parameterize(res.geodesic, req.duration, req.n_samples);
    res.candidates = candidates_of(evals);
    return res;
  }

  const ArmGeometry& geometry() const { return geom_; }
  const RhythmParams& rhythm() const { return rhythm_; }
  const Metric& metric() const { return metric_; }
  const PlannerOptions& options() const { return opts_; }

 private:
  void check_start(const PlanRequest& req) const {
    if (!check_limits(req.q_start, geom_).feasible)
      throw Error(ErrorCode::kLimitViolation, "start configuration outside joint limits");
    if (std::sin(req.q_start.theta) < opts_.min_sin_theta)
      throw Error(ErrorCode::kInvalidArgument, "start elevation too close to the vertical");
  }

  // Swivel of the start elbow about the axis from the start shoulder to x_f.
  static double swivel_angle_of_target(const CartesianArmPose& pose, const Vec3& x_f) {
    if ((x_f - pose.x_sh).norm() < 1e-12) return 0.0;
    return swivel_angle_of(pose.x_sh, pose.x_e, x_f).alpha;
  }

  std::vector<Evaluation> evaluate_all(const PlanRequest& req, const std::vector<double>& alphas) const {
    std::vector<Evaluation> out(alphas.size());
    unsigned n_threads = opts_.threads ? opts_.threads : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(alphas.size()));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < alphas.size(); i = next++) out[i] = evaluate(req.q_start, req.x_f, alphas[i]);
    };
    if (n_threads <= 1) {
      worker();
    } else {
      std::vector<std::jthread> pool;
      pool.reserve(n_threads);
      for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }
    return out;
  }

  static std::size_t pick_best(const std::vector<Evaluation>& evals) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < evals.size(); ++i)
      if (better_candidate(evals[i].candidate, evals[best].candidate)) best = i;
    return best;
  }

  static std::vector<Candidate> candidates_of(const std::vector<Evaluation>& evals) {
    std::vector<Candidate> c;
    c.reserve(evals.size());
    for (const auto& e : evals) c.push_back(e.candidate);
    return c;
  }

  // Golden-section search on the bracket formed by the winner's grid
  // neighbours. Evaluations are appended to `evals`.
  void refine(const PlanRequest& req, std::vector<Evaluation>& evals, std::size_t best, std::size_t n_grid) const {
    const double step = 2.0 * kPi / static_cast<double>(n_grid);
    const double center = evals[best].candidate.alpha;
    double lo = center - step, hi = center + step;

    auto energy_at = [&](double a) {
      Evaluation ev = evaluate(req.q_start, req.x_f, wrap_angle(a));
      ev.candidate.refinement = true;
      const double e = ev.candidate.solved() ? ev.candidate.energy : std::numeric_limits<double>::infinity();
      evals.push_back(std::move(ev));
      return e;
    };

    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - inv_phi * (hi - lo);
    double d = lo + inv_phi * (hi - lo);
    double fc = energy_at(c), fd = energy_at(d);
    while (hi - lo > req.alpha_refine_tol) {
      if (fc <= fd) {
        hi = d;
        d = c;
        fd = fc;
        c = hi - inv_phi * (hi - lo);
        fc = energy_at(c);
      } else {
        lo = c;
        c = d;
        fc = fd;
        d = lo + inv_phi * (hi - lo);
        fd = energy_at(d);
      }
    }
  }

  ArmGeometry geom_;
  RhythmParams rhythm_;
  Metric metric_;
  PlannerOptions opts_;
};

}  // namespace armgeo
