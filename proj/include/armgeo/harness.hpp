#pragma once

// Model-versus-experiment workflow: plan between the first and last wrist
// positions of a recorded trace, resample onto its timestamps and score r^2.

#include <random>

#include "armgeo/mocap.hpp"
#include "armgeo/planner.hpp"

namespace armgeo {

struct SubjectConfig {
  ArmGeometry geom;
  LinkParams links = LinkParams::anthropometric(ArmGeometry{});
  RhythmParams rhythm;
  PlannerOptions options;
  PlanRequest request_defaults;  ///< grid step, refinement tolerance, duration, samples

  void validate() const {
    geom.validate();
    links.validate();
    rhythm.validate();
    request_defaults.validate();
  }

  Planner planner() const { return Planner(geom, links, rhythm, options); }
};

/// Marker trace of a planned trajectory: forward kinematics per sample with
/// the rhythm-driven shoulder, plus optional isotropic Gaussian marker noise.
inline MocapTrace synthesize_mocap(const std::vector<TrajectorySample>& traj, const ArmGeometry& geom,
                                   const RhythmParams& rhythm, double noise_sigma = 0.0, std::uint64_t seed = 0) {
  MocapTrace trace;
  trace.frames.reserve(traj.size());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_sigma > 0.0 ? noise_sigma : 1.0);
  auto jitter = [&](Vec3 v) {
    if (noise_sigma > 0.0)
      for (int k = 0; k < 3; ++k) v[k] += noise(rng);
    return v;
  };
  for (const auto& s : traj) {
    const CartesianArmPose p = forward_kinematics(ArmConfiguration::from(s.q), geom, rhythm);
    MocapFrame f;
    f.t = s.t;
    f.shoulder = jitter(p.x_sh);
    f.elbow = jitter(p.x_e);
    f.wrist = jitter(p.x_w);
    trace.frames.push_back(f);
  }
  return trace;
}

struct CompareResult {
  R2Report r2;
  PlanResult plan;
  std::vector<double> t;
  std::vector<Vec4> reference;  ///< angles extracted from the trace
  std::vector<Vec4> model;      ///< planned angles resampled onto the trace timestamps
};

/// Plans from the trace's first frame (angles from its markers) to its last
/// wrist position over the trace's duration, then compares joint angles.
inline CompareResult compare_with_trace(const MocapTrace& trace, const SubjectConfig& cfg) {
  trace.validate();
  if (trace.frames.size() < 2) throw Error(ErrorCode::kInvalidArgument, "trace needs at least 2 frames");
  const std::vector<JointAngles> angles = mocap_to_angles(trace, cfg.geom);

  PlanRequest req = cfg.request_defaults;
  req.q_start = angles.front().q;
  req.x_f = trace.frames.back().wrist;
  const double t0 = trace.frames.front().t;
  req.duration = trace.frames.back().t - t0;
  req.n_samples = static_cast<int>(trace.frames.size());

  CompareResult res;
  res.plan = cfg.planner().plan(req);

  std::vector<double> t_model;
  std::vector<Vec4> q_model;
  for (const auto& s : res.plan.trajectory) {
    t_model.push_back(s.t + t0);
    q_model.push_back(s.q);
  }
  for (std::size_t i = 0; i < trace.frames.size(); ++i) {
    res.t.push_back(trace.frames[i].t);
    res.reference.push_back(angles[i].q.vec());
  }
  res.model = resample(t_model, q_model, res.t);
  res.r2 = compute_r2(res.model, res.reference);
  return res;
}

}  // namespace armgeo
