// armgeo: command-line front end.
//
// Exit codes: 0 success, 1 usage / schema / IO errors, 2 solver failures.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include <CLI11.hpp>

#include <armgeo/config.hpp>
#include <armgeo/io.hpp>

namespace fs = std::filesystem;
using namespace armgeo;

namespace {

constexpr int kExitInput = 1;
constexpr int kExitSolver = 2;

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::kParse:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInconsistentLengths:
    case ErrorCode::kInconsistent:
    case ErrorCode::kZeroVariance:
      return kExitInput;
    default:
      return kExitSolver;
  }
}

// Thrown for file-system problems; maps to exit 1.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path);
  return os;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream os = open_out(path);
  os << text;
  if (!os) throw IoError("write failed: " + path);
}

std::string with_context(const std::string& source, const Error& e) {
  return source + ": " + e.message();
}

Vec3 parse_target(const std::string& s) {
  Vec3 v;
  std::size_t pos = 0;
  for (int k = 0; k < 3; ++k) {
    const std::size_t end = k < 2 ? s.find(',', pos) : s.size();
    if (end == std::string::npos) throw Error(ErrorCode::kParse, "--target: expected \"x,y,z\"");
    std::string tok = s.substr(pos, end - pos);
    tok.erase(0, tok.find_first_not_of(' '));
    tok.erase(tok.find_last_not_of(' ') + 1);
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v[k]);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || !std::isfinite(v[k]))
      throw Error(ErrorCode::kParse, "--target: bad number '" + tok + "'");
    pos = end + 1;
  }
  return v;
}

SubjectConfig load_config(const std::string& path) {
  if (path.empty()) return parse_subject_config(Json::object());
  try {
    return parse_subject_config(load_json_file(path));
  } catch (const Error& e) {
    throw Error(e.code(), with_context(path, e));
  }
}

ArmConfiguration load_start(const std::string& path, const SubjectConfig& cfg) {
  const Json j = load_json_file(path);
  try {
    return parse_start(j, cfg);
  } catch (const Error& e) {
    throw Error(e.code(), with_context(path, e));
  }
}

std::string read_stdin() {
  return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
}

std::string candidates_path_for(const std::string& out) {
  fs::path p(out);
  return (p.parent_path() / (p.stem().string() + ".candidates.csv")).string();
}

void write_candidates(const std::string& path, const std::vector<Candidate>& cands) {
  std::ostringstream ss;
  write_candidates_csv(ss, cands);
  write_file(path, ss.str());
}

Json candidate_summary(const std::vector<Candidate>& cands) {
  int grid = 0, feasible = 0, solved = 0, refined = 0;
  for (const auto& c : cands) {
    grid += !c.refinement;
    feasible += c.feasible;
    solved += c.solved();
    refined += c.refinement;
  }
  return Json{{"evaluated", cands.size()}, {"grid", grid}, {"feasible", feasible}, {"solved", solved},
              {"refinement", refined}};
}

// ---- subcommands ----

struct PlanArgs {
  std::string config, start, target, exo, out, candidates, report, mocap_out;
  double noise_mm = 0.0;
  std::uint64_t seed = 1;
  int threads = -1;
};

int run_plan(const PlanArgs& a) {
  SubjectConfig cfg = load_config(a.config);
  if (a.threads >= 0) cfg.options.threads = static_cast<unsigned>(a.threads);
  PlanRequest req = cfg.request_defaults;
  req.q_start = load_start(a.start, cfg);
  req.x_f = parse_target(a.target);
  std::optional<ExoKinematicDescription> exo;
  if (!a.exo.empty()) {
    try {
      exo = parse_exo_description(load_json_file(a.exo));
    } catch (const Error& e) {
      throw Error(e.code(), with_context(a.exo, e));
    }
  }
  const std::string cand_path = a.candidates.empty() ? candidates_path_for(a.out) : a.candidates;

  PlanResult res;
  try {
    res = cfg.planner().plan(req);
  } catch (const PlanError& e) {
    write_candidates(cand_path, e.candidates());
    throw;
  }
  write_candidates(cand_path, res.candidates);

  std::optional<ExoTrajectory> exo_traj;
  if (exo) exo_traj = map_trajectory(res.trajectory, *exo);
  {
    std::ostringstream ss;
    write_trajectory_csv(ss, res.trajectory, exo_traj ? &*exo_traj : nullptr);
    write_file(a.out, ss.str());
  }

  if (!a.mocap_out.empty()) {
    std::ostringstream ss;
    write_mocap_csv(ss, synthesize_mocap(res.trajectory, cfg.geom, cfg.rhythm, a.noise_mm * 1e-3, a.seed));
    write_file(a.mocap_out, ss.str());
  }

  if (!a.report.empty()) {
    const auto& g = res.geodesic;
    Json rep{{"alpha_star_rad", res.alpha_star.alpha},
             {"energy_star", res.energy_star},
             {"q_start", to_json(req.q_start)},
             {"q_final", to_json(res.q_final)},
             {"target_m", vec_json(req.x_f)},
             {"geodesic",
              {{"length", g.length},
               {"energy", g.energy},
               {"endpoint_residual_rad", g.endpoint_residual},
               {"richardson_error_rad", g.richardson_error},
               {"newton_iterations", g.newton_iterations},
               {"used_homotopy", g.used_homotopy},
               {"used_continuation", g.used_continuation}}},
             {"candidates", candidate_summary(res.candidates)},
             {"duration_s", req.duration},
             {"n_samples", req.n_samples}};
    if (exo_traj) rep["exo"] = {{"name", exo->name}, {"max_jump_rad", exo_traj->max_jump}};
    write_file(a.report, rep.dump(2) + "\n");
  }
  return 0;
}

struct SweepArgs {
  std::string config, start, target, out;
  int threads = -1;
};

int run_sweep(const SweepArgs& a) {
  SubjectConfig cfg = load_config(a.config);
  if (a.threads >= 0) cfg.options.threads = static_cast<unsigned>(a.threads);
  PlanRequest req = cfg.request_defaults;
  req.q_start = load_start(a.start, cfg);
  req.x_f = parse_target(a.target);
  std::vector<Candidate> cands;
  for (const auto& ev : cfg.planner().sweep(req)) cands.push_back(ev.candidate);
  std::ostringstream ss;
  write_candidates_csv(ss, cands);
  if (a.out.empty()) {
    std::cout << ss.str();
  } else {
    write_file(a.out, ss.str());
  }
  return 0;
}

int run_rhythm(const std::string& config, double step, const std::string& out) {
  const SubjectConfig cfg = load_config(config);
  std::ostringstream ss;
  write_rhythm_csv(ss, cfg.rhythm, step);
  if (out.empty()) {
    std::cout << ss.str();
  } else {
    write_file(out, ss.str());
  }
  return 0;
}

int run_fk(const std::string& config) {
  const SubjectConfig cfg = load_config(config);
  const ArmConfiguration q = [&] {
    try {
      return parse_arm_configuration(parse_json(read_stdin(), "<stdin>"));
    } catch (const Error& e) {
      throw Error(e.code(), with_context("<stdin>", e));
    }
  }();
  std::cout << to_json(forward_kinematics(q, cfg.geom, cfg.rhythm)).dump(2) << '\n';
  return 0;
}

int run_ik(const std::string& config, bool measured_shoulder) {
  const SubjectConfig cfg = load_config(config);
  const CartesianArmPose p = [&] {
    try {
      return parse_pose(parse_json(read_stdin(), "<stdin>"));
    } catch (const Error& e) {
      throw Error(e.code(), with_context("<stdin>", e));
    }
  }();
  Json out;
  if (measured_shoulder) {
    const JointAngles ja = angles_from_points(p.x_sh, p.x_e, p.x_w);
    out = to_json(ja.q);
    out["eta_degenerate"] = ja.eta_degenerate;
    out["zeta_degenerate"] = ja.zeta_degenerate;
  } else {
    const IkSolution s = inverse_kinematics(p.x_e, p.x_w, cfg.geom, cfg.rhythm);
    out = to_json(s.q);
    out["eta_degenerate"] = s.eta_degenerate;
    out["zeta_degenerate"] = s.zeta_degenerate;
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

struct CompareArgs {
  std::string config, mocap, out, overlay;
  int threads = -1;
};

int run_compare(const CompareArgs& a) {
  SubjectConfig cfg = load_config(a.config);
  if (a.threads >= 0) cfg.options.threads = static_cast<unsigned>(a.threads);
  std::ifstream is(a.mocap, std::ios::binary);
  if (!is) throw IoError("cannot read " + a.mocap);
  MocapTrace trace;
  try {
    trace = read_mocap_csv(is);
  } catch (const Error& e) {
    throw Error(e.code(), with_context(a.mocap, e));
  }
  const CompareResult cmp = compare_with_trace(trace, cfg);

  Json rep = to_json(cmp.r2);
  rep["frames"] = trace.frames.size();
  rep["alpha_star_rad"] = cmp.plan.alpha_star.alpha;
  rep["energy_star"] = cmp.plan.energy_star;
  rep["q_start"] = to_json(ArmConfiguration::from(cmp.reference.front()));
  rep["q_final"] = to_json(cmp.plan.q_final);
  write_file(a.out, rep.dump(2) + "\n");

  if (!a.overlay.empty()) {
    std::ostringstream ss;
    ss << "time_s";
    for (int k = 0; k < 4; ++k) ss << ",model_" << joint_name(k) << "_rad,mocap_" << joint_name(k) << "_rad";
    ss << '\n';
    for (std::size_t i = 0; i < cmp.t.size(); ++i) {
      ss << format_double(cmp.t[i]);
      for (int k = 0; k < 4; ++k) ss << ',' << format_double(cmp.model[i][k]) << ',' << format_double(cmp.reference[i][k]);
      ss << '\n';
    }
    write_file(a.overlay, ss.str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Human-like reference trajectories for a 4-DoF arm"};
  app.require_subcommand(1);

  PlanArgs plan;
  auto* plan_cmd = app.add_subcommand("plan", "plan a minimum-energy reach and write the timed trajectory");
  plan_cmd->add_option("--config", plan.config, "subject configuration JSON");
  plan_cmd->add_option("--start", plan.start, "start configuration JSON")->required();
  plan_cmd->add_option("--target", plan.target, "wrist target \"x,y,z\" in meters")->required();
  plan_cmd->add_option("--exo", plan.exo, "exoskeleton description JSON");
  plan_cmd->add_option("--out", plan.out, "trajectory CSV")->required();
  plan_cmd->add_option("--candidates", plan.candidates, "candidate table CSV (default <out>.candidates.csv)");
  plan_cmd->add_option("--report", plan.report, "summary JSON");
  plan_cmd->add_option("--mocap-out", plan.mocap_out, "also write a synthetic marker trace of the plan");
  plan_cmd->add_option("--noise-mm", plan.noise_mm, "marker noise sigma for --mocap-out, mm")->check(CLI::NonNegativeNumber);
  plan_cmd->add_option("--seed", plan.seed, "noise seed for --mocap-out");
  plan_cmd->add_option("--threads", plan.threads, "worker threads for the swivel grid (0 = all cores)")
      ->check(CLI::NonNegativeNumber);

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "energy over the swivel-angle grid");
  sweep_cmd->add_option("--config", sweep.config, "subject configuration JSON");
  sweep_cmd->add_option("--start", sweep.start, "start configuration JSON")->required();
  sweep_cmd->add_option("--target", sweep.target, "wrist target \"x,y,z\" in meters")->required();
  sweep_cmd->add_option("--out", sweep.out, "CSV path (default stdout)");
  sweep_cmd->add_option("--threads", sweep.threads, "worker threads")->check(CLI::NonNegativeNumber);

  std::string rhythm_config, rhythm_out;
  double rhythm_step = 1.0;
  auto* rhythm_cmd = app.add_subcommand("rhythm", "tabulate the shoulder rhythm over 0..180 deg");
  rhythm_cmd->add_option("--config", rhythm_config, "subject configuration JSON");
  rhythm_cmd->add_option("--step-deg", rhythm_step, "elevation step")->check(CLI::PositiveNumber);
  rhythm_cmd->add_option("--out", rhythm_out, "CSV path (default stdout)");

  std::string fk_config;
  auto* fk_cmd = app.add_subcommand("fk", "configuration JSON on stdin -> pose JSON on stdout");
  fk_cmd->add_option("--config", fk_config, "subject configuration JSON");

  std::string ik_config;
  bool ik_measured = false;
  auto* ik_cmd = app.add_subcommand("ik", "pose JSON on stdin -> configuration JSON on stdout");
  ik_cmd->add_option("--config", ik_config, "subject configuration JSON");
  ik_cmd->add_flag("--measured-shoulder", ik_measured, "use the given x_sh instead of the rhythm model");

  CompareArgs cmp;
  auto* cmp_cmd = app.add_subcommand("compare", "plan through a recorded trace and score joint-angle r^2");
  cmp_cmd->add_option("--config", cmp.config, "subject configuration JSON");
  cmp_cmd->add_option("--mocap", cmp.mocap, "marker trace CSV")->required();
  cmp_cmd->add_option("--out", cmp.out, "report JSON")->required();
  cmp_cmd->add_option("--overlay", cmp.overlay, "model and measured angle traces CSV");
  cmp_cmd->add_option("--threads", cmp.threads, "worker threads")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*plan_cmd) return run_plan(plan);
    if (*sweep_cmd) return run_sweep(sweep);
    if (*rhythm_cmd) return run_rhythm(rhythm_config, rhythm_step, rhythm_out);
    if (*fk_cmd) return run_fk(fk_config);
    if (*ik_cmd) return run_ik(ik_config, ik_measured);
    if (*cmp_cmd) return run_compare(cmp);
  } catch (const Error& e) {
    std::cerr << "armgeo: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const IoError& e) {
    std::cerr << "armgeo: IOError: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "armgeo: " << e.what() << '\n';
    return kExitSolver;
  }
  return kExitInput;
}
