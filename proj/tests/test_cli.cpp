#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <armgeo/config.hpp>
#include <armgeo/io.hpp>

namespace fs = std::filesystem;
using namespace armgeo;

namespace {

const std::string kCli = ARMGEO_CLI_PATH;
const fs::path kConfigs = ARMGEO_CONFIG_DIR;
const fs::path kWork = ARMGEO_WORK_DIR;

struct CliResult {
  int code = -1;
  std::string out;
};

std::string quote(const fs::path& p) { return "\"" + p.string() + "\""; }

CliResult run(const std::string& args, const std::string& stdin_text = "") {
  fs::create_directories(kWork);
  std::string cmd = "\"" + kCli + "\" " + args + " 2>" + quote(kWork / "last_stderr.txt");
  if (!stdin_text.empty()) {
    const fs::path in = kWork / "stdin.json";
    std::ofstream(in) << stdin_text;
    cmd += " <" + quote(in);
  }
  CliResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string last_stderr() { return slurp(kWork / "last_stderr.txt"); }

std::string config_arg() { return "--config " + quote(kConfigs / "subject_default.json"); }

std::string target_of(const ArmConfiguration& q) {
  const Vec3 x = forward_kinematics(q, ArmGeometry{}, RhythmParams{}).x_w;
  return "\"" + format_double(x.x()) + "," + format_double(x.y()) + "," + format_double(x.z()) + "\"";
}

const ArmConfiguration kGoal{deg2rad(80), deg2rad(40), deg2rad(10), deg2rad(70)};

}  // namespace

TEST(Cli, FkThenIkRoundTrip) {
  const ArmConfiguration q{1.1, 0.4, -0.3, 0.9};
  const CliResult fk = run("fk " + config_arg(), to_json(q).dump());
  ASSERT_EQ(fk.code, 0) << last_stderr();
  const CliResult ik = run("ik " + config_arg(), fk.out);
  ASSERT_EQ(ik.code, 0) << last_stderr();
  const ArmConfiguration back = parse_arm_configuration(parse_json(ik.out, "ik"));
  EXPECT_LT((back.vec() - q.vec()).cwiseAbs().maxCoeff(), 1e-9);

  const CliResult measured = run("ik --measured-shoulder", fk.out);
  ASSERT_EQ(measured.code, 0);
  EXPECT_LT((parse_arm_configuration(parse_json(measured.out, "ik")).vec() - q.vec()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Cli, PlanWritesDeterministicOutputs) {
  const std::string base = "plan " + config_arg() + " --start " + quote(kConfigs / "start_rest.json") +
                           " --target " + target_of(kGoal) + " --exo " + quote(kConfigs / "exo" / "identity.json");
  for (const char* stem : {"p1", "p2"}) {
    const CliResult r = run(base + " --out " + quote(kWork / (std::string(stem) + ".csv")) + " --report " +
                      quote(kWork / (std::string(stem) + ".json")) + " --threads 2");
    ASSERT_EQ(r.code, 0) << last_stderr();
  }
  for (const char* ext : {".csv", ".json", ".candidates.csv"})
    EXPECT_EQ(slurp(kWork / (std::string("p1") + ext)), slurp(kWork / (std::string("p2") + ext))) << ext;

  std::ifstream in(kWork / "p1.csv");
  const TrajectoryTable tab = read_trajectory_csv(in);
  ASSERT_EQ(tab.q.size(), 200u);
  ASSERT_EQ(tab.q_exo.size(), 200u);
  // the identity exoskeleton reports the human angles
  for (std::size_t i = 0; i < tab.q.size(); ++i) EXPECT_LT((tab.q_exo[i] - tab.q[i]).cwiseAbs().maxCoeff(), 1e-9);
  const Json rep = parse_json(slurp(kWork / "p1.json"), "report");
  EXPECT_LT(rep.at("geodesic").at("endpoint_residual_rad").get<double>(), 1e-9);
  EXPECT_EQ(slurp(kWork / "p1.candidates.csv").rfind("alpha_rad,feasible,energy,fail_reason\n", 0), 0u);
}

TEST(Cli, PlanWithWristStart) {
  const CliResult r = run("plan " + config_arg() + " --start " + quote(kConfigs / "start_wrist.json") + " --target " +
                    target_of(kGoal) + " --exo " + quote(kConfigs / "exo" / "zxy_shoulder.json") + " --out " +
                    quote(kWork / "pw.csv") + " --candidates " + quote(kWork / "pw_cands.csv"));
  ASSERT_EQ(r.code, 0) << last_stderr();
  EXPECT_TRUE(fs::exists(kWork / "pw_cands.csv"));
}

TEST(Cli, UnreachableTargetExitsTwoWithCandidates) {
  fs::remove(kWork / "far.candidates.csv");
  const CliResult r = run("plan " + config_arg() + " --start " + quote(kConfigs / "start_rest.json") +
                    " --target \"2,0,0\" --out " + quote(kWork / "far.csv"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(last_stderr().find("NoFeasibleAlpha"), std::string::npos) << last_stderr();
  EXPECT_TRUE(fs::exists(kWork / "far.candidates.csv"));
}

TEST(Cli, SchemaErrorsExitOne) {
  const fs::path bad = kWork / "bad.json";
  fs::create_directories(kWork);
  std::ofstream(bad) << "{\n  \"arm\": {\n    \"upper_arm_length_m\": 0.3,\n  }\n}\n";
  CliResult r = run("rhythm --config " + quote(bad));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(last_stderr().find("line 4"), std::string::npos) << last_stderr();

  std::ofstream(bad) << R"({"arm": {"upper_arm": 0.3}})";
  r = run("rhythm --config " + quote(bad));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(last_stderr().find("$.arm.upper_arm"), std::string::npos);

  EXPECT_EQ(run("rhythm --config " + quote(kWork / "missing.json")).code, 1);
  EXPECT_EQ(run("plan --start x.json").code, 1);
  EXPECT_EQ(run("bogus").code, 1);
  EXPECT_EQ(run("plan " + config_arg() + " --start " + quote(kConfigs / "start_rest.json") +
                " --target \"1,2\" --out " + quote(kWork / "x.csv"))
                .code,
            1);
  EXPECT_EQ(run("fk", "{\"theta\": 1}").code, 1);
  EXPECT_EQ(last_stderr().find("terminate"), std::string::npos);
}

TEST(Cli, IkSolverFailureExitsTwo) {
  // wrist farther than the arm can reach from any rhythm shoulder position
  const CliResult r = run("ik", R"({"x_e": [0, 0.3, 0], "x_w": [0, 0.58, 0.3]})");
  EXPECT_NE(r.code, 0);
}

TEST(Cli, RhythmTable) {
  const CliResult r = run("rhythm --step-deg 10");
  ASSERT_EQ(r.code, 0);
  std::istringstream is(r.out);
  std::string line;
  int rows = -1;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 19);
  EXPECT_EQ(r.out.rfind("theta_deg,phi_ed_deg,phi_pr_deg,d_sg_m,x_m,y_m,z_m\n0,0.70779999999999998,0,0.17999999999999999", 0),
            0u);
}

TEST(Cli, SweepCsv) {
  const CliResult r = run("sweep " + config_arg() + " --start " + quote(kConfigs / "start_rest.json") + " --target " +
                    target_of(kGoal) + " --threads 1");
  ASSERT_EQ(r.code, 0) << last_stderr();
  std::istringstream is(r.out);
  std::string line;
  int rows = -1;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 72);
}

TEST(Cli, CompareReport) {
  const fs::path trace = kWork / "cmp_trace.csv";
  CliResult r = run("plan " + config_arg() + " --start " + quote(kConfigs / "start_rest.json") + " --target " +
              target_of(kGoal) + " --out " + quote(kWork / "cmp_plan.csv") + " --mocap-out " + quote(trace));
  ASSERT_EQ(r.code, 0) << last_stderr();
  r = run("compare " + config_arg() + " --mocap " + quote(trace) + " --out " + quote(kWork / "cmp.json") +
          " --overlay " + quote(kWork / "cmp_overlay.csv"));
  ASSERT_EQ(r.code, 0) << last_stderr();
  const Json rep = parse_json(slurp(kWork / "cmp.json"), "cmp");
  EXPECT_NEAR(rep.at("mean_r2").get<double>(), 1.0, 1e-9);
  EXPECT_EQ(rep.at("frames").get<int>(), 200);

  std::ofstream(kWork / "broken.csv") << "time_s,sh_x,sh_y,sh_z,el_x,el_y,el_z,wr_x,wr_y,wr_z\n0,1,2\n";
  r = run("compare --mocap " + quote(kWork / "broken.csv") + " --out " + quote(kWork / "broken.json"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(last_stderr().find("line 2"), std::string::npos);
}
