#pragma once

// CSV tables: trajectories, swivel candidates, rhythm curves and mocap traces.
// Numbers are written as %.17g so every double survives a write/read cycle.

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "armgeo/exo_map.hpp"
#include "armgeo/mocap.hpp"
#include "armgeo/planner.hpp"

namespace armgeo {

inline std::string format_double(double v) {
  char buf[32];
  if (v == 0.0) v = 0.0;  // no "-0" in tables
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_double(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && *first == ' ') ++first;
  if (first < last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": not a number: '" + s + "'");
  return v;
}

inline std::string join(const std::vector<std::string>& cols) {
  std::string s;
  for (std::size_t i = 0; i < cols.size(); ++i) s += (i ? "," : "") + cols[i];
  return s;
}

}  // namespace detail

inline const std::vector<std::string>& trajectory_header(bool with_exo) {
  static const std::vector<std::string> base{"time_s", "theta_rad", "eta_rad", "zeta_rad", "phi_rad"};
  static const std::vector<std::string> exo{"time_s",     "theta_rad",  "eta_rad",    "zeta_rad",  "phi_rad",
                                            "exo_q1_rad", "exo_q2_rad", "exo_q3_rad", "exo_q4_rad"};
  return with_exo ? exo : base;
}

inline void write_trajectory_csv(std::ostream& os, const std::vector<TrajectorySample>& traj,
                                 const ExoTrajectory* exo = nullptr) {
  os << detail::join(trajectory_header(exo != nullptr)) << '\n';
  for (std::size_t i = 0; i < traj.size(); ++i) {
    os << format_double(traj[i].t);
    for (int k = 0; k < 4; ++k) os << ',' << format_double(traj[i].q[k]);
    if (exo)
      for (int k = 0; k < 4; ++k) os << ',' << format_double(exo->q_r[i][k]);
    os << '\n';
  }
}

struct TrajectoryTable {
  std::vector<double> t;
  std::vector<Vec4> q;
  std::vector<Vec4> q_exo;  ///< empty without exoskeleton columns
};

inline TrajectoryTable read_trajectory_csv(std::istream& is) {
  TrajectoryTable tab;
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(is, line)) throw Error(ErrorCode::kParse, "line 1: missing header");
  const auto header = detail::split_csv_line(line);
  bool with_exo;
  if (header == trajectory_header(false)) {
    with_exo = false;
  } else if (header == trajectory_header(true)) {
    with_exo = true;
  } else {
    throw Error(ErrorCode::kParse, "line 1: unexpected trajectory header");
  }
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cols = detail::split_csv_line(line);
    if (cols.size() != header.size())
      throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": expected " +
                                         std::to_string(header.size()) + " columns");
    tab.t.push_back(detail::parse_double(cols[0], line_no));
    Vec4 q;
    for (int k = 0; k < 4; ++k) q[k] = detail::parse_double(cols[static_cast<std::size_t>(k) + 1], line_no);
    tab.q.push_back(q);
    if (with_exo) {
      for (int k = 0; k < 4; ++k) q[k] = detail::parse_double(cols[static_cast<std::size_t>(k) + 5], line_no);
      tab.q_exo.push_back(q);
    }
  }
  return tab;
}

inline void write_candidates_csv(std::ostream& os, const std::vector<Candidate>& cands) {
  os << "alpha_rad,feasible,energy,fail_reason\n";
  for (const auto& c : cands) {
    os << format_double(c.alpha) << ',' << (c.feasible ? "true" : "false") << ','
       << (std::isfinite(c.energy) ? format_double(c.energy) : std::string()) << ',' << c.fail_reason << '\n';
  }
}

inline void write_rhythm_csv(std::ostream& os, const RhythmParams& p, double step_deg) {
  if (!(step_deg > 0.0)) throw Error(ErrorCode::kInvalidArgument, "rhythm step must be positive");
  os << "theta_deg,phi_ed_deg,phi_pr_deg,d_sg_m,x_m,y_m,z_m\n";
  const auto n = static_cast<int>(std::floor(180.0 / step_deg + 1e-9));
  for (int i = 0; i <= n; ++i) {
    const GhState s = eval_rhythm(i * step_deg, p);
    os << format_double(s.theta) << ',' << format_double(s.phi_ed) << ',' << format_double(s.phi_pr) << ','
       << format_double(s.d_sg) << ',' << format_double(s.x_sh.x()) << ',' << format_double(s.x_sh.y()) << ','
       << format_double(s.x_sh.z()) << '\n';
  }
}

inline const std::vector<std::string>& mocap_header() {
  static const std::vector<std::string> h{"time_s", "sh_x", "sh_y", "sh_z", "el_x",
                                          "el_y",   "el_z", "wr_x", "wr_y", "wr_z"};
  return h;
}

inline void write_mocap_csv(std::ostream& os, const MocapTrace& trace) {
  os << detail::join(mocap_header()) << '\n';
  for (const auto& f : trace.frames) {
    os << format_double(f.t);
    for (const Vec3* v : {&f.shoulder, &f.elbow, &f.wrist})
      for (int k = 0; k < 3; ++k) os << ',' << format_double((*v)[k]);
    os << '\n';
  }
}

/// Parses a mocap CSV. Errors carry the 1-based line number.
inline MocapTrace read_mocap_csv(std::istream& is) {
  MocapTrace trace;
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(is, line) || detail::split_csv_line(line) != mocap_header())
    throw Error(ErrorCode::kParse, "line 1: expected header " + detail::join(mocap_header()));
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cols = detail::split_csv_line(line);
    if (cols.size() != 10) throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": expected 10 columns");
    double v[10];
    for (std::size_t k = 0; k < 10; ++k) {
      v[k] = detail::parse_double(cols[k], line_no);
      if (!std::isfinite(v[k])) throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": non-finite value");
    }
    MocapFrame f{v[0], Vec3(v[1], v[2], v[3]), Vec3(v[4], v[5], v[6]), Vec3(v[7], v[8], v[9])};
    if (!trace.frames.empty() && !(f.t > trace.frames.back().t))
      throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": time not strictly increasing");
    trace.frames.push_back(f);
  }
  if (trace.frames.empty()) throw Error(ErrorCode::kParse, "mocap file has no data rows");
  return trace;
}

}  // namespace armgeo
