#pragma once

// JSON documents: subject configuration, arm configurations and poses,
// exoskeleton descriptions. Readers reject unknown keys and report the JSON
// path of the offending entry; parse errors report a line number.

#include <fstream>
#include <initializer_list>
#include <set>
#include <string>

#include <json.hpp>

#include "armgeo/exo_map.hpp"
#include "armgeo/harness.hpp"

namespace armgeo {

using Json = nlohmann::json;

namespace detail {

class JsonReader {
 public:
  JsonReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!ok.count(it.key())) throw Error(ErrorCode::kParse, path_ + "." + it.key() + ": unknown key");
  }

  bool has(const char* key) const { return j_.contains(key); }

  double number(const char* key, double fallback) const {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_number()) fail_at(key, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail_at(key, "expected a finite number");
    return d;
  }

  double required_number(const char* key) const {
    if (!has(key)) fail_at(key, "missing required number");
    return number(key, 0.0);
  }

  int integer(const char* key, int fallback) const {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_number_integer()) fail_at(key, "expected an integer");
    return v.get<int>();
  }

  bool boolean(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_boolean()) fail_at(key, "expected true or false");
    return v.get<bool>();
  }

  std::string string(const char* key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_string()) fail_at(key, "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const char* key, std::size_t n) const {
    const Json& v = j_.at(key);
    if (!v.is_array() || v.size() != n) fail_at(key, "expected an array of " + std::to_string(n) + " numbers");
    std::vector<double> out;
    for (const Json& e : v) {
      if (!e.is_number()) fail_at(key, "expected numbers");
      out.push_back(e.get<double>());
      if (!std::isfinite(out.back())) fail_at(key, "expected finite numbers");
    }
    return out;
  }

  Vec3 vec3(const char* key, const Vec3& fallback) const {
    if (!has(key)) return fallback;
    const auto v = numbers(key, 3);
    return {v[0], v[1], v[2]};
  }

  JsonReader child(const char* key) const { return JsonReader(j_.at(key), path_ + "." + key); }
  const Json& raw(const char* key) const { return j_.at(key); }
  const std::string& path() const { return path_; }

  [[noreturn]] void fail(const std::string& msg) const { throw Error(ErrorCode::kParse, path_ + ": " + msg); }
  [[noreturn]] void fail_at(const char* key, const std::string& msg) const {
    throw Error(ErrorCode::kParse, path_ + "." + key + ": " + msg);
  }

 private:
  const Json& j_;
  std::string path_;
};

inline Interval interval_deg(const JsonReader& r, const char* key, Interval fallback_rad) {
  if (!r.has(key)) return fallback_rad;
  const auto v = r.numbers(key, 2);
  return {deg2rad(v[0]), deg2rad(v[1])};
}

}  // namespace detail

/// Parses JSON text; syntax errors become ParseError with a line number.
inline Json parse_json(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw Error(ErrorCode::kParse, source + ": line " + std::to_string(line) + ": malformed JSON");
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kParse, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Json load_json_file(const std::string& path) { return parse_json(read_text_file(path), path); }

inline RigidLink parse_link(const detail::JsonReader& r, const RigidLink& fallback) {
  r.allow({"mass_kg", "com_ratio", "inertia_kgm2"});
  RigidLink l = fallback;
  l.mass = r.number("mass_kg", fallback.mass);
  l.com_ratio = r.number("com_ratio", fallback.com_ratio);
  l.inertia = r.vec3("inertia_kgm2", fallback.inertia);
  return l;
}

/// Subject configuration. Every field is optional; omitted ones take the
/// library defaults. Link inertias default to the rod model for the
/// configured lengths and masses.
inline SubjectConfig parse_subject_config(const Json& j) {
  SubjectConfig cfg;
  const detail::JsonReader root(j, "$");
  root.allow({"arm", "links", "rhythm", "metric", "solver", "planner"});

  if (root.has("arm")) {
    const auto r = root.child("arm");
    r.allow({"upper_arm_length_m", "forearm_length_m", "limits_deg"});
    cfg.geom.l_u = r.number("upper_arm_length_m", cfg.geom.l_u);
    cfg.geom.l_f = r.number("forearm_length_m", cfg.geom.l_f);
    if (r.has("limits_deg")) {
      const auto lim = r.child("limits_deg");
      lim.allow({"theta", "eta", "zeta", "phi"});
      const char* names[] = {"theta", "eta", "zeta", "phi"};
      for (std::size_t k = 0; k < 4; ++k) cfg.geom.limits[k] = detail::interval_deg(lim, names[k], cfg.geom.limits[k]);
    }
  }

  {
    RigidLink upper_default = RigidLink::rod(2.0, 0.436, cfg.geom.l_u);
    RigidLink fore_default = RigidLink::rod(1.7, 0.530, cfg.geom.l_f);
    if (root.has("links")) {
      const auto r = root.child("links");
      r.allow({"upper", "forearm"});
      auto with_mass = [](RigidLink base, const detail::JsonReader& lr, double length) {
        // rod inertia follows a mass override unless inertia is given explicitly
        const double m = lr.number("mass_kg", base.mass);
        if (!lr.has("inertia_kgm2")) base = RigidLink::rod(m, base.com_ratio, length);
        return base;
      };
      if (r.has("upper")) {
        const auto lr = r.child("upper");
        upper_default = parse_link(lr, with_mass(upper_default, lr, cfg.geom.l_u));
      }
      if (r.has("forearm")) {
        const auto lr = r.child("forearm");
        fore_default = parse_link(lr, with_mass(fore_default, lr, cfg.geom.l_f));
      }
    }
    cfg.links = {upper_default, fore_default};
  }

  if (root.has("rhythm")) {
    const auto r = root.child("rhythm");
    r.allow({"d0_m", "origin_m", "protraction_input", "coeffs_ed", "coeffs_pr", "coeffs_dsg"});
    cfg.rhythm.d0 = r.number("d0_m", cfg.rhythm.d0);
    cfg.rhythm.origin = r.vec3("origin_m", cfg.rhythm.origin);
    const std::string unit = r.string("protraction_input", "normalized");
    if (unit == "normalized") {
      cfg.rhythm.pr_input = ProtractionInput::kNormalized;
    } else if (unit == "degrees") {
      cfg.rhythm.pr_input = ProtractionInput::kDegrees;
    } else if (unit == "radians") {
      cfg.rhythm.pr_input = ProtractionInput::kRadians;
    } else {
      r.fail_at("protraction_input", "expected normalized, degrees or radians");
    }
    if (r.has("coeffs_ed")) {
      const auto v = r.numbers("coeffs_ed", 6);
      std::copy(v.begin(), v.end(), cfg.rhythm.coeffs_ed.begin());
    }
    if (r.has("coeffs_pr")) {
      const auto v = r.numbers("coeffs_pr", 3);
      std::copy(v.begin(), v.end(), cfg.rhythm.coeffs_pr.begin());
    }
    if (r.has("coeffs_dsg")) {
      const auto v = r.numbers("coeffs_dsg", 3);
      std::copy(v.begin(), v.end(), cfg.rhythm.coeffs_dsg.begin());
    }
  }

  if (root.has("metric")) {
    const auto r = root.child("metric");
    r.allow({"couple_shoulder"});
    cfg.options.couple_shoulder = r.boolean("couple_shoulder", false);
  }

  if (root.has("solver")) {
    const auto r = root.child("solver");
    r.allow({"n_steps", "tol_endpoint_rad", "max_newton"});
    cfg.options.n_steps = r.integer("n_steps", cfg.options.n_steps);
    cfg.options.tol_endpoint = r.number("tol_endpoint_rad", cfg.options.tol_endpoint);
    cfg.options.max_newton = r.integer("max_newton", cfg.options.max_newton);
    if (cfg.options.n_steps < 16) r.fail_at("n_steps", "must be at least 16");
    if (!(cfg.options.tol_endpoint > 0.0)) r.fail_at("tol_endpoint_rad", "must be positive");
    if (cfg.options.max_newton < 1) r.fail_at("max_newton", "must be positive");
  }

  if (root.has("planner")) {
    const auto r = root.child("planner");
    r.allow({"alpha_grid_step_deg", "alpha_refine_tol_deg", "duration_s", "n_samples", "threads", "min_sin_theta"});
    auto& d = cfg.request_defaults;
    d.alpha_grid_step = deg2rad(r.number("alpha_grid_step_deg", rad2deg(d.alpha_grid_step)));
    d.alpha_refine_tol = deg2rad(r.number("alpha_refine_tol_deg", rad2deg(d.alpha_refine_tol)));
    d.duration = r.number("duration_s", d.duration);
    d.n_samples = r.integer("n_samples", d.n_samples);
    const int threads = r.integer("threads", 0);
    if (threads < 0) r.fail_at("threads", "must be >= 0");
    cfg.options.threads = static_cast<unsigned>(threads);
    cfg.options.min_sin_theta = r.number("min_sin_theta", cfg.options.min_sin_theta);
  }

  try {
    cfg.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kParse, std::string("$: ") + e.what());
  }
  return cfg;
}

inline Json to_json(const ArmConfiguration& q) {
  return Json{{"theta", q.theta}, {"eta", q.eta}, {"zeta", q.zeta}, {"phi", q.phi}, {"unit", "rad"}};
}

inline ArmConfiguration parse_arm_configuration(const Json& j, const std::string& path = "$") {
  const detail::JsonReader r(j, path);
  r.allow({"theta", "eta", "zeta", "phi", "unit", "eta_degenerate", "zeta_degenerate"});
  const std::string unit = r.string("unit", "rad");
  double scale = 1.0;
  if (unit == "deg") {
    scale = kPi / 180.0;
  } else if (unit != "rad") {
    r.fail_at("unit", "expected rad or deg");
  }
  return {r.required_number("theta") * scale, r.required_number("eta") * scale, r.required_number("zeta") * scale,
          r.required_number("phi") * scale};
}

inline Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

inline Json to_json(const CartesianArmPose& p) {
  return Json{{"x_sh", vec_json(p.x_sh)}, {"x_e", vec_json(p.x_e)}, {"x_w", vec_json(p.x_w)}};
}

inline CartesianArmPose parse_pose(const Json& j, const std::string& path = "$") {
  const detail::JsonReader r(j, path);
  r.allow({"x_sh", "x_e", "x_w"});
  if (!r.has("x_e") || !r.has("x_w")) r.fail("x_e and x_w are required");
  CartesianArmPose p;
  p.x_sh = r.vec3("x_sh", Vec3::Zero());
  p.x_e = r.vec3("x_e", Vec3::Zero());
  p.x_w = r.vec3("x_w", Vec3::Zero());
  return p;
}

/// Start of a plan: either a full configuration or a wrist position plus
/// swivel angle, resolved through final_configuration.
inline ArmConfiguration parse_start(const Json& j, const SubjectConfig& cfg, const std::string& path = "$") {
  if (j.is_object() && j.contains("wrist_m")) {
    const detail::JsonReader r(j, path);
    r.allow({"wrist_m", "swivel_deg", "swivel_rad"});
    double alpha = r.number("swivel_rad", 0.0);
    if (r.has("swivel_deg")) alpha = deg2rad(r.number("swivel_deg", 0.0));
    return final_configuration(r.vec3("wrist_m", Vec3::Zero()), {alpha}, cfg.geom, cfg.rhythm).q;
  }
  return parse_arm_configuration(j, path);
}

inline ExoKinematicDescription parse_exo_description(const Json& j) {
  const detail::JsonReader r(j, "$");
  r.allow({"name", "shoulder_axes", "elbow_axis_sign", "elbow_offset_deg", "joint_limits_deg", "output_order"});
  ExoKinematicDescription d;
  d.name = r.string("name", "exo");
  if (!r.has("shoulder_axes")) r.fail("shoulder_axes is required");
  const Json& axes = r.raw("shoulder_axes");
  if (!axes.is_array() || axes.size() != 3) r.fail_at("shoulder_axes", "expected 3 axes");
  for (std::size_t i = 0; i < 3; ++i) {
    const Json& a = axes[i];
    if (!a.is_array() || a.size() != 3 || !a[0].is_number() || !a[1].is_number() || !a[2].is_number())
      r.fail_at("shoulder_axes", "each axis must be 3 numbers");
    Vec3 v(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
    if (!(v.norm() > 0.0)) r.fail_at("shoulder_axes", "zero axis");
    d.shoulder_axes[i] = v.normalized();
  }
  d.elbow_axis_sign = r.integer("elbow_axis_sign", 1);
  d.elbow_offset = deg2rad(r.number("elbow_offset_deg", 0.0));
  if (r.has("joint_limits_deg")) {
    const Json& lim = r.raw("joint_limits_deg");
    if (!lim.is_array() || lim.size() != 4) r.fail_at("joint_limits_deg", "expected 4 intervals");
    for (std::size_t i = 0; i < 4; ++i) {
      if (!lim[i].is_array() || lim[i].size() != 2 || !lim[i][0].is_number() || !lim[i][1].is_number())
        r.fail_at("joint_limits_deg", "each interval must be [lo, hi]");
      d.joint_limits[i] = {deg2rad(lim[i][0].get<double>()), deg2rad(lim[i][1].get<double>())};
    }
  }
  if (r.has("output_order")) {
    const Json& o = r.raw("output_order");
    if (!o.is_array() || o.size() != 3) r.fail_at("output_order", "expected 3 indices");
    for (std::size_t i = 0; i < 3; ++i) {
      if (!o[i].is_number_integer()) r.fail_at("output_order", "expected integers");
      d.output_order[i] = o[i].get<int>();
    }
  }
  try {
    d.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kParse, std::string("$: ") + e.what());
  }
  return d;
}

inline Json to_json(const R2Report& rep) {
  Json per = Json::object();
  for (int k = 0; k < 4; ++k) {
    const auto& v = rep.per_dof[static_cast<std::size_t>(k)];
    per[joint_name(k)] = v ? Json(*v) : Json(nullptr);
  }
  return Json{{"r2", per}, {"mean_r2", rep.mean}, {"notes", rep.notes}};
}

}  // namespace armgeo
