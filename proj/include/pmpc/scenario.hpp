#pragma once

// Scenario description, YAML (de)serialization with line diagnostics, and reference generation.

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "pmpc/controller.hpp"
#include "pmpc/defaults.hpp"
#include "pmpc/plant.hpp"

namespace pmpc {

/// Payload path: a polyline traversed at constant speed, heading held per segment.
struct ReferenceSpec {
  std::vector<Eigen::Vector2d> waypoints{Eigen::Vector2d(0, 0), Eigen::Vector2d(10, 0)};
  double speed = 0.3;  // m/s
};

/// Parameters of the summary metrics.
struct AnalysisSpec {
  // Samples count as obstacle-free when every body's reference is at least this far from all obstacles.
  double obstacle_clearance = 1.5;  // m
  // Initial window excluded from tracking metrics (start from rest).
  double settle_time = 2.0;  // s
  double transient_limit = 0.5;  // s
};

struct ScenarioSpec {
  std::string name = "scenario";
  double duration = 30.0;
  std::uint64_t seed = 1;
  OcpSettings ocp;
  int plant_substeps = 16;
  int max_sqp_iterations = 10;
  HocbfParams hocbf;
  std::vector<Obstacle> obstacles;
  SystemModel nominal = default_system_model();
  SystemModel truth = default_system_model();
  OcpWeights weights;
  std::array<GaitParams, kNumRobots> gait{};
  ReferenceSpec reference;
  std::vector<Disturbance> disturbances;
  MeasureMode measure = MeasureMode::kExact;
  double position_noise = 0.0;
  BaumgarteGains baumgarte;
  bool zero_grf = false;  // free-fall test mode: the plant receives zero GRFs
  AnalysisSpec analysis;

  double plant_dt() const { return ocp.ts / plant_substeps; }

  void validate() const {
    if (!(duration >= 0.0)) throw ConfigError("duration must be nonnegative");
    if (ocp.horizon < 1) throw ConfigError("horizon must be at least 1");
    if (!(ocp.ts > 0.0)) throw ConfigError("sampling time must be positive");
    if (plant_substeps < 1) throw ConfigError("plant substeps must be at least 1");
    if (max_sqp_iterations < 1) throw ConfigError("SQP iteration cap must be at least 1");
    if (!(ocp.friction > 0.0) || !(ocp.fz_max > 0.0)) throw ConfigError("friction limits must be positive");
    hocbf.validate();
    nominal.validate();
    truth.validate();
    weights.validate();
    if (reference.speed < 0.0) throw ConfigError("reference speed must be nonnegative");
    if (reference.waypoints.empty()) throw ConfigError("reference needs at least one waypoint");
    for (const auto& g : gait) {
      if (!(g.period > 0.0)) throw ConfigError("gait period must be positive");
    }
    if (position_noise < 0.0) throw ConfigError("noise level must be nonnegative");
    for (const auto& d : disturbances) {
      if (d.body < 0 || d.body > 2) throw ConfigError("disturbance body must be robot0, robot1 or payload");
      if (d.duration < 0.0) throw ConfigError("disturbance duration must be nonnegative");
    }
  }

  ControllerConfig controller_config() const {
    ControllerConfig c;
    c.ocp = ocp;
    c.weights = weights;
    c.hocbf = hocbf;
    c.obstacles = obstacles;
    c.gait = gait;
    c.sqp.max_iterations = max_sqp_iterations;
    return c;
  }

  PlantConfig plant_config() const {
    PlantConfig p;
    p.model = truth;
    p.dt = plant_dt();
    p.baumgarte = baumgarte;
    p.disturbances = disturbances;
    p.measure = measure;
    p.position_noise = position_noise;
    return p;
  }
};

// ---------------------------------------------------------------------------------------------
// References.

struct PathPoint {
  Eigen::Vector2d position;
  Eigen::Vector2d velocity;
  double heading = 0.0;
};

inline double segment_heading(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const Eigen::Vector2d d = b - a;
  return d.norm() > 0.0 ? std::atan2(d.y(), d.x()) : 0.0;
}

/// Payload path point at time t; the path stops at its last waypoint.
inline PathPoint path_at(const ReferenceSpec& ref, double t) {
  const auto& w = ref.waypoints;
  PathPoint pt;
  pt.position = w.front();
  pt.velocity.setZero();
  if (w.size() < 2) return pt;
  double s = ref.speed * std::max(t, 0.0);
  for (size_t i = 0; i + 1 < w.size(); ++i) {
    const Eigen::Vector2d d = w[i + 1] - w[i];
    const double len = d.norm();
    pt.heading = segment_heading(w[i], w[i + 1]);
    if (len == 0.0) continue;
    if (s < len) {
      pt.position = w[i] + (s / len) * d;
      pt.velocity = (ref.speed / len) * d;
      return pt;
    }
    s -= len;
  }
  pt.position = w.back();
  return pt;
}

/// Global reference state at time t: payload on the path, robots at the formation offsets, all
/// yaws at the path heading, velocities matching the path.
inline GlobalState reference_state(const ScenarioSpec& spec, double t) {
  const PathPoint pt = path_at(spec.reference, t);
  GlobalState x = formation_state(spec.nominal, pt.position, pt.heading);
  for (int b = 0; b < 3; ++b) x.segment<2>(12 * b + idx::kVel) = pt.velocity;
  return x;
}

inline std::vector<VectorXd> generate_references(const ScenarioSpec& spec, double t0, int horizon, double ts) {
  std::vector<VectorXd> refs;
  refs.reserve(horizon + 1);
  for (int k = 0; k <= horizon; ++k) refs.emplace_back(reference_state(spec, t0 + k * ts));
  return refs;
}

inline GlobalState initial_state(const ScenarioSpec& spec) {
  const PathPoint pt = path_at(spec.reference, 0.0);
  return formation_state(spec.truth, pt.position, pt.heading);
}

// ---------------------------------------------------------------------------------------------
// YAML.

namespace yaml_detail {

inline int line_of(const YAML::Node& n) { return n.Mark().line + 1; }

inline void check_keys(const YAML::Node& n, const std::set<std::string>& allowed, const std::string& where) {
  if (!n.IsMap()) throw ConfigError(where + " must be a mapping", line_of(n));
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw ConfigError("unknown field '" + key + "' in " + where, line_of(kv.first));
  }
}

template <typename T>
T scalar(const YAML::Node& n, const std::string& what) {
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("invalid value for " + what, line_of(n));
  }
}

template <typename T>
void read(const YAML::Node& parent, const std::string& key, T& out) {
  const YAML::Node n = parent[key];
  if (n) out = scalar<T>(n, key);
}

inline Eigen::VectorXd vec(const YAML::Node& n, int size, const std::string& what) {
  if (!n.IsSequence() || static_cast<int>(n.size()) != size) {
    throw ConfigError(what + " must be a list of " + std::to_string(size) + " numbers", line_of(n));
  }
  Eigen::VectorXd v(size);
  for (int i = 0; i < size; ++i) v(i) = scalar<double>(n[i], what);
  return v;
}

template <int N>
void read_vec(const YAML::Node& parent, const std::string& key, Eigen::Matrix<double, N, 1>& out) {
  const YAML::Node n = parent[key];
  if (n) out = vec(n, N, key);
}

/// Positive number check with the node's line.
inline void require_positive(const YAML::Node& parent, const std::string& key, double v) {
  if (!(v > 0.0)) {
    const YAML::Node n = parent[key];
    throw ConfigError(key + " must be positive", n ? line_of(n) : line_of(parent));
  }
}

inline void read_body(const YAML::Node& n, const std::string& where, SystemModel& m) {
  check_keys(n, {"robot_mass_kg", "robot_inertia_kgm2", "payload_mass_kg", "payload_inertia_kgm2"}, where);
  double rm = m.robots[0].mass, pm = m.payload.mass;
  Vector3d ri = m.robots[0].body_inertia.diagonal(), pi = m.payload.body_inertia.diagonal();
  read(n, "robot_mass_kg", rm);
  read(n, "payload_mass_kg", pm);
  require_positive(n, "robot_mass_kg", rm);
  require_positive(n, "payload_mass_kg", pm);
  read_vec<3>(n, "robot_inertia_kgm2", ri);
  read_vec<3>(n, "payload_inertia_kgm2", pi);
  if (ri.minCoeff() <= 0.0) throw ConfigError("robot inertia must be positive", line_of(n["robot_inertia_kgm2"]));
  if (pi.minCoeff() <= 0.0) throw ConfigError("payload inertia must be positive", line_of(n["payload_inertia_kgm2"]));
  for (auto& r : m.robots) {
    r.mass = rm;
    r.body_inertia = ri.asDiagonal();
  }
  m.payload.mass = pm;
  m.payload.body_inertia = pi.asDiagonal();
}

inline int body_index(const YAML::Node& n) {
  const auto s = scalar<std::string>(n, "body");
  if (s == "robot0") return 0;
  if (s == "robot1") return 1;
  if (s == "payload") return 2;
  throw ConfigError("body must be robot0, robot1 or payload", line_of(n));
}

inline const char* body_name(int b) {
  static const char* names[] = {"robot0", "robot1", "payload"};
  return names[b];
}

}  // namespace yaml_detail

inline ScenarioSpec parse_scenario(const YAML::Node& root) {
  using namespace yaml_detail;
  ScenarioSpec s;
  check_keys(root,
             {"name", "duration_s", "seed", "control", "safety", "obstacles_m", "nominal", "true", "geometry", "gait",
              "weights", "reference", "disturbances", "measurement", "plant", "analysis"},
             "scenario");
  read(root, "name", s.name);
  read(root, "duration_s", s.duration);
  if (s.duration < 0.0) throw ConfigError("duration_s must be nonnegative", line_of(root["duration_s"]));
  read(root, "seed", s.seed);

  if (const auto c = root["control"]) {
    check_keys(c, {"horizon", "ts_s", "plant_substeps", "max_sqp_iterations", "friction_coefficient",
                   "max_normal_force_n"},
               "control");
    read(c, "horizon", s.ocp.horizon);
    read(c, "ts_s", s.ocp.ts);
    read(c, "plant_substeps", s.plant_substeps);
    read(c, "max_sqp_iterations", s.max_sqp_iterations);
    read(c, "friction_coefficient", s.ocp.friction);
    read(c, "max_normal_force_n", s.ocp.fz_max);
    if (s.ocp.horizon < 1) throw ConfigError("horizon must be at least 1", line_of(c["horizon"]));
    require_positive(c, "ts_s", s.ocp.ts);
    if (s.plant_substeps < 1) throw ConfigError("plant_substeps must be at least 1", line_of(c["plant_substeps"]));
    require_positive(c, "friction_coefficient", s.ocp.friction);
    require_positive(c, "max_normal_force_n", s.ocp.fz_max);
  }
  if (const auto c = root["safety"]) {
    check_keys(c, {"enabled", "d_th_m", "alpha1", "alpha2", "slack_weight", "initial_psi1", "margin_m"}, "safety");
    read(c, "enabled", s.ocp.safety);
    read(c, "d_th_m", s.hocbf.d_th);
    read(c, "alpha1", s.hocbf.alpha1_gain);
    read(c, "alpha2", s.hocbf.alpha2_gain);
    read(c, "slack_weight", s.ocp.slack_weight);
    read(c, "initial_psi1", s.ocp.initial_psi1);
    read(c, "margin_m", s.ocp.barrier_margin);
    if (s.ocp.barrier_margin < 0.0) throw ConfigError("margin_m must be nonnegative", line_of(c["margin_m"]));
    require_positive(c, "d_th_m", s.hocbf.d_th);
    require_positive(c, "slack_weight", s.ocp.slack_weight);
    try {
      s.hocbf.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(e.what(), line_of(c));
    }
  }
  if (const auto o = root["obstacles_m"]) {
    if (!o.IsSequence()) throw ConfigError("obstacles_m must be a list", line_of(o));
    for (size_t i = 0; i < o.size(); ++i) {
      s.obstacles.push_back({vec(o[i], 2, "obstacle position"), static_cast<int>(i)});
    }
  }
  if (const auto n = root["nominal"]) read_body(n, "nominal", s.nominal);
  s.truth = s.nominal;
  if (const auto n = root["true"]) read_body(n, "true", s.truth);
  if (const auto g = root["geometry"]) {
    check_keys(g, {"robot_offset_m", "payload_offset_m", "foot_positions_m"}, "geometry");
    auto read_pair = [&](const char* key, std::array<Vector3d, kNumRobots>& out) {
      if (const auto n = g[key]) {
        if (!n.IsSequence() || n.size() != 2) throw ConfigError(std::string(key) + " needs two entries", line_of(n));
        for (int i = 0; i < 2; ++i) out[i] = vec(n[i], 3, key);
      }
    };
    read_pair("robot_offset_m", s.nominal.geom.robot_offset);
    read_pair("payload_offset_m", s.nominal.geom.payload_offset);
    if (const auto n = g["foot_positions_m"]) {
      if (!n.IsSequence() || n.size() != 4) throw ConfigError("foot_positions_m needs four entries", line_of(n));
      for (int i = 0; i < 4; ++i) s.nominal.feet[i] = vec(n[i], 3, "foot position");
    }
    try {
      s.nominal.geom.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(e.what(), line_of(g));
    }
    s.truth.geom = s.nominal.geom;
    s.truth.feet = s.nominal.feet;
  }
  if (const auto g = root["gait"]) {
    check_keys(g, {"period_s", "phase_offset_s"}, "gait");
    double period = s.gait[0].period;
    read(g, "period_s", period);
    require_positive(g, "period_s", period);
    Eigen::Vector2d offs(s.gait[0].phase_offset, s.gait[1].phase_offset);
    if (const auto n = g["phase_offset_s"]) offs = vec(n, 2, "phase_offset_s");
    for (int i = 0; i < 2; ++i) s.gait[i] = {period, offs(i)};
  }
  if (const auto w = root["weights"]) {
    check_keys(w, {"q_position", "q_euler", "q_velocity", "q_omega", "terminal_factor", "r_grf", "r_force", "r_torque"},
               "weights");
    Vector3d q;
    const char* keys[] = {"q_position", "q_euler", "q_velocity", "q_omega"};
    for (int i = 0; i < 4; ++i) {
      if (const auto n = w[keys[i]]) {
        q = vec(n, 3, keys[i]);
        if (q.minCoeff() <= 0.0) throw ConfigError(std::string(keys[i]) + " must be positive", line_of(n));
        s.weights.state.segment<3>(3 * i) = q;
      }
    }
    read(w, "terminal_factor", s.weights.terminal_factor);
    read(w, "r_grf", s.weights.grf);
    require_positive(w, "terminal_factor", s.weights.terminal_factor);
    require_positive(w, "r_grf", s.weights.grf);
    if (const auto n = w["r_force"]) s.weights.wrench.head<3>() = vec(n, 3, "r_force");
    if (const auto n = w["r_torque"]) s.weights.wrench.tail<2>() = vec(n, 2, "r_torque");
    if (s.weights.wrench.minCoeff() <= 0.0) throw ConfigError("wrench weights must be positive", line_of(w));
  }
  if (const auto r = root["reference"]) {
    check_keys(r, {"waypoints_m", "speed_mps"}, "reference");
    read(r, "speed_mps", s.reference.speed);
    if (s.reference.speed < 0.0) throw ConfigError("speed_mps must be nonnegative", line_of(r["speed_mps"]));
    if (const auto n = r["waypoints_m"]) {
      if (!n.IsSequence() || n.size() == 0) throw ConfigError("waypoints_m must be a nonempty list", line_of(n));
      s.reference.waypoints.clear();
      for (const auto& p : n) s.reference.waypoints.push_back(vec(p, 2, "waypoint"));
    }
  }
  if (const auto d = root["disturbances"]) {
    if (!d.IsSequence()) throw ConfigError("disturbances must be a list", line_of(d));
    for (const auto& e : d) {
      check_keys(e, {"start_s", "duration_s", "body", "force_n"}, "disturbance");
      Disturbance dist;
      read(e, "start_s", dist.start);
      read(e, "duration_s", dist.duration);
      if (dist.duration < 0.0) throw ConfigError("duration_s must be nonnegative", line_of(e["duration_s"]));
      if (const auto b = e["body"]) dist.body = body_index(b);
      if (const auto f = e["force_n"]) dist.force = vec(f, 3, "force_n");
      s.disturbances.push_back(dist);
    }
  }
  if (const auto m = root["measurement"]) {
    check_keys(m, {"mode", "robot_position_noise_m"}, "measurement");
    if (const auto n = m["mode"]) {
      const auto mode = scalar<std::string>(n, "mode");
      if (mode == "exact") {
        s.measure = MeasureMode::kExact;
      } else if (mode == "reconstruct-payload") {
        s.measure = MeasureMode::kReconstructPayload;
      } else {
        throw ConfigError("measurement mode must be exact or reconstruct-payload", line_of(n));
      }
    }
    read(m, "robot_position_noise_m", s.position_noise);
    if (s.position_noise < 0.0) throw ConfigError("noise must be nonnegative", line_of(m["robot_position_noise_m"]));
  }
  if (const auto p = root["plant"]) {
    check_keys(p, {"baumgarte_zeta", "baumgarte_omega_radps", "zero_grf"}, "plant");
    read(p, "baumgarte_zeta", s.baumgarte.zeta);
    read(p, "baumgarte_omega_radps", s.baumgarte.omega);
    read(p, "zero_grf", s.zero_grf);
  }
  if (const auto a = root["analysis"]) {
    check_keys(a, {"obstacle_clearance_m", "settle_time_s", "transient_limit_s"}, "analysis");
    read(a, "obstacle_clearance_m", s.analysis.obstacle_clearance);
    read(a, "settle_time_s", s.analysis.settle_time);
    read(a, "transient_limit_s", s.analysis.transient_limit);
  }
  s.validate();
  return s;
}

inline ScenarioSpec parse_scenario_string(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(std::string("YAML syntax error: ") + e.msg, e.mark.line + 1);
  }
  return parse_scenario(root);
}

inline ScenarioSpec load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario_string(ss.str());
}

namespace yaml_detail {

template <typename V>
void emit_vec(YAML::Emitter& out, const V& v) {
  out << YAML::Flow << YAML::BeginSeq;
  for (Eigen::Index i = 0; i < v.size(); ++i) out << v(i);
  out << YAML::EndSeq;
}

inline void emit_body(YAML::Emitter& out, const SystemModel& m) {
  out << YAML::BeginMap;
  out << YAML::Key << "robot_mass_kg" << YAML::Value << m.robots[0].mass;
  out << YAML::Key << "robot_inertia_kgm2" << YAML::Value;
  emit_vec(out, Vector3d(m.robots[0].body_inertia.diagonal()));
  out << YAML::Key << "payload_mass_kg" << YAML::Value << m.payload.mass;
  out << YAML::Key << "payload_inertia_kgm2" << YAML::Value;
  emit_vec(out, Vector3d(m.payload.body_inertia.diagonal()));
  out << YAML::EndMap;
}

}  // namespace yaml_detail

inline std::string serialize_scenario(const ScenarioSpec& s) {
  using namespace yaml_detail;
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << s.name;
  out << YAML::Key << "duration_s" << YAML::Value << s.duration;
  out << YAML::Key << "seed" << YAML::Value << s.seed;

  out << YAML::Key << "control" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "horizon" << YAML::Value << s.ocp.horizon;
  out << YAML::Key << "ts_s" << YAML::Value << s.ocp.ts;
  out << YAML::Key << "plant_substeps" << YAML::Value << s.plant_substeps;
  out << YAML::Key << "max_sqp_iterations" << YAML::Value << s.max_sqp_iterations;
  out << YAML::Key << "friction_coefficient" << YAML::Value << s.ocp.friction;
  out << YAML::Key << "max_normal_force_n" << YAML::Value << s.ocp.fz_max;
  out << YAML::EndMap;

  out << YAML::Key << "safety" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "enabled" << YAML::Value << s.ocp.safety;
  out << YAML::Key << "d_th_m" << YAML::Value << s.hocbf.d_th;
  out << YAML::Key << "alpha1" << YAML::Value << s.hocbf.alpha1_gain;
  out << YAML::Key << "alpha2" << YAML::Value << s.hocbf.alpha2_gain;
  out << YAML::Key << "slack_weight" << YAML::Value << s.ocp.slack_weight;
  out << YAML::Key << "initial_psi1" << YAML::Value << s.ocp.initial_psi1;
  out << YAML::Key << "margin_m" << YAML::Value << s.ocp.barrier_margin;
  out << YAML::EndMap;

  out << YAML::Key << "obstacles_m" << YAML::Value << YAML::BeginSeq;
  for (const auto& o : s.obstacles) emit_vec(out, o.position);
  out << YAML::EndSeq;

  out << YAML::Key << "nominal" << YAML::Value;
  emit_body(out, s.nominal);
  out << YAML::Key << "true" << YAML::Value;
  emit_body(out, s.truth);

  out << YAML::Key << "geometry" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "robot_offset_m" << YAML::Value << YAML::BeginSeq;
  for (const auto& v : s.nominal.geom.robot_offset) emit_vec(out, v);
  out << YAML::EndSeq;
  out << YAML::Key << "payload_offset_m" << YAML::Value << YAML::BeginSeq;
  for (const auto& v : s.nominal.geom.payload_offset) emit_vec(out, v);
  out << YAML::EndSeq;
  out << YAML::Key << "foot_positions_m" << YAML::Value << YAML::BeginSeq;
  for (const auto& v : s.nominal.feet) emit_vec(out, v);
  out << YAML::EndSeq;
  out << YAML::EndMap;

  out << YAML::Key << "gait" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "period_s" << YAML::Value << s.gait[0].period;
  out << YAML::Key << "phase_offset_s" << YAML::Value;
  emit_vec(out, Eigen::Vector2d(s.gait[0].phase_offset, s.gait[1].phase_offset));
  out << YAML::EndMap;

  out << YAML::Key << "weights" << YAML::Value << YAML::BeginMap;
  const char* keys[] = {"q_position", "q_euler", "q_velocity", "q_omega"};
  for (int i = 0; i < 4; ++i) {
    out << YAML::Key << keys[i] << YAML::Value;
    emit_vec(out, Vector3d(s.weights.state.segment<3>(3 * i)));
  }
  out << YAML::Key << "terminal_factor" << YAML::Value << s.weights.terminal_factor;
  out << YAML::Key << "r_grf" << YAML::Value << s.weights.grf;
  out << YAML::Key << "r_force" << YAML::Value;
  emit_vec(out, Vector3d(s.weights.wrench.head<3>()));
  out << YAML::Key << "r_torque" << YAML::Value;
  emit_vec(out, Eigen::Vector2d(s.weights.wrench.tail<2>()));
  out << YAML::EndMap;

  out << YAML::Key << "reference" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "waypoints_m" << YAML::Value << YAML::BeginSeq;
  for (const auto& w : s.reference.waypoints) emit_vec(out, w);
  out << YAML::EndSeq;
  out << YAML::Key << "speed_mps" << YAML::Value << s.reference.speed;
  out << YAML::EndMap;

  out << YAML::Key << "disturbances" << YAML::Value << YAML::BeginSeq;
  for (const auto& d : s.disturbances) {
    out << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "start_s" << YAML::Value << d.start;
    out << YAML::Key << "duration_s" << YAML::Value << d.duration;
    out << YAML::Key << "body" << YAML::Value << body_name(d.body);
    out << YAML::Key << "force_n" << YAML::Value;
    emit_vec(out, d.force);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "measurement" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "mode" << YAML::Value
      << (s.measure == MeasureMode::kExact ? "exact" : "reconstruct-payload");
  out << YAML::Key << "robot_position_noise_m" << YAML::Value << s.position_noise;
  out << YAML::EndMap;

  out << YAML::Key << "plant" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "baumgarte_zeta" << YAML::Value << s.baumgarte.zeta;
  out << YAML::Key << "baumgarte_omega_radps" << YAML::Value << s.baumgarte.omega;
  out << YAML::Key << "zero_grf" << YAML::Value << s.zero_grf;
  out << YAML::EndMap;

  out << YAML::Key << "analysis" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "obstacle_clearance_m" << YAML::Value << s.analysis.obstacle_clearance;
  out << YAML::Key << "settle_time_s" << YAML::Value << s.analysis.settle_time;
  out << YAML::Key << "transient_limit_s" << YAML::Value << s.analysis.transient_limit;
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace pmpc
