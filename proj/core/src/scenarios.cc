// Copyright 2026 The Shield Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "shield/scenarios.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "json.hpp"

#include "shield/lyapunov.h"

namespace shield {
namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Signed distance to an axis-aligned box, positive outside.
double BoxDistance(const Box2& box, double x, double y) {
  const double dx = std::max(box.x_min - x, x - box.x_max);
  const double dy = std::max(box.y_min - y, y - box.y_max);
  const double outside = std::hypot(std::max(dx, 0.0), std::max(dy, 0.0));
  return outside + std::min(std::max(dx, dy), 0.0);
}

std::vector<Box2> HallwayWalls(const HallwayWorld& w) {
  constexpr double kFar = 100.0;
  const double hw = w.half_width;
  const double left = w.pocket_center_x - 0.5 * w.pocket_width;
  const double right = w.pocket_center_x + 0.5 * w.pocket_width;
  return {
      {w.x_min - kFar, w.x_max + kFar, -hw - kFar, -hw},
      {w.x_min - kFar, left, hw, hw + kFar},
      {right, w.x_max + kFar, hw, hw + kFar},
      {left, right, hw + w.pocket_depth, hw + kFar},
      {w.x_min - kFar, w.x_min, -hw - kFar, hw + kFar},
      {w.x_max, w.x_max + kFar, -hw - kFar, hw + kFar},
  };
}

int ModelDim(ScenarioConfig::World world) { return world == ScenarioConfig::World::kHighway ? 8 : 4; }

bool IsDoubleIntegratorPolicy(PolicySpec::Kind kind) {
  return kind == PolicySpec::Kind::kLineTracker || kind == PolicySpec::Kind::kGoalPd ||
         kind == PolicySpec::Kind::kPocketBackup;
}

Policy MakePolicy(const ScenarioConfig& c, const PolicySpec& spec, const InputBounds& bounds) {
  switch (spec.kind) {
    case PolicySpec::Kind::kLineTracker:
      return LineTracker(spec.gains, spec.y_ref, spec.v_ref, bounds);
    case PolicySpec::Kind::kGoalPd:
      return GoalPd(spec.gains, spec.goal_x, spec.goal_y, spec.max_speed, bounds, spec.gate);
    case PolicySpec::Kind::kPocketBackup: {
      const HallwayWorld& w = c.hallway;
      PocketParams p = spec.pocket;
      p.center_x = w.pocket_center_x;
      p.center_y = w.pocket_center_y();
      p.mouth_y = w.half_width;
      p.corridor_y = 0.0;
      p.max_speed = spec.max_speed;
      p.goal_region = w.goal_region;
      return PocketBackup(spec.gains, p, bounds);
    }
    case PolicySpec::Kind::kCenterlineTracker:
    case PolicySpec::Kind::kLaneChangeBackup: {
      const HighwayWorld& w = c.highway;
      CascadeParams p;
      p.target_y = w.LaneCenter(spec.lane_index);
      p.v_ref = spec.v_ref;
      p.wheelbase = w.vehicle.front_axle + w.vehicle.rear_axle;
      p.max_steer = w.vehicle.max_steer;
      p.gains = spec.cascade;
      return LaneCascade(p, bounds);
    }
  }
  throw ConfigError("unsupported policy kind");
}

// ---- JSON ------------------------------------------------------------------

// Reads keys from one JSON object and rejects any key it was not asked about.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool Has(const char* key) const { return j_.contains(key); }

  const json* Take(const char* key) {
    used_.emplace_back(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void Get(const char* key, double& out) {
    if (const json* v = Take(key)) out = Number(*v, key);
  }
  // null stands for +infinity.
  void GetExtended(const char* key, double& out) {
    if (const json* v = Take(key)) out = v->is_null() ? kInf : Number(*v, key);
  }
  void Get(const char* key, int& out) {
    if (const json* v = Take(key)) {
      if (!v->is_number_integer()) throw ConfigError(Where(key) + ": expected an integer");
      out = v->get<int>();
    }
  }
  void Get(const char* key, std::uint64_t& out) {
    if (const json* v = Take(key)) {
      if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0)) {
        throw ConfigError(Where(key) + ": expected a nonnegative integer");
      }
      out = v->get<std::uint64_t>();
    }
  }
  void Get(const char* key, std::string& out) {
    if (const json* v = Take(key)) {
      if (!v->is_string()) throw ConfigError(Where(key) + ": expected a string");
      out = v->get<std::string>();
    }
  }
  void Get(const char* key, State& out) {
    if (const json* v = Take(key)) {
      if (!v->is_array() || v->size() > kMaxStateDim) {
        throw ConfigError(Where(key) + ": expected an array of at most 8 numbers");
      }
      out.resize(static_cast<int>(v->size()));
      for (size_t i = 0; i < v->size(); ++i) out[static_cast<int>(i)] = Number((*v)[i], key);
    }
  }
  template <size_t N>
  void Get(const char* key, std::array<double, N>& out) {
    if (const json* v = Take(key)) {
      if (!v->is_array() || v->size() != N) {
        throw ConfigError(Where(key) + ": expected an array of " + std::to_string(N) + " numbers");
      }
      for (size_t i = 0; i < N; ++i) out[i] = Number((*v)[i], key);
    }
  }
  void Get(const char* key, Box2& out) {
    if (const json* v = Take(key)) {
      if (!v->is_array() || v->size() != 4) {
        throw ConfigError(Where(key) + ": expected [x_min, x_max, y_min, y_max]");
      }
      out = {Number((*v)[0], key), Number((*v)[1], key), Number((*v)[2], key),
             Number((*v)[3], key)};
    }
  }

  std::string Where(const char* key) const { return path_ + "." + key; }

  void Finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (std::find(used_.begin(), used_.end(), it.key()) == used_.end()) {
        throw ConfigError(path_ + ": unknown key '" + it.key() + "'");
      }
    }
  }

 private:
  double Number(const json& v, const char* key) const {
    if (!v.is_number()) throw ConfigError(Where(key) + ": expected a number");
    return v.get<double>();
  }

  const json& j_;
  std::string path_;
  std::vector<std::string> used_;
};

json Extended(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json StateJson(const State& x) {
  json a = json::array();
  for (int i = 0; i < x.size(); ++i) a.push_back(x[i]);
  return a;
}

json BoxJson(const Box2& b) { return json::array({b.x_min, b.x_max, b.y_min, b.y_max}); }

std::string_view WorldName(ScenarioConfig::World w) {
  switch (w) {
    case ScenarioConfig::World::kDiSlice:
      return "di_slice";
    case ScenarioConfig::World::kHallway:
      return "hallway";
    case ScenarioConfig::World::kHighway:
      return "highway";
  }
  return "unknown";
}

ScenarioConfig::World ParseWorld(const std::string& s) {
  for (auto w : {ScenarioConfig::World::kDiSlice, ScenarioConfig::World::kHallway,
                 ScenarioConfig::World::kHighway}) {
    if (WorldName(w) == s) return w;
  }
  throw ConfigError("unknown world '" + s + "' (expected di_slice, hallway or highway)");
}

std::string_view ObstacleKindName(ObstacleScript::Kind k) {
  return k == ObstacleScript::Kind::kCorridorRunner ? "corridor_runner" : "lane_runner";
}

void ReadPolicy(const json& j, const std::string& path, PolicySpec& p) {
  Reader r(j, path);
  std::string kind(KindName(p.kind));
  r.Get("kind", kind);
  try {
    p.kind = ParseKind(kind);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
  double kp = p.gains.kp;
  double kd = p.gains.kd;
  r.Get("kp", kp);
  r.Get("kd", kd);
  if (!(kp >= 0.0) || !(kd >= 0.0)) throw ConfigError(path + ": gains must be nonnegative");
  p.gains = PdGains(kp, kd);
  r.Get("y_ref", p.y_ref);
  r.Get("v_ref", p.v_ref);
  r.Get("max_speed", p.max_speed);
  r.Get("lane_index", p.lane_index);
  if (const json* g = r.Take("goal")) {
    if (!g->is_array() || g->size() != 2 || !(*g)[0].is_number() || !(*g)[1].is_number()) {
      throw ConfigError(path + ".goal: expected [x, y]");
    }
    p.goal_x = (*g)[0].get<double>();
    p.goal_y = (*g)[1].get<double>();
  }
  if (const json* g = r.Take("gate")) {
    Reader gr(*g, path + ".gate");
    gr.GetExtended("align_in", p.gate.align_in);
    gr.GetExtended("align_out", p.gate.align_out);
    gr.Finish();
  }
  if (const json* g = r.Take("pocket")) {
    Reader gr(*g, path + ".pocket");
    gr.Get("align_in", p.pocket.align_in);
    gr.Get("align_out", p.pocket.align_out);
    gr.Finish();
  }
  if (const json* g = r.Take("cascade")) {
    Reader gr(*g, path + ".cascade");
    CascadeGains& c = p.cascade;
    double lkp = c.lateral.kp;
    double lkd = c.lateral.kd;
    gr.Get("lateral_kp", lkp);
    gr.Get("lateral_kd", lkd);
    if (!(lkp >= 0.0) || !(lkd >= 0.0)) throw ConfigError(path + ".cascade: negative gain");
    c.lateral = PdGains(lkp, lkd);
    gr.Get("steer_rate", c.steer_rate);
    gr.Get("speed", c.speed);
    gr.Get("torque_rate", c.torque_rate);
    gr.Get("max_lateral_accel", c.max_lateral_accel);
    gr.Finish();
  }
  r.Finish();
}

json PolicyJson(const PolicySpec& p) {
  json j;
  j["kind"] = KindName(p.kind);
  switch (p.kind) {
    case PolicySpec::Kind::kLineTracker:
      j["kp"] = p.gains.kp;
      j["kd"] = p.gains.kd;
      j["y_ref"] = p.y_ref;
      j["v_ref"] = p.v_ref;
      break;
    case PolicySpec::Kind::kGoalPd:
      j["kp"] = p.gains.kp;
      j["kd"] = p.gains.kd;
      j["goal"] = json::array({p.goal_x, p.goal_y});
      j["max_speed"] = p.max_speed;
      j["gate"] = {{"align_in", Extended(p.gate.align_in)},
                   {"align_out", Extended(p.gate.align_out)}};
      break;
    case PolicySpec::Kind::kPocketBackup:
      j["kp"] = p.gains.kp;
      j["kd"] = p.gains.kd;
      j["max_speed"] = p.max_speed;
      j["pocket"] = {{"align_in", p.pocket.align_in}, {"align_out", p.pocket.align_out}};
      break;
    case PolicySpec::Kind::kCenterlineTracker:
    case PolicySpec::Kind::kLaneChangeBackup: {
      const CascadeGains& c = p.cascade;
      j["lane_index"] = p.lane_index;
      j["v_ref"] = p.v_ref;
      j["cascade"] = {{"lateral_kp", c.lateral.kp},   {"lateral_kd", c.lateral.kd},
                      {"steer_rate", c.steer_rate},   {"speed", c.speed},
                      {"torque_rate", c.torque_rate}, {"max_lateral_accel", c.max_lateral_accel}};
      break;
    }
  }
  return j;
}

void ReadVehicle(const json& j, const std::string& path, BicycleParams& v) {
  Reader r(j, path);
  r.Get("mass", v.mass);
  r.Get("yaw_inertia", v.yaw_inertia);
  r.Get("front_axle", v.front_axle);
  r.Get("rear_axle", v.rear_axle);
  r.Get("cornering_front", v.cornering_front);
  r.Get("cornering_rear", v.cornering_rear);
  r.Get("friction", v.friction);
  r.Get("wheel_radius", v.wheel_radius);
  r.Get("gravity", v.gravity);
  r.Get("min_speed", v.min_speed);
  r.Get("max_speed", v.max_speed);
  double deg = v.max_steer / kDegToRad;
  r.Get("max_steer_deg", deg);
  v.max_steer = deg * kDegToRad;
  deg = v.max_steer_rate / kDegToRad;
  r.Get("max_steer_rate_deg", deg);
  v.max_steer_rate = deg * kDegToRad;
  r.Get("max_torque", v.max_torque);
  r.Get("max_torque_rate", v.max_torque_rate);
  r.Finish();
}

json VehicleJson(const BicycleParams& v) {
  return {{"mass", v.mass},
          {"yaw_inertia", v.yaw_inertia},
          {"front_axle", v.front_axle},
          {"rear_axle", v.rear_axle},
          {"cornering_front", v.cornering_front},
          {"cornering_rear", v.cornering_rear},
          {"friction", v.friction},
          {"wheel_radius", v.wheel_radius},
          {"gravity", v.gravity},
          {"min_speed", v.min_speed},
          {"max_speed", v.max_speed},
          {"max_steer_deg", v.max_steer / kDegToRad},
          {"max_steer_rate_deg", v.max_steer_rate / kDegToRad},
          {"max_torque", v.max_torque},
          {"max_torque_rate", v.max_torque_rate}};
}

void ReadObstacle(const json& j, const std::string& path, ObstacleScript& o) {
  Reader r(j, path);
  std::string kind(ObstacleKindName(o.kind));
  r.Get("kind", kind);
  if (kind == "corridor_runner") {
    o.kind = ObstacleScript::Kind::kCorridorRunner;
  } else if (kind == "lane_runner") {
    o.kind = ObstacleScript::Kind::kLaneRunner;
  } else {
    throw ConfigError(path + ": unknown obstacle kind '" + kind +
                      "' (expected corridor_runner or lane_runner)");
  }
  r.Get("speed", o.speed);
  r.Get("extent", o.extent);
  r.Get("width", o.width);
  r.Get("spawn_x", o.spawn_x);
  r.GetExtended("end_x", o.end_x);
  r.Get("offset", o.offset);
  r.Get("lane_y", o.lane_y);
  r.Finish();
}

ScenarioConfig DiSliceConfig() {
  ScenarioConfig c;
  c.name = "di-slice";
  c.world = ScenarioConfig::World::kDiSlice;
  c.nominal.kind = PolicySpec::Kind::kLineTracker;
  c.nominal.gains = PdGains(1.0, 2.0);
  c.nominal.y_ref = 2.0;
  c.nominal.v_ref = 2.0;
  c.backup.kind = PolicySpec::Kind::kLineTracker;
  c.backup.gains = PdGains(1.0, 2.0);
  c.backup.y_ref = -2.0;
  c.backup.v_ref = 0.0;
  c.validity_margin = 0.0;
  c.monitor_dt = 0.1;
  c.backup_horizon = 12.0;
  c.search_horizon = 5.0;
  c.dt = 0.01;
  c.duration = 20.0;
  c.initial_lower = State(4);
  c.initial_upper = State(4);
  c.initial_lower << -6.0, 1.8, 2.0, 0.0;
  c.initial_upper << -5.0, 2.2, 2.0, 0.0;
  return c;
}

ScenarioConfig ReachAvoidConfig() {
  ScenarioConfig c;
  c.name = "reach-avoid";
  c.n_collocation = 121;
  c.world = ScenarioConfig::World::kHallway;
  const HallwayWorld& w = c.hallway;
  c.nominal.kind = PolicySpec::Kind::kGoalPd;
  c.nominal.gains = PdGains(1.0, 2.0);
  c.nominal.goal_x = w.goal_region.cx();
  c.nominal.goal_y = 0.0;
  c.nominal.max_speed = w.max_speed;
  c.nominal.gate = {0.3, 0.9};
  c.backup.kind = PolicySpec::Kind::kPocketBackup;
  c.backup.gains = PdGains(1.0, 2.0);
  c.backup.max_speed = w.max_speed;
  c.validity_margin = 0.0;
  c.monitor_dt = 0.05;
  c.backup_horizon = 12.0;
  c.search_horizon = 10.0;
  c.dt = 0.01;
  c.duration = 60.0;
  c.initial_lower = State(4);
  c.initial_upper = State(4);
  c.initial_lower << -1.0, -0.3, 0.0, 0.0;
  c.initial_upper << 0.0, 0.3, 0.0, 0.0;
  ObstacleScript o;
  o.kind = ObstacleScript::Kind::kCorridorRunner;
  o.speed = 3.0;
  o.extent = 1.0;
  o.spawn_x = -25.0;
  o.end_x = 25.0;
  o.offset = 0.0;
  c.obstacles = {o};
  return c;
}

ScenarioConfig HighwayConfig() {
  ScenarioConfig c;
  c.name = "highway";
  c.world = ScenarioConfig::World::kHighway;
  const HighwayWorld& w = c.highway;
  c.nominal.kind = PolicySpec::Kind::kCenterlineTracker;
  c.nominal.lane_index = w.nominal_lane;
  c.nominal.v_ref = 10.0;
  c.backup.kind = PolicySpec::Kind::kLaneChangeBackup;
  c.backup.lane_index = w.backup_lane;
  c.backup.v_ref = 10.0;
  c.validity_margin = 0.0;
  c.monitor_dt = 0.05;
  c.backup_horizon = 3.0;
  c.search_horizon = 6.0;
  c.dt = 0.01;
  c.duration = 40.0;
  c.initial_lower = State(8);
  c.initial_upper = State(8);
  const double y = w.LaneCenter(w.nominal_lane);
  c.initial_lower << 0.0, y - 0.2, 0.0, 0.0, 0.0, 9.5, 0.0, 0.0;
  c.initial_upper << 5.0, y + 0.2, 0.0, 0.0, 0.0, 10.5, 0.0, 0.0;
  ObstacleScript o;
  o.kind = ObstacleScript::Kind::kLaneRunner;
  o.speed = 4.0;
  o.extent = w.vehicle_length;
  o.width = w.vehicle_width;
  o.spawn_x = 40.0;
  o.lane_y = w.LaneCenter(w.nominal_lane + 1);
  c.obstacles = {o};
  return c;
}

}  // namespace

// ---- obstacles and margins -------------------------------------------------

ObstacleState ObstacleAt(const ObstacleScript& script, double t) {
  ObstacleState s;
  double track = script.offset + script.speed * t;
  const double length = script.end_x - script.spawn_x;
  if (std::isfinite(length) && length > 0.0) {
    track = std::fmod(track, length);
    if (track < 0.0) track += length;
  }
  s.x = script.spawn_x + track;
  s.y = script.lane_y;
  s.vx = script.speed;
  return s;
}

MarginFn DiskMargin(double radius) {
  return [radius](double, const State& x) { return std::hypot(x[0], x[1]) - radius; };
}

MarginFn StripMargin(double y_ref, double half_width, double max_speed, double cross,
                     double velocity_weight) {
  if (!(velocity_weight >= 0.25 * cross * cross)) {
    throw std::invalid_argument("StripMargin: need velocity_weight >= cross^2 / 4");
  }
  return [=](double, const State& x) {
    const double e = x[1] - y_ref;
    const double form = e * e + cross * e * x[3] + velocity_weight * x[3] * x[3];
    return std::min(half_width - std::sqrt(std::max(form, 0.0)),
                    max_speed - std::hypot(x[2], x[3]));
  };
}

MarginFn HallwayMarginC(const HallwayWorld& world, const std::vector<ObstacleScript>& obstacles) {
  return [walls = HallwayWalls(world), world, obstacles](double t, const State& x) {
    double d = kInf;
    for (const Box2& b : walls) d = std::min(d, BoxDistance(b, x[0], x[1]));
    for (const ObstacleScript& o : obstacles) {
      const double cx = ObstacleAt(o, t).x;
      const Box2 slab{cx - 0.5 * o.extent, cx + 0.5 * o.extent, -world.half_width,
                      world.half_width};
      d = std::min(d, BoxDistance(slab, x[0], x[1]));
    }
    return d - world.robot_radius;
  };
}

MarginFn HallwayMarginS0(const HallwayWorld& world) {
  const double cross = world.terminal_cross;
  const double weight = world.terminal_velocity_weight;
  auto ellipse = [cross, weight](double cx, double cy, double hx, double hy) {
    return [=](const State& x) {
      const double ex = x[0] - cx;
      const double ey = x[1] - cy;
      const double q = (ex * ex + cross * ex * x[2] + weight * x[2] * x[2]) / (hx * hx) +
                       (ey * ey + cross * ey * x[3] + weight * x[3] * x[3]) / (hy * hy);
      return std::min(hx, hy) * (1.0 - std::sqrt(std::max(q, 0.0)));
    };
  };
  const Box2& g = world.goal_region;
  return [pocket = ellipse(world.pocket_center_x, world.pocket_center_y(), world.pocket_hold_x,
                           world.pocket_hold_y),
          goal = ellipse(0.5 * (g.x_min + g.x_max), 0.5 * (g.y_min + g.y_max), world.goal_hold_x,
                         world.goal_hold_y)](double, const State& x) {
    return std::max(pocket(x), goal(x));
  };
}

MarginFn HighwayMarginC(const HighwayWorld& world, const std::vector<ObstacleScript>& obstacles) {
  return [world, obstacles](double t, const State& x) {
    // Axis-aligned extent of the rotated ego footprint.
    const double c = std::abs(std::cos(x[kYaw]));
    const double s = std::abs(std::sin(x[kYaw]));
    const double hx = 0.5 * (c * world.vehicle_length + s * world.vehicle_width);
    const double hy = 0.5 * (s * world.vehicle_length + c * world.vehicle_width);
    double d = std::min(x[kPy] - hy, world.road_width() - x[kPy] - hy);
    for (const ObstacleScript& o : obstacles) {
      const ObstacleState os = ObstacleAt(o, t);
      const double gap_x = std::abs(x[kPx] - os.x) - hx - 0.5 * o.extent;
      const double gap_y = std::abs(x[kPy] - os.y) - hy - 0.5 * o.width;
      d = std::min(d, std::max(gap_x, gap_y));
    }
    return d;
  };
}

MarginFn HighwayMarginS0(const HighwayWorld& world, const ControlAffineModel& model,
                         const Policy& backup, double v_ref) {
  constexpr int kReduced = 7;
  constexpr std::array<int, kReduced> kIndex{kPy, kYaw, kYawRate, kSideslip, kSpeed, kSteer,
                                             kTorque};
  const double y_b = world.LaneCenter(world.backup_lane);
  State eq = State::Zero(model.n);
  eq[kPy] = y_b;
  eq[kSpeed] = v_ref;
  const StateMatrix jac = ClosedLoopJacobian(model, backup, 0.0, eq, 1e-6);
  Eigen::MatrixXd a(kReduced, kReduced);
  for (int i = 0; i < kReduced; ++i) {
    for (int j = 0; j < kReduced; ++j) {
      a(i, j) = jac(kIndex[i], kIndex[j]) * world.s0_scales[j] / world.s0_scales[i];
    }
  }
  const Eigen::MatrixXd p = SolveLyapunov(a, Eigen::MatrixXd::Identity(kReduced, kReduced));
  if (p.llt().info() != Eigen::Success) {
    throw ConfigError("highway: backup closed loop is not stable at the backup lane");
  }
  // Level at which the largest lateral offset in {z' P z <= level} is s0_lateral.
  const double lat = world.s0_lateral / world.s0_scales[0];
  const Eigen::MatrixXd shape = p / (lat * lat / p.inverse()(0, 0));
  return [world, shape, eq, kIndex](double, const State& x) {
    Eigen::Matrix<double, kReduced, 1> z;
    for (int i = 0; i < kReduced; ++i) {
      z[i] = (x[kIndex[i]] - eq[kIndex[i]]) / world.s0_scales[i];
    }
    return world.s0_lateral * (1.0 - std::sqrt(std::max(z.dot(shape * z), 0.0)));
  };
}

// ---- configuration ---------------------------------------------------------

void ScenarioConfig::Validate() const {
  auto fail = [this](const std::string& what) { throw ConfigError(name + ": " + what); };
  if (!(dt > 0.0)) fail("dt must be positive");
  if (!(monitor_dt > 0.0)) fail("monitor_dt must be positive");
  if (!(backup_horizon > 0.0)) fail("backup_horizon must be positive");
  if (!(search_horizon >= monitor_dt)) fail("need monitor_dt <= search_horizon");
  const double ratio = search_horizon / monitor_dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
    fail("search_horizon must be an integer multiple of monitor_dt");
  }
  if (!(duration > 0.0)) fail("duration must be positive");
  if (!(class_k_gain > 0.0)) fail("class_k_gain must be positive");
  if (!(validity_margin >= 0.0)) fail("validity_margin must be nonnegative");
  if (n_collocation < 2) fail("n_collocation must be at least 2");
  const int n = ModelDim(world);
  if (initial_lower.size() != n || initial_upper.size() != n) {
    fail("initial_state bounds must have " + std::to_string(n) + " entries");
  }
  if ((initial_lower.array() > initial_upper.array()).any()) fail("initial_state lower > upper");
  const bool di = world != World::kHighway;
  for (const PolicySpec* p : {&nominal, &backup}) {
    if (IsDoubleIntegratorPolicy(p->kind) != di) {
      fail(std::string("policy '") + std::string(KindName(p->kind)) + "' does not fit the world");
    }
    if (p->kind == PolicySpec::Kind::kPocketBackup && world != World::kHallway) {
      fail("pocket_backup needs the hallway world");
    }
  }
  switch (world) {
    case World::kDiSlice:
      if (!(di_slice.obstacle_radius > 0.0) || !(di_slice.a_max > 0.0)) {
        fail("obstacle_radius and a_max must be positive");
      }
      if (di_slice.grid_resolution < 2) fail("grid_resolution must be at least 2");
      if (!obstacles.empty()) fail("di_slice has no scripted obstacles");
      if (!(di_slice.strip_half_width > 0.0) || !(di_slice.strip_speed > 0.0)) {
        fail("strip_half_width and strip_speed must be positive");
      }
      if (!(di_slice.strip_velocity_weight >= 0.25 * di_slice.strip_cross * di_slice.strip_cross)) {
        fail("need strip_velocity_weight >= strip_cross^2 / 4");
      }
      break;
    case World::kHallway: {
      const HallwayWorld& w = hallway;
      if (!(w.half_width > w.robot_radius)) fail("corridor narrower than the robot");
      if (!(w.max_speed > 0.0) || !(w.max_accel > 0.0)) fail("max_speed and max_accel > 0");
      if (!(w.x_min < w.x_max)) fail("x_min must be below x_max");
      for (double hold : {w.pocket_hold_x, w.pocket_hold_y, w.goal_hold_x, w.goal_hold_y}) {
        if (!(hold > 0.0)) fail("terminal holds must be positive");
      }
      if (!(w.terminal_velocity_weight > 0.25 * w.terminal_cross * w.terminal_cross)) {
        fail("need terminal_velocity_weight > terminal_cross^2 / 4");
      }
      for (const auto& o : obstacles) {
        if (o.kind != ObstacleScript::Kind::kCorridorRunner) fail("hallway takes corridor_runner");
      }
      break;
    }
    case World::kHighway: {
      const HighwayWorld& w = highway;
      if (w.lanes <= 0 || !(w.lane_width > 0.0)) fail("lanes and lane_width must be positive");
      for (int lane : {w.nominal_lane, w.backup_lane, nominal.lane_index, backup.lane_index}) {
        if (lane < 0 || lane >= w.lanes) fail("lane index out of range");
      }
      if (!(w.s0_lateral > 0.0)) fail("s0_lateral must be positive");
      for (double scale : w.s0_scales) {
        if (!(scale > 0.0)) fail("s0_scales must be positive");
      }
      for (const auto& o : obstacles) {
        if (o.kind != ObstacleScript::Kind::kLaneRunner) fail("highway takes lane_runner");
      }
      break;
    }
  }
  for (const auto& o : obstacles) {
    if (!(o.extent > 0.0) || !(o.end_x > o.spawn_x)) fail("bad obstacle track");
  }
}

std::vector<std::string> BuiltinScenarioNames() { return {"di-slice", "reach-avoid", "highway"}; }

ScenarioConfig BuiltinScenario(const std::string& name) {
  if (name == "di-slice") return DiSliceConfig();
  if (name == "reach-avoid") return ReachAvoidConfig();
  if (name == "highway") return HighwayConfig();
  throw ConfigError("unknown scenario '" + name + "' (expected di-slice, reach-avoid or highway)");
}

ScenarioConfig ParseScenarioJson(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("scenario JSON: ") + e.what());
  }
  Reader r(j, "scenario");
  ScenarioConfig c;
  if (r.Has("base")) {
    std::string base;
    r.Get("base", base);
    c = BuiltinScenario(base);
  }
  r.Get("name", c.name);
  std::string world(WorldName(c.world));
  r.Get("world", world);
  c.world = ParseWorld(world);
  if (const json* v = r.Take("di_slice")) {
    Reader w(*v, "scenario.di_slice");
    DiSliceWorld& d = c.di_slice;
    w.Get("obstacle_radius", d.obstacle_radius);
    w.Get("a_max", d.a_max);
    w.Get("recovery_y", d.recovery_y);
    w.Get("strip_half_width", d.strip_half_width);
    w.Get("strip_speed", d.strip_speed);
    w.Get("strip_cross", d.strip_cross);
    w.Get("strip_velocity_weight", d.strip_velocity_weight);
    w.Get("slice_vx", d.slice_vx);
    w.Get("slice_vy", d.slice_vy);
    w.Get("window", d.window);
    w.Get("grid_resolution", d.grid_resolution);
    w.Finish();
  }
  if (const json* v = r.Take("hallway")) {
    Reader w(*v, "scenario.hallway");
    HallwayWorld& h = c.hallway;
    w.Get("x_min", h.x_min);
    w.Get("x_max", h.x_max);
    w.Get("half_width", h.half_width);
    w.Get("pocket_center_x", h.pocket_center_x);
    w.Get("pocket_width", h.pocket_width);
    w.Get("pocket_depth", h.pocket_depth);
    w.Get("robot_radius", h.robot_radius);
    w.Get("max_speed", h.max_speed);
    w.Get("max_accel", h.max_accel);
    w.Get("goal_region", h.goal_region);
    w.Get("pocket_hold_x", h.pocket_hold_x);
    w.Get("pocket_hold_y", h.pocket_hold_y);
    w.Get("goal_hold_x", h.goal_hold_x);
    w.Get("goal_hold_y", h.goal_hold_y);
    w.Get("terminal_cross", h.terminal_cross);
    w.Get("terminal_velocity_weight", h.terminal_velocity_weight);
    w.Finish();
  }
  if (const json* v = r.Take("highway")) {
    Reader w(*v, "scenario.highway");
    HighwayWorld& h = c.highway;
    w.Get("road_length", h.road_length);
    w.Get("lanes", h.lanes);
    w.Get("lane_width", h.lane_width);
    w.Get("nominal_lane", h.nominal_lane);
    w.Get("backup_lane", h.backup_lane);
    w.Get("vehicle_length", h.vehicle_length);
    w.Get("vehicle_width", h.vehicle_width);
    w.Get("s0_lateral", h.s0_lateral);
    w.Get("s0_scales", h.s0_scales);
    w.Get("goal_x", h.goal_x);
    if (const json* veh = w.Take("vehicle")) ReadVehicle(*veh, "scenario.highway.vehicle", h.vehicle);
    w.Finish();
  }
  if (const json* v = r.Take("nominal")) ReadPolicy(*v, "scenario.nominal", c.nominal);
  if (const json* v = r.Take("backup")) ReadPolicy(*v, "scenario.backup", c.backup);
  r.Get("class_k_gain", c.class_k_gain);
  r.Get("validity_margin", c.validity_margin);
  r.Get("monitor_dt", c.monitor_dt);
  r.Get("backup_horizon", c.backup_horizon);
  r.Get("search_horizon", c.search_horizon);
  r.Get("dt", c.dt);
  r.Get("duration", c.duration);
  r.Get("n_collocation", c.n_collocation);
  if (const json* v = r.Take("initial_state")) {
    Reader w(*v, "scenario.initial_state");
    w.Get("lower", c.initial_lower);
    w.Get("upper", c.initial_upper);
    w.Finish();
  }
  if (const json* v = r.Take("obstacles")) {
    if (!v->is_array()) throw ConfigError("scenario.obstacles: expected an array");
    c.obstacles.clear();
    for (size_t i = 0; i < v->size(); ++i) {
      ObstacleScript o;
      ReadObstacle((*v)[i], "scenario.obstacles[" + std::to_string(i) + "]", o);
      c.obstacles.push_back(o);
    }
  }
  r.Get("seed", c.seed);
  r.Finish();
  c.Validate();
  return c;
}

std::string ScenarioToJson(const ScenarioConfig& c) {
  json j;
  j["name"] = c.name;
  j["world"] = WorldName(c.world);
  switch (c.world) {
    case ScenarioConfig::World::kDiSlice: {
      const DiSliceWorld& d = c.di_slice;
      j["di_slice"] = {{"obstacle_radius", d.obstacle_radius},
                       {"a_max", d.a_max},
                       {"recovery_y", d.recovery_y},
                       {"strip_half_width", d.strip_half_width},
                       {"strip_speed", d.strip_speed},
                       {"strip_cross", d.strip_cross},
                       {"strip_velocity_weight", d.strip_velocity_weight},
                       {"slice_vx", d.slice_vx},
                       {"slice_vy", d.slice_vy},
                       {"window", BoxJson(d.window)},
                       {"grid_resolution", d.grid_resolution}};
      break;
    }
    case ScenarioConfig::World::kHallway: {
      const HallwayWorld& h = c.hallway;
      j["hallway"] = {{"x_min", h.x_min},
                      {"x_max", h.x_max},
                      {"half_width", h.half_width},
                      {"pocket_center_x", h.pocket_center_x},
                      {"pocket_width", h.pocket_width},
                      {"pocket_depth", h.pocket_depth},
                      {"robot_radius", h.robot_radius},
                      {"max_speed", h.max_speed},
                      {"max_accel", h.max_accel},
                      {"goal_region", BoxJson(h.goal_region)},
                      {"pocket_hold_x", h.pocket_hold_x},
                      {"pocket_hold_y", h.pocket_hold_y},
                      {"goal_hold_x", h.goal_hold_x},
                      {"goal_hold_y", h.goal_hold_y},
                      {"terminal_cross", h.terminal_cross},
                      {"terminal_velocity_weight", h.terminal_velocity_weight}};
      break;
    }
    case ScenarioConfig::World::kHighway: {
      const HighwayWorld& h = c.highway;
      j["highway"] = {{"road_length", h.road_length},
                      {"lanes", h.lanes},
                      {"lane_width", h.lane_width},
                      {"nominal_lane", h.nominal_lane},
                      {"backup_lane", h.backup_lane},
                      {"vehicle_length", h.vehicle_length},
                      {"vehicle_width", h.vehicle_width},
                      {"s0_lateral", h.s0_lateral},
                      {"s0_scales", h.s0_scales},
                      {"goal_x", h.goal_x},
                      {"vehicle", VehicleJson(h.vehicle)}};
      break;
    }
  }
  j["nominal"] = PolicyJson(c.nominal);
  j["backup"] = PolicyJson(c.backup);
  j["class_k_gain"] = c.class_k_gain;
  j["validity_margin"] = c.validity_margin;
  j["monitor_dt"] = c.monitor_dt;
  j["backup_horizon"] = c.backup_horizon;
  j["search_horizon"] = c.search_horizon;
  j["dt"] = c.dt;
  j["duration"] = c.duration;
  j["n_collocation"] = c.n_collocation;
  j["initial_state"] = {{"lower", StateJson(c.initial_lower)},
                        {"upper", StateJson(c.initial_upper)}};
  json obs = json::array();
  for (const ObstacleScript& o : c.obstacles) {
    obs.push_back({{"kind", ObstacleKindName(o.kind)},
                   {"speed", o.speed},
                   {"extent", o.extent},
                   {"width", o.width},
                   {"spawn_x", o.spawn_x},
                   {"end_x", Extended(o.end_x)},
                   {"offset", o.offset},
                   {"lane_y", o.lane_y}});
  }
  j["obstacles"] = obs;
  j["seed"] = c.seed;
  return j.dump(2);
}

ScenarioConfig LoadScenario(const std::string& name_or_path) {
  const auto names = BuiltinScenarioNames();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end()) {
    return BuiltinScenario(name_or_path);
  }
  std::ifstream in(name_or_path);
  if (!in) {
    throw ConfigError("'" + name_or_path +
                      "' is neither a built-in scenario (di-slice, reach-avoid, highway) nor a "
                      "readable file");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseScenarioJson(buf.str());
}

// ---- assembly --------------------------------------------------------------

ShieldContext Scenario::Shield() const {
  return ShieldContext(sys, config.monitor_dt, config.search_horizon);
}

BackupCbfContext Scenario::Bcbf() const {
  BackupCbfContext ctx;
  ctx.sys = sys;
  ctx.n_collocation = config.n_collocation;
  return ctx;
}

InactiveContexts Scenario::Inactive() const { return {Shield(), Bcbf()}; }

Scenario BuildScenario(const ScenarioConfig& config) {
  config.Validate();
  Scenario s;
  s.config = config;
  BackupSystem& sys = s.sys;
  sys.backup_horizon = config.backup_horizon;
  sys.dt = config.dt;
  sys.spec.rate = ClassKRate(config.class_k_gain);
  sys.spec.validity_margin = config.validity_margin;
  switch (config.world) {
    case ScenarioConfig::World::kDiSlice: {
      const DiSliceWorld& w = config.di_slice;
      sys.model = DoubleIntegrator(InputBounds::Symmetric(2, w.a_max));
      sys.spec.margin_c = DiskMargin(w.obstacle_radius);
      sys.spec.margin_s0 = StripMargin(w.recovery_y, w.strip_half_width, w.strip_speed,
                                         w.strip_cross, w.strip_velocity_weight);
      break;
    }
    case ScenarioConfig::World::kHallway: {
      const HallwayWorld& w = config.hallway;
      sys.model = DoubleIntegrator(InputBounds::Norm(2, w.max_accel), w.max_speed);
      sys.spec.margin_c = HallwayMarginC(w, config.obstacles);
      sys.spec.margin_s0 = HallwayMarginS0(w);
      const Box2 goal = w.goal_region;
      s.goal = [goal](double, const State& x) { return goal.Contains(x[0], x[1]); };
      break;
    }
    case ScenarioConfig::World::kHighway: {
      const HighwayWorld& w = config.highway;
      sys.model = Bicycle(w.vehicle);
      sys.spec.margin_c = HighwayMarginC(w, config.obstacles);
      sys.backup = MakePolicy(config, config.backup, sys.model.bounds);
      sys.spec.margin_s0 = HighwayMarginS0(w, sys.model, sys.backup, config.backup.v_ref);
      const double goal_x = w.goal_x;
      s.goal = [goal_x](double, const State& x) { return x[kPx] >= goal_x; };
      break;
    }
  }
  sys.spec.state_dim = sys.model.n;
  sys.nominal = MakePolicy(config, config.nominal, sys.model.bounds);
  sys.backup = MakePolicy(config, config.backup, sys.model.bounds);
  return s;
}

// ---- filters and episodes --------------------------------------------------

std::string_view FilterKindName(FilterKind kind) {
  switch (kind) {
    case FilterKind::kBcbf:
      return "bcbf";
    case FilterKind::kMps:
      return "mps";
    case FilterKind::kGk:
      return "gk";
    case FilterKind::kGkPar:
      return "gk-par";
  }
  return "unknown";
}

FilterKind ParseFilterKind(std::string_view name) {
  for (auto k : {FilterKind::kBcbf, FilterKind::kMps, FilterKind::kGk, FilterKind::kGkPar}) {
    if (FilterKindName(k) == name) return k;
  }
  throw ConfigError("unknown filter '" + std::string(name) +
                    "' (valid options: bcbf, mps, gk, gk-par)");
}

std::unique_ptr<SafetyFilter> MakeFilter(const Scenario& scenario, FilterKind kind,
                                         MonitorMode mode, std::shared_ptr<ThreadPool> pool) {
  switch (kind) {
    case FilterKind::kBcbf:
      return std::make_unique<BackupCbfFilter>(scenario.Bcbf());
    case FilterKind::kMps:
      return std::make_unique<MpsFilter>(scenario.Shield());
    case FilterKind::kGk:
      return std::make_unique<GatekeeperFilter>(scenario.Shield(), mode);
    case FilterKind::kGkPar:
      if (!pool) pool = std::make_shared<ThreadPool>(DefaultWorkerCount());
      return std::make_unique<GatekeeperFilter>(scenario.Shield(), mode, std::move(pool));
  }
  throw ConfigError("unsupported filter");
}

State SampleInitialState(const ScenarioConfig& config, int trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(config.seed & 0xffffffffu),
                    static_cast<std::uint32_t>(config.seed >> 32),
                    static_cast<std::uint32_t>(trial)};
  std::mt19937_64 rng(seq);
  State x = config.initial_lower;
  for (int i = 0; i < x.size(); ++i) {
    const double lo = config.initial_lower[i];
    const double hi = config.initial_upper[i];
    if (hi > lo) {
      // Explicit affine map; distribution objects are not portable across
      // standard libraries.
      const double u = std::generate_canonical<double, 53>(rng);
      x[i] = lo + u * (hi - lo);
    }
  }
  return x;
}

std::string_view StatusName(EpisodeStatus status) {
  switch (status) {
    case EpisodeStatus::kGoalReached:
      return "goal_reached";
    case EpisodeStatus::kTimeout:
      return "timeout";
    case EpisodeStatus::kViolation:
      return "violation";
    case EpisodeStatus::kDivergence:
      return "divergence";
  }
  return "unknown";
}

EpisodeLog RunEpisode(const Scenario& scenario, SafetyFilter& filter, const State& x0) {
  const ScenarioConfig& c = scenario.config;
  const BackupSystem& sys = scenario.sys;
  CheckDim(x0, sys.model.n, "episode");
  EpisodeLog log;
  log.scenario = c.name;
  log.filter = std::string(filter.name());
  filter.Reset();

  const int steps = static_cast<int>(std::ceil(c.duration / c.monitor_dt - 1e-9));
  State x = x0;
  for (int k = 0; k < steps; ++k) {
    StepRecord rec;
    rec.t = k * c.monitor_dt;
    rec.x = x;
    rec.margin_c = sys.spec.MarginC(rec.t, x);
    FilterDecision d;
    try {
      d = filter.Decide(rec.t, x);
    } catch (const DivergenceError& e) {
      log.status = EpisodeStatus::kDivergence;
      log.message = e.what();
      return log;
    }
    rec.u = d.input;
    rec.source = d.source;
    rec.switch_time = d.switch_time;
    rec.h_bcbf = d.h_bcbf;
    rec.compute_ms = d.compute_ms;

    if (scenario.goal && scenario.goal(rec.t, x)) {
      rec.min_margin_c = rec.margin_c;
      log.steps.push_back(rec);
      log.status = EpisodeStatus::kGoalReached;
      break;
    }

    // Monitor filters run the selected feedback law over the interval, as in
    // their certified candidates. Backup CBF inputs are held constant.
    const Input held = d.input;
    Policy applied = [held](double, const State&) { return held; };
    if (d.switch_time) applied = d.source == DecisionSource::kNominal ? sys.nominal : sys.backup;
    double min_margin = kInf;
    State next = x;
    try {
      Rollout(sys.model, applied, x, rec.t, c.monitor_dt, c.dt,
              [&](int, double t, const State& z) {
                min_margin = std::min(min_margin, sys.spec.MarginC(t, z));
                next = z;
                return true;
              });
    } catch (const DivergenceError& e) {
      log.steps.push_back(rec);
      log.status = EpisodeStatus::kDivergence;
      log.message = e.what();
      return log;
    }
    rec.min_margin_c = min_margin;
    log.steps.push_back(rec);
    if (min_margin < -sys.spec.validity_margin) {
      log.violation = true;
      log.status = EpisodeStatus::kViolation;
      break;
    }
    x = next;
  }
  return log;
}

Metrics ComputeMetrics(const EpisodeLog& log) {
  if (log.steps.empty()) throw std::invalid_argument("metrics: empty episode log");
  Metrics m;
  m.steps = static_cast<int>(log.steps.size());
  int nominal = 0;
  int with_ts = 0;
  double ts_sum = 0.0;
  double ms_sum = 0.0;
  m.min_margin_c = kInf;
  for (const StepRecord& r : log.steps) {
    if (r.source == DecisionSource::kNominal) ++nominal;
    if (r.switch_time) {
      ++with_ts;
      ts_sum += *r.switch_time;
    }
    ms_sum += r.compute_ms;
    m.min_margin_c = std::min(m.min_margin_c, r.min_margin_c);
  }
  m.nominal_fraction = 100.0 * nominal / m.steps;
  if (with_ts > 0) m.avg_switch_time = ts_sum / with_ts;
  m.avg_compute_ms = ms_sum / m.steps;
  m.reached_goal = log.status == EpisodeStatus::kGoalReached;
  m.violation = log.violation;
  return m;
}

LaneUsage AnalyzeLanes(const HighwayWorld& world, const EpisodeLog& log) {
  LaneUsage usage;
  const double y_nom = world.LaneCenter(world.nominal_lane);
  const double y_b = world.LaneCenter(world.backup_lane);
  const double half = 0.5 * world.lane_width;
  for (const StepRecord& r : log.steps) {
    const double dev = std::abs(r.x[kPy] - y_nom);
    usage.max_lateral_deviation = std::max(usage.max_lateral_deviation, dev);
    if (dev > half) usage.left_nominal_lane = true;
    if (std::abs(r.x[kPy] - y_b) < half) usage.entered_backup_lane = true;
  }
  return usage;
}

std::vector<State> SliceGrid(const Box2& window, double vx, double vy, int resolution) {
  if (resolution < 2) throw std::invalid_argument("slice grid: resolution must be >= 2");
  std::vector<State> grid;
  grid.reserve(static_cast<size_t>(resolution) * resolution);
  for (int j = 0; j < resolution; ++j) {
    const double y = window.y_min + (window.y_max - window.y_min) * j / (resolution - 1);
    for (int i = 0; i < resolution; ++i) {
      const double x = window.x_min + (window.x_max - window.x_min) * i / (resolution - 1);
      State s(4);
      s << x, y, vx, vy;
      grid.push_back(s);
    }
  }
  return grid;
}

std::vector<State> SliceGrid(const ScenarioConfig& config, int resolution) {
  if (config.world != ScenarioConfig::World::kDiSlice) {
    throw ConfigError(config.name + ": slice grids need the di_slice world");
  }
  const DiSliceWorld& w = config.di_slice;
  return SliceGrid(w.window, w.slice_vx, w.slice_vy, resolution);
}

}  // namespace shield
