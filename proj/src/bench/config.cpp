#include "adbench/bench/config.hpp"

#include <filesystem>
#include <nlohmann/json.hpp>

#include "adbench/error.hpp"
#include "adbench/mapkit/opendrive.hpp"

namespace adbench::bench {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

double get_or(const json& j, const char* key, double fallback) {
  return j.contains(key) ? j.at(key).get<double>() : fallback;
}

int get_or(const json& j, const char* key, int fallback) {
  return j.contains(key) ? j.at(key).get<int>() : fallback;
}

bool get_or(const json& j, const char* key, bool fallback) {
  return j.contains(key) ? j.at(key).get<bool>() : fallback;
}

void parse_vehicle(const json& j, BicycleParams& vehicle, Vec2* half = nullptr) {
  vehicle.wheelbase = get_or(j, "wheelbase", vehicle.wheelbase);
  vehicle.max_steer = get_or(j, "max_steer", vehicle.max_steer);
  vehicle.accel_min = get_or(j, "accel_min", vehicle.accel_min);
  vehicle.accel_max = get_or(j, "accel_max", vehicle.accel_max);
  vehicle.max_speed = get_or(j, "max_speed", vehicle.max_speed);
  if (half) {
    half->x() = get_or(j, "half_length", half->x());
    half->y() = get_or(j, "half_width", half->y());
  }
}

void parse_idm(const json& j, IdmParams& idm) {
  idm.desired_speed = get_or(j, "desired_speed", idm.desired_speed);
  idm.time_headway = get_or(j, "time_headway", idm.time_headway);
  idm.min_gap = get_or(j, "min_gap", idm.min_gap);
  idm.max_accel = get_or(j, "max_accel", idm.max_accel);
  idm.comfort_decel = get_or(j, "comfort_decel", idm.comfort_decel);
  idm.exponent = get_or(j, "exponent", idm.exponent);
}

}  // namespace

BenchConfig parse_config(const std::string& text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw Error(ErrorKind::Config, std::string("config is not valid JSON: ") + e.what());
  }

  BenchConfig config;
  config.base_dir = base_dir;
  config.version = get_or(j, "version", 1);
  if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
  config.jobs = get_or(j, "jobs", 1);
  if (config.jobs < 1) throw Error(ErrorKind::Config, "jobs must be >= 1");
  if (j.contains("output_dir")) config.output_dir = j.at("output_dir").get<std::string>();
  config.max_steps = get_or(j, "max_steps", config.max_steps);

  if (j.contains("planners")) {
    config.planners.clear();
    for (const auto& p : j.at("planners")) config.planners.push_back(p.get<std::string>());
  } else if (j.contains("planner")) {
    config.planners = {j.at("planner").get<std::string>()};
  }
  for (const std::string& p : config.planners) {
    if (p != "rule" && p != "mpc" && p != "external-replay") {
      throw Error(ErrorKind::Config, "unknown planner '" + p + "'");
    }
  }

  if (j.contains("scenario_files")) {
    for (const auto& f : j.at("scenario_files")) {
      config.scenario_files.push_back(f.get<std::string>());
    }
  }

  if (j.contains("map")) {
    const json& m = j.at("map");
    config.map_spacing = get_or(m, "spacing", config.map_spacing);
    config.default_speed_limit = get_or(m, "default_speed_limit", config.default_speed_limit);
  }
  if (j.contains("score")) {
    config.segment_extent = get_or(j.at("score"), "segment_extent", config.segment_extent);
  }

  if (j.contains("sim")) {
    const json& s = j.at("sim");
    config.sim.dt = get_or(s, "dt", config.sim.dt);
    config.sim.block_timeout_s = get_or(s, "block_timeout_s", config.sim.block_timeout_s);
    config.sim.deviation_threshold_m =
        get_or(s, "deviation_threshold_m", config.sim.deviation_threshold_m);
    config.sim.completion_tolerance_m =
        get_or(s, "completion_tolerance_m", config.sim.completion_tolerance_m);
  }
  if (j.contains("vehicle")) {
    parse_vehicle(j.at("vehicle"), config.sim.vehicle, &config.sim.ego_half);
    config.rule_planner.vehicle = config.sim.vehicle;
    config.rule_planner.ego_half = config.sim.ego_half;
    config.mpc_planner.vehicle = config.sim.vehicle;
    config.mpc_planner.ego_half = config.sim.ego_half;
  }

  if (j.contains("rule_planner")) {
    const json& r = j.at("rule_planner");
    auto& rp = config.rule_planner;
    rp.speed_cap_factor = get_or(r, "speed_cap_factor", rp.speed_cap_factor);
    rp.clearance = get_or(r, "clearance", rp.clearance);
    rp.lookahead_min = get_or(r, "lookahead_min", rp.lookahead_min);
    rp.lookahead_time = get_or(r, "lookahead_time", rp.lookahead_time);
    rp.detection_range = get_or(r, "detection_range", rp.detection_range);
    rp.corridor_halfwidth = get_or(r, "corridor_halfwidth", rp.corridor_halfwidth);
    rp.slow_obstacle_speed = get_or(r, "slow_obstacle_speed", rp.slow_obstacle_speed);
    rp.detour_ramp = get_or(r, "detour_ramp", rp.detour_ramp);
    rp.detour_pad = get_or(r, "detour_pad", rp.detour_pad);
    rp.group_merge_gap = get_or(r, "group_merge_gap", rp.group_merge_gap);
    rp.forecast_horizon = get_or(r, "forecast_horizon", rp.forecast_horizon);
    rp.forecast_dt = get_or(r, "forecast_dt", rp.forecast_dt);
    rp.idm_candidate_horizon = get_or(r, "idm_candidate_horizon", rp.idm_candidate_horizon);
    rp.vehicle_inflation = get_or(r, "vehicle_inflation", rp.vehicle_inflation);
    rp.pedestrian_inflation = get_or(r, "pedestrian_inflation", rp.pedestrian_inflation);
    rp.ego_inflation = get_or(r, "ego_inflation", rp.ego_inflation);
    rp.throttle_accel_gain = get_or(r, "throttle_accel_gain", rp.throttle_accel_gain);
    rp.brake_accel_gain = get_or(r, "brake_accel_gain", rp.brake_accel_gain);
    rp.max_lateral_accel = get_or(r, "max_lateral_accel", rp.max_lateral_accel);
    rp.stop_zone_length = get_or(r, "stop_zone_length", rp.stop_zone_length);
    rp.max_lateral_fallback = get_or(r, "max_lateral_fallback", rp.max_lateral_fallback);
    if (r.contains("idm")) parse_idm(r.at("idm"), rp.idm);
    if (r.contains("pid")) {
      const json& p = r.at("pid");
      rp.pid.kp = get_or(p, "kp", rp.pid.kp);
      rp.pid.ki = get_or(p, "ki", rp.pid.ki);
      rp.pid.kd = get_or(p, "kd", rp.pid.kd);
      rp.pid.speed_ref = get_or(p, "speed_ref", rp.pid.speed_ref);
      rp.pid.integral_limit = get_or(p, "integral_limit", rp.pid.integral_limit);
    }
    if (r.contains("longitudinal")) {
      const json& l = r.at("longitudinal");
      auto& lg = rp.longitudinal;
      lg.w_bias = get_or(l, "w_bias", lg.w_bias);
      lg.w_v = get_or(l, "w_v", lg.w_v);
      lg.w_target = get_or(l, "w_target", lg.w_target);
      lg.w_dv = get_or(l, "w_dv", lg.w_dv);
      lg.dv_saturation = get_or(l, "dv_saturation", lg.dv_saturation);
      lg.ratio_saturation = get_or(l, "ratio_saturation", lg.ratio_saturation);
    }
  }

  if (j.contains("mpc_planner")) {
    const json& m = j.at("mpc_planner");
    auto& mp = config.mpc_planner;
    mp.horizon = get_or(m, "horizon", mp.horizon);
    mp.dt = get_or(m, "dt", mp.dt);
    mp.terminal_weight = get_or(m, "terminal_weight", mp.terminal_weight);
    mp.steer_rate_weight = get_or(m, "steer_rate_weight", mp.steer_rate_weight);
    mp.dyn_weight = get_or(m, "dyn_weight", mp.dyn_weight);
    mp.d_safe = get_or(m, "d_safe", mp.d_safe);
    mp.d_safe_soft = get_or(m, "d_safe_soft", mp.d_safe_soft);
    mp.d_tol = get_or(m, "d_tol", mp.d_tol);
    mp.dyn_margin = get_or(m, "dyn_margin", mp.dyn_margin);
    mp.eps_constraint = get_or(m, "eps_constraint", mp.eps_constraint);
    mp.eps_kkt = get_or(m, "eps_kkt", mp.eps_kkt);
    mp.max_outer = get_or(m, "max_outer", mp.max_outer);
    mp.max_inner = get_or(m, "max_inner", mp.max_inner);
    mp.mu_init = get_or(m, "mu_init", mp.mu_init);
    mp.mu_growth = get_or(m, "mu_growth", mp.mu_growth);
    mp.mu_max = get_or(m, "mu_max", mp.mu_max);
    mp.seed_grid = get_or(m, "seed_grid", mp.seed_grid);
    mp.dest_speed_floor = get_or(m, "dest_speed_floor", mp.dest_speed_floor);
    mp.dest_speed_cap_factor = get_or(m, "dest_speed_cap_factor", mp.dest_speed_cap_factor);
    mp.exponential_dyn_cost = get_or(m, "exponential_dyn_cost", mp.exponential_dyn_cost);
    mp.multimode_dyn_cost = get_or(m, "multimode_dyn_cost", mp.multimode_dyn_cost);
    mp.vehicle_inflation = get_or(m, "vehicle_inflation", mp.vehicle_inflation);
    mp.pedestrian_inflation = get_or(m, "pedestrian_inflation", mp.pedestrian_inflation);
    mp.stopped_resolve_interval =
        get_or(m, "stopped_resolve_interval", mp.stopped_resolve_interval);
  }

  if (j.contains("penalties")) {
    for (const auto& [key, value] : j.at("penalties").items()) {
      const auto kind = sim::infraction_from_string(key);
      if (!kind) throw Error(ErrorKind::Config, "unknown infraction kind '" + key + "'");
      config.penalties.coefficients[*kind] = value.get<double>();
    }
  }
  return config;
}

BenchConfig load_config(const std::string& path) {
  const std::string text = mapkit::read_text_file(path);
  const std::string base = std::filesystem::path(path).parent_path().string();
  BenchConfig config = parse_config(text, base);
  for (const std::string& file : config.scenario_files) {
    const std::string resolved = resolve_path(config, file);
    if (!std::filesystem::exists(resolved)) {
      throw Error(ErrorKind::Config, "scenario file not found: " + resolved);
    }
  }
  return config;
}

std::string resolve_path(const BenchConfig& config, const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_absolute() || config.base_dir.empty()) return path;
  return (std::filesystem::path(config.base_dir) / p).string();
}

ScenarioFile load_scenario_file(const std::string& path) {
  json j;
  try {
    j = json::parse(mapkit::read_text_file(path));
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorKind::Config, path + ": not valid JSON: " + e.what());
  }

  ScenarioFile file;
  file.path = path;
  try {
    file.name = j.contains("name") ? j.at("name").get<std::string>()
                                   : std::filesystem::path(path).stem().string();
    // Map paths are relative to the scenario file.
    std::filesystem::path map_path(j.at("map").get<std::string>());
    if (!map_path.is_absolute()) {
      map_path = (std::filesystem::path(path).parent_path() / map_path).lexically_normal();
    }
    file.map_path = map_path.string();
    const json& route = j.at("route");
    file.start_lane = route.at("start_lane").get<std::string>();
    file.start_s = route.at("start_s").get<double>();
    file.goal_lane = route.at("goal_lane").get<std::string>();
    file.goal_s = route.at("goal_s").get<double>();
    if (j.contains("scenarios")) {
      for (const auto& s : j.at("scenarios")) {
        sim::ScenarioSpec spec;
        spec.template_name = s.at("template").get<std::string>();
        spec.anchor_s = s.at("anchor_s").get<double>();
        spec.trigger_distance = get_or(s, "trigger_distance", 20.0);
        if (s.contains("seed")) spec.seed = s.at("seed").get<std::uint64_t>();
        if (s.contains("params")) {
          for (const auto& [key, value] : s.at("params").items()) {
            spec.params[key] = value.get<double>();
          }
        }
        file.scenarios.push_back(std::move(spec));
      }
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorKind::Config, path + ": " + e.what());
  }
  return file;
}

std::string default_config_text() {
  const BenchConfig d;
  ordered_json j;
  j["version"] = 1;
  j["seed"] = 0;
  j["jobs"] = d.jobs;
  j["output_dir"] = d.output_dir;
  j["planners"] = d.planners;
  j["scenario_files"] = json::array();
  j["max_steps"] = d.max_steps;
  j["map"] = {{"spacing", d.map_spacing}, {"default_speed_limit", d.default_speed_limit}};
  j["score"] = {{"segment_extent", d.segment_extent}};
  j["sim"] = {{"dt", d.sim.dt},
              {"block_timeout_s", d.sim.block_timeout_s},
              {"deviation_threshold_m", d.sim.deviation_threshold_m},
              {"completion_tolerance_m", d.sim.completion_tolerance_m}};
  j["vehicle"] = {{"wheelbase", d.sim.vehicle.wheelbase},
                  {"max_steer", d.sim.vehicle.max_steer},
                  {"accel_min", d.sim.vehicle.accel_min},
                  {"accel_max", d.sim.vehicle.accel_max},
                  {"max_speed", d.sim.vehicle.max_speed},
                  {"half_length", d.sim.ego_half.x()},
                  {"half_width", d.sim.ego_half.y()}};
  const auto& rp = d.rule_planner;
  j["rule_planner"] = {
      {"speed_cap_factor", rp.speed_cap_factor},
      {"clearance", rp.clearance},
      {"lookahead_min", rp.lookahead_min},
      {"lookahead_time", rp.lookahead_time},
      {"detection_range", rp.detection_range},
      {"corridor_halfwidth", rp.corridor_halfwidth},
      {"slow_obstacle_speed", rp.slow_obstacle_speed},
      {"detour_ramp", rp.detour_ramp},
      {"detour_pad", rp.detour_pad},
      {"group_merge_gap", rp.group_merge_gap},
      {"forecast_horizon", rp.forecast_horizon},
      {"forecast_dt", rp.forecast_dt},
      {"idm_candidate_horizon", rp.idm_candidate_horizon},
      {"vehicle_inflation", rp.vehicle_inflation},
      {"pedestrian_inflation", rp.pedestrian_inflation},
      {"ego_inflation", rp.ego_inflation},
      {"throttle_accel_gain", rp.throttle_accel_gain},
      {"brake_accel_gain", rp.brake_accel_gain},
      {"max_lateral_accel", rp.max_lateral_accel},
      {"stop_zone_length", rp.stop_zone_length},
      {"max_lateral_fallback", rp.max_lateral_fallback},
      {"idm",
       {{"desired_speed", rp.idm.desired_speed},
        {"time_headway", rp.idm.time_headway},
        {"min_gap", rp.idm.min_gap},
        {"max_accel", rp.idm.max_accel},
        {"comfort_decel", rp.idm.comfort_decel},
        {"exponent", rp.idm.exponent}}},
      {"pid",
       {{"kp", rp.pid.kp},
        {"ki", rp.pid.ki},
        {"kd", rp.pid.kd},
        {"speed_ref", rp.pid.speed_ref},
        {"integral_limit", rp.pid.integral_limit}}},
      {"longitudinal",
       {{"w_bias", rp.longitudinal.w_bias},
        {"w_v", rp.longitudinal.w_v},
        {"w_target", rp.longitudinal.w_target},
        {"w_dv", rp.longitudinal.w_dv},
        {"dv_saturation", rp.longitudinal.dv_saturation},
        {"ratio_saturation", rp.longitudinal.ratio_saturation}}},
  };
  const auto& mp = d.mpc_planner;
  j["mpc_planner"] = {{"horizon", mp.horizon},
                      {"dt", mp.dt},
                      {"terminal_weight", mp.terminal_weight},
                      {"steer_rate_weight", mp.steer_rate_weight},
                      {"dyn_weight", mp.dyn_weight},
                      {"d_safe", mp.d_safe},
                      {"d_safe_soft", mp.d_safe_soft},
                      {"d_tol", mp.d_tol},
                      {"dyn_margin", mp.dyn_margin},
                      {"eps_constraint", mp.eps_constraint},
                      {"eps_kkt", mp.eps_kkt},
                      {"max_outer", mp.max_outer},
                      {"max_inner", mp.max_inner},
                      {"mu_init", mp.mu_init},
                      {"mu_growth", mp.mu_growth},
                      {"mu_max", mp.mu_max},
                      {"seed_grid", mp.seed_grid},
                      {"dest_speed_floor", mp.dest_speed_floor},
                      {"dest_speed_cap_factor", mp.dest_speed_cap_factor},
                      {"exponential_dyn_cost", mp.exponential_dyn_cost},
                      {"multimode_dyn_cost", mp.multimode_dyn_cost},
                      {"vehicle_inflation", mp.vehicle_inflation},
                      {"pedestrian_inflation", mp.pedestrian_inflation},
                      {"stopped_resolve_interval", mp.stopped_resolve_interval}};
  ordered_json penalties;
  for (const auto& [kind, value] : d.penalties.coefficients) {
    penalties[sim::to_string(kind)] = value;
  }
  j["penalties"] = penalties;
  return j.dump(2) + "\n";
}

}  // namespace adbench::bench
