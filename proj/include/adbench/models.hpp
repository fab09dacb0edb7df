#pragma once

#include "adbench/geometry.hpp"

namespace adbench {

// Planar vehicle state [x, y, psi, v].
struct EgoState {
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;
  double v = 0.0;

  Vec2 position() const { return {x, y}; }
  Vec4 vec() const { return {x, y, psi, v}; }
  static EgoState from_vec(const Vec4& s) { return {s[0], s[1], s[2], s[3]}; }
};

struct ControlInput {
  double steer = 0.0;  // rad
  double accel = 0.0;  // m/s^2
};

struct BicycleParams {
  double wheelbase = 2.875;  // m
  double max_steer = 1.22;   // rad
  double accel_min = -6.0;   // m/s^2
  double accel_max = 3.0;    // m/s^2
  double max_speed = 35.0;   // m/s
};

struct StepDiagnostics {
  bool steer_clamped = false;
  bool accel_clamped = false;
  bool speed_clamped = false;
};

// Forward-Euler kinematic bicycle update over one step of dt in (0, 0.5].
// Controls outside the admissible box are clamped and flagged. Speed is kept
// in [0, max_speed] and heading wrapped to (-pi, pi].
EgoState bicycle_step(const EgoState& state, const ControlInput& control, double dt,
                      const BicycleParams& params, StepDiagnostics* diag = nullptr);

// RK4 integration of the same dynamics, for reference solutions only.
EgoState bicycle_step_rk4(const EgoState& state, const ControlInput& control, double dt,
                          const BicycleParams& params);

struct IdmParams {
  double desired_speed = 10.0;   // v0, m/s
  double time_headway = 1.5;     // T, s
  double min_gap = 2.0;          // s0, m
  double max_accel = 2.0;        // m/s^2
  double comfort_decel = 2.0;    // b, m/s^2
  double exponent = 4.0;
};

// Intelligent Driver Model acceleration. Pass gap = +inf for a free road.
// gap <= 0 returns the emergency value -2b and sets *emergency.
double idm_accel(double v, double gap, double leader_speed, const IdmParams& params,
                 bool* emergency = nullptr);

// Gap at which idm_accel is zero for v == leader_speed (closed form).
double idm_equilibrium_gap(double v, const IdmParams& params);

struct PidGains {
  double kp = 1.1;
  double ki = 0.05;
  double kd = 0.15;
  double speed_ref = 10.0;       // m/s, velocity scaling reference
  double integral_limit = 0.5;
};

// Controller state owned by the caller; one instance per planner.
struct PidState {
  double integral = 0.0;
  double prev_error = 0.0;
  bool has_prev = false;
  bool degenerate_aim = false;  // set when the last aim point was too close
};

// Velocity-scaled PID steering toward an aim point. Output is scaled by
// speed_ref / (speed_ref + v) and clamped to +-max_steer.
double pid_steer(const EgoState& state, const Vec2& aim_point, const PidGains& gains,
                 double dt, PidState& pid, double max_steer = kPi / 2.0);

struct LongitudinalParams {
  // throttle = w_bias + w_v * v + w_target * v_target + w_dv * (v_target - v)
  double w_bias = 0.3;
  double w_v = 0.0;
  double w_target = 0.0;
  double w_dv = 0.5;
  double dv_saturation = 0.53;     // m/s
  double ratio_saturation = 1.03;  // dimensionless
};

struct LongitudinalCommand {
  double throttle = 0.0;  // [0, 1]
  double brake = 0.0;     // [0, 1]
};

// Saturating regression controller: full throttle when the target exceeds the
// current speed by more than dv_saturation, full brake when the speed ratio
// exceeds ratio_saturation (or the target is zero), regression in between.
LongitudinalCommand longitudinal_control(double v, double v_target,
                                         const LongitudinalParams& params);

}  // namespace adbench
