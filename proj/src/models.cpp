#include "adbench/models.hpp"

#include "adbench/error.hpp"

namespace adbench {

namespace {

void check_finite(const EgoState& s, const ControlInput& u) {
  if (!std::isfinite(s.x) || !std::isfinite(s.y) || !std::isfinite(s.psi) ||
      !std::isfinite(s.v) || !std::isfinite(u.steer) || !std::isfinite(u.accel)) {
    throw Error(ErrorKind::Numeric, "non-finite state or control in bicycle_step");
  }
}

}  // namespace

EgoState bicycle_step(const EgoState& state, const ControlInput& control, double dt,
                      const BicycleParams& params, StepDiagnostics* diag) {
  check_finite(state, control);
  if (!(dt > 0.0 && dt <= 0.5)) {
    throw Error(ErrorKind::Numeric, "bicycle_step dt out of (0, 0.5]");
  }

  double steer = control.steer;
  double accel = control.accel;
  StepDiagnostics local;
  if (steer > params.max_steer || steer < -params.max_steer) {
    steer = std::clamp(steer, -params.max_steer, params.max_steer);
    local.steer_clamped = true;
  }
  if (accel > params.accel_max || accel < params.accel_min) {
    accel = std::clamp(accel, params.accel_min, params.accel_max);
    local.accel_clamped = true;
  }

  EgoState next;
  next.x = state.x + state.v * std::cos(state.psi) * dt;
  next.y = state.y + state.v * std::sin(state.psi) * dt;
  next.psi = wrap_angle(state.psi + state.v / params.wheelbase * std::tan(steer) * dt);
  next.v = state.v + accel * dt;
  if (next.v < 0.0 || next.v > params.max_speed) {
    next.v = std::clamp(next.v, 0.0, params.max_speed);
    local.speed_clamped = true;
  }
  if (diag) *diag = local;
  return next;
}

EgoState bicycle_step_rk4(const EgoState& state, const ControlInput& control, double dt,
                          const BicycleParams& params) {
  check_finite(state, control);
  const double steer = std::clamp(control.steer, -params.max_steer, params.max_steer);
  const double accel = std::clamp(control.accel, params.accel_min, params.accel_max);

  const auto deriv = [&](const Vec4& s) -> Vec4 {
    return {s[3] * std::cos(s[2]), s[3] * std::sin(s[2]),
            s[3] / params.wheelbase * std::tan(steer), accel};
  };
  const Vec4 s0 = state.vec();
  const Vec4 k1 = deriv(s0);
  const Vec4 k2 = deriv(s0 + 0.5 * dt * k1);
  const Vec4 k3 = deriv(s0 + 0.5 * dt * k2);
  const Vec4 k4 = deriv(s0 + dt * k3);
  Vec4 s1 = s0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  s1[2] = wrap_angle(s1[2]);
  s1[3] = std::clamp(s1[3], 0.0, params.max_speed);
  return EgoState::from_vec(s1);
}

double idm_accel(double v, double gap, double leader_speed, const IdmParams& params,
                 bool* emergency) {
  if (emergency) *emergency = false;
  if (gap <= 0.0) {
    if (emergency) *emergency = true;
    return -2.0 * params.comfort_decel;
  }
  const double free_term = std::pow(v / params.desired_speed, params.exponent);
  double interaction = 0.0;
  if (std::isfinite(gap)) {
    const double dv = v - leader_speed;
    // Dynamic part of the desired gap clamped at zero (standard formulation);
    // without the clamp the squared ratio loses monotonicity in v when the
    // leader is faster.
    const double dynamic = v * params.time_headway +
                           v * dv / (2.0 * std::sqrt(params.max_accel * params.comfort_decel));
    const double s_star = params.min_gap + std::max(0.0, dynamic);
    const double ratio = s_star / gap;
    interaction = ratio * ratio;
  }
  const double a = params.max_accel * (1.0 - free_term - interaction);
  return std::clamp(a, -2.0 * params.comfort_decel, params.max_accel);
}

double idm_equilibrium_gap(double v, const IdmParams& params) {
  const double s_star = params.min_gap + v * params.time_headway;
  const double denom = 1.0 - std::pow(v / params.desired_speed, params.exponent);
  return s_star / std::sqrt(denom);
}

double pid_steer(const EgoState& state, const Vec2& aim_point, const PidGains& gains,
                 double dt, PidState& pid, double max_steer) {
  const Vec2 to_aim = aim_point - state.position();
  pid.degenerate_aim = to_aim.norm() < 0.1;
  if (pid.degenerate_aim) return 0.0;

  const double error = angle_diff(std::atan2(to_aim.y(), to_aim.x()), state.psi);
  pid.integral = std::clamp(pid.integral + error * dt, -gains.integral_limit,
                            gains.integral_limit);
  const double deriv = pid.has_prev ? (error - pid.prev_error) / dt : 0.0;
  pid.prev_error = error;
  pid.has_prev = true;

  const double scale = gains.speed_ref / (gains.speed_ref + std::max(0.0, state.v));
  const double out = (gains.kp * error + gains.ki * pid.integral + gains.kd * deriv) * scale;
  return std::clamp(out, -max_steer, max_steer);
}

LongitudinalCommand longitudinal_control(double v, double v_target,
                                         const LongitudinalParams& params) {
  if (v_target - v > params.dv_saturation) return {1.0, 0.0};
  if (v_target > 0.0 && v / v_target > params.ratio_saturation) return {0.0, 1.0};
  if (v_target <= 0.0) return {0.0, 1.0};
  const double throttle =
      params.w_bias + params.w_v * v + params.w_target * v_target + params.w_dv * (v_target - v);
  return {std::clamp(throttle, 0.0, 1.0), 0.0};
}

}  // namespace adbench
