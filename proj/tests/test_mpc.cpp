#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "adbench/error.hpp"
#include "adbench/planner/mpc_planner.hpp"

using namespace adbench;
using namespace adbench::planner;

namespace {

Route straight_route(double length = 200.0, double limit = 13.89) {
  std::vector<mapkit::RouteWaypoint> wps;
  for (double s = 0.0; s <= length + 1e-9; s += 1.0) wps.push_back({{s, 0.0}, 0.0, limit});
  return Route::from_waypoints(std::move(wps));
}

NlpProblem empty_problem(const MpcParams& params, const EgoState& ego) {
  NlpProblem p;
  p.horizon = params.horizon;
  p.dt = params.dt;
  p.initial_state = ego;
  p.statics.assign(static_cast<std::size_t>(params.horizon), {});
  p.softs.assign(static_cast<std::size_t>(params.horizon), {});
  return p;
}

// Independent evaluation of the receding-horizon objective, reimplemented
// from the formula (terminal deviation + steering-rate smoothness + squared
// hinge collision cost).
double oracle_objective(const NlpProblem& p, const MpcParams& params, const VectorXd& u) {
  std::vector<EgoState> states(static_cast<std::size_t>(p.horizon) + 1, p.initial_state);
  for (int k = 0; k < p.horizon; ++k) {
    states[static_cast<std::size_t>(k) + 1] =
        bicycle_step(states[static_cast<std::size_t>(k)], {u[2 * k], u[2 * k + 1]}, p.dt,
                     params.vehicle);
  }
  double j = params.terminal_weight *
             (states[static_cast<std::size_t>(p.horizon) - 1].position() - p.destination)
                 .squaredNorm();
  for (int k = 1; k < p.horizon; ++k) {
    const double d = u[2 * k] - u[2 * (k - 1)];
    j += params.steer_rate_weight * d * d;
  }
  for (int k = 0; k < p.horizon; ++k) {
    const Vec2 pk = states[static_cast<std::size_t>(k)].position();
    for (const auto& agent : p.dynamics) {
      const double r = agent.radius[static_cast<std::size_t>(k)];
      const double hinge =
          std::max(0.0, r * r - (pk - agent.position[static_cast<std::size_t>(k)]).squaredNorm());
      j += params.dyn_weight * agent.weight * hinge * hinge;
    }
  }
  return j;
}

bool oracle_feasible(const NlpProblem& p, const MpcParams& params, const VectorXd& u,
                     double tolerance) {
  std::vector<EgoState> states(static_cast<std::size_t>(p.horizon) + 1, p.initial_state);
  for (int k = 0; k < p.horizon; ++k) {
    states[static_cast<std::size_t>(k) + 1] =
        bicycle_step(states[static_cast<std::size_t>(k)], {u[2 * k], u[2 * k + 1]}, p.dt,
                     params.vehicle);
  }
  if ((states[0].position() - p.waypoint_first).norm() > params.d_tol + tolerance) return false;
  if ((states[static_cast<std::size_t>(p.horizon) - 1].position() - p.waypoint_last).norm() >
      params.d_tol + tolerance) {
    return false;
  }
  for (int k = 0; k < p.horizon; ++k) {
    const Vec2 pk = states[static_cast<std::size_t>(k)].position();
    for (const Vec2& o : p.statics[static_cast<std::size_t>(k)]) {
      if ((pk - o).norm() < params.d_safe - tolerance) return false;
    }
    for (const Vec2& o : p.softs[static_cast<std::size_t>(k)]) {
      if ((pk - o).norm() < params.d_safe_soft - tolerance) return false;
    }
  }
  return true;
}

// Constant-control 21x21 grid search; returns the best feasible objective.
double grid_oracle(const NlpProblem& p, const MpcParams& params) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 21; ++i) {
    const double steer = -params.vehicle.max_steer + 2.0 * params.vehicle.max_steer * i / 20.0;
    for (int j = 0; j < 21; ++j) {
      const double accel =
          params.vehicle.accel_min + (params.vehicle.accel_max - params.vehicle.accel_min) * j / 20.0;
      VectorXd u(2 * p.horizon);
      for (int k = 0; k < p.horizon; ++k) {
        u[2 * k] = steer;
        u[2 * k + 1] = accel;
      }
      if (!oracle_feasible(p, params, u, params.eps_constraint)) continue;
      best = std::min(best, oracle_objective(p, params, u));
    }
  }
  return best;
}

NlpProblem crossing_problem(const MpcParams& params) {
  // Predicted vehicle cutting across the ego path from the left.
  NlpProblem p = empty_problem(params, {0, 0, 0, 10});
  p.destination = {20.0, 0.0};
  p.waypoint_first = {0.0, 0.0};
  p.waypoint_last = {20.0, 0.0};
  DynAgentSlices agent;
  for (int k = 0; k < params.horizon; ++k) {
    const double t = (k + 1) * params.dt;
    agent.position.push_back({11.0, 8.0 - 5.0 * t});  // crosses y=0 at t = 1.6 s
    agent.radius.push_back(2.5);
  }
  p.dynamics.push_back(agent);
  return p;
}

}  // namespace

TEST_CASE("analytic gradient matches central finite differences") {
  MpcParams params;
  NlpProblem p = crossing_problem(params);
  // Add statics and a soft point so every term participates. (The gradient is
  // checked on the raw objective; constraints are exercised through the AL in
  // the solve tests.)
  for (int k = 0; k < params.horizon; ++k) {
    p.statics[static_cast<std::size_t>(k)] = {{9.0, 1.5}};
    p.softs[static_cast<std::size_t>(k)] = {{14.0, -2.0}};
  }

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> steer(-0.4, 0.4), accel(-2.0, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    VectorXd u(2 * params.horizon);
    for (int k = 0; k < params.horizon; ++k) {
      u[2 * k] = steer(rng);
      u[2 * k + 1] = accel(rng);
    }
    VectorXd grad(u.size());
    grad.setZero();
    objective_with_gradient(p, params, u, &grad);

    VectorXd fd(u.size());
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      VectorXd up = u, down = u;
      up[i] += h;
      down[i] -= h;
      fd[i] = (objective_with_gradient(p, params, up, nullptr) -
               objective_with_gradient(p, params, down, nullptr)) /
              (2.0 * h);
    }
    const double rel = (grad - fd).norm() / std::max(1.0, fd.norm());
    CHECK(rel <= 1e-4);
  }
}

TEST_CASE("empty straight: optimal, tight terminal, beats the grid oracle") {
  MpcParams params;
  const Route route = straight_route();
  const NlpProblem p = build_nlp({0, 0, 0, 10}, route, {}, {}, params);
  CHECK(p.destination.x() == doctest::Approx(20.0));  // 10 m/s over the 2 s horizon

  const MpcSolution sol = solve(p, params);
  CHECK(sol.status == SolveStatus::Optimal);
  CHECK(sol.max_violation <= params.eps_constraint);
  const Vec2 terminal = sol.states[static_cast<std::size_t>(params.horizon) - 1].position();
  CHECK((terminal - p.destination).norm() <= 0.5);

  const double oracle = grid_oracle(p, params);
  CHECK(sol.objective <= oracle + 1e-9);
}

TEST_CASE("static obstacle: optimal and clear of the margin") {
  MpcParams params;
  params.d_safe = 3.0;
  const Route route = straight_route();
  NlpProblem p = build_nlp({0, 0, 0, 10}, route, {}, {{10.0, 0.0}}, params);

  const MpcSolution sol = solve(p, params);
  CHECK(sol.status == SolveStatus::Optimal);
  CHECK(sol.max_violation <= params.eps_constraint);
  double min_dist = std::numeric_limits<double>::infinity();
  for (int k = 0; k < params.horizon; ++k) {
    min_dist = std::min(min_dist,
                        (sol.states[static_cast<std::size_t>(k)].position() - Vec2{10.0, 0.0}).norm());
  }
  CHECK(min_dist >= params.d_safe - params.eps_constraint);

  // A hand-built constant-steer swerve proves the problem is feasible.
  {
    VectorXd swerve(2 * params.horizon);
    for (int k = 0; k < params.horizon; ++k) {
      swerve[2 * k] = k < 7 ? 0.35 : (k < 14 ? -0.35 : 0.0);
      swerve[2 * k + 1] = 0.0;
    }
    bool clear = true;
    std::vector<EgoState> states(static_cast<std::size_t>(params.horizon) + 1, p.initial_state);
    for (int k = 0; k < params.horizon; ++k) {
      states[static_cast<std::size_t>(k) + 1] =
          bicycle_step(states[static_cast<std::size_t>(k)], {swerve[2 * k], swerve[2 * k + 1]},
                       params.dt, params.vehicle);
      if ((states[static_cast<std::size_t>(k)].position() - Vec2{10.0, 0.0}).norm() <
          params.d_safe) {
        clear = false;
      }
    }
    CHECK(clear);
  }

  const double oracle = grid_oracle(p, params);
  if (std::isfinite(oracle)) CHECK(sol.objective <= oracle + 1e-9);
}

TEST_CASE("crossing vehicle: optimal and at least as good as the grid") {
  MpcParams params;
  const NlpProblem p = crossing_problem(params);
  const MpcSolution sol = solve(p, params);
  CHECK(sol.status == SolveStatus::Optimal);
  CHECK(sol.max_violation <= params.eps_constraint);
  const double oracle = grid_oracle(p, params);
  CHECK(sol.objective <= oracle + 1e-9);
}

TEST_CASE("stationary optimum at the route end: zero controls, near-zero objective") {
  MpcParams params;
  const Route route = straight_route();
  // Parked at the route end: the destination clamps to the ego position.
  const NlpProblem p = build_nlp({200, 0, 0, 0}, route, {}, {}, params);
  const MpcSolution sol = solve(p, params);
  CHECK(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective <= 1e-6);
  CHECK(sol.controls.lpNorm<Eigen::Infinity>() <= 1e-6);
}

TEST_CASE("optimal solutions respect the control box exactly") {
  MpcParams params;
  const NlpProblem p = crossing_problem(params);
  const MpcSolution sol = solve(p, params);
  for (int k = 0; k < params.horizon; ++k) {
    CHECK(std::abs(sol.controls[2 * k]) <= params.vehicle.max_steer);
    CHECK(sol.controls[2 * k + 1] >= params.vehicle.accel_min);
    CHECK(sol.controls[2 * k + 1] <= params.vehicle.accel_max);
  }
}

TEST_CASE("solution states reproduce the dynamics exactly") {
  MpcParams params;
  params.d_safe = 3.0;
  const Route route = straight_route();
  const NlpProblem p = build_nlp({0, 0, 0, 10}, route, {}, {{10.0, 0.0}}, params);
  const MpcSolution sol = solve(p, params);
  EgoState s = p.initial_state;
  for (int k = 0; k < params.horizon; ++k) {
    s = bicycle_step(s, {sol.controls[2 * k], sol.controls[2 * k + 1]}, params.dt,
                     params.vehicle);
    CHECK((s.vec() - sol.states[static_cast<std::size_t>(k) + 1].vec()).norm() == 0.0);
  }
}

TEST_CASE("outer violations are non-increasing on the desk problems") {
  MpcParams params;
  params.d_safe = 3.0;
  const Route route = straight_route();
  const NlpProblem p = build_nlp({0, 0, 0, 10}, route, {}, {{10.0, 0.0}}, params);
  const MpcSolution sol = solve(p, params);
  for (std::size_t i = 1; i < sol.outer_violations.size(); ++i) {
    CHECK(sol.outer_violations[i] <= sol.outer_violations[i - 1] + 1e-12);
  }
}

TEST_CASE("objective and controls are translation invariant") {
  MpcParams params;
  params.d_safe = 3.0;
  const Vec2 shift{137.0, -58.0};

  const Route route = straight_route();
  NlpProblem a = build_nlp({0, 0, 0, 10}, route, {}, {{10.0, 0.0}}, params);

  NlpProblem b = a;
  b.initial_state.x += shift.x();
  b.initial_state.y += shift.y();
  b.destination += shift;
  b.waypoint_first += shift;
  b.waypoint_last += shift;
  for (auto& pts : b.statics) {
    for (auto& o : pts) o += shift;
  }

  const MpcSolution sa = solve(a, params);
  const MpcSolution sb = solve(b, params);
  CHECK(sa.status == SolveStatus::Optimal);
  CHECK(sb.status == SolveStatus::Optimal);
  CHECK(std::abs(sa.objective - sb.objective) <= 1e-6);
  CHECK((sa.controls - sb.controls).lpNorm<Eigen::Infinity>() <= 1e-4);
}

TEST_CASE("a wall across the road is infeasible and the planner brakes") {
  MpcParams params;
  const Route route = straight_route();
  std::vector<Vec2> wall;
  for (double y = -12.0; y <= 12.0; y += 1.0) wall.push_back({8.0, y});
  // Too fast to stop (v=14, braking distance 16 m > 8 - d_safe) and no gap to
  // swerve through.
  const NlpProblem p = build_nlp({0, 0, 0, 14}, route, {}, wall, params);
  const MpcSolution sol = solve(p, params);
  CHECK(sol.status == SolveStatus::Infeasible);
  CHECK(sol.hard_violation > params.eps_constraint);
}

TEST_CASE("build_nlp with no agents reduces to terminal plus smoothness") {
  MpcParams params;
  const Route route = straight_route();
  const NlpProblem p = build_nlp({0, 0, 0, 10}, route, {}, {}, params);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> steer(-0.3, 0.3), accel(-1.0, 1.0);
  VectorXd u(2 * params.horizon);
  for (int k = 0; k < params.horizon; ++k) {
    u[2 * k] = steer(rng);
    u[2 * k + 1] = accel(rng);
  }
  const double j = objective_with_gradient(p, params, u, nullptr);
  CHECK(j == doctest::Approx(oracle_objective(p, params, u)).epsilon(1e-12));
}

TEST_CASE("far-away agent contributes zero dynamic cost") {
  MpcParams params;
  NlpProblem p = empty_problem(params, {0, 0, 0, 10});
  p.destination = {20.0, 0.0};
  p.waypoint_first = {0.0, 0.0};
  p.waypoint_last = {20.0, 0.0};
  const double base = objective_with_gradient(p, params, VectorXd::Zero(2 * params.horizon),
                                              nullptr);
  DynAgentSlices agent;
  for (int k = 0; k < params.horizon; ++k) {
    agent.position.push_back({100.0, 100.0});
    agent.radius.push_back(5.0);
  }
  p.dynamics.push_back(agent);
  const double with_agent = objective_with_gradient(p, params, VectorXd::Zero(2 * params.horizon),
                                                    nullptr);
  CHECK(with_agent == base);
}

TEST_CASE("warm start halves the inner work (median of 20 trials)") {
  MpcParams params;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> obs_x(8.0, 14.0), obs_y(-1.2, 1.2), off(-0.5, 0.5);
  std::vector<double> ratios;
  for (int trial = 0; trial < 20; ++trial) {
    NlpProblem p = empty_problem(params, {0, off(rng), 0, 10});
    p.destination = {20.0, off(rng)};
    p.waypoint_first = {0.0, p.initial_state.y};
    p.waypoint_last = p.destination;
    const Vec2 obstacle{obs_x(rng), obs_y(rng)};
    for (int k = 0; k < params.horizon; ++k) {
      p.statics[static_cast<std::size_t>(k)] = {obstacle};
    }

    const MpcSolution cold = solve(p, params);
    REQUIRE(cold.status == SolveStatus::Optimal);
    // Shift-left warm start, as the receding-horizon planner does.
    VectorXd warm(2 * params.horizon);
    for (int k = 0; k + 1 < params.horizon; ++k) {
      warm[2 * k] = cold.controls[2 * (k + 1)];
      warm[2 * k + 1] = cold.controls[2 * (k + 1) + 1];
    }
    warm[2 * (params.horizon - 1)] = cold.controls[2 * (params.horizon - 1)];
    warm[2 * (params.horizon - 1) + 1] = cold.controls[2 * (params.horizon - 1) + 1];

    const MpcSolution hot = solve(p, params, &warm);
    CHECK(hot.status == SolveStatus::Optimal);
    ratios.push_back(static_cast<double>(hot.inner_iterations) /
                     std::max(1, cold.inner_iterations));
  }
  std::sort(ratios.begin(), ratios.end());
  const double median = 0.5 * (ratios[9] + ratios[10]);
  CHECK(median <= 0.5);
}

TEST_CASE("malformed problems are rejected") {
  MpcParams params;
  NlpProblem p = empty_problem(params, {0, 0, 0, 10});
  p.statics.pop_back();
  CHECK_THROWS_AS(solve(p, params), Error);
  NlpProblem q = empty_problem(params, {0, 0, 0, std::nan("")});
  CHECK_THROWS_AS(solve(q, params), Error);
  const Route empty;
  CHECK_THROWS_AS(build_nlp({0, 0, 0, 1}, empty, {}, {}, params), Error);
}
