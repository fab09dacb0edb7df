#include "adbench/planner/mpc_planner.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>

#include "adbench/error.hpp"

namespace adbench::planner {

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::MaxIterations: return "max-iter";
    case SolveStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

namespace {

constexpr double kDistanceGuard = 1e-9;

struct Multipliers {
  VectorXd hard;
  VectorXd soft;
  double mu = 10.0;
};

// Value/gradient machinery for the penalized single-shooting problem. All
// costs and constraints act on the rolled-out positions, so gradients flow
// through one reverse sweep.
class Evaluator {
 public:
  Evaluator(const NlpProblem& problem, const MpcParams& params)
      : p_(problem), params_(params) {
    hard_count_ = 2;  // the two waypoint-adherence constraints
    for (const auto& pts : p_.statics) hard_count_ += pts.size();
    soft_count_ = 0;
    for (const auto& pts : p_.softs) soft_count_ += pts.size();
  }

  std::size_t hard_count() const { return hard_count_; }
  std::size_t soft_count() const { return soft_count_; }
  int horizon() const { return p_.horizon; }

  void rollout(const VectorXd& controls, std::vector<EgoState>& states,
               std::vector<StepDiagnostics>& diags) const {
    const int n = p_.horizon;
    states.assign(static_cast<std::size_t>(n) + 1, p_.initial_state);
    diags.assign(static_cast<std::size_t>(n), {});
    for (int k = 0; k < n; ++k) {
      states[static_cast<std::size_t>(k) + 1] = bicycle_step(
          states[static_cast<std::size_t>(k)], {controls[2 * k], controls[2 * k + 1]}, p_.dt,
          params_.vehicle, &diags[static_cast<std::size_t>(k)]);
    }
  }

  // Metric constraint values (meters; <= 0 feasible).
  void constraints(const std::vector<EgoState>& states, VectorXd& hard, VectorXd& soft) const {
    hard.resize(static_cast<Eigen::Index>(hard_count_));
    soft.resize(static_cast<Eigen::Index>(soft_count_));
    const int n = p_.horizon;
    const Vec2 p0 = states[0].position();
    const Vec2 pn = states[static_cast<std::size_t>(n) - 1].position();
    hard[0] = (p0 - p_.waypoint_first).norm() - params_.d_tol;
    hard[1] = (pn - p_.waypoint_last).norm() - params_.d_tol;
    Eigen::Index h = 2;
    for (int k = 0; k < n; ++k) {
      const Vec2 pk = states[static_cast<std::size_t>(k)].position();
      for (const Vec2& o : p_.statics[static_cast<std::size_t>(k)]) {
        hard[h++] = params_.d_safe - (pk - o).norm();
      }
    }
    Eigen::Index s = 0;
    for (int k = 0; k < n; ++k) {
      const Vec2 pk = states[static_cast<std::size_t>(k)].position();
      for (const Vec2& o : p_.softs[static_cast<std::size_t>(k)]) {
        soft[s++] = params_.d_safe_soft - (pk - o).norm();
      }
    }
  }

  // One-sided nonlinear least-squares view of the penalized objective: the
  // merit is sum over rows of value^2 (two-sided rows) or max(0, value)^2
  // (hinge and PHR rows). Signed values and Jacobians are kept for inactive
  // one-sided rows too, so the step model can reason about walls it has not
  // crossed yet.
  struct ResidualModel {
    VectorXd signed_values;
    Eigen::MatrixXd jacobian;
    std::vector<unsigned char> one_sided;
  };

  double residual_merit(const VectorXd& controls, const Multipliers* mult,
                        ResidualModel* model) const {
    const int n = p_.horizon;
    const Eigen::Index cols = 2 * n;
    std::vector<EgoState> states;
    std::vector<StepDiagnostics> diags;
    rollout(controls, states, diags);

    // Position sensitivities P_k = d p_k / d U, built forward.
    std::vector<Eigen::Matrix<double, 2, Eigen::Dynamic>> position_sens;
    if (model) {
      position_sens.reserve(static_cast<std::size_t>(n));
      Eigen::MatrixXd sens = Eigen::MatrixXd::Zero(4, cols);
      const double L = params_.vehicle.wheelbase;
      for (int k = 0; k < n; ++k) {
        position_sens.push_back(sens.topRows(2));
        const EgoState& x = states[static_cast<std::size_t>(k)];
        const double steer = std::clamp(controls[2 * k], -params_.vehicle.max_steer,
                                        params_.vehicle.max_steer);
        const double tan_steer = std::tan(steer);
        const double sec2 = 1.0 + tan_steer * tan_steer;
        const StepDiagnostics& diag = diags[static_cast<std::size_t>(k)];

        Eigen::MatrixXd next = sens;
        next.row(0) += p_.dt * (-x.v * std::sin(x.psi) * sens.row(2) +
                                std::cos(x.psi) * sens.row(3));
        next.row(1) += p_.dt * (x.v * std::cos(x.psi) * sens.row(2) +
                                std::sin(x.psi) * sens.row(3));
        next.row(2) += p_.dt * (tan_steer / L) * sens.row(3);
        if (diag.speed_clamped) next.row(3).setZero();
        if (!diag.steer_clamped) next(2, 2 * k) += x.v / L * sec2 * p_.dt;
        if (!diag.speed_clamped && !diag.accel_clamped) next(3, 2 * k + 1) += p_.dt;
        sens = std::move(next);
      }
    }

    // Row count: terminal (2) + steer rate (n-1) + dynamic (n * agents)
    // + constraints.
    const Eigen::Index rows =
        2 + (n - 1) + static_cast<Eigen::Index>(p_.dynamics.size()) * n +
        (mult ? static_cast<Eigen::Index>(hard_count_ + soft_count_) : 0);
    VectorXd values = VectorXd::Zero(rows);
    std::vector<unsigned char> one_sided(static_cast<std::size_t>(rows), 0);
    if (model) model->jacobian.setZero(rows, cols);

    Eigen::Index row = 0;
    const auto position_row = [&](int k, const Vec2& drho_dp) {
      if (model) {
        model->jacobian.row(row) =
            drho_dp.transpose() * position_sens[static_cast<std::size_t>(k)];
      }
    };

    // Terminal deviation.
    {
      const double w = std::sqrt(params_.terminal_weight);
      const Vec2 diff = states[static_cast<std::size_t>(n) - 1].position() - p_.destination;
      values[row] = w * diff.x();
      position_row(n - 1, {w, 0.0});
      ++row;
      values[row] = w * diff.y();
      position_row(n - 1, {0.0, w});
      ++row;
    }

    // Steering-rate smoothness (direct control entries).
    {
      const double w = std::sqrt(params_.steer_rate_weight);
      for (int k = 1; k < n; ++k) {
        values[row] = w * (controls[2 * k] - controls[2 * (k - 1)]);
        if (model) {
          model->jacobian(row, 2 * k) = w;
          model->jacobian(row, 2 * (k - 1)) = -w;
        }
        ++row;
      }
    }

    // Dynamic obstacle cost. The squared hinge is a one-sided row on the
    // signed margin r^2 - d^2.
    for (const DynAgentSlices& agent : p_.dynamics) {
      const double w = std::sqrt(params_.dyn_weight * agent.weight);
      for (int k = 0; k < n; ++k) {
        const Vec2 diff = states[static_cast<std::size_t>(k)].position() -
                          agent.position[static_cast<std::size_t>(k)];
        const double r = agent.radius[static_cast<std::size_t>(k)];
        if (params_.exponential_dyn_cost) {
          const double dist = std::max(diff.norm(), kDistanceGuard);
          const double width = 0.5;
          values[row] = w * std::exp((r - dist) / (2.0 * width));
          position_row(k, Vec2(values[row] * (-0.5 / width) * diff / dist));
        } else {
          values[row] = w * (r * r - diff.squaredNorm());
          one_sided[static_cast<std::size_t>(row)] = 1;
          position_row(k, Vec2(-2.0 * w * diff));
        }
        ++row;
      }
    }

    // PHR rows: one-sided on (lambda + mu c) / sqrt(2 mu).
    if (mult) {
      const double mu = mult->mu;
      const double inv = 1.0 / std::sqrt(2.0 * mu);
      const double slope = mu * inv;  // d value / d c
      const auto phr_row = [&](double c, double lambda, int k, const Vec2& dc_dp) {
        values[row] = (lambda + mu * c) * inv;
        one_sided[static_cast<std::size_t>(row)] = 1;
        if (k >= 0) position_row(k, Vec2(slope * dc_dp));
        ++row;
      };

      const Vec2 d0 = states[0].position() - p_.waypoint_first;
      phr_row(d0.norm() - params_.d_tol, mult->hard[0], -1, Vec2::Zero());
      const Vec2 dn = states[static_cast<std::size_t>(n) - 1].position() - p_.waypoint_last;
      const double normn = std::max(dn.norm(), kDistanceGuard);
      phr_row(normn - params_.d_tol, mult->hard[1], n - 1, Vec2(dn / normn));

      Eigen::Index h = 2;
      for (int k = 0; k < n; ++k) {
        const Vec2 pk = states[static_cast<std::size_t>(k)].position();
        for (const Vec2& o : p_.statics[static_cast<std::size_t>(k)]) {
          const Vec2 diff = pk - o;
          const double dist = std::max(diff.norm(), kDistanceGuard);
          phr_row(params_.d_safe - dist, mult->hard[h++], k, Vec2(-diff / dist));
        }
      }
      Eigen::Index sidx = 0;
      for (int k = 0; k < n; ++k) {
        const Vec2 pk = states[static_cast<std::size_t>(k)].position();
        for (const Vec2& o : p_.softs[static_cast<std::size_t>(k)]) {
          const Vec2 diff = pk - o;
          const double dist = std::max(diff.norm(), kDistanceGuard);
          phr_row(params_.d_safe_soft - dist, mult->soft[sidx++], k, Vec2(-diff / dist));
        }
      }
    }

    double merit = 0.0;
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double active = one_sided[static_cast<std::size_t>(i)]
                                ? std::max(0.0, values[i])
                                : values[i];
      merit += active * active;
    }
    if (model) {
      model->signed_values = std::move(values);
      model->one_sided = std::move(one_sided);
    }
    return merit;
  }

  // Augmented-Lagrangian value; with mult == nullptr the raw objective. When
  // grad is set, fills the analytic gradient over the controls.
  double eval(const VectorXd& controls, const Multipliers* mult, VectorXd* grad,
              double* raw_objective = nullptr) const {
    const int n = p_.horizon;
    std::vector<EgoState> states;
    std::vector<StepDiagnostics> diags;
    rollout(controls, states, diags);

    // Position-space gradient accumulator per step 0..n-1.
    std::vector<Vec2> gp;
    if (grad) gp.assign(static_cast<std::size_t>(n), Vec2::Zero());

    double objective = 0.0;

    // Terminal deviation from the destination.
    {
      const Vec2 diff = states[static_cast<std::size_t>(n) - 1].position() - p_.destination;
      objective += params_.terminal_weight * diff.squaredNorm();
      if (grad) gp[static_cast<std::size_t>(n) - 1] += 2.0 * params_.terminal_weight * diff;
    }

    // Steering-rate smoothness (pure control term).
    double steer_rate = 0.0;
    for (int k = 1; k < n; ++k) {
      const double d = controls[2 * k] - controls[2 * (k - 1)];
      steer_rate += d * d;
      if (grad) {
        (*grad)(2 * k) += 2.0 * params_.steer_rate_weight * d;
        (*grad)(2 * (k - 1)) -= 2.0 * params_.steer_rate_weight * d;
      }
    }
    objective += params_.steer_rate_weight * steer_rate;

    // Dynamic obstacle collision cost.
    for (int k = 0; k < n; ++k) {
      const Vec2 pk = states[static_cast<std::size_t>(k)].position();
      for (const DynAgentSlices& agent : p_.dynamics) {
        const Vec2 diff = pk - agent.position[static_cast<std::size_t>(k)];
        const double r = agent.radius[static_cast<std::size_t>(k)];
        if (params_.exponential_dyn_cost) {
          const double dist = std::max(diff.norm(), kDistanceGuard);
          const double width = 0.5;
          const double value = std::exp((r - dist) / width);
          objective += params_.dyn_weight * agent.weight * value;
          if (grad) {
            gp[static_cast<std::size_t>(k)] +=
                params_.dyn_weight * agent.weight * value * (-1.0 / width) * diff / dist;
          }
        } else {
          const double hinge = std::max(0.0, r * r - diff.squaredNorm());
          objective += params_.dyn_weight * agent.weight * hinge * hinge;
          if (grad && hinge > 0.0) {
            gp[static_cast<std::size_t>(k)] -=
                4.0 * params_.dyn_weight * agent.weight * hinge * diff;
          }
        }
      }
    }

    if (raw_objective) *raw_objective = objective;
    double total = objective;

    // PHR augmented-Lagrangian terms for the inequality constraints.
    if (mult) {
      const double mu = mult->mu;
      const auto phr = [&](double c, double lambda, Vec2* dpos, const Vec2& dc_dp) {
        const double active = std::max(0.0, lambda + mu * c);
        const double value = (active * active - lambda * lambda) / (2.0 * mu);
        if (dpos && active > 0.0) *dpos += active * dc_dp;
        return value;
      };

      const Vec2 p0 = states[0].position();
      const Vec2 pn = states[static_cast<std::size_t>(n) - 1].position();
      {
        const Vec2 d0 = p0 - p_.waypoint_first;
        const double norm0 = std::max(d0.norm(), kDistanceGuard);
        total += phr(norm0 - params_.d_tol, mult->hard[0], nullptr, Vec2::Zero());
        // p_0 is fixed by the initial condition: no gradient.
        const Vec2 dn = pn - p_.waypoint_last;
        const double normn = std::max(dn.norm(), kDistanceGuard);
        Vec2* slot = grad ? &gp[static_cast<std::size_t>(n) - 1] : nullptr;
        total += phr(normn - params_.d_tol, mult->hard[1], slot, dn / normn);
      }
      Eigen::Index h = 2;
      for (int k = 0; k < n; ++k) {
        const Vec2 pk = states[static_cast<std::size_t>(k)].position();
        Vec2* slot = grad ? &gp[static_cast<std::size_t>(k)] : nullptr;
        for (const Vec2& o : p_.statics[static_cast<std::size_t>(k)]) {
          const Vec2 diff = pk - o;
          const double dist = std::max(diff.norm(), kDistanceGuard);
          total += phr(params_.d_safe - dist, mult->hard[h++], slot, -diff / dist);
        }
      }
      Eigen::Index s = 0;
      for (int k = 0; k < n; ++k) {
        const Vec2 pk = states[static_cast<std::size_t>(k)].position();
        Vec2* slot = grad ? &gp[static_cast<std::size_t>(k)] : nullptr;
        for (const Vec2& o : p_.softs[static_cast<std::size_t>(k)]) {
          const Vec2 diff = pk - o;
          const double dist = std::max(diff.norm(), kDistanceGuard);
          total += phr(params_.d_safe_soft - dist, mult->soft[s++], slot, -diff / dist);
        }
      }
    }

    // Reverse sweep: adjoint of the forward-Euler bicycle rollout.
    if (grad) {
      const double L = params_.vehicle.wheelbase;
      Vec4 adjoint = Vec4::Zero();  // dTotal/dX_{k+1}, starts at X_n (unused)
      for (int k = n - 1; k >= 0; --k) {
        const EgoState& x = states[static_cast<std::size_t>(k)];
        const double steer = std::clamp(controls[2 * k], -params_.vehicle.max_steer,
                                        params_.vehicle.max_steer);
        const double tan_steer = std::tan(steer);
        const double sec2 = 1.0 + tan_steer * tan_steer;
        const bool clamped = diags[static_cast<std::size_t>(k)].speed_clamped;
        const bool steer_clamped = diags[static_cast<std::size_t>(k)].steer_clamped;
        const bool accel_clamped = diags[static_cast<std::size_t>(k)].accel_clamped;

        // Control gradients through X_{k+1}; clamped controls have no effect.
        (*grad)(2 * k) += steer_clamped ? 0.0 : adjoint[2] * x.v / L * sec2 * p_.dt;
        (*grad)(2 * k + 1) += (clamped || accel_clamped) ? 0.0 : adjoint[3] * p_.dt;

        // Pull the adjoint back one step: lambda_k = q_k + A_k^T lambda_{k+1}.
        Vec4 prev;
        prev[0] = adjoint[0];
        prev[1] = adjoint[1];
        prev[2] = adjoint[2] + p_.dt * x.v * (-std::sin(x.psi) * adjoint[0] +
                                              std::cos(x.psi) * adjoint[1]);
        prev[3] = (clamped ? 0.0 : adjoint[3]) +
                  p_.dt * (std::cos(x.psi) * adjoint[0] + std::sin(x.psi) * adjoint[1] +
                           tan_steer / L * adjoint[2]);
        prev[0] += gp[static_cast<std::size_t>(k)].x();
        prev[1] += gp[static_cast<std::size_t>(k)].y();
        adjoint = prev;
      }
    }
    return total;
  }

 private:
  const NlpProblem& p_;
  const MpcParams& params_;
  std::size_t hard_count_ = 0;
  std::size_t soft_count_ = 0;
};

VectorXd project_controls(VectorXd u, const MpcParams& params) {
  for (Eigen::Index k = 0; k < u.size() / 2; ++k) {
    u[2 * k] = std::clamp(u[2 * k], -params.vehicle.max_steer, params.vehicle.max_steer);
    u[2 * k + 1] = std::clamp(u[2 * k + 1], params.vehicle.accel_min, params.vehicle.accel_max);
  }
  return u;
}

double projected_gradient_norm(const VectorXd& u, const VectorXd& grad, const MpcParams& params) {
  const VectorXd stepped = project_controls(u - grad, params);
  return (stepped - u).lpNorm<Eigen::Infinity>();
}

// Cold-start candidates: constant-control grid plus swerve-and-return
// primitives (symmetric problems stall on the straight-line saddle without
// them).
VectorXd grid_seed(const Evaluator& ev, const MpcParams& params, const Multipliers& mult,
                   int* evaluations) {
  const int n = ev.horizon();
  VectorXd best = VectorXd::Zero(2 * n);
  double best_value = ev.eval(best, &mult, nullptr);  // ties favor the zero sequence
  const int g = std::max(params.seed_grid, 2);
  int evals = 1;

  const auto consider = [&](const VectorXd& u) {
    const double value = ev.eval(u, &mult, nullptr);
    ++evals;
    if (value < best_value) {
      best_value = value;
      best = u;
    }
  };

  VectorXd u(2 * n);
  for (int i = 0; i < g; ++i) {
    const double steer = -params.vehicle.max_steer +
                         2.0 * params.vehicle.max_steer * i / (g - 1);
    for (int j = 0; j < g; ++j) {
      const double accel = params.vehicle.accel_min +
                           (params.vehicle.accel_max - params.vehicle.accel_min) * j / (g - 1);
      for (int k = 0; k < n; ++k) {
        u[2 * k] = steer;
        u[2 * k + 1] = accel;
      }
      consider(u);
      if (steer != 0.0) {
        // steer out, steer back, straighten
        const int third = n / 3;
        for (int k = 0; k < n; ++k) {
          u[2 * k] = k < third ? steer : (k < 2 * third ? -steer : 0.0);
          u[2 * k + 1] = accel;
        }
        consider(u);
      }
    }
  }
  if (evaluations) *evaluations = evals;
  return best;
}

// Damped Gauss-Newton (Levenberg-Marquardt) descent on the current AL
// subproblem, with control bounds by projection. The step model treats hinge
// and PHR rows one-sidedly: an inner active-set iteration decides which walls
// the quadratic model includes, which is what lets iterates settle exactly on
// a wall instead of thrashing across it. The damping parameter persists
// across calls on an unchanged subproblem.
int minimize_inner(const Evaluator& ev, const MpcParams& params, const Multipliers& mult,
                   VectorXd& u, double& nu, double tolerance) {
  u = project_controls(std::move(u), params);
  Evaluator::ResidualModel model;
  double merit = ev.residual_merit(u, &mult, &model);
  const Eigen::Index rows = model.signed_values.size();
  const Eigen::Index cols = u.size();

  const auto clamped_values = [&](const Evaluator::ResidualModel& m) {
    VectorXd out = m.signed_values;
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      if (m.one_sided[static_cast<std::size_t>(i)] && out[i] < 0.0) out[i] = 0.0;
    }
    return out;
  };

  VectorXd gradient = 2.0 * model.jacobian.transpose() * clamped_values(model);
  if (nu <= 0.0) {
    double max_diag = 1e-12;
    for (Eigen::Index i = 0; i < cols; ++i) {
      max_diag = std::max(max_diag, model.jacobian.col(i).squaredNorm());
    }
    nu = 1e-3 * max_diag;
  }

  // Damped Gauss-Newton step over a chosen active set.
  const auto solve_with_set = [&](double damping, const std::vector<unsigned char>& active) {
    Eigen::MatrixXd h = damping * Eigen::MatrixXd::Identity(cols, cols);
    VectorXd b = VectorXd::Zero(cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (!active[static_cast<std::size_t>(i)]) continue;
      h.noalias() += model.jacobian.row(i).transpose() * model.jacobian.row(i);
      b.noalias() -= model.jacobian.row(i).transpose() * model.signed_values[i];
    }
    return VectorXd(h.ldlt().solve(b));
  };

  const auto active_now = [&]() {
    std::vector<unsigned char> active(static_cast<std::size_t>(rows));
    for (Eigen::Index i = 0; i < rows; ++i) {
      active[static_cast<std::size_t>(i)] =
          !model.one_sided[static_cast<std::size_t>(i)] || model.signed_values[i] > 0.0;
    }
    return active;
  };

  // One-sided model step: iterate the active set until self-consistent, so
  // walls the step is about to cross participate in its curvature.
  const auto solve_step = [&](double damping) {
    std::vector<unsigned char> active = active_now();
    VectorXd delta = solve_with_set(damping, active);
    for (int pass = 0; pass < 8; ++pass) {
      bool changed = false;
      for (Eigen::Index i = 0; i < rows; ++i) {
        if (!model.one_sided[static_cast<std::size_t>(i)]) continue;
        const bool predicted = model.signed_values[i] + model.jacobian.row(i).dot(delta) > 0.0;
        if (predicted != static_cast<bool>(active[static_cast<std::size_t>(i)])) {
          active[static_cast<std::size_t>(i)] = predicted;
          changed = true;
        }
      }
      if (!changed) break;
      delta = solve_with_set(damping, active);
    }
    // Keep descent: fall back to the current-piece step when the anticipated
    // active set works against the gradient.
    if (gradient.dot(delta) >= 0.0) delta = solve_with_set(damping, active_now());
    return delta;
  };

  int iterations = 0;
  for (; iterations < params.max_inner; ++iterations) {
    if (projected_gradient_norm(u, gradient, params) <= tolerance) break;

    const VectorXd delta = solve_step(nu);

    bool accepted = false;
    double t = 1.0;
    VectorXd candidate;
    double candidate_merit = 0.0;
    for (int ls = 0; ls < 24; ++ls) {
      candidate = project_controls(u + t * delta, params);
      if ((candidate - u).lpNorm<Eigen::Infinity>() < 1e-16) break;
      candidate_merit = ev.residual_merit(candidate, &mult, nullptr);
      if (candidate_merit < merit) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }

    if (std::getenv("ADBENCH_MPC_TRACE_INNER")) {
      std::fprintf(stderr, "  it=%d merit=%.12e pg=%.3e nu=%.2e t=%.2e acc=%d\n", iterations,
                   merit, projected_gradient_norm(u, gradient, params), nu, t, accepted);
    }

    if (accepted) {
      u = candidate;
      merit = ev.residual_merit(u, &mult, &model);
      gradient = 2.0 * model.jacobian.transpose() * clamped_values(model);
      nu = t == 1.0 ? std::max(nu / 3.0, 1e-12) : std::min(nu * 1.5, 1e14);
    } else {
      nu *= 4.0;
      if (nu > 1e14) break;
    }
  }
  return iterations;
}

}  // namespace

double objective_with_gradient(const NlpProblem& problem, const MpcParams& params,
                               const VectorXd& controls, VectorXd* grad) {
  const Evaluator ev(problem, params);
  if (grad) {
    grad->resize(controls.size());
    grad->setZero();
  }
  return ev.eval(controls, nullptr, grad);
}

MpcSolution solve(const NlpProblem& problem, const MpcParams& params,
                  const VectorXd* warm_start) {
  if (problem.horizon < 2) throw Error(ErrorKind::Config, "horizon must be >= 2");
  if (static_cast<int>(problem.statics.size()) != problem.horizon ||
      static_cast<int>(problem.softs.size()) != problem.horizon) {
    throw Error(ErrorKind::Config, "obstacle slices must cover every horizon step");
  }
  for (const DynAgentSlices& agent : problem.dynamics) {
    if (static_cast<int>(agent.position.size()) != problem.horizon ||
        static_cast<int>(agent.radius.size()) != problem.horizon) {
      throw Error(ErrorKind::Config, "dynamic slices must cover every horizon step");
    }
  }
  if (!problem.initial_state.vec().allFinite()) {
    throw Error(ErrorKind::Numeric, "non-finite initial state");
  }

  const Evaluator ev(problem, params);
  Multipliers mult;
  mult.hard = VectorXd::Zero(static_cast<Eigen::Index>(ev.hard_count()));
  mult.soft = VectorXd::Zero(static_cast<Eigen::Index>(ev.soft_count()));
  mult.mu = params.mu_init;

  int seed_evaluations = 0;
  VectorXd u = warm_start ? project_controls(*warm_start, params)
                          : grid_seed(ev, params, mult, &seed_evaluations);

  MpcSolution solution;
  solution.inner_iterations = seed_evaluations;  // cold-start search is inner work
  double prev_violation = std::numeric_limits<double>::infinity();
  int stall_escapes = 0;
  double damping = -1.0;  // reset whenever the subproblem changes
  // Loose first subproblems help globalization from a cold seed; a warm start
  // is expected to be near-stationary already.
  double inner_tolerance = warm_start ? params.eps_kkt : 1e-1;
  int exhausted_inners = 0;

  for (int outer = 0; outer < params.max_outer; ++outer) {
    solution.inner_iterations +=
        minimize_inner(ev, params, mult, u, damping, std::max(inner_tolerance, params.eps_kkt));
    ++solution.outer_iterations;

    std::vector<EgoState> states;
    std::vector<StepDiagnostics> clamped;
    ev.rollout(u, states, clamped);
    VectorXd hard, soft;
    ev.constraints(states, hard, soft);
    const double hard_violation = hard.size() > 0 ? std::max(0.0, hard.maxCoeff()) : 0.0;
    const double soft_violation = soft.size() > 0 ? std::max(0.0, soft.maxCoeff()) : 0.0;
    const double violation = std::max(hard_violation, soft_violation);

    VectorXd grad(u.size());
    grad.setZero();
    ev.eval(u, &mult, &grad);
    const double pg = projected_gradient_norm(u, grad, params);

    solution.hard_violation = hard_violation;
    solution.max_violation = violation;

    if (!u.allFinite()) {
      throw Error(ErrorKind::Numeric, "solver produced a non-finite iterate");
    }

    if (std::getenv("ADBENCH_MPC_TRACE")) {
      std::fprintf(stderr, "outer=%d inner_total=%d viol=%.3e pg=%.3e mu=%.1e tol=%.1e\n", outer,
                   solution.inner_iterations, violation, pg, mult.mu, inner_tolerance);
    }

    if (violation <= params.eps_constraint && pg <= params.eps_kkt) {
      solution.outer_violations.push_back(violation);
      solution.status = SolveStatus::Optimal;
      break;
    }

    // Update multipliers when the subproblem was solved to the current inner
    // tolerance; give a stalled inner loop one resumption before proceeding
    // with a best-effort update.
    if (pg > std::max(inner_tolerance, params.eps_kkt) && exhausted_inners < 1) {
      ++exhausted_inners;
      continue;
    }
    exhausted_inners = 0;

    solution.outer_violations.push_back(violation);
    for (Eigen::Index i = 0; i < hard.size(); ++i) {
      mult.hard[i] = std::max(0.0, mult.hard[i] + mult.mu * hard[i]);
    }
    for (Eigen::Index i = 0; i < soft.size(); ++i) {
      mult.soft[i] = std::max(0.0, mult.soft[i] + mult.mu * soft[i]);
    }
    if (violation > 0.25 * prev_violation) {
      mult.mu = std::min(mult.mu * params.mu_growth, params.mu_max);
    }
    inner_tolerance = std::clamp(0.3 * violation, params.eps_kkt, 1e-1);
    damping = -1.0;  // new subproblem

    // Stationary but stuck above the feasibility tolerance: symmetric
    // obstacle problems have a ridge along the straight-through path, where
    // every lateral gradient vanishes. Nudge off it deterministically.
    if (violation > params.eps_constraint && violation > prev_violation - 1e-9 &&
        stall_escapes < 4) {
      ++stall_escapes;
      for (int k = 0; k < problem.horizon; ++k) {
        u[2 * k] += 1e-3 * std::sin(1.0 + k);
      }
      u = project_controls(std::move(u), params);
    }
    prev_violation = violation;
  }

  if (solution.status != SolveStatus::Optimal) {
    solution.status = solution.hard_violation > params.eps_constraint ? SolveStatus::Infeasible
                                                                      : SolveStatus::MaxIterations;
  }

  solution.controls = u;
  std::vector<StepDiagnostics> clamped;
  ev.rollout(u, solution.states, clamped);
  ev.eval(u, nullptr, nullptr, &solution.objective);
  return solution;
}

NlpProblem build_nlp(const EgoState& ego, const Route& route, const TrajectorySet& predictions,
                     const std::vector<Vec2>& static_points, const MpcParams& params) {
  if (route.waypoints.size() < 2) {
    throw Error(ErrorKind::Config, "build_nlp needs a route with >= 2 waypoints");
  }
  NlpProblem problem;
  problem.horizon = params.horizon;
  problem.dt = params.dt;
  problem.initial_state = ego;

  double s_ego, lateral;
  route.project(ego.position(), s_ego, lateral);
  const double lookahead_speed =
      std::clamp(ego.v, params.dest_speed_floor,
                 std::max(params.dest_speed_floor,
                          params.dest_speed_cap_factor * route.speed_limit_at(s_ego)));
  const double reach =
      std::min(s_ego + lookahead_speed * params.horizon * params.dt, route.length);
  problem.destination = route.point_at(reach);
  problem.waypoint_first = route.point_at(s_ego);
  problem.waypoint_last = problem.destination;

  problem.statics.assign(static_cast<std::size_t>(params.horizon), static_points);
  problem.softs.assign(static_cast<std::size_t>(params.horizon), {});

  // Align prediction slices with the MPC grid.
  const TrajectorySet* source = &predictions;
  TrajectorySet resampled;
  if (!predictions.agents.empty() &&
      (std::abs(predictions.dt - params.dt) > 1e-9 || predictions.steps < params.horizon)) {
    resampled = resample(predictions, params.horizon, params.dt);
    source = &resampled;
  }

  const double ego_radius = params.ego_half.norm();
  for (const AgentForecast& agent : source->agents) {
    if (agent.is_ego || agent.modes.empty()) continue;
    const std::size_t best = agent.best_mode();
    const auto slice_radius = [&](std::size_t k) {
      return agent.half_extents[k].norm() + ego_radius + params.dyn_margin;
    };

    if (agent.kind == AgentKind::Pedestrian) {
      for (int k = 0; k < params.horizon; ++k) {
        problem.softs[static_cast<std::size_t>(k)].push_back(
            agent.modes[best].points[static_cast<std::size_t>(k)].position);
      }
      continue;
    }
    if (agent.kind == AgentKind::Static) continue;  // statics come in as points

    for (std::size_t m = 0; m < agent.modes.size(); ++m) {
      if (m == best || params.multimode_dyn_cost) {
        DynAgentSlices slices;
        slices.weight = params.multimode_dyn_cost ? agent.modes[m].probability : 1.0;
        for (int k = 0; k < params.horizon; ++k) {
          slices.position.push_back(agent.modes[m].points[static_cast<std::size_t>(k)].position);
          slices.radius.push_back(slice_radius(static_cast<std::size_t>(k)));
        }
        problem.dynamics.push_back(std::move(slices));
      } else {
        // Low-probability side modes soften to points.
        for (int k = 0; k < params.horizon; ++k) {
          problem.softs[static_cast<std::size_t>(k)].push_back(
              agent.modes[m].points[static_cast<std::size_t>(k)].position);
        }
      }
    }
  }
  return problem;
}

MpcPlanner::MpcPlanner(std::shared_ptr<const Route> route, MpcParams params)
    : route_(std::move(route)), params_(std::move(params)) {
  if (!route_ || route_->waypoints.size() < 2) {
    throw Error(ErrorKind::Config, "mpc planner needs a route");
  }
}

void MpcPlanner::update_histories(const Observation& obs) {
  if (obs.step % 2 != 0) return;  // 10 Hz sampling from the 20 Hz loop
  for (const auto& actor : obs.actors) {
    if (actor.kind == AgentKind::Static) continue;
    AgentHistory* entry = nullptr;
    for (auto& h : histories_) {
      if (h.agent_id == actor.id) entry = &h;
    }
    if (!entry) {
      histories_.push_back({actor.id, actor.kind, false, actor.half, {}});
      entry = &histories_.back();
    }
    entry->samples.push_back(actor.state);
    if (entry->samples.size() > static_cast<std::size_t>(kHistorySamples)) {
      entry->samples.erase(entry->samples.begin());
    }
  }
  // Drop agents that vanished from the observation.
  std::erase_if(histories_, [&](const AgentHistory& h) {
    for (const auto& actor : obs.actors) {
      if (actor.id == h.agent_id) return false;
    }
    return true;
  });
}

ControlInput MpcPlanner::plan(const Observation& obs) {
  update_histories(obs);

  // While parked behind an infeasible problem, re-solve on an interval
  // instead of every tick.
  if (have_solved_ && last_solution_.status == SolveStatus::Infeasible && obs.ego.v < 0.05 &&
      steps_since_solve_ < params_.stopped_resolve_interval) {
    ++steps_since_solve_;
    return last_control_;
  }

  TrajectorySet predictions =
      inflate(histories_.empty() ? TrajectorySet{} : predict_cv(histories_),
              params_.vehicle_inflation, params_.pedestrian_inflation, 1.0);

  std::vector<Vec2> static_points;
  for (const auto& actor : obs.actors) {
    if (actor.kind != AgentKind::Static) continue;
    if ((actor.state.position() - obs.ego.position()).norm() > 80.0) continue;
    const OrientedBox box{actor.state.position(), actor.state.psi, actor.half};
    const auto corners = box.corners();
    for (std::size_t i = 0; i < 4; ++i) {
      static_points.push_back(corners[i]);
      static_points.push_back(0.5 * (corners[i] + corners[(i + 1) % 4]));
    }
    static_points.push_back(box.center);
  }

  const NlpProblem problem = build_nlp(obs.ego, *route_, predictions, static_points, params_);
  last_solution_ = solve(problem, params_, has_warm_start_ ? &warm_start_ : nullptr);
  steps_since_solve_ = 0;
  have_solved_ = true;

  diagnostics_.push_back({obs.step, last_solution_.outer_iterations,
                          last_solution_.inner_iterations, last_solution_.objective,
                          last_solution_.max_violation, to_string(last_solution_.status)});

  // Shifted warm start for the next call.
  const int n = params_.horizon;
  warm_start_.resize(2 * n);
  for (int k = 0; k + 1 < n; ++k) {
    warm_start_[2 * k] = last_solution_.controls[2 * (k + 1)];
    warm_start_[2 * k + 1] = last_solution_.controls[2 * (k + 1) + 1];
  }
  warm_start_[2 * (n - 1)] = last_solution_.controls[2 * (n - 1)];
  warm_start_[2 * (n - 1) + 1] = last_solution_.controls[2 * (n - 1) + 1];
  has_warm_start_ = true;

  if (last_solution_.status == SolveStatus::Infeasible) {
    last_control_ = {0.0, params_.vehicle.accel_min};  // safe fallback
  } else {
    last_control_ = {last_solution_.controls[0], last_solution_.controls[1]};
  }
  return last_control_;
}

}  // namespace adbench::planner
