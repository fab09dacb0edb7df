#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "adbench/mapkit/route.hpp"
#include "adbench/models.hpp"
#include "adbench/predict.hpp"
#include "adbench/sim/episode.hpp"
#include "adbench/sim/world.hpp"

namespace adbench::planner {

using Eigen::VectorXd;
using mapkit::Route;
using sim::Observation;

struct MpcParams {
  int horizon = 20;                 // N
  double dt = 0.1;                  // s, 2 s receding horizon
  double terminal_weight = 1.0;     // C_T
  double steer_rate_weight = 10.0;  // lambda_delta, rad^-2
  double dyn_weight = 100.0;        // lambda_dyn
  double d_safe = 2.0;              // m, hard static margin
  double d_safe_soft = 1.0;         // m, soft margin (pedestrians, side modes)
  double d_tol = 2.0;               // m, waypoint adherence
  double dyn_margin = 0.5;          // m, added to the dynamic interaction radius
  double eps_constraint = 1e-4;     // max violation at an optimal exit
  double eps_kkt = 1e-3;            // projected-gradient norm at an optimal exit
  int max_outer = 200;
  int max_inner = 50;
  double mu_init = 10.0;
  double mu_growth = 10.0;
  double mu_max = 1e8;
  int seed_grid = 21;               // cold-start constant-control grid per axis
  // The destination is the route point the ego would reach over the horizon;
  // the lookahead speed is floored (a parked ego still gets a target ahead)
  // and capped at a fraction of the speed limit (regulates cruise speed).
  double dest_speed_floor = 3.0;
  double dest_speed_cap_factor = 0.72;
  bool exponential_dyn_cost = false;
  bool multimode_dyn_cost = false;
  double vehicle_inflation = 2.0;   // prediction box growth feeding r_dyn
  double pedestrian_inflation = 2.0;
  int stopped_resolve_interval = 5; // reuse the brake fallback while stopped
  BicycleParams vehicle;
  Vec2 ego_half{2.4, 1.0};
};

// One predicted agent: position and interaction radius per horizon slice.
struct DynAgentSlices {
  std::vector<Vec2> position;
  std::vector<double> radius;
  double weight = 1.0;
};

struct NlpProblem {
  EgoState initial_state;
  Vec2 destination{0.0, 0.0};
  Vec2 waypoint_first{0.0, 0.0};  // reference at k = 0
  Vec2 waypoint_last{0.0, 0.0};   // reference anchored at k = N-1
  std::vector<std::vector<Vec2>> statics;  // hard obstacle points per k
  std::vector<std::vector<Vec2>> softs;    // soft obstacle points per k
  std::vector<DynAgentSlices> dynamics;
  int horizon = 20;
  double dt = 0.1;
};

enum class SolveStatus { Optimal, MaxIterations, Infeasible };
const char* to_string(SolveStatus status);

struct MpcSolution {
  VectorXd controls;             // 2N, interleaved (steer_k, accel_k)
  std::vector<EgoState> states;  // N+1 states from rolling the controls
  double objective = 0.0;        // raw objective at the solution
  double max_violation = 0.0;    // meters, over hard and soft constraints
  double hard_violation = 0.0;
  int outer_iterations = 0;
  // Inner minimization work: descent iterations plus, on a cold start, the
  // seed-grid candidate evaluations.
  int inner_iterations = 0;
  std::vector<double> outer_violations;  // per outer iteration, diagnostics
  SolveStatus status = SolveStatus::MaxIterations;
};

// Assembles the receding-horizon problem: destination and reference waypoints
// from the route at the current speed, dynamic slices from the
// highest-probability prediction mode per agent (vehicles), pedestrians and
// non-best modes as soft points, statics as given. Predictions on a different
// step grid are resampled by linear interpolation.
NlpProblem build_nlp(const EgoState& ego, const Route& route, const TrajectorySet& predictions,
                     const std::vector<Vec2>& static_points, const MpcParams& params);

// Raw objective (terminal deviation + steering-rate smoothness + dynamic
// collision cost). With grad != nullptr also computes the analytic gradient
// via a reverse sweep over the single-shooting rollout.
double objective_with_gradient(const NlpProblem& problem, const MpcParams& params,
                               const VectorXd& controls, VectorXd* grad);

// Augmented-Lagrangian solve over the single-shooting controls: inner
// projected spectral-gradient descent (Barzilai-Borwein steps, monotone
// Armijo), outer multiplier and penalty updates on the distance constraints;
// control bounds handled by projection.
MpcSolution solve(const NlpProblem& problem, const MpcParams& params,
                  const VectorXd* warm_start = nullptr);

// Receding-horizon planner: maintains 10 Hz agent histories, predicts with
// the constant-velocity stand-in, solves the NLP each step and applies the
// first control. Infeasible solves fall back to a full brake.
class MpcPlanner {
 public:
  explicit MpcPlanner(std::shared_ptr<const Route> route, MpcParams params = {});

  ControlInput plan(const Observation& obs);

  const std::vector<sim::SolverDiagRecord>& diagnostics() const { return diagnostics_; }
  const MpcSolution& last_solution() const { return last_solution_; }

 private:
  void update_histories(const Observation& obs);

  std::shared_ptr<const Route> route_;
  MpcParams params_;
  std::vector<AgentHistory> histories_;
  VectorXd warm_start_;
  bool has_warm_start_ = false;
  MpcSolution last_solution_;
  ControlInput last_control_;
  int steps_since_solve_ = 0;
  bool have_solved_ = false;
  std::vector<sim::SolverDiagRecord> diagnostics_;
};

}  // namespace adbench::planner
