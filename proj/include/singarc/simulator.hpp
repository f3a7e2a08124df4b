#pragma once

#include "singarc/ocp.hpp"
#include "singarc/solver.hpp"
#include "singarc/transcription.hpp"

#include <functional>
#include <string>
#include <vector>

namespace singarc {

/// Ground-truth plant integration and the closed-loop economic MPC
/// driver. The plant integrator is intentionally independent of the
/// collocation defect code: a transcribed solution is only as good as its
/// behavior under this integrator, which is the gap the comparisons in
/// the reports quantify.
namespace sim {

struct IntegrationError : std::runtime_error {
  IntegrationError(const std::string& msg, double t) : std::runtime_error(msg), blow_up_time(t) {}
  double blow_up_time = 0.0;
};

/// Classical fixed-step RK4 under a time-indexed control signal. The
/// substep count is the smallest even number giving steps <= max_step, so
/// every returned trace has an even panel count (composite Simpson works
/// on it directly). Controls are sampled at RK stage times; the recorded
/// control column holds the signal at each sample instant. Throws
/// IntegrationError when the state leaves the finite range.
DenseTrace integrate_plant(const OcpDefinition& ocp, const Vec& x0,
                           const std::function<Vec(double)>& control, double t0, double t1,
                           double max_step = 1e-3);

struct SimResult {
  DenseTrace trace;
  double achieved_cost = 0.0;  // metrics::simulated_cost on the dense trace
};

/// Integrates the plant from the OCP's initial state under a solved
/// trajectory's interpolated control over the OCP horizon.
SimResult simulate_open_loop(const OcpDefinition& ocp, const Trajectory& traj,
                             double max_step = 1e-3);

enum class EmpcMode { receding, shrinking };
enum class Method { dc, irrdc };
enum class FailurePolicy { hold_previous, abort };

const char* to_string(EmpcMode m);
const char* to_string(Method m);

struct EmpcConfig {
  double step = 0.01;     // controller period
  double horizon = 5.0;   // look-ahead length (receding mode)
  EmpcMode mode = EmpcMode::receding;
  Method method = Method::dc;
  int mesh_Z = 100;
  bool warm_start = true;
  FailurePolicy on_solver_failure = FailurePolicy::hold_previous;
  double duration = -1.0;  // receding run length; < 0 means the OCP horizon
  SolverOptions solver;
  IrrConfig irr;           // budget policy for method = irrdc

  void validate() const;
};

struct EmpcStepRecord {
  double t = 0.0;             // step start time
  SolveStatus status = SolveStatus::numerical_failure;
  double objective = 0.0;     // solver-reported cost of the horizon problem
  double kkt_residual = 0.0;
  int iterations = 0;
  int mesh_Z = 0;
  bool reused_previous = false;  // no fresh solve backs this step
};

struct ClosedLoopResult {
  Vec times;             // (N+1) controller grid points
  Mat plant_states;      // (N+1) x n at the grid
  Mat applied_controls;  // (N+1) x m, the applied signal sampled at the grid
  std::vector<EmpcStepRecord> steps;  // one per controller period
  DenseTrace dense;      // substep-resolution plant trace of the whole run
  double achieved_cost = 0.0;
  double fluctuation_tv = 0.0;  // total variation of applied_controls
  int solver_failures = 0;
};

/// Closed-loop run: at each controller instant t_k, solve the horizon
/// problem from the current plant state (receding: [t_k, t_k + horizon];
/// shrinking: [t_k, tf] with the mesh scaled down proportionally, never
/// below 5 intervals), apply the first controller period of the resulting
/// interpolated control to the plant, and repeat. Warm starts time-shift
/// the previous solution and hold its last values beyond its horizon. In
/// shrinking mode the final stretch shorter than 5 controller periods is
/// played out open-loop from the last solution. Solver failures follow
/// cfg.on_solver_failure: hold_previous applies the previous solution's
/// next period (the run aborts if there is none).
ClosedLoopResult run_empc(const OcpDefinition& ocp, const EmpcConfig& cfg);

}  // namespace sim
}  // namespace singarc
