#pragma once

#include "singarc/benchmarks.hpp"
#include "singarc/ocp.hpp"

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace singarc {

/// Hand-derived first-order-optimality results for each benchmark:
/// singular feedback laws, switching structure, the Kelley test and the
/// instability analysis of the closed singular-arc system. These are
/// independent of the transcription/solver stack and act as ground truth
/// in tests and reports.
namespace oracles {

struct OracleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Case split of a bang/singular solution keyed on the switching
/// function sign: S > 0 selects one bound, S < 0 the other, S == 0 the
/// singular feedback. Records the per-problem convention instead of
/// enforcing a global one.
struct SingularAnalysis {
  std::string benchmark;
  std::function<double(const Vec&)> policy;     // u_S; may throw OracleError
  std::function<bool(const Vec&)> kelley_ok;    // total (never throws)
  int arc_order = 1;                            // derivative pairs of S before u appears
  std::string switching_structure;              // human-readable case split
};

// ---------------------------------------------------------------------------
// Double integrator with quadratic running cost on [0, 5]

/// Singular feedback u* = x1, clamped to the control box [-1, 1].
double second_order_policy(const Vec& x);

/// Cost of the candidate structure {u = -1 on [0, t_s], singular u = x1
/// afterwards} from x0 = (0, 1), evaluated in closed form: the bang phase
/// integrates polynomially and the singular phase rides the explicit
/// hyperbolic flow of x1'' = x1.
double second_order_switch_cost(double t_switch);

/// Same quantity via RK4 (step <= 1e-4) with the running cost as an
/// augmented state; independent numeric route used to validate the
/// closed form.
double second_order_switch_cost_rk4(double t_switch, double step = 1e-4);

struct ShootingResult {
  double t_switch = 0.0;
  double cost = 0.0;           // J_a
  double terminal_norm = 0.0;  // |x(5)|
  int evaluations = 0;
};

/// Golden-section minimization of second_order_switch_cost_rk4 over the
/// bracket [lo, hi] to width `tol`. Throws OracleError when the bracket
/// does not contain an interior minimum.
ShootingResult second_order_shooting_oracle(double lo = 1.2, double hi = 1.6, double tol = 1e-8);

SingularAnalysis second_order_analysis();

// ---------------------------------------------------------------------------
// Aly-Chan problem on [0, pi/2] (fully singular)

struct AlyChanPoint {
  Vec x;        // (sin t, cos t, sin(2t)/4)
  double u;     // -sin t
  Vec costate;  // (-cos t, 0, 1)
};

/// Pointwise analytic optimum. Throws std::domain_error outside
/// [0, pi/2] (tolerance 1e-12).
AlyChanPoint aly_chan_analytic(double t);

SingularAnalysis aly_chan_analysis();

// ---------------------------------------------------------------------------
// Single-machine-infinite-bus benchmark

/// Singular arc feedback
///   u_S = (P_M - D x2 - 2 H (C2/C1)^2 x1) / (P_E sin(delta_ep + x1)),
/// unclamped (callers decide saturation). Throws OracleError when
/// |sin(delta_ep + x1)| <= 1e-9.
double smib_singular_policy(const Vec& x, const SmibParams& p = {});

/// Reduced generalized Legendre-Clebsch inequality for the arc:
/// sin(delta_ep + x1) >= 0.
bool smib_kelley(const Vec& x, const SmibParams& p = {});

struct EigenReport {
  double lambda_plus = 0.0;
  double lambda_minus = 0.0;
  bool unstable = false;  // any eigenvalue with positive real part
};

/// Eigenvalues +-C2/C1 of the autonomous system x1' = x2,
/// x2' = (C2/C1)^2 x1 obtained by substituting u_S into the dynamics
/// (the H-dependence cancels).
EigenReport smib_autonomous_eigenvalues(const SmibParams& p = {});

/// The A matrix of that autonomous system.
Mat smib_autonomous_matrix(const SmibParams& p = {});

SingularAnalysis smib_analysis(const SmibParams& p = {});

// ---------------------------------------------------------------------------
// Feedback rollout

struct FeedbackRollout {
  std::vector<double> times;
  Mat states;     // N x n, one row per recorded time
  Vec controls;   // policy sample at each recorded time (NaN once truncated)
  bool diverged = false;        // |x| exceeded the divergence norm
  bool policy_failed = false;   // policy threw mid-rollout
  std::string note;             // reason when truncated
  double step_used = 0.0;
};

struct RolloutOptions {
  double step = 1e-3;             // RK4 step (last step shortened to land on T)
  double divergence_norm = 1e3;
  bool saturate = false;          // clamp policy output into ocp control bounds
};

/// RK4 rollout of the closed loop x' = f(x, policy(x, t), t) from x0
/// over [ocp.t0, ocp.t0 + T], with the feedback evaluated at every RK
/// stage. Recording stops early with the corresponding flag when the
/// state norm exceeds the divergence threshold or the policy throws.
FeedbackRollout rollout_feedback(const std::function<double(const Vec&, double)>& policy,
                                 const OcpDefinition& ocp, const Vec& x0, double T,
                                 const RolloutOptions& opts = {});

}  // namespace oracles
}  // namespace singarc
