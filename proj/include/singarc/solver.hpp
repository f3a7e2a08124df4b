#pragma once

#include "singarc/nlp.hpp"

#include <optional>

namespace singarc {

struct SolverOptions {
  double tol_kkt = 1e-9;       // unscaled KKT infinity-norm target
  int max_iter = 500;
  double barrier_init = 0.1;   // initial mu
  double barrier_reduction = 0.2;
  double fraction_to_boundary = 0.995;
  double reg_init = 1e-4;      // first inertia-correction shift
  double reg_min = 1e-12;
  double reg_max = 1e10;
  int dense_threshold = 200;   // below this many variables use the dense path
  bool verbose = false;
};

enum class SolveStatus { optimal, max_iter, infeasible, numerical_failure };

const char* to_string(SolveStatus s);

struct SolveResult {
  SolveStatus status = SolveStatus::numerical_failure;
  Eigen::VectorXd w;        // final primal iterate
  Eigen::VectorXd y;        // equality multipliers
  Eigen::VectorXd z_lower;  // bound multipliers, zero where the bound is absent
  Eigen::VectorXd z_upper;
  double objective = 0.0;
  double kkt_residual = 0.0;
  double constraint_violation = 0.0;
  int iterations = 0;

  bool ok() const { return status == SolveStatus::optimal; }
};

/// Primal-dual interior-point solve of an NlpProblem. Bounds enter
/// through a log barrier, equalities through multipliers; each barrier
/// level takes damped Newton steps on the perturbed KKT system with
/// inertia-correcting regularization, a fraction-to-boundary step cap and
/// a backtracking line search on an l1 exact-penalty merit function. The
/// barrier parameter is reduced monotonically. Deterministic: identical
/// inputs produce identical iterates.
///
/// w0 is clipped into the box and pushed strictly inside before the first
/// iterate. Optional warm_y seeds the equality multipliers; otherwise
/// (and for warm primal starts) duals come from a least-squares estimate.
SolveResult solve(const NlpProblem& nlp, const Eigen::VectorXd& w0, const SolverOptions& opts = {},
                  const std::optional<Eigen::VectorXd>& warm_y = std::nullopt);

struct NlpDerivativeCheck {
  double max_rel_error_gradient = 0.0;
  double max_rel_error_jacobian = 0.0;
  std::string worst;
  double max_rel_error() const {
    return std::max(max_rel_error_gradient, max_rel_error_jacobian);
  }
  bool ok(double tol = 1e-6) const { return max_rel_error() <= tol; }
};

/// Central finite-difference audit of objective_gradient and eq_jacobian
/// at the given point (plus `extra_points` random interior perturbations
/// of it). Deterministic for a fixed seed.
NlpDerivativeCheck check_derivatives(const NlpProblem& nlp, const Eigen::VectorXd& w,
                                     int extra_points = 2, unsigned seed = 0x5eed);

}  // namespace singarc
