#pragma once

#include "singarc/nlp.hpp"
#include "singarc/ocp.hpp"
#include "singarc/solver.hpp"

#include <memory>

namespace singarc {

/// Gauss-Legendre quadrature of the squared dynamics residual, realized
/// per mesh interval: abscissae(z, i) and weights(z, i) integrate over
/// [nodes(z), nodes(z+1)]; alpha holds per-channel residual weights.
struct ResidualQuadrature {
  int points_per_interval = 5;
  Vec alpha;        // size n
  Mat abscissae;    // Z x Q
  Mat weights;      // Z x Q

  static ResidualQuadrature build(const Mesh& mesh, int n_states, int points_per_interval = 5,
                                  const Vec& alpha = Vec());
};

/// Separated Hermite-Simpson transcription of one OCP on one mesh plus
/// the integrated-residual machinery built on the same decision vector.
/// Decision variables are states and controls at nodes and midpoints (see
/// NlpLayout). Each interval contributes a Simpson defect row block and a
/// midpoint consistency row block.
///
/// Every evaluation kernel comes in two forms: the production one runs
/// interval contributions through parallel_for into disjoint slots and
/// reduces in interval order, the *_serial twin is a plain reference loop
/// kept for testing. Both produce bit-identical results.
class HsTranscription {
 public:
  HsTranscription(OcpDefinition ocp, Mesh mesh);

  const NlpLayout& layout() const { return layout_; }
  const OcpDefinition& ocp() const { return ocp_; }
  const Mesh& mesh() const { return mesh_; }
  Eigen::Index n_eq() const { return 2 * ocp_.n_states * mesh_.intervals(); }

  // Bolza objective via per-interval Simpson plus the Mayer term.
  double objective(const Vec& w) const;
  double objective_serial(const Vec& w) const;
  Vec objective_gradient(const Vec& w) const;
  Vec objective_gradient_serial(const Vec& w) const;

  // Stacked defect and consistency rows.
  Vec constraints(const Vec& w) const;
  Vec constraints_serial(const Vec& w) const;
  SpMat constraint_jacobian(const Vec& w) const;
  SpMat constraint_jacobian_serial(const Vec& w) const;

  // Integrated squared dynamics residual of the interpolants encoded in w.
  double residual(const Vec& w, const ResidualQuadrature& quad) const;
  double residual_serial(const Vec& w, const ResidualQuadrature& quad) const;
  Vec residual_gradient(const Vec& w, const ResidualQuadrature& quad) const;
  Vec residual_gradient_serial(const Vec& w, const ResidualQuadrature& quad) const;

  /// Box bounds for the plain collocation NLP: control/state bounds at
  /// nodes and midpoints, the initial state pinned, terminal channels
  /// pinned where the OCP asks for them.
  void bounds(Vec& lower, Vec& upper) const;

  /// Conservative symmetric sparsity of the Lagrangian Hessian: dense
  /// coupling inside each interval's variable group plus the Mayer corner
  /// between the first and last node blocks.
  std::vector<std::pair<int, int>> hessian_pattern(bool with_slack) const;

  Trajectory reconstruct(const Vec& w) const;
  Vec flatten(const Trajectory& traj) const;

  /// Default initial guess: states interpolate linearly from the initial
  /// state to the terminal target where one exists and to the origin
  /// otherwise; controls are zero (clipped into their bounds).
  Vec cold_start() const;

 private:
  void interval_constraints(int z, const Vec& w, double* out) const;
  void interval_jacobian(int z, const Vec& w, double* values) const;
  double interval_objective(int z, const Vec& w) const;
  void interval_objective_gradient(int z, const Vec& w, double* out) const;
  double interval_residual(int z, const Vec& w, const ResidualQuadrature& quad) const;
  void interval_residual_gradient(int z, const Vec& w, const ResidualQuadrature& quad,
                                  double* out) const;
  void add_mayer_gradient(const Vec& w, Vec& grad) const;

  OcpDefinition ocp_;
  Mesh mesh_;
  NlpLayout layout_;
  // Fixed jacobian sparsity: per interval, slots into the value array.
  std::vector<int> jac_row_starts_;
  std::vector<int> jac_cols_;
  int stride_grad_ = 0;  // per-interval gradient scratch width
};

/// Plain direct-collocation NLP: Bolza objective, defect equalities, box
/// bounds. The returned problem shares the transcription engine through a
/// shared_ptr and stays valid on its own.
NlpProblem transcribe_dc(const OcpDefinition& ocp, const Mesh& mesh);

struct IrrConfig {
  double eta = 10.0;       // residual budget multiplier over the phase-1 minimum
  double eps_abs = 1e-8;   // absolute floor of the budget
  SolverOptions phase1_options;
  std::optional<Vec> phase1_start;  // defaults to the cold start
};

/// Thrown when the phase-1 residual minimization of transcribe_irrdc does
/// not reach optimality; carries the solver diagnostics.
struct TranscriptionError : std::runtime_error {
  TranscriptionError(const std::string& msg, SolveResult diag)
      : std::runtime_error(msg), phase1(std::move(diag)) {}
  SolveResult phase1;
};

struct IrrdcTranscription {
  NlpProblem problem;   // phase 2: Bolza objective, defects, residual budget row
  Vec warm_start;       // phase-1 solution lifted into the phase-2 layout
  double r_min = 0.0;   // phase-1 minimal integrated residual
  double budget = 0.0;  // max(eta * r_min, eps_abs)
  SolveResult phase1;
  std::shared_ptr<const HsTranscription> engine;
  ResidualQuadrature quad;

  /// Integrated residual of a phase-2 iterate (slack column ignored).
  double residual_of(const Vec& w) const;
};

/// Two-phase integrated-residual-regularized transcription. Phase 1
/// minimizes the integrated residual subject to the collocation defects
/// and bounds; its optimum r_min sets the residual budget for the
/// returned phase-2 problem, where the budget enters as one extra
/// equality row residual(w) + slack = budget with slack >= 0 (imposed
/// in unit scale: residual/budget + s = 1, s the slack per budget).
IrrdcTranscription transcribe_irrdc(const OcpDefinition& ocp, const Mesh& mesh,
                                    const ResidualQuadrature& quad, const IrrConfig& cfg = {});

/// Simpson quadrature of the running cost along a discrete trajectory
/// plus the Mayer term: identical arithmetic to the NLP objective, so the
/// two agree bit-for-bit on matching data.
double objective_quadrature(const Trajectory& traj, const OcpDefinition& ocp);

/// Integrated squared dynamics residual of a trajectory under the given
/// quadrature (free function form used by reports).
double integrated_residual(const Trajectory& traj, const OcpDefinition& ocp,
                           const ResidualQuadrature& quad);

/// Same integral split per interval (diagnostic for reports).
Vec integrated_residual_per_interval(const Trajectory& traj, const OcpDefinition& ocp,
                                     const ResidualQuadrature& quad);

}  // namespace singarc
