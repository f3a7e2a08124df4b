#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <string>

namespace singarc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Continuous-time optimal control problem in Bolza form:
///
///   minimize  mayer(x(t0), x(tf)) + integral of lagrange(x, u, t)
///   subject to  dx/dt = dynamics(x, u, t),  x(t0) = initial_state,
///               control_lower <= u <= control_upper,
///               state_lower <= x <= state_upper,
///               x(tf) = terminal_state  (per-channel, where given).
///
/// All derivative callbacks are analytic first derivatives; they are
/// cross-checked against finite differences by validate_derivatives().
/// Either cost term may be absent (null std::function).
struct OcpDefinition {
  std::string name;
  int n_states = 0;
  int n_controls = 0;
  double t0 = 0.0;
  double tf = 1.0;

  std::function<Vec(const Vec& x, const Vec& u, double t)> dynamics;
  std::function<Mat(const Vec& x, const Vec& u, double t)> dynamics_jac_x;  // n x n
  std::function<Mat(const Vec& x, const Vec& u, double t)> dynamics_jac_u;  // n x m

  std::function<double(const Vec& x, const Vec& u, double t)> lagrange;
  std::function<Vec(const Vec& x, const Vec& u, double t)> lagrange_grad_x;
  std::function<Vec(const Vec& x, const Vec& u, double t)> lagrange_grad_u;

  std::function<double(const Vec& x0, const Vec& xf, double t0, double tf)> mayer;
  std::function<Vec(const Vec& x0, const Vec& xf, double t0, double tf)> mayer_grad_x0;
  std::function<Vec(const Vec& x0, const Vec& xf, double t0, double tf)> mayer_grad_xf;

  Vec initial_state;
  Vec control_lower, control_upper;  // size m, +/-inf where free
  Vec state_lower, state_upper;      // size n, +/-inf where free
  // Terminal equality per channel; NaN entries are free.
  std::optional<Vec> terminal_state;

  /// Throws std::invalid_argument on malformed sizes, tf <= t0, crossed
  /// bounds, or an initial state violating the state bounds.
  void validate() const;

  bool has_lagrange() const { return static_cast<bool>(lagrange); }
  bool has_mayer() const { return static_cast<bool>(mayer); }
};

/// Strictly increasing time grid t0 = node(0) < ... < node(Z) = tf.
struct Mesh {
  Eigen::VectorXd nodes;

  static Mesh uniform(double t0, double tf, int intervals);

  int intervals() const { return static_cast<int>(nodes.size()) - 1; }
  double t0() const { return nodes[0]; }
  double tf() const { return nodes[nodes.size() - 1]; }
  double h(int z) const { return nodes[z + 1] - nodes[z]; }
  double midpoint(int z) const { return 0.5 * (nodes[z] + nodes[z + 1]); }

  /// Index z with nodes[z] <= t <= nodes[z+1]. A t that hits an interior
  /// node resolves to the interval on its right; the interpolants built on
  /// the mesh are continuous, so evaluation does not depend on the choice.
  int locate(double t) const;

  void validate() const;
};

/// Discrete trajectory produced by transcription: state and control values
/// at mesh nodes and interval midpoints. Between nodes the state is the
/// cubic Hermite interpolant through the endpoint values with endpoint
/// slopes f(x_k, u_k, t_k); the control is the quadratic through the two
/// endpoints and the midpoint. Node controls are shared by adjacent
/// intervals, so the control is continuous. Immutable once built.
class Trajectory {
 public:
  /// node_states: (Z+1) x n, mid_states: Z x n,
  /// node_controls: (Z+1) x m, mid_controls: Z x m.
  /// Node slopes are evaluated once here via ocp.dynamics.
  Trajectory(const OcpDefinition& ocp, Mesh mesh, Mat node_states, Mat mid_states,
             Mat node_controls, Mat mid_controls);

  /// Value of the interpolated state at t. Throws std::domain_error for t
  /// outside [t0, tf] (up to roundoff slop).
  Vec eval_state(double t) const;

  /// Value of the interpolated control at t. Same domain rule.
  Vec eval_control(double t) const;

  /// Time derivative of the state interpolant (not of the dynamics).
  Vec eval_state_derivative(double t) const;

  const Mesh& mesh() const { return mesh_; }
  const Mat& node_states() const { return xs_; }
  const Mat& mid_states() const { return xm_; }
  const Mat& node_controls() const { return us_; }
  const Mat& mid_controls() const { return um_; }
  const Mat& node_slopes() const { return fs_; }
  int n_states() const { return static_cast<int>(xs_.cols()); }
  int n_controls() const { return static_cast<int>(us_.cols()); }

 private:
  double clamp_time(double t) const;

  Mesh mesh_;
  Mat xs_, xm_, us_, um_;
  Mat fs_;  // dynamics at nodes, (Z+1) x n
};

/// Densely sampled run of a plant or rollout: times (monotone), states
/// (rows match times), controls applied at those instants.
struct DenseTrace {
  Vec times;
  Mat states;
  Mat controls;
};

struct DerivativeCheckEntry {
  std::string which;  // e.g. "dynamics_jac_x(2,0)"
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct DerivativeCheckReport {
  double max_rel_error = 0.0;
  DerivativeCheckEntry worst;
  bool ok(double tol = 1e-6) const { return max_rel_error <= tol; }
};

/// Central-difference check of every supplied derivative callback against
/// its value function at `points` random interior samples. States are
/// drawn around the initial state, controls strictly inside their bounds,
/// times inside (t0, tf). Deterministic for a fixed seed.
DerivativeCheckReport validate_derivatives(const OcpDefinition& ocp, int points = 100,
                                           unsigned seed = 0x5eed);

}  // namespace singarc
