#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace singarc {

using SpMat = Eigen::SparseMatrix<double>;

enum class VarKind { node_state, mid_state, node_control, mid_control, slack };

/// Index map for the collocation decision vector. Variables are grouped
/// by interval so the constraint Jacobian and Lagrangian Hessian stay
/// block-banded:
///
///   [x_0 u_0 xm_0 um_0 | x_1 u_1 xm_1 um_1 | ... | x_Z u_Z | (slack)]
///
/// node_state/node_control accept k in [0, Z]; mid indices take z in
/// [0, Z). The optional trailing slack carries the integrated-residual
/// budget in two-phase transcriptions.
struct NlpLayout {
  int n = 0, m = 0, Z = 0;
  bool has_slack = false;

  int block() const { return 2 * (n + m); }
  int dim() const { return Z * block() + n + m + (has_slack ? 1 : 0); }

  int node_state(int k, int i) const { return k * block() + i; }
  int node_control(int k, int j) const { return k * block() + n + j; }
  int mid_state(int z, int i) const { return z * block() + n + m + i; }
  int mid_control(int z, int j) const { return z * block() + 2 * n + m + j; }
  int slack_index() const { return has_slack ? dim() - 1 : -1; }

  struct Entry {
    VarKind kind;
    int grid_index;  // node k or interval z
    int component;
  };
  Entry describe(int idx) const;
  std::string describe_str(int idx) const;
};

/// Smooth NLP in the shape the interior-point solver consumes:
///
///   minimize f(w)  subject to  c(w) = 0,  lower <= w <= upper.
///
/// Bounds may be +/-infinity; equal lower/upper pins a variable.
/// hessian_pattern lists upper-triangular (i, j), i <= j, positions where
/// the Lagrangian Hessian may be nonzero; an empty pattern means dense.
struct NlpProblem {
  Eigen::Index dim = 0;
  Eigen::Index n_eq = 0;

  std::function<double(const Eigen::VectorXd&)> objective;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> objective_gradient;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> eq_constraints;
  std::function<SpMat(const Eigen::VectorXd&)> eq_jacobian;

  Eigen::VectorXd lower, upper;
  NlpLayout layout;
  std::vector<std::pair<int, int>> hessian_pattern;

  void validate() const {
    if (dim < 1) throw std::invalid_argument("NlpProblem: empty decision vector");
    if (n_eq >= dim)
      throw std::invalid_argument("NlpProblem: need fewer equality rows than variables");
    if (!objective || !objective_gradient)
      throw std::invalid_argument("NlpProblem: objective callbacks missing");
    if (n_eq > 0 && (!eq_constraints || !eq_jacobian))
      throw std::invalid_argument("NlpProblem: constraint callbacks missing");
    if (lower.size() != dim || upper.size() != dim)
      throw std::invalid_argument("NlpProblem: bound size mismatch");
    for (Eigen::Index i = 0; i < dim; ++i)
      if (lower[i] > upper[i]) throw std::invalid_argument("NlpProblem: crossed bounds");
  }
};

inline NlpLayout::Entry NlpLayout::describe(int idx) const {
  if (has_slack && idx == slack_index()) return {VarKind::slack, 0, 0};
  const int b = block();
  const int blk = idx / b;
  int off = idx % b;
  if (blk >= Z) {  // trailing node block [x_Z u_Z]
    if (off < n) return {VarKind::node_state, Z, off};
    return {VarKind::node_control, Z, off - n};
  }
  if (off < n) return {VarKind::node_state, blk, off};
  off -= n;
  if (off < m) return {VarKind::node_control, blk, off};
  off -= m;
  if (off < n) return {VarKind::mid_state, blk, off};
  return {VarKind::mid_control, blk, off - n};
}

inline std::string NlpLayout::describe_str(int idx) const {
  const Entry e = describe(idx);
  switch (e.kind) {
    case VarKind::node_state:
      return "x[" + std::to_string(e.grid_index) + "][" + std::to_string(e.component) + "]";
    case VarKind::node_control:
      return "u[" + std::to_string(e.grid_index) + "][" + std::to_string(e.component) + "]";
    case VarKind::mid_state:
      return "xm[" + std::to_string(e.grid_index) + "][" + std::to_string(e.component) + "]";
    case VarKind::mid_control:
      return "um[" + std::to_string(e.grid_index) + "][" + std::to_string(e.component) + "]";
    case VarKind::slack:
      return "residual_slack";
  }
  return "?";
}

}  // namespace singarc
