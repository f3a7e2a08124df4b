#include "singarc/transcription.hpp"

#include "singarc/parallel.hpp"
#include "singarc/quadrature.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace singarc {

namespace {

// Values one interval contributes to every kernel: endpoint and midpoint
// states/controls plus the interval geometry.
struct IntervalVals {
  Vec xa, ua, xm, um, xb, ub;
  double ta = 0, tb = 0, tm = 0, h = 0;
};

IntervalVals from_trajectory(const Trajectory& traj, int z) {
  IntervalVals v;
  const Mesh& mesh = traj.mesh();
  v.ta = mesh.nodes[z];
  v.tb = mesh.nodes[z + 1];
  v.tm = mesh.midpoint(z);
  v.h = v.tb - v.ta;
  v.xa = traj.node_states().row(z);
  v.ua = traj.node_controls().row(z);
  v.xm = traj.mid_states().row(z);
  v.um = traj.mid_controls().row(z);
  v.xb = traj.node_states().row(z + 1);
  v.ub = traj.node_controls().row(z + 1);
  return v;
}

// Simpson panel of the running cost. Shared by the NLP objective and
// objective_quadrature so the two stay bit-identical.
double simpson_cost(const OcpDefinition& ocp, const IntervalVals& v) {
  if (!ocp.has_lagrange()) return 0.0;
  const double la = ocp.lagrange(v.xa, v.ua, v.ta);
  const double lm = ocp.lagrange(v.xm, v.um, v.tm);
  const double lb = ocp.lagrange(v.xb, v.ub, v.tb);
  return v.h / 6.0 * (la + 4.0 * lm + lb);
}

// Integrated squared residual over one interval, same code path for the
// NLP constraint and the free-function report.
double interval_residual_vals(const OcpDefinition& ocp, const IntervalVals& v,
                              const ResidualQuadrature& quad, int z) {
  const Vec fa = ocp.dynamics(v.xa, v.ua, v.ta);
  const Vec fb = ocp.dynamics(v.xb, v.ub, v.tb);
  const Vec& alpha = quad.alpha;
  double acc = 0.0;
  for (int i = 0; i < quad.points_per_interval; ++i) {
    const double t = quad.abscissae(z, i);
    const double s = (t - v.ta) / v.h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    const double d00 = (6 * s2 - 6 * s) / v.h, d10 = 3 * s2 - 4 * s + 1;
    const double d01 = (-6 * s2 + 6 * s) / v.h, d11 = 3 * s2 - 2 * s;
    const double l0 = 2 * s2 - 3 * s + 1, lm = 4 * s - 4 * s2, l1 = 2 * s2 - s;
    const Vec xq = h00 * v.xa + (h10 * v.h) * fa + h01 * v.xb + (h11 * v.h) * fb;
    const Vec dq = d00 * v.xa + d10 * fa + d01 * v.xb + d11 * fb;
    const Vec uq = l0 * v.ua + lm * v.um + l1 * v.ub;
    const Vec r = dq - ocp.dynamics(xq, uq, t);
    acc += quad.weights(z, i) * (alpha.array() * r.array()).matrix().squaredNorm();
  }
  return acc;
}

}  // namespace

ResidualQuadrature ResidualQuadrature::build(const Mesh& mesh, int n_states,
                                             int points_per_interval, const Vec& alpha_in) {
  if (points_per_interval < 1)
    throw std::invalid_argument("ResidualQuadrature: need at least one point per interval");
  mesh.validate();
  ResidualQuadrature quad;
  quad.points_per_interval = points_per_interval;
  quad.alpha = alpha_in.size() == 0 ? Vec::Ones(n_states) : alpha_in;
  if (quad.alpha.size() != n_states)
    throw std::invalid_argument("ResidualQuadrature: alpha size mismatch");
  const GaussLegendreRule rule = gauss_legendre(points_per_interval);
  const int Z = mesh.intervals();
  quad.abscissae.resize(Z, points_per_interval);
  quad.weights.resize(Z, points_per_interval);
  for (int z = 0; z < Z; ++z) {
    const double mid = mesh.midpoint(z), half = 0.5 * mesh.h(z);
    for (int i = 0; i < points_per_interval; ++i) {
      quad.abscissae(z, i) = mid + half * rule.nodes[i];
      quad.weights(z, i) = half * rule.weights[i];
    }
  }
  return quad;
}

HsTranscription::HsTranscription(OcpDefinition ocp, Mesh mesh)
    : ocp_(std::move(ocp)), mesh_(std::move(mesh)) {
  ocp_.validate();
  mesh_.validate();
  if (!ocp_.dynamics_jac_x || !ocp_.dynamics_jac_u)
    throw std::invalid_argument("HsTranscription: dynamics Jacobians are required");
  if (ocp_.has_lagrange() && (!ocp_.lagrange_grad_x || !ocp_.lagrange_grad_u))
    throw std::invalid_argument("HsTranscription: lagrange gradients are required");
  if (ocp_.has_mayer() && (!ocp_.mayer_grad_x0 || !ocp_.mayer_grad_xf))
    throw std::invalid_argument("HsTranscription: mayer gradients are required");
  const double span = ocp_.tf - ocp_.t0;
  if (std::abs(mesh_.t0() - ocp_.t0) > 1e-9 * span || std::abs(mesh_.tf() - ocp_.tf) > 1e-9 * span)
    throw std::invalid_argument("HsTranscription: mesh does not cover the OCP horizon");

  layout_.n = ocp_.n_states;
  layout_.m = ocp_.n_controls;
  layout_.Z = mesh_.intervals();
  layout_.has_slack = false;
  stride_grad_ = 3 * (layout_.n + layout_.m);

  // Static Jacobian sparsity: every row of interval z covers the
  // contiguous column span starting at the interval's block.
  const int n = layout_.n;
  const int S = stride_grad_;
  const int p = static_cast<int>(n_eq());
  jac_row_starts_.resize(p + 1);
  jac_cols_.resize(static_cast<size_t>(p) * S);
  for (int r = 0; r < p; ++r) {
    jac_row_starts_[r] = r * S;
    const int z = r / (2 * n);
    const int base = z * layout_.block();
    for (int c = 0; c < S; ++c) jac_cols_[static_cast<size_t>(r) * S + c] = base + c;
  }
  jac_row_starts_[p] = p * S;
}

void HsTranscription::interval_constraints(int z, const Vec& w, double* out) const {
  const int n = layout_.n, m = layout_.m;
  const double ta = mesh_.nodes[z], tb = mesh_.nodes[z + 1];
  const double h = tb - ta, tm = mesh_.midpoint(z);
  const Vec xa = w.segment(layout_.node_state(z, 0), n);
  const Vec ua = w.segment(layout_.node_control(z, 0), m);
  const Vec xm = w.segment(layout_.mid_state(z, 0), n);
  const Vec um = w.segment(layout_.mid_control(z, 0), m);
  const Vec xb = w.segment(layout_.node_state(z + 1, 0), n);
  const Vec ub = w.segment(layout_.node_control(z + 1, 0), m);
  const Vec fa = ocp_.dynamics(xa, ua, ta);
  const Vec fm = ocp_.dynamics(xm, um, tm);
  const Vec fb = ocp_.dynamics(xb, ub, tb);
  Eigen::Map<Vec> defect(out, n), consistency(out + n, n);
  defect = xb - xa - h / 6.0 * (fa + 4.0 * fm + fb);
  consistency = xm - 0.5 * (xa + xb) - h / 8.0 * (fa - fb);
}

Vec HsTranscription::constraints(const Vec& w) const {
  Vec c(n_eq());
  const int n = layout_.n;
  parallel_for(layout_.Z, [&](std::ptrdiff_t z) {
    interval_constraints(static_cast<int>(z), w, c.data() + 2 * n * z);
  });
  return c;
}

Vec HsTranscription::constraints_serial(const Vec& w) const {
  Vec c(n_eq());
  const int n = layout_.n;
  for (int z = 0; z < layout_.Z; ++z) interval_constraints(z, w, c.data() + 2 * n * z);
  return c;
}

void HsTranscription::interval_jacobian(int z, const Vec& w, double* values) const {
  const int n = layout_.n, m = layout_.m;
  const int S = stride_grad_;
  const double ta = mesh_.nodes[z], tb = mesh_.nodes[z + 1];
  const double h = tb - ta, tm = mesh_.midpoint(z);
  const Vec xa = w.segment(layout_.node_state(z, 0), n);
  const Vec ua = w.segment(layout_.node_control(z, 0), m);
  const Vec xm = w.segment(layout_.mid_state(z, 0), n);
  const Vec um = w.segment(layout_.mid_control(z, 0), m);
  const Vec xb = w.segment(layout_.node_state(z + 1, 0), n);
  const Vec ub = w.segment(layout_.node_control(z + 1, 0), m);
  const Mat Aa = ocp_.dynamics_jac_x(xa, ua, ta), Ba = ocp_.dynamics_jac_u(xa, ua, ta);
  const Mat Am = ocp_.dynamics_jac_x(xm, um, tm), Bm = ocp_.dynamics_jac_u(xm, um, tm);
  const Mat Ab = ocp_.dynamics_jac_x(xb, ub, tb), Bb = ocp_.dynamics_jac_u(xb, ub, tb);

  // Local column order mirrors the decision vector: xa ua xm um xb ub.
  for (int i = 0; i < n; ++i) {
    double* row = values + static_cast<size_t>(i) * S;
    for (int j = 0; j < n; ++j) {
      row[j] = (i == j ? -1.0 : 0.0) - h / 6.0 * Aa(i, j);
      row[n + m + j] = -2.0 * h / 3.0 * Am(i, j);
      row[2 * n + 2 * m + j] = (i == j ? 1.0 : 0.0) - h / 6.0 * Ab(i, j);
    }
    for (int j = 0; j < m; ++j) {
      row[n + j] = -h / 6.0 * Ba(i, j);
      row[2 * n + m + j] = -2.0 * h / 3.0 * Bm(i, j);
      row[3 * n + 2 * m + j] = -h / 6.0 * Bb(i, j);
    }
  }
  for (int i = 0; i < n; ++i) {
    double* row = values + static_cast<size_t>(n + i) * S;
    for (int j = 0; j < n; ++j) {
      row[j] = (i == j ? -0.5 : 0.0) - h / 8.0 * Aa(i, j);
      row[n + m + j] = (i == j ? 1.0 : 0.0);
      row[2 * n + 2 * m + j] = (i == j ? -0.5 : 0.0) + h / 8.0 * Ab(i, j);
    }
    for (int j = 0; j < m; ++j) {
      row[n + j] = -h / 8.0 * Ba(i, j);
      row[2 * n + m + j] = 0.0;
      row[3 * n + 2 * m + j] = h / 8.0 * Bb(i, j);
    }
  }
}

SpMat HsTranscription::constraint_jacobian(const Vec& w) const {
  const int n = layout_.n;
  const int S = stride_grad_;
  const int p = static_cast<int>(n_eq());
  Vec values(static_cast<Eigen::Index>(p) * S);
  parallel_for(layout_.Z, [&](std::ptrdiff_t z) {
    interval_jacobian(static_cast<int>(z), w, values.data() + static_cast<size_t>(2 * n * z) * S);
  });
  using RowSpMat = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
  Eigen::Map<const RowSpMat> map(p, layout_.dim(), values.size(), jac_row_starts_.data(),
                                 jac_cols_.data(), values.data());
  return SpMat(map);
}

SpMat HsTranscription::constraint_jacobian_serial(const Vec& w) const {
  const int n = layout_.n;
  const int S = stride_grad_;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(n_eq()) * S);
  std::vector<double> block(static_cast<size_t>(2 * n) * S);
  for (int z = 0; z < layout_.Z; ++z) {
    interval_jacobian(z, w, block.data());
    const int base_row = 2 * n * z;
    const int base_col = z * layout_.block();
    for (int i = 0; i < 2 * n; ++i)
      for (int c = 0; c < S; ++c)
        trips.emplace_back(base_row + i, base_col + c, block[static_cast<size_t>(i) * S + c]);
  }
  SpMat J(n_eq(), layout_.dim());
  J.setFromTriplets(trips.begin(), trips.end());
  return J;
}

double HsTranscription::interval_objective(int z, const Vec& w) const {
  const int n = layout_.n, m = layout_.m;
  IntervalVals v;
  v.ta = mesh_.nodes[z];
  v.tb = mesh_.nodes[z + 1];
  v.tm = mesh_.midpoint(z);
  v.h = v.tb - v.ta;
  v.xa = w.segment(layout_.node_state(z, 0), n);
  v.ua = w.segment(layout_.node_control(z, 0), m);
  v.xm = w.segment(layout_.mid_state(z, 0), n);
  v.um = w.segment(layout_.mid_control(z, 0), m);
  v.xb = w.segment(layout_.node_state(z + 1, 0), n);
  v.ub = w.segment(layout_.node_control(z + 1, 0), m);
  return simpson_cost(ocp_, v);
}

double HsTranscription::objective(const Vec& w) const {
  const int Z = layout_.Z;
  Vec parts(Z);
  parallel_for(Z, [&](std::ptrdiff_t z) { parts[z] = interval_objective(static_cast<int>(z), w); });
  double acc = 0.0;
  for (int z = 0; z < Z; ++z) acc += parts[z];
  if (ocp_.has_mayer()) {
    const Vec x0 = w.segment(layout_.node_state(0, 0), layout_.n);
    const Vec xZ = w.segment(layout_.node_state(Z, 0), layout_.n);
    acc += ocp_.mayer(x0, xZ, ocp_.t0, ocp_.tf);
  }
  return acc;
}

double HsTranscription::objective_serial(const Vec& w) const {
  double acc = 0.0;
  for (int z = 0; z < layout_.Z; ++z) acc += interval_objective(z, w);
  if (ocp_.has_mayer()) {
    const Vec x0 = w.segment(layout_.node_state(0, 0), layout_.n);
    const Vec xZ = w.segment(layout_.node_state(layout_.Z, 0), layout_.n);
    acc += ocp_.mayer(x0, xZ, ocp_.t0, ocp_.tf);
  }
  return acc;
}

void HsTranscription::interval_objective_gradient(int z, const Vec& w, double* out) const {
  const int n = layout_.n, m = layout_.m;
  const int S = stride_grad_;
  std::fill(out, out + S, 0.0);
  if (!ocp_.has_lagrange()) return;
  const double ta = mesh_.nodes[z], tb = mesh_.nodes[z + 1];
  const double h = tb - ta, tm = mesh_.midpoint(z);
  const Vec xa = w.segment(layout_.node_state(z, 0), n);
  const Vec ua = w.segment(layout_.node_control(z, 0), m);
  const Vec xm = w.segment(layout_.mid_state(z, 0), n);
  const Vec um = w.segment(layout_.mid_control(z, 0), m);
  const Vec xb = w.segment(layout_.node_state(z + 1, 0), n);
  const Vec ub = w.segment(layout_.node_control(z + 1, 0), m);
  Eigen::Map<Vec> gxa(out, n), gua(out + n, m), gxm(out + n + m, n), gum(out + 2 * n + m, m),
      gxb(out + 2 * (n + m), n), gub(out + 3 * n + 2 * m, m);
  gxa = h / 6.0 * ocp_.lagrange_grad_x(xa, ua, ta);
  gua = h / 6.0 * ocp_.lagrange_grad_u(xa, ua, ta);
  gxm = 2.0 * h / 3.0 * ocp_.lagrange_grad_x(xm, um, tm);
  gum = 2.0 * h / 3.0 * ocp_.lagrange_grad_u(xm, um, tm);
  gxb = h / 6.0 * ocp_.lagrange_grad_x(xb, ub, tb);
  gub = h / 6.0 * ocp_.lagrange_grad_u(xb, ub, tb);
}

void HsTranscription::add_mayer_gradient(const Vec& w, Vec& grad) const {
  if (!ocp_.has_mayer()) return;
  const int n = layout_.n;
  const Vec x0 = w.segment(layout_.node_state(0, 0), n);
  const Vec xZ = w.segment(layout_.node_state(layout_.Z, 0), n);
  grad.segment(layout_.node_state(0, 0), n) += ocp_.mayer_grad_x0(x0, xZ, ocp_.t0, ocp_.tf);
  grad.segment(layout_.node_state(layout_.Z, 0), n) += ocp_.mayer_grad_xf(x0, xZ, ocp_.t0, ocp_.tf);
}

Vec HsTranscription::objective_gradient(const Vec& w) const {
  const int Z = layout_.Z;
  const int S = stride_grad_;
  Vec scratch(static_cast<Eigen::Index>(Z) * S);
  parallel_for(Z, [&](std::ptrdiff_t z) {
    interval_objective_gradient(static_cast<int>(z), w, scratch.data() + z * S);
  });
  Vec grad = Vec::Zero(layout_.dim());
  for (int z = 0; z < Z; ++z)
    grad.segment(z * layout_.block(), S) += scratch.segment(static_cast<Eigen::Index>(z) * S, S);
  add_mayer_gradient(w, grad);
  return grad;
}

Vec HsTranscription::objective_gradient_serial(const Vec& w) const {
  const int S = stride_grad_;
  Vec grad = Vec::Zero(layout_.dim());
  Vec local(S);
  for (int z = 0; z < layout_.Z; ++z) {
    interval_objective_gradient(z, w, local.data());
    grad.segment(z * layout_.block(), S) += local;
  }
  add_mayer_gradient(w, grad);
  return grad;
}

double HsTranscription::interval_residual(int z, const Vec& w,
                                          const ResidualQuadrature& quad) const {
  const int n = layout_.n, m = layout_.m;
  IntervalVals v;
  v.ta = mesh_.nodes[z];
  v.tb = mesh_.nodes[z + 1];
  v.tm = mesh_.midpoint(z);
  v.h = v.tb - v.ta;
  v.xa = w.segment(layout_.node_state(z, 0), n);
  v.ua = w.segment(layout_.node_control(z, 0), m);
  v.xm = w.segment(layout_.mid_state(z, 0), n);
  v.um = w.segment(layout_.mid_control(z, 0), m);
  v.xb = w.segment(layout_.node_state(z + 1, 0), n);
  v.ub = w.segment(layout_.node_control(z + 1, 0), m);
  return interval_residual_vals(ocp_, v, quad, z);
}

double HsTranscription::residual(const Vec& w, const ResidualQuadrature& quad) const {
  const int Z = layout_.Z;
  Vec parts(Z);
  parallel_for(Z, [&](std::ptrdiff_t z) { parts[z] = interval_residual(static_cast<int>(z), w, quad); });
  double acc = 0.0;
  for (int z = 0; z < Z; ++z) acc += parts[z];
  return acc;
}

double HsTranscription::residual_serial(const Vec& w, const ResidualQuadrature& quad) const {
  double acc = 0.0;
  for (int z = 0; z < layout_.Z; ++z) acc += interval_residual(z, w, quad);
  return acc;
}

void HsTranscription::interval_residual_gradient(int z, const Vec& w,
                                                 const ResidualQuadrature& quad,
                                                 double* out) const {
  const int n = layout_.n, m = layout_.m;
  const int S = stride_grad_;
  std::fill(out, out + S, 0.0);
  const double ta = mesh_.nodes[z], tb = mesh_.nodes[z + 1];
  const double h = tb - ta;
  const Vec xa = w.segment(layout_.node_state(z, 0), n);
  const Vec ua = w.segment(layout_.node_control(z, 0), m);
  const Vec um = w.segment(layout_.mid_control(z, 0), m);
  const Vec xb = w.segment(layout_.node_state(z + 1, 0), n);
  const Vec ub = w.segment(layout_.node_control(z + 1, 0), m);
  const Vec fa = ocp_.dynamics(xa, ua, ta);
  const Vec fb = ocp_.dynamics(xb, ub, tb);
  const Mat Aa = ocp_.dynamics_jac_x(xa, ua, ta), Ba = ocp_.dynamics_jac_u(xa, ua, ta);
  const Mat Ab = ocp_.dynamics_jac_x(xb, ub, tb), Bb = ocp_.dynamics_jac_u(xb, ub, tb);
  const Vec w2 = quad.alpha.array().square();

  Eigen::Map<Vec> gxa(out, n), gua(out + n, m), gum(out + 2 * n + m, m),
      gxb(out + 2 * (n + m), n), gub(out + 3 * n + 2 * m, m);

  for (int i = 0; i < quad.points_per_interval; ++i) {
    const double t = quad.abscissae(z, i);
    const double wq = quad.weights(z, i);
    const double s = (t - ta) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    const double d00 = (6 * s2 - 6 * s) / h, d10 = 3 * s2 - 4 * s + 1;
    const double d01 = (-6 * s2 + 6 * s) / h, d11 = 3 * s2 - 2 * s;
    const double l0 = 2 * s2 - 3 * s + 1, lmid = 4 * s - 4 * s2, l1 = 2 * s2 - s;
    const Vec xq = h00 * xa + (h10 * h) * fa + h01 * xb + (h11 * h) * fb;
    const Vec uq = l0 * ua + lmid * um + l1 * ub;
    const Vec r = d00 * xa + d10 * fa + d01 * xb + d11 * fb - ocp_.dynamics(xq, uq, t);
    const Vec g = 2.0 * wq * (w2.array() * r.array()).matrix();
    const Mat Aq = ocp_.dynamics_jac_x(xq, uq, t);
    const Mat Bq = ocp_.dynamics_jac_u(xq, uq, t);
    const Vec vq = Aq.transpose() * g;
    const Vec bq = Bq.transpose() * g;
    gxa += d00 * g - h00 * vq + Aa.transpose() * (d10 * g - (h10 * h) * vq);
    gua += Ba.transpose() * (d10 * g - (h10 * h) * vq) - l0 * bq;
    gum += -lmid * bq;
    gxb += d01 * g - h01 * vq + Ab.transpose() * (d11 * g - (h11 * h) * vq);
    gub += Bb.transpose() * (d11 * g - (h11 * h) * vq) - l1 * bq;
  }
}

Vec HsTranscription::residual_gradient(const Vec& w, const ResidualQuadrature& quad) const {
  const int Z = layout_.Z;
  const int S = stride_grad_;
  Vec scratch(static_cast<Eigen::Index>(Z) * S);
  parallel_for(Z, [&](std::ptrdiff_t z) {
    interval_residual_gradient(static_cast<int>(z), w, quad, scratch.data() + z * S);
  });
  Vec grad = Vec::Zero(layout_.dim());
  for (int z = 0; z < Z; ++z)
    grad.segment(z * layout_.block(), S) += scratch.segment(static_cast<Eigen::Index>(z) * S, S);
  return grad;
}

Vec HsTranscription::residual_gradient_serial(const Vec& w, const ResidualQuadrature& quad) const {
  const int S = stride_grad_;
  Vec grad = Vec::Zero(layout_.dim());
  Vec local(S);
  for (int z = 0; z < layout_.Z; ++z) {
    interval_residual_gradient(z, w, quad, local.data());
    grad.segment(z * layout_.block(), S) += local;
  }
  return grad;
}

void HsTranscription::bounds(Vec& lower, Vec& upper) const {
  const int n = layout_.n, m = layout_.m, Z = layout_.Z;
  lower.resize(layout_.dim());
  upper.resize(layout_.dim());
  for (int k = 0; k <= Z; ++k) {
    for (int i = 0; i < n; ++i) {
      lower[layout_.node_state(k, i)] = ocp_.state_lower[i];
      upper[layout_.node_state(k, i)] = ocp_.state_upper[i];
    }
    for (int j = 0; j < m; ++j) {
      lower[layout_.node_control(k, j)] = ocp_.control_lower[j];
      upper[layout_.node_control(k, j)] = ocp_.control_upper[j];
    }
  }
  for (int z = 0; z < Z; ++z) {
    for (int i = 0; i < n; ++i) {
      lower[layout_.mid_state(z, i)] = ocp_.state_lower[i];
      upper[layout_.mid_state(z, i)] = ocp_.state_upper[i];
    }
    for (int j = 0; j < m; ++j) {
      lower[layout_.mid_control(z, j)] = ocp_.control_lower[j];
      upper[layout_.mid_control(z, j)] = ocp_.control_upper[j];
    }
  }
  for (int i = 0; i < n; ++i) {
    lower[layout_.node_state(0, i)] = ocp_.initial_state[i];
    upper[layout_.node_state(0, i)] = ocp_.initial_state[i];
  }
  if (ocp_.terminal_state) {
    for (int i = 0; i < n; ++i) {
      const double v = (*ocp_.terminal_state)[i];
      if (!std::isnan(v)) {
        lower[layout_.node_state(Z, i)] = v;
        upper[layout_.node_state(Z, i)] = v;
      }
    }
  }
}

std::vector<std::pair<int, int>> HsTranscription::hessian_pattern(bool /*with_slack*/) const {
  const int n = layout_.n, Z = layout_.Z;
  const int S = stride_grad_;
  std::set<std::pair<int, int>> pat;
  for (int z = 0; z < Z; ++z) {
    const int base = z * layout_.block();
    for (int i = 0; i < S; ++i)
      for (int j = i; j < S; ++j) pat.emplace(base + i, base + j);
  }
  if (ocp_.has_mayer()) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        pat.emplace(layout_.node_state(0, i), layout_.node_state(Z, j));
  }
  return {pat.begin(), pat.end()};
}

Trajectory HsTranscription::reconstruct(const Vec& w) const {
  const int n = layout_.n, m = layout_.m, Z = layout_.Z;
  if (w.size() < layout_.dim())
    throw std::invalid_argument("HsTranscription::reconstruct: short decision vector");
  Mat xs(Z + 1, n), xm(Z, n), us(Z + 1, m), um(Z, m);
  for (int k = 0; k <= Z; ++k) {
    xs.row(k) = w.segment(layout_.node_state(k, 0), n).transpose();
    us.row(k) = w.segment(layout_.node_control(k, 0), m).transpose();
  }
  for (int z = 0; z < Z; ++z) {
    xm.row(z) = w.segment(layout_.mid_state(z, 0), n).transpose();
    um.row(z) = w.segment(layout_.mid_control(z, 0), m).transpose();
  }
  return Trajectory(ocp_, mesh_, std::move(xs), std::move(xm), std::move(us), std::move(um));
}

Vec HsTranscription::flatten(const Trajectory& traj) const {
  const int n = layout_.n, m = layout_.m, Z = layout_.Z;
  if (traj.mesh().intervals() != Z || traj.n_states() != n || traj.n_controls() != m)
    throw std::invalid_argument("HsTranscription::flatten: trajectory shape mismatch");
  Vec w(layout_.dim());
  for (int k = 0; k <= Z; ++k) {
    w.segment(layout_.node_state(k, 0), n) = traj.node_states().row(k).transpose();
    w.segment(layout_.node_control(k, 0), m) = traj.node_controls().row(k).transpose();
  }
  for (int z = 0; z < Z; ++z) {
    w.segment(layout_.mid_state(z, 0), n) = traj.mid_states().row(z).transpose();
    w.segment(layout_.mid_control(z, 0), m) = traj.mid_controls().row(z).transpose();
  }
  return w;
}

Vec HsTranscription::cold_start() const {
  const int n = layout_.n, m = layout_.m, Z = layout_.Z;
  Vec target = Vec::Zero(n);
  if (ocp_.terminal_state)
    for (int i = 0; i < n; ++i)
      if (!std::isnan((*ocp_.terminal_state)[i])) target[i] = (*ocp_.terminal_state)[i];
  auto state_at = [&](double t) -> Vec {
    const double s = (t - ocp_.t0) / (ocp_.tf - ocp_.t0);
    return ocp_.initial_state + s * (target - ocp_.initial_state);
  };
  Vec u0(m);
  for (int j = 0; j < m; ++j)
    u0[j] = std::min(std::max(0.0, ocp_.control_lower[j]), ocp_.control_upper[j]);

  Vec w(layout_.dim());
  for (int k = 0; k <= Z; ++k) {
    w.segment(layout_.node_state(k, 0), n) = state_at(mesh_.nodes[k]);
    w.segment(layout_.node_control(k, 0), m) = u0;
  }
  for (int z = 0; z < Z; ++z) {
    w.segment(layout_.mid_state(z, 0), n) = state_at(mesh_.midpoint(z));
    w.segment(layout_.mid_control(z, 0), m) = u0;
  }
  return w;
}

NlpProblem transcribe_dc(const OcpDefinition& ocp, const Mesh& mesh) {
  auto eng = std::make_shared<const HsTranscription>(ocp, mesh);
  NlpProblem nlp;
  nlp.dim = eng->layout().dim();
  nlp.n_eq = eng->n_eq();
  nlp.objective = [eng](const Vec& w) { return eng->objective(w); };
  nlp.objective_gradient = [eng](const Vec& w) { return eng->objective_gradient(w); };
  nlp.eq_constraints = [eng](const Vec& w) { return eng->constraints(w); };
  nlp.eq_jacobian = [eng](const Vec& w) { return eng->constraint_jacobian(w); };
  eng->bounds(nlp.lower, nlp.upper);
  nlp.layout = eng->layout();
  nlp.hessian_pattern = eng->hessian_pattern(false);
  nlp.validate();
  return nlp;
}

double IrrdcTranscription::residual_of(const Vec& w) const {
  return engine->residual(w.head(engine->layout().dim()), quad);
}

IrrdcTranscription transcribe_irrdc(const OcpDefinition& ocp, const Mesh& mesh,
                                    const ResidualQuadrature& quad, const IrrConfig& cfg) {
  if (cfg.eta < 1.0) throw std::invalid_argument("transcribe_irrdc: eta must be >= 1");
  if (cfg.eps_abs <= 0.0) throw std::invalid_argument("transcribe_irrdc: eps_abs must be positive");
  auto eng = std::make_shared<const HsTranscription>(ocp, mesh);
  if (quad.abscissae.rows() != mesh.intervals() || quad.alpha.size() != ocp.n_states)
    throw std::invalid_argument("transcribe_irrdc: quadrature does not match mesh/problem");

  // Phase 1: minimize the integrated residual over the collocation
  // feasible set.
  NlpProblem phase1;
  phase1.dim = eng->layout().dim();
  phase1.n_eq = eng->n_eq();
  ResidualQuadrature q = quad;
  phase1.objective = [eng, q](const Vec& w) { return eng->residual(w, q); };
  phase1.objective_gradient = [eng, q](const Vec& w) { return eng->residual_gradient(w, q); };
  phase1.eq_constraints = [eng](const Vec& w) { return eng->constraints(w); };
  phase1.eq_jacobian = [eng](const Vec& w) { return eng->constraint_jacobian(w); };
  eng->bounds(phase1.lower, phase1.upper);
  phase1.layout = eng->layout();
  phase1.hessian_pattern = eng->hessian_pattern(false);
  phase1.validate();

  const Vec start = cfg.phase1_start ? *cfg.phase1_start : eng->cold_start();
  SolveResult r1 = solve(phase1, start, cfg.phase1_options);
  if (!r1.ok())
    throw TranscriptionError(
        std::string("transcribe_irrdc: phase-1 residual minimization ended with status ") +
            to_string(r1.status) + " (kkt " + std::to_string(r1.kkt_residual) + ")",
        std::move(r1));

  IrrdcTranscription out;
  out.engine = eng;
  out.quad = quad;
  out.phase1 = std::move(r1);
  out.r_min = eng->residual(out.phase1.w, quad);
  out.budget = std::max(cfg.eta * out.r_min, cfg.eps_abs);

  const Eigen::Index dim0 = eng->layout().dim();
  const Eigen::Index p0 = eng->n_eq();
  const double budget = out.budget;

  NlpProblem& ph2 = out.problem;
  ph2.dim = dim0 + 1;
  ph2.n_eq = p0 + 1;
  ph2.objective = [eng, dim0](const Vec& w) { return eng->objective(w.head(dim0)); };
  ph2.objective_gradient = [eng, dim0](const Vec& w) {
    Vec g(dim0 + 1);
    g.head(dim0) = eng->objective_gradient(w.head(dim0));
    g[dim0] = 0.0;
    return g;
  };
  // The budget row is imposed in unit scale, residual/budget + s = 1 with a
  // dimensionless slack s >= 0. The unscaled form puts the slack at the
  // budget's magnitude, where the log barrier forces enormous multipliers
  // onto the row and the solve stalls.
  ph2.eq_constraints = [eng, q, dim0, p0, budget](const Vec& w) {
    Vec c(p0 + 1);
    c.head(p0) = eng->constraints(w.head(dim0));
    c[p0] = eng->residual(w.head(dim0), q) / budget + w[dim0] - 1.0;
    return c;
  };
  ph2.eq_jacobian = [eng, q, dim0, p0, budget](const Vec& w) {
    const SpMat J0 = eng->constraint_jacobian(w.head(dim0));
    const Vec gr = eng->residual_gradient(w.head(dim0), q);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(J0.nonZeros()) + dim0 + 1);
    for (int k = 0; k < J0.outerSize(); ++k)
      for (SpMat::InnerIterator it(J0, k); it; ++it)
        trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    for (Eigen::Index j = 0; j < dim0; ++j)
      trips.emplace_back(static_cast<int>(p0), static_cast<int>(j), gr[j] / budget);
    trips.emplace_back(static_cast<int>(p0), static_cast<int>(dim0), 1.0);
    SpMat J(p0 + 1, dim0 + 1);
    J.setFromTriplets(trips.begin(), trips.end());
    return J;
  };
  Vec lo, hi;
  eng->bounds(lo, hi);
  ph2.lower.resize(dim0 + 1);
  ph2.upper.resize(dim0 + 1);
  ph2.lower.head(dim0) = lo;
  ph2.upper.head(dim0) = hi;
  ph2.lower[dim0] = 0.0;
  ph2.upper[dim0] = std::numeric_limits<double>::infinity();
  ph2.layout = eng->layout();
  ph2.layout.has_slack = true;
  ph2.hessian_pattern = eng->hessian_pattern(true);
  ph2.validate();

  out.warm_start.resize(dim0 + 1);
  out.warm_start.head(dim0) = out.phase1.w;
  out.warm_start[dim0] = 1.0 - out.r_min / budget;
  return out;
}

double objective_quadrature(const Trajectory& traj, const OcpDefinition& ocp) {
  const int Z = traj.mesh().intervals();
  double acc = 0.0;
  for (int z = 0; z < Z; ++z) acc += simpson_cost(ocp, from_trajectory(traj, z));
  if (ocp.has_mayer()) {
    const Vec x0 = traj.node_states().row(0);
    const Vec xZ = traj.node_states().row(Z);
    acc += ocp.mayer(x0, xZ, ocp.t0, ocp.tf);
  }
  return acc;
}

Vec integrated_residual_per_interval(const Trajectory& traj, const OcpDefinition& ocp,
                                     const ResidualQuadrature& quad) {
  const int Z = traj.mesh().intervals();
  if (quad.abscissae.rows() != Z)
    throw std::invalid_argument("integrated_residual: quadrature does not match the mesh");
  if (quad.alpha.size() != ocp.n_states)
    throw std::invalid_argument("integrated_residual: alpha size mismatch");
  Vec parts(Z);
  for (int z = 0; z < Z; ++z)
    parts[z] = interval_residual_vals(ocp, from_trajectory(traj, z), quad, z);
  return parts;
}

double integrated_residual(const Trajectory& traj, const OcpDefinition& ocp,
                           const ResidualQuadrature& quad) {
  const Vec parts = integrated_residual_per_interval(traj, ocp, quad);
  double acc = 0.0;
  for (Eigen::Index z = 0; z < parts.size(); ++z) acc += parts[z];
  return acc;
}

}  // namespace singarc
