#include "singarc/ocp.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace singarc {

void OcpDefinition::validate() const {
  if (n_states < 1) throw std::invalid_argument(name + ": n_states must be positive");
  if (n_controls < 0) throw std::invalid_argument(name + ": n_controls must be nonnegative");
  if (!(tf > t0)) throw std::invalid_argument(name + ": tf must exceed t0");
  if (!dynamics) throw std::invalid_argument(name + ": dynamics callback missing");
  if (!has_lagrange() && !has_mayer())
    throw std::invalid_argument(name + ": needs a lagrange or mayer term");
  if (initial_state.size() != n_states)
    throw std::invalid_argument(name + ": initial_state size mismatch");
  auto check_bounds = [&](const Vec& lo, const Vec& hi, int len, const char* what) {
    if (lo.size() != len || hi.size() != len)
      throw std::invalid_argument(name + ": " + what + " bound size mismatch");
    for (int i = 0; i < len; ++i)
      if (lo[i] > hi[i]) throw std::invalid_argument(name + ": crossed " + what + " bounds");
  };
  check_bounds(control_lower, control_upper, n_controls, "control");
  check_bounds(state_lower, state_upper, n_states, "state");
  for (int i = 0; i < n_states; ++i)
    if (initial_state[i] < state_lower[i] || initial_state[i] > state_upper[i])
      throw std::invalid_argument(name + ": initial state violates state bounds");
  if (terminal_state && terminal_state->size() != n_states)
    throw std::invalid_argument(name + ": terminal_state size mismatch");
}

Mesh Mesh::uniform(double t0, double tf, int intervals) {
  if (intervals < 1) throw std::invalid_argument("Mesh::uniform: need at least 1 interval");
  if (!(tf > t0)) throw std::invalid_argument("Mesh::uniform: tf must exceed t0");
  Mesh mesh;
  mesh.nodes.resize(intervals + 1);
  for (int k = 0; k <= intervals; ++k)
    mesh.nodes[k] = t0 + (tf - t0) * static_cast<double>(k) / intervals;
  mesh.nodes[intervals] = tf;
  return mesh;
}

void Mesh::validate() const {
  if (nodes.size() < 2) throw std::invalid_argument("Mesh: need at least 2 nodes");
  for (Eigen::Index k = 0; k + 1 < nodes.size(); ++k)
    if (!(nodes[k + 1] > nodes[k]))
      throw std::invalid_argument("Mesh: node times must be strictly increasing");
}

int Mesh::locate(double t) const {
  const int Z = intervals();
  // Nodes are nearly uniform in every caller; guess then correct.
  int z = static_cast<int>((t - t0()) / (tf() - t0()) * Z);
  if (z < 0) z = 0;
  if (z > Z - 1) z = Z - 1;
  while (z > 0 && t < nodes[z]) --z;
  while (z < Z - 1 && t > nodes[z + 1]) ++z;
  return z;
}

Trajectory::Trajectory(const OcpDefinition& ocp, Mesh mesh, Mat node_states, Mat mid_states,
                       Mat node_controls, Mat mid_controls)
    : mesh_(std::move(mesh)),
      xs_(std::move(node_states)),
      xm_(std::move(mid_states)),
      us_(std::move(node_controls)),
      um_(std::move(mid_controls)) {
  mesh_.validate();
  const int Z = mesh_.intervals();
  const int n = ocp.n_states, m = ocp.n_controls;
  if (xs_.rows() != Z + 1 || xs_.cols() != n)
    throw std::invalid_argument("Trajectory: node_states must be (Z+1) x n");
  if (xm_.rows() != Z || xm_.cols() != n)
    throw std::invalid_argument("Trajectory: mid_states must be Z x n");
  if (us_.rows() != Z + 1 || us_.cols() != m)
    throw std::invalid_argument("Trajectory: node_controls must be (Z+1) x m");
  if (um_.rows() != Z || um_.cols() != m)
    throw std::invalid_argument("Trajectory: mid_controls must be Z x m");
  fs_.resize(Z + 1, n);
  for (int k = 0; k <= Z; ++k)
    fs_.row(k) = ocp.dynamics(xs_.row(k), us_.row(k), mesh_.nodes[k]).transpose();
}

double Trajectory::clamp_time(double t) const {
  const double span = mesh_.tf() - mesh_.t0();
  const double slop = 1e-10 * span;
  if (t < mesh_.t0() - slop || t > mesh_.tf() + slop)
    throw std::domain_error("Trajectory: time outside [t0, tf]");
  if (t < mesh_.t0()) return mesh_.t0();
  if (t > mesh_.tf()) return mesh_.tf();
  return t;
}

Vec Trajectory::eval_state(double t) const {
  t = clamp_time(t);
  const int z = mesh_.locate(t);
  const double h = mesh_.h(z);
  const double s = (t - mesh_.nodes[z]) / h;
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  return h00 * xs_.row(z).transpose() + (h10 * h) * fs_.row(z).transpose() +
         h01 * xs_.row(z + 1).transpose() + (h11 * h) * fs_.row(z + 1).transpose();
}

Vec Trajectory::eval_state_derivative(double t) const {
  t = clamp_time(t);
  const int z = mesh_.locate(t);
  const double h = mesh_.h(z);
  const double s = (t - mesh_.nodes[z]) / h;
  const double s2 = s * s;
  const double d00 = (6 * s2 - 6 * s) / h;
  const double d10 = 3 * s2 - 4 * s + 1;
  const double d01 = (-6 * s2 + 6 * s) / h;
  const double d11 = 3 * s2 - 2 * s;
  return d00 * xs_.row(z).transpose() + d10 * fs_.row(z).transpose() +
         d01 * xs_.row(z + 1).transpose() + d11 * fs_.row(z + 1).transpose();
}

Vec Trajectory::eval_control(double t) const {
  t = clamp_time(t);
  const int z = mesh_.locate(t);
  const double s = (t - mesh_.nodes[z]) / mesh_.h(z);
  const double l0 = (2 * s - 1) * (s - 1);
  const double lm = 4 * s * (1 - s);
  const double l1 = s * (2 * s - 1);
  return l0 * us_.row(z).transpose() + lm * um_.row(z).transpose() +
         l1 * us_.row(z + 1).transpose();
}

namespace {

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

DerivativeCheckReport validate_derivatives(const OcpDefinition& ocp, int points, unsigned seed) {
  ocp.validate();
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> uo1(0.05, 0.95);
  const int n = ocp.n_states, m = ocp.n_controls;

  DerivativeCheckReport report;
  auto record = [&](const std::string& which, double analytic, double numeric) {
    const double e = rel_err(analytic, numeric);
    if (e > report.max_rel_error) {
      report.max_rel_error = e;
      report.worst = {which, analytic, numeric, e};
    }
  };

  for (int p = 0; p < points; ++p) {
    Vec x(n), u(m);
    for (int i = 0; i < n; ++i) {
      const double r = std::max(1.0, 1.5 * std::abs(ocp.initial_state[i]));
      double lo = std::max(ocp.state_lower[i], ocp.initial_state[i] - r);
      double hi = std::min(ocp.state_upper[i], ocp.initial_state[i] + r);
      x[i] = lo + (hi - lo) * 0.5 * (unit(rng) + 1.0);
    }
    for (int j = 0; j < m; ++j) {
      double lo = std::max(ocp.control_lower[j], -2.0);
      double hi = std::min(ocp.control_upper[j], 2.0);
      u[j] = lo + (hi - lo) * 0.5 * (unit(rng) + 1.0);
    }
    const double t = ocp.t0 + (ocp.tf - ocp.t0) * uo1(rng);

    auto central = [&](auto&& eval, double& slot, double scale) {
      const double h = 1e-6 * scale;
      const double keep = slot;
      slot = keep + h;
      const auto fp = eval();
      slot = keep - h;
      const auto fm = eval();
      slot = keep;
      return (fp - fm) / (2.0 * h);
    };

    if (ocp.dynamics_jac_x) {
      const Mat J = ocp.dynamics_jac_x(x, u, t);
      for (int j = 0; j < n; ++j) {
        const Vec col = central([&] { return ocp.dynamics(x, u, t); }, x[j],
                                std::max(1.0, std::abs(x[j])));
        for (int i = 0; i < n; ++i)
          record("dynamics_jac_x(" + std::to_string(i) + "," + std::to_string(j) + ")",
                 J(i, j), col[i]);
      }
    }
    if (ocp.dynamics_jac_u) {
      const Mat J = ocp.dynamics_jac_u(x, u, t);
      for (int j = 0; j < m; ++j) {
        const Vec col = central([&] { return ocp.dynamics(x, u, t); }, u[j],
                                std::max(1.0, std::abs(u[j])));
        for (int i = 0; i < n; ++i)
          record("dynamics_jac_u(" + std::to_string(i) + "," + std::to_string(j) + ")",
                 J(i, j), col[i]);
      }
    }
    if (ocp.has_lagrange()) {
      if (ocp.lagrange_grad_x) {
        const Vec g = ocp.lagrange_grad_x(x, u, t);
        for (int j = 0; j < n; ++j) {
          const double d = central([&] { return ocp.lagrange(x, u, t); }, x[j],
                                   std::max(1.0, std::abs(x[j])));
          record("lagrange_grad_x(" + std::to_string(j) + ")", g[j], d);
        }
      }
      if (ocp.lagrange_grad_u) {
        const Vec g = ocp.lagrange_grad_u(x, u, t);
        for (int j = 0; j < m; ++j) {
          const double d = central([&] { return ocp.lagrange(x, u, t); }, u[j],
                                   std::max(1.0, std::abs(u[j])));
          record("lagrange_grad_u(" + std::to_string(j) + ")", g[j], d);
        }
      }
    }
    if (ocp.has_mayer()) {
      Vec xf = x;
      Vec x0 = ocp.initial_state;
      if (ocp.mayer_grad_x0) {
        const Vec g = ocp.mayer_grad_x0(x0, xf, ocp.t0, ocp.tf);
        for (int j = 0; j < n; ++j) {
          const double d = central([&] { return ocp.mayer(x0, xf, ocp.t0, ocp.tf); }, x0[j],
                                   std::max(1.0, std::abs(x0[j])));
          record("mayer_grad_x0(" + std::to_string(j) + ")", g[j], d);
        }
      }
      if (ocp.mayer_grad_xf) {
        const Vec g = ocp.mayer_grad_xf(x0, xf, ocp.t0, ocp.tf);
        for (int j = 0; j < n; ++j) {
          const double d = central([&] { return ocp.mayer(x0, xf, ocp.t0, ocp.tf); }, xf[j],
                                   std::max(1.0, std::abs(xf[j])));
          record("mayer_grad_xf(" + std::to_string(j) + ")", g[j], d);
        }
      }
    }
  }
  return report;
}

}  // namespace singarc
