#include "singarc/benchmarks.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace singarc {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

Vec free_bounds(int n, double sign) {
  return Vec::Constant(n, sign * kInf);
}
}  // namespace

OcpDefinition second_order_singular() {
  OcpDefinition ocp;
  ocp.name = "second-order";
  ocp.n_states = 2;
  ocp.n_controls = 1;
  ocp.t0 = 0.0;
  ocp.tf = 5.0;
  ocp.dynamics = [](const Vec& x, const Vec& u, double) {
    return (Vec(2) << x[1], u[0]).finished();
  };
  ocp.dynamics_jac_x = [](const Vec&, const Vec&, double) {
    return (Mat(2, 2) << 0, 1, 0, 0).finished();
  };
  ocp.dynamics_jac_u = [](const Vec&, const Vec&, double) {
    return (Mat(2, 1) << 0, 1).finished();
  };
  ocp.lagrange = [](const Vec& x, const Vec&, double) {
    return 0.5 * (x[0] * x[0] + x[1] * x[1]);
  };
  ocp.lagrange_grad_x = [](const Vec& x, const Vec&, double) { return Vec(x); };
  ocp.lagrange_grad_u = [](const Vec&, const Vec&, double) { return Vec::Zero(1); };
  ocp.initial_state = (Vec(2) << 0.0, 1.0).finished();
  ocp.control_lower = Vec::Constant(1, -1.0);
  ocp.control_upper = Vec::Constant(1, 1.0);
  ocp.state_lower = free_bounds(2, -1.0);
  ocp.state_upper = free_bounds(2, +1.0);
  ocp.validate();
  return ocp;
}

OcpDefinition aly_chan() {
  OcpDefinition ocp;
  ocp.name = "aly-chan";
  ocp.n_states = 3;
  ocp.n_controls = 1;
  ocp.t0 = 0.0;
  ocp.tf = M_PI / 2.0;
  ocp.dynamics = [](const Vec& x, const Vec& u, double) {
    return (Vec(3) << x[1], u[0], 0.5 * (x[1] * x[1] - x[0] * x[0])).finished();
  };
  ocp.dynamics_jac_x = [](const Vec& x, const Vec&, double) {
    Mat J = Mat::Zero(3, 3);
    J(0, 1) = 1.0;
    J(2, 0) = -x[0];
    J(2, 1) = x[1];
    return J;
  };
  ocp.dynamics_jac_u = [](const Vec&, const Vec&, double) {
    return (Mat(3, 1) << 0, 1, 0).finished();
  };
  ocp.mayer = [](const Vec&, const Vec& xf, double, double) { return xf[2]; };
  ocp.mayer_grad_x0 = [](const Vec&, const Vec&, double, double) { return Vec::Zero(3); };
  ocp.mayer_grad_xf = [](const Vec&, const Vec&, double, double) {
    return (Vec(3) << 0, 0, 1).finished();
  };
  ocp.initial_state = (Vec(3) << 0.0, 1.0, 0.0).finished();
  ocp.control_lower = Vec::Constant(1, -1.0);
  ocp.control_upper = Vec::Constant(1, 1.0);
  ocp.state_lower = free_bounds(3, -1.0);
  ocp.state_upper = free_bounds(3, +1.0);
  ocp.validate();
  return ocp;
}

void SmibParams::validate() const {
  if (C1 <= 0 || C2 <= 0) throw std::invalid_argument("SmibParams: scales must be positive");
  if (H <= 0) throw std::invalid_argument("SmibParams: inertia H must be positive");
  if (P_E <= 0) throw std::invalid_argument("SmibParams: P_E must be positive");
  if (D < 0) throw std::invalid_argument("SmibParams: damping must be nonnegative");
  if (t_final <= 0) throw std::invalid_argument("SmibParams: t_final must be positive");
  if (x0.size() != 2) throw std::invalid_argument("SmibParams: x0 must have 2 entries");
}

OcpDefinition smib(const SmibParams& params) {
  params.validate();
  const SmibParams p = params;
  OcpDefinition ocp;
  ocp.name = "smib";
  ocp.n_states = 2;
  ocp.n_controls = 1;
  ocp.t0 = 0.0;
  ocp.tf = p.t_final;
  ocp.dynamics = [p](const Vec& x, const Vec& u, double) {
    const double accel = (p.P_M - p.D * x[1]) / (2.0 * p.H) -
                         p.P_E / (2.0 * p.H) * std::sin(x[0] + p.delta_ep) * u[0];
    return (Vec(2) << x[1], accel).finished();
  };
  ocp.dynamics_jac_x = [p](const Vec& x, const Vec& u, double) {
    Mat J(2, 2);
    J(0, 0) = 0.0;
    J(0, 1) = 1.0;
    J(1, 0) = -p.P_E / (2.0 * p.H) * std::cos(x[0] + p.delta_ep) * u[0];
    J(1, 1) = -p.D / (2.0 * p.H);
    return J;
  };
  ocp.dynamics_jac_u = [p](const Vec& x, const Vec&, double) {
    return (Mat(2, 1) << 0.0, -p.P_E / (2.0 * p.H) * std::sin(x[0] + p.delta_ep)).finished();
  };
  ocp.lagrange = [p](const Vec& x, const Vec&, double) {
    const double a = x[0] / p.C1, b = x[1] / p.C2;
    return a * a + b * b;
  };
  ocp.lagrange_grad_x = [p](const Vec& x, const Vec&, double) {
    return (Vec(2) << 2.0 * x[0] / (p.C1 * p.C1), 2.0 * x[1] / (p.C2 * p.C2)).finished();
  };
  ocp.lagrange_grad_u = [](const Vec&, const Vec&, double) { return Vec::Zero(1); };
  ocp.initial_state = p.x0;
  ocp.control_lower = Vec::Constant(1, -1.0);
  ocp.control_upper = Vec::Constant(1, 1.0);
  ocp.state_lower = free_bounds(2, -1.0);
  ocp.state_upper = free_bounds(2, +1.0);
  ocp.validate();
  return ocp;
}

}  // namespace singarc
