#pragma once

#include "singarc/ocp.hpp"

namespace singarc {

/// Double integrator with quadratic state cost and a singular arc of
/// order one:
///
///   min  integral over [0, 5] of (x1^2 + x2^2) / 2
///   s.t. x1' = x2,  x2' = u,  |u| <= 1,  x(0) = (0, 1).
OcpDefinition second_order_singular();

/// Fully singular benchmark on [0, pi/2] stated in Mayer form; x3
/// accumulates the running cost (x2^2 - x1^2) / 2:
///
///   min  x3(pi/2)
///   s.t. x1' = x2,  x2' = u,  x3' = (x2^2 - x1^2) / 2,
///        |u| <= 1,  x(0) = (0, 1, 0).
///
/// The minimizer is the smooth singular control u = -sin(t) with optimal
/// cost exactly 0.
OcpDefinition aly_chan();

/// Single machine infinite bus swing equations. x1 is the rotor angle
/// offset from the equilibrium delta_ep, x2 the frequency deviation; the
/// control scales the electrical torque.
struct SmibParams {
  double C1 = 3.0;        // angle scale in the running cost
  double C2 = 30.0;       // frequency scale in the running cost
  double P_M = 1.0;       // mechanical power
  double P_E = 4.3214;    // electrical power ceiling
  double D = 0.03;        // damping
  double H = 0.1;         // inertia
  double delta_ep = 0.235;
  double t_final = 4.0;
  Vec x0 = (Vec(2) << 1.5, 15.0).finished();

  void validate() const;
};

/// min  integral over [0, t_final] of (x1/C1)^2 + (x2/C2)^2
/// s.t. x1' = x2,
///      x2' = (P_M - D x2) / (2H) - (P_E / (2H)) sin(x1 + delta_ep) u,
///      |u| <= 1,  x(0) = params.x0.
///
/// The running cost uses the scaled states; this weighting is what makes
/// the singular-arc algebra below (smib_singular_policy and friends)
/// close exactly.
OcpDefinition smib(const SmibParams& params = {});

}  // namespace singarc
