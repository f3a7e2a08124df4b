#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "singarc/benchmarks.hpp"

#include <cmath>

using namespace singarc;

TEST_CASE("double integrator benchmark matches its statement") {
  const auto ocp = second_order_singular();
  CHECK_NOTHROW(ocp.validate());
  CHECK(ocp.n_states == 2);
  CHECK(ocp.n_controls == 1);
  CHECK(ocp.t0 == 0.0);
  CHECK(ocp.tf == 5.0);
  CHECK(ocp.initial_state[0] == 0.0);
  CHECK(ocp.initial_state[1] == 1.0);
  CHECK(ocp.control_lower[0] == -1.0);
  CHECK(ocp.control_upper[0] == 1.0);
  CHECK(!ocp.has_mayer());
  CHECK(!ocp.terminal_state.has_value());

  const Vec x = (Vec(2) << 0.3, -0.7).finished();
  const Vec u = (Vec(1) << 0.25).finished();
  const Vec f = ocp.dynamics(x, u, 1.0);
  CHECK(f[0] == doctest::Approx(-0.7));
  CHECK(f[1] == doctest::Approx(0.25));
  CHECK(ocp.lagrange(x, u, 1.0) == doctest::Approx(0.5 * (0.09 + 0.49)));
}

TEST_CASE("fully singular benchmark matches its statement") {
  const auto ocp = aly_chan();
  CHECK_NOTHROW(ocp.validate());
  CHECK(ocp.n_states == 3);
  CHECK(ocp.n_controls == 1);
  CHECK(ocp.t0 == 0.0);
  CHECK(ocp.tf == doctest::Approx(M_PI_2).epsilon(1e-15));
  CHECK(ocp.initial_state[0] == 0.0);
  CHECK(ocp.initial_state[1] == 1.0);
  CHECK(ocp.initial_state[2] == 0.0);
  CHECK(ocp.has_mayer());
  CHECK(!ocp.has_lagrange());

  const Vec x = (Vec(3) << 0.4, 0.8, 0.1).finished();
  const Vec u = (Vec(1) << -0.5).finished();
  const Vec f = ocp.dynamics(x, u, 0.3);
  CHECK(f[0] == doctest::Approx(0.8));
  CHECK(f[1] == doctest::Approx(-0.5));
  CHECK(f[2] == doctest::Approx(0.5 * (0.64 - 0.16)));

  // Mayer term reads the accumulated running cost from the final state.
  const Vec x0 = ocp.initial_state;
  const Vec xf = (Vec(3) << 0.0, 0.0, 0.42).finished();
  CHECK(ocp.mayer(x0, xf, ocp.t0, ocp.tf) == doctest::Approx(0.42));
}

TEST_CASE("swing equation benchmark matches its statement") {
  const SmibParams prm;
  CHECK_NOTHROW(prm.validate());
  const auto ocp = smib(prm);
  CHECK_NOTHROW(ocp.validate());
  CHECK(ocp.n_states == 2);
  CHECK(ocp.n_controls == 1);
  CHECK(ocp.tf == 4.0);
  CHECK(ocp.initial_state[0] == 1.5);
  CHECK(ocp.initial_state[1] == 15.0);

  const Vec x = (Vec(2) << 0.6, -3.0).finished();
  const Vec u = (Vec(1) << 0.8).finished();
  const Vec f = ocp.dynamics(x, u, 0.0);
  CHECK(f[0] == doctest::Approx(-3.0));
  const double want =
      (prm.P_M - prm.D * (-3.0)) / (2 * prm.H) -
      prm.P_E / (2 * prm.H) * std::sin(0.6 + prm.delta_ep) * 0.8;
  CHECK(f[1] == doctest::Approx(want).epsilon(1e-14));
  CHECK(ocp.lagrange(x, u, 0.0) ==
        doctest::Approx(std::pow(0.6 / prm.C1, 2) + std::pow(-3.0 / prm.C2, 2)).epsilon(1e-14));
}

TEST_CASE("swing equation parameters can be overridden") {
  SmibParams prm;
  prm.H = 1.0;
  prm.t_final = 2.5;
  prm.x0 = (Vec(2) << 0.2, -1.0).finished();
  const auto ocp = smib(prm);
  CHECK(ocp.tf == 2.5);
  CHECK(ocp.initial_state[0] == 0.2);

  const Vec x = Vec::Zero(2);
  const Vec u = (Vec(1) << 1.0).finished();
  // u scales the electrical torque, halved inertia halves the coupling.
  const double f2 = ocp.dynamics(x, u, 0.0)[1];
  CHECK(f2 == doctest::Approx((prm.P_M - prm.P_E * std::sin(prm.delta_ep)) / 2.0).epsilon(1e-14));
}

TEST_CASE("swing equation parameter validation") {
  SmibParams prm;
  prm.H = 0.0;
  CHECK_THROWS_AS(prm.validate(), std::invalid_argument);
  prm = {};
  prm.C1 = -1.0;
  CHECK_THROWS_AS(prm.validate(), std::invalid_argument);
  prm = {};
  prm.t_final = 0.0;
  CHECK_THROWS_AS(prm.validate(), std::invalid_argument);
  prm = {};
  prm.x0 = Vec::Zero(3);
  CHECK_THROWS_AS(prm.validate(), std::invalid_argument);
}

TEST_CASE("all benchmark derivative callbacks agree with finite differences") {
  for (const auto& ocp : {second_order_singular(), aly_chan(), smib()}) {
    const auto report = validate_derivatives(ocp, 60);
    INFO(ocp.name, ": worst ", report.worst.which, " rel ", report.max_rel_error);
    CHECK(report.ok(1e-6));
  }
}
