#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "singarc/benchmarks.hpp"
#include "singarc/ocp.hpp"

#include <cmath>

using namespace singarc;

namespace {

// One-state problem whose dynamics depend only on time, so a trajectory
// whose node values and slopes come from a known polynomial is interpolated
// through the exact same Hermite construction the transcription uses.
OcpDefinition polynomial_ocp(const Vec& dcoeff) {
  OcpDefinition ocp;
  ocp.name = "poly";
  ocp.n_states = 1;
  ocp.n_controls = 1;
  ocp.t0 = 0.0;
  ocp.tf = 2.0;
  ocp.dynamics = [dcoeff](const Vec&, const Vec&, double t) {
    double v = 0.0;
    for (Eigen::Index k = dcoeff.size() - 1; k >= 0; --k) v = v * t + dcoeff[k];
    return (Vec(1) << v).finished();
  };
  ocp.dynamics_jac_x = [](const Vec&, const Vec&, double) { return Mat::Zero(1, 1); };
  ocp.dynamics_jac_u = [](const Vec&, const Vec&, double) { return Mat::Zero(1, 1); };
  ocp.lagrange = [](const Vec& x, const Vec&, double) { return 0.5 * x[0] * x[0]; };
  ocp.lagrange_grad_x = [](const Vec& x, const Vec&, double) { return x; };
  ocp.lagrange_grad_u = [](const Vec&, const Vec&, double) { return Vec::Zero(1); };
  ocp.initial_state = Vec::Zero(1);
  ocp.control_lower = (Vec(1) << -1.0).finished();
  ocp.control_upper = (Vec(1) << 1.0).finished();
  ocp.state_lower = (Vec(1) << -1e19).finished();
  ocp.state_upper = (Vec(1) << 1e19).finished();
  return ocp;
}

double cubic(double t) { return 0.3 + 1.7 * t - 0.9 * t * t + 0.4 * t * t * t; }
double cubic_dot(double t) { return 1.7 - 1.8 * t + 1.2 * t * t; }

}  // namespace

TEST_CASE("uniform mesh spans the horizon with equal intervals") {
  const Mesh mesh = Mesh::uniform(1.0, 4.0, 6);
  REQUIRE(mesh.intervals() == 6);
  CHECK(mesh.t0() == doctest::Approx(1.0));
  CHECK(mesh.tf() == doctest::Approx(4.0));
  for (int z = 0; z < 6; ++z) CHECK(mesh.h(z) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(mesh.midpoint(2) == doctest::Approx(2.25).epsilon(1e-14));
}

TEST_CASE("mesh locate brackets every query time") {
  const Mesh mesh = Mesh::uniform(0.0, 1.0, 4);
  CHECK(mesh.locate(0.0) == 0);
  CHECK(mesh.locate(0.26) == 1);
  CHECK(mesh.locate(0.74) == 2);
  CHECK(mesh.locate(1.0) == 3);
  for (int i = 0; i <= 40; ++i) {
    const double t = i / 40.0;
    const int z = mesh.locate(t);
    CHECK(mesh.nodes[z] <= t + 1e-15);
    CHECK(t <= mesh.nodes[z + 1] + 1e-15);
  }
}

TEST_CASE("mesh validation rejects non-monotone grids") {
  Mesh mesh;
  mesh.nodes = (Vec(3) << 0.0, 0.5, 0.5).finished();
  CHECK_THROWS_AS(mesh.validate(), std::invalid_argument);
  mesh.nodes = (Vec(1) << 0.0).finished();
  CHECK_THROWS_AS(mesh.validate(), std::invalid_argument);
  CHECK_THROWS_AS(Mesh::uniform(0.0, 1.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(Mesh::uniform(1.0, 0.0, 5), std::invalid_argument);
}

TEST_CASE("ocp validation catches malformed definitions") {
  OcpDefinition ocp = second_order_singular();
  CHECK_NOTHROW(ocp.validate());

  OcpDefinition bad = ocp;
  bad.tf = bad.t0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = ocp;
  bad.initial_state = Vec::Zero(3);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = ocp;
  bad.control_lower[0] = 2.0;  // crosses the upper bound
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = ocp;
  bad.dynamics = nullptr;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("hermite state interpolation is exact for cubics") {
  // Node data sampled from a cubic whose derivative matches the dynamics
  // callback: the interpolant must reproduce the cubic everywhere.
  const Vec dcoeff = (Vec(3) << 1.7, -1.8, 1.2).finished();  // cubic'(t)
  const OcpDefinition ocp = polynomial_ocp(dcoeff);
  const Mesh mesh = Mesh::uniform(0.0, 2.0, 5);
  const int Z = mesh.intervals();

  Mat xs(Z + 1, 1), xm(Z, 1), us = Mat::Zero(Z + 1, 1), um = Mat::Zero(Z, 1);
  for (int k = 0; k <= Z; ++k) xs(k, 0) = cubic(mesh.nodes[k]);
  for (int z = 0; z < Z; ++z) xm(z, 0) = cubic(mesh.midpoint(z));
  const Trajectory traj(ocp, mesh, xs, xm, us, um);

  for (int i = 0; i <= 200; ++i) {
    const double t = 2.0 * i / 200.0;
    CHECK(std::abs(traj.eval_state(t)[0] - cubic(t)) <= 1e-12);
    CHECK(std::abs(traj.eval_state_derivative(t)[0] - cubic_dot(t)) <= 1e-11);
  }
}

TEST_CASE("control interpolation is the quadratic through nodes and midpoint") {
  const OcpDefinition ocp = second_order_singular();
  const Mesh mesh = Mesh::uniform(0.0, 5.0, 2);
  const int Z = mesh.intervals();
  auto quad_u = [](double t) { return 0.2 - 0.3 * t + 0.05 * t * t; };

  Mat xs = Mat::Zero(Z + 1, 2), xm = Mat::Zero(Z, 2);
  xs.col(1).setOnes();
  xm.col(1).setOnes();
  Mat us(Z + 1, 1), um(Z, 1);
  for (int k = 0; k <= Z; ++k) us(k, 0) = quad_u(mesh.nodes[k]);
  for (int z = 0; z < Z; ++z) um(z, 0) = quad_u(mesh.midpoint(z));
  const Trajectory traj(ocp, mesh, xs, xm, us, um);

  for (int i = 0; i <= 100; ++i) {
    const double t = 5.0 * i / 100.0;
    CHECK(std::abs(traj.eval_control(t)[0] - quad_u(t)) <= 1e-12);
  }
}

TEST_CASE("trajectory evaluation rejects times outside the horizon") {
  const OcpDefinition ocp = second_order_singular();
  const Mesh mesh = Mesh::uniform(0.0, 5.0, 3);
  const Mat xs = Mat::Zero(4, 2), xm = Mat::Zero(3, 2);
  const Mat us = Mat::Zero(4, 1), um = Mat::Zero(3, 1);
  const Trajectory traj(ocp, mesh, xs, xm, us, um);
  CHECK_THROWS_AS(traj.eval_state(-0.5), std::domain_error);
  CHECK_THROWS_AS(traj.eval_control(5.5), std::domain_error);
  CHECK_NOTHROW(traj.eval_state(5.0 + 1e-13));  // roundoff slop is tolerated
}

TEST_CASE("trajectory construction checks matrix shapes") {
  const OcpDefinition ocp = second_order_singular();
  const Mesh mesh = Mesh::uniform(0.0, 5.0, 3);
  const Mat good_xs = Mat::Zero(4, 2), good_xm = Mat::Zero(3, 2);
  const Mat good_us = Mat::Zero(4, 1), good_um = Mat::Zero(3, 1);
  CHECK_THROWS_AS(Trajectory(ocp, mesh, Mat::Zero(3, 2), good_xm, good_us, good_um),
                  std::invalid_argument);
  CHECK_THROWS_AS(Trajectory(ocp, mesh, good_xs, Mat::Zero(3, 1), good_us, good_um),
                  std::invalid_argument);
  CHECK_THROWS_AS(Trajectory(ocp, mesh, good_xs, good_xm, good_us, Mat::Zero(2, 1)),
                  std::invalid_argument);
}

TEST_CASE("derivative validation accepts every benchmark") {
  CHECK(validate_derivatives(second_order_singular()).ok(1e-6));
  CHECK(validate_derivatives(aly_chan()).ok(1e-6));
  CHECK(validate_derivatives(smib()).ok(1e-6));
}

TEST_CASE("derivative validation flags a wrong jacobian") {
  OcpDefinition ocp = second_order_singular();
  ocp.dynamics_jac_u = [](const Vec&, const Vec&, double) {
    Mat J = Mat::Zero(2, 1);
    J(1, 0) = 1.25;  // should be 1
    return J;
  };
  const auto report = validate_derivatives(ocp);
  CHECK(report.max_rel_error > 1e-3);
  CHECK(!report.ok(1e-6));
}

TEST_CASE("derivative validation is deterministic for a fixed seed") {
  const auto a = validate_derivatives(smib(), 50, 123);
  const auto b = validate_derivatives(smib(), 50, 123);
  CHECK(a.max_rel_error == b.max_rel_error);
  CHECK(a.worst.which == b.worst.which);
}
