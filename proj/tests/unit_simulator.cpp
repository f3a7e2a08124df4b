#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "singarc/benchmarks.hpp"
#include "singarc/metrics.hpp"
#include "singarc/simulator.hpp"

#include <cmath>

using namespace singarc;

namespace {

/// Trajectory holding the exact flow of x' = (x2, c) from (a, b) with the
/// control frozen at c; lies inside the interpolants' polynomial family.
Trajectory constant_control_plan(const OcpDefinition& ocp, const Mesh& mesh, double a, double b,
                                 double c) {
  const int Z = mesh.intervals();
  Mat xs(Z + 1, 2), xm(Z, 2), us = Mat::Constant(Z + 1, 1, c), um = Mat::Constant(Z, 1, c);
  auto fill = [&](double t, auto row) {
    row[0] = a + b * t + 0.5 * c * t * t;
    row[1] = b + c * t;
  };
  for (int k = 0; k <= Z; ++k) fill(mesh.nodes[k], xs.row(k));
  for (int z = 0; z < Z; ++z) fill(mesh.midpoint(z), xm.row(z));
  return Trajectory(ocp, mesh, xs, xm, us, um);
}

OcpDefinition blow_up_ocp() {
  OcpDefinition ocp;
  ocp.name = "blow-up";
  ocp.n_states = 1;
  ocp.n_controls = 1;
  ocp.t0 = 0.0;
  ocp.tf = 2.0;
  ocp.dynamics = [](const Vec& x, const Vec&, double) -> Vec {
    return (Vec(1) << x[0] * x[0]).finished();
  };
  ocp.initial_state = (Vec(1) << 1.0).finished();
  ocp.control_lower = (Vec(1) << -1.0).finished();
  ocp.control_upper = (Vec(1) << 1.0).finished();
  ocp.state_lower = Vec::Constant(1, -1e300);
  ocp.state_upper = Vec::Constant(1, 1e300);
  return ocp;
}

}  // namespace

TEST_CASE("plant integrator lands on the grid with an even panel count") {
  const auto ocp = second_order_singular();
  auto u = [](double) { return (Vec(1) << 0.0).finished(); };
  const auto trace = sim::integrate_plant(ocp, (Vec(2) << 0.0, 1.0).finished(), u, 0.0, 1.0, 0.3);
  // Smallest even substep count with h <= 0.3 over a unit span is 4.
  CHECK(trace.times.size() == 5);
  CHECK(trace.times[0] == 0.0);
  CHECK(trace.times[trace.times.size() - 1] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(trace.times[2] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(trace.states.rows() == 5);
  CHECK(trace.controls.rows() == 5);
  // x' = (x2, 0) from (0,1) flows to (t, 1).
  CHECK(trace.states(4, 0) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(trace.states(4, 1) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("plant integrator converges at fourth order") {
  // u(t) = cos t puts the flow outside the family RK4 integrates exactly.
  const auto ocp = second_order_singular();
  auto u = [](double t) { return (Vec(1) << std::cos(t)).finished(); };
  const Vec x0 = (Vec(2) << 0.0, 1.0).finished();
  auto err = [&](double h) {
    const auto tr = sim::integrate_plant(ocp, x0, u, 0.0, 2.0, h);
    const Eigen::Index last = tr.times.size() - 1;
    // Exact flow: x2 = 1 + sin t, x1 = t + 1 - cos t.
    const double e1 = tr.states(last, 0) - (2.0 + 1.0 - std::cos(2.0));
    const double e2 = tr.states(last, 1) - (1.0 + std::sin(2.0));
    return std::hypot(e1, e2);
  };
  const double e_coarse = err(0.2);
  const double e_fine = err(0.1);
  CHECK(e_coarse > 0.0);
  const double order = std::log2(e_coarse / e_fine);
  CHECK(order > 3.6);
  CHECK(order < 4.4);
}

TEST_CASE("plant integrator throws when the state leaves the finite range") {
  const auto ocp = blow_up_ocp();
  auto u = [](double) { return (Vec(1) << 0.0).finished(); };
  try {
    sim::integrate_plant(ocp, ocp.initial_state, u, 0.0, 2.0, 1e-3);
    FAIL("expected IntegrationError");
  } catch (const sim::IntegrationError& e) {
    // x' = x^2 from 1 has its pole at t = 1.
    CHECK(e.blow_up_time > 0.9);
    CHECK(e.blow_up_time < 1.2);
  }
}

TEST_CASE("open-loop simulation reproduces an analytically playable plan") {
  const auto ocp = second_order_singular();
  const Mesh mesh = Mesh::uniform(0.0, 5.0, 10);
  const double c = -0.4;
  const auto plan = constant_control_plan(ocp, mesh, 0.0, 1.0, c);
  const auto res = sim::simulate_open_loop(ocp, plan);

  // The closed loop is exactly integrable: x1 = t + c t^2/2, x2 = 1 + c t.
  const Eigen::Index last = res.trace.times.size() - 1;
  CHECK(res.trace.times[last] == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(res.trace.states(last, 0) ==
        doctest::Approx(5.0 + 0.5 * c * 25.0).epsilon(1e-12));
  CHECK(res.trace.states(last, 1) == doctest::Approx(1.0 + 5.0 * c).epsilon(1e-12));

  // Closed-form Bolza integral of the quadratic running cost.
  const double T = 5.0;
  const double t2 = T * T, t3 = t2 * T, t4 = t3 * T, t5 = t4 * T;
  const double exact = 0.5 * ((t3 / 3.0 + c * t4 / 4.0 + c * c * t5 / 20.0) +
                              (T + c * t2 + c * c * t3 / 3.0));
  CHECK(res.achieved_cost == doctest::Approx(exact).epsilon(1e-9));

  // The driver's cost is the metrics quadrature of its own trace.
  CHECK(res.achieved_cost == metrics::simulated_cost(res.trace, ocp));
}

TEST_CASE("controller configuration is validated") {
  sim::EmpcConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  sim::EmpcConfig bad = cfg;
  bad.step = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.horizon = 0.5 * cfg.step;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.mesh_Z = 1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  // A run length that is not a multiple of the period is rejected.
  const auto ocp = second_order_singular();
  sim::EmpcConfig odd;
  odd.step = 0.3;
  odd.horizon = 1.2;
  odd.duration = 1.0;
  odd.mesh_Z = 8;
  CHECK_THROWS_AS(sim::run_empc(ocp, odd), std::invalid_argument);
}

TEST_CASE("receding controller populates one record per period") {
  const auto ocp = second_order_singular();
  sim::EmpcConfig cfg;
  cfg.step = 0.25;
  cfg.horizon = 1.0;
  cfg.mesh_Z = 16;
  cfg.duration = 1.0;
  const auto cl = sim::run_empc(ocp, cfg);

  REQUIRE(cl.steps.size() == 4);
  REQUIRE(cl.times.size() == 5);
  CHECK(cl.plant_states.rows() == 5);
  CHECK(cl.applied_controls.rows() == 5);
  CHECK(cl.times[0] == 0.0);
  CHECK(cl.times[4] == 1.0);
  CHECK(cl.plant_states.row(0).transpose().isApprox(ocp.initial_state));
  for (int k = 0; k < 4; ++k) {
    const auto& s = cl.steps[static_cast<size_t>(k)];
    CHECK(s.t == 0.25 * k);
    CHECK(s.status == SolveStatus::optimal);
    CHECK(s.iterations > 0);
    CHECK(s.mesh_Z == 16);
    CHECK(!s.reused_previous);
    CHECK(std::isfinite(s.objective));
    CHECK(s.kkt_residual <= cfg.solver.tol_kkt);
  }
  CHECK(cl.solver_failures == 0);
  CHECK(cl.achieved_cost > 0.0);
  CHECK(cl.fluctuation_tv >= 0.0);
  // Dense trace spans the run window on a substep grid.
  CHECK(cl.dense.times[0] == 0.0);
  CHECK(cl.dense.times[cl.dense.times.size() - 1] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(cl.dense.times.size() > cl.times.size());
}

TEST_CASE("closed-loop runs are deterministic") {
  const auto ocp = second_order_singular();
  sim::EmpcConfig cfg;
  cfg.step = 0.25;
  cfg.horizon = 1.0;
  cfg.mesh_Z = 12;
  cfg.duration = 0.75;
  const auto a = sim::run_empc(ocp, cfg);
  const auto b = sim::run_empc(ocp, cfg);
  CHECK(a.achieved_cost == b.achieved_cost);
  CHECK(a.fluctuation_tv == b.fluctuation_tv);
  CHECK((a.dense.states - b.dense.states).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.applied_controls - b.applied_controls).cwiseAbs().maxCoeff() == 0.0);
  for (size_t k = 0; k < a.steps.size(); ++k)
    CHECK(a.steps[k].iterations == b.steps[k].iterations);
}

TEST_CASE("warm starts do not degrade the loop and save solver work") {
  const auto ocp = second_order_singular();
  sim::EmpcConfig cfg;
  cfg.step = 0.25;
  cfg.horizon = 1.0;
  cfg.mesh_Z = 16;
  cfg.duration = 2.0;
  sim::EmpcConfig cold = cfg;
  cold.warm_start = false;
  const auto warm_run = sim::run_empc(ocp, cfg);
  const auto cold_run = sim::run_empc(ocp, cold);
  REQUIRE(warm_run.solver_failures == 0);
  REQUIRE(cold_run.solver_failures == 0);
  CHECK(warm_run.achieved_cost == doctest::Approx(cold_run.achieved_cost).epsilon(1e-6));
  int warm_iters = 0, cold_iters = 0;
  for (const auto& s : warm_run.steps) warm_iters += s.iterations;
  for (const auto& s : cold_run.steps) cold_iters += s.iterations;
  CHECK(warm_iters <= cold_iters);
}

TEST_CASE("shrinking mode scales the mesh down and plays the tail open-loop") {
  const auto ocp = second_order_singular();
  sim::EmpcConfig cfg;
  cfg.mode = sim::EmpcMode::shrinking;
  cfg.step = 0.5;
  cfg.horizon = 5.0;  // unused in shrinking mode but validated
  cfg.mesh_Z = 10;
  const auto cl = sim::run_empc(ocp, cfg);

  REQUIRE(cl.steps.size() == 10);
  // Proportional mesh: Z_k = max(5, round(10 * remaining / 5)).
  const int want_Z[] = {10, 9, 8, 7, 6, 5};
  for (int k = 0; k < 6; ++k) {
    CHECK(cl.steps[static_cast<size_t>(k)].mesh_Z == want_Z[k]);
    CHECK(!cl.steps[static_cast<size_t>(k)].reused_previous);
    CHECK(cl.steps[static_cast<size_t>(k)].status == SolveStatus::optimal);
  }
  // Once the proportional mesh would drop below 5 intervals the last plan
  // plays out open-loop.
  for (int k = 6; k < 10; ++k) {
    CHECK(cl.steps[static_cast<size_t>(k)].reused_previous);
    CHECK(cl.steps[static_cast<size_t>(k)].iterations == 0);
    CHECK(std::isnan(cl.steps[static_cast<size_t>(k)].objective));
  }
  CHECK(cl.solver_failures == 0);
  CHECK(cl.times[10] == 5.0);
  // The loop steers the state toward the origin by the horizon.
  CHECK(cl.plant_states.row(10).norm() < 0.5);
}

TEST_CASE("solver failures follow the configured policy") {
  const auto ocp = second_order_singular();
  sim::EmpcConfig cfg;
  cfg.step = 0.25;
  cfg.horizon = 1.0;
  cfg.mesh_Z = 16;
  cfg.duration = 2.0;
  cfg.warm_start = false;

  // Starved solver: nothing can converge, and the first period has no
  // previous plan to fall back on.
  sim::EmpcConfig starved = cfg;
  starved.solver.max_iter = 1;
  CHECK_THROWS_AS(sim::run_empc(ocp, starved), std::runtime_error);
  starved.on_solver_failure = sim::FailurePolicy::abort;
  CHECK_THROWS_AS(sim::run_empc(ocp, starved), std::runtime_error);

  // A cap that admits the first solve but starves a later one: the loop
  // holds the previous plan and finishes the run.
  sim::EmpcConfig capped = cfg;
  capped.solver.max_iter = 12;  // first solve needs 11, the second 14
  const auto held = sim::run_empc(ocp, capped);
  CHECK(held.solver_failures > 0);
  CHECK(held.steps[0].status == SolveStatus::optimal);
  CHECK(held.steps[1].status == SolveStatus::max_iter);
  CHECK(held.steps[1].reused_previous);
  CHECK(held.times.size() == 9);  // the run still completes
  CHECK(std::isfinite(held.achieved_cost));

  // The same starvation under the abort policy stops the run instead.
  sim::EmpcConfig strict = capped;
  strict.on_solver_failure = sim::FailurePolicy::abort;
  CHECK_THROWS_AS(sim::run_empc(ocp, strict), std::runtime_error);
}
