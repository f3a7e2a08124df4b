#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "singarc/benchmarks.hpp"
#include "singarc/oracles.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

using namespace singarc;
using namespace singarc::oracles;

TEST_CASE("singular feedback of the double integrator is the clamped state") {
  CHECK(second_order_policy((Vec(2) << 0.3, 9.0).finished()) == 0.3);
  CHECK(second_order_policy((Vec(2) << -0.8, 0.0).finished()) == -0.8);
  CHECK(second_order_policy((Vec(2) << 1.7, 0.0).finished()) == 1.0);
  CHECK(second_order_policy((Vec(2) << -2.5, 0.0).finished()) == -1.0);
}

TEST_CASE("closed-form switch cost agrees with the independent RK4 route") {
  for (double ts : {1.2, 1.3, 1.4137, 1.5, 1.6}) {
    const double exact = second_order_switch_cost(ts);
    const double numeric = second_order_switch_cost_rk4(ts);
    CHECK(std::abs(exact - numeric) <= 1e-12);
  }
}

TEST_CASE("shooting oracle pins the analytic reference cost") {
  const auto res = second_order_shooting_oracle();
  CHECK(std::abs(res.cost - 0.37699) <= 5e-5);
  // Frozen value of this deterministic computation.
  CHECK(res.cost == doctest::Approx(0.3769919303).epsilon(1e-9));
  CHECK(res.t_switch > 1.40);
  CHECK(res.t_switch < 1.43);
  CHECK(res.terminal_norm < 0.5);
  CHECK(res.evaluations > 10);

  // The closed form attains the same minimum at the same switch time.
  CHECK(second_order_switch_cost(res.t_switch) == doctest::Approx(res.cost).epsilon(1e-10));

  // Identical calls reproduce identical digits.
  const auto res2 = second_order_shooting_oracle();
  CHECK(res.cost == res2.cost);
  CHECK(res.t_switch == res2.t_switch);
  CHECK(res.evaluations == res2.evaluations);
}

TEST_CASE("shooting oracle rejects brackets without an interior minimum") {
  // The switch cost increases through [1.5, 1.6]; the minimum sits on the
  // bracket edge, which is not a valid shooting solution.
  CHECK_THROWS_AS(second_order_shooting_oracle(1.5, 1.6), OracleError);
  CHECK_THROWS_AS(second_order_shooting_oracle(1.6, 1.2), OracleError);  // inverted
  CHECK_THROWS_AS(second_order_shooting_oracle(1.2, 1.6, -1.0), OracleError);
}

TEST_CASE("fully singular benchmark solution satisfies its defining identities") {
  for (double t : {0.0, 0.3, M_PI / 4, 1.0, M_PI / 2}) {
    const auto pt = aly_chan_analytic(t);
    CHECK(pt.x[0] == doctest::Approx(std::sin(t)).epsilon(1e-14));
    CHECK(pt.x[1] == doctest::Approx(std::cos(t)).epsilon(1e-14));
    CHECK(pt.x[2] == doctest::Approx(std::sin(2.0 * t) / 4.0).epsilon(1e-14));
    CHECK(pt.u == doctest::Approx(-std::sin(t)).epsilon(1e-14));
    // Costate (-cos t, 0, 1): p2 = 0 keeps the switching function at zero,
    // p3 = 1 passes the terminal cost back.
    CHECK(pt.costate[0] == doctest::Approx(-std::cos(t)).epsilon(1e-14));
    CHECK(pt.costate[1] == 0.0);
    CHECK(pt.costate[2] == 1.0);
    // x2' = u along the optimum.
    CHECK(pt.u == doctest::Approx(-pt.x[0]).epsilon(1e-14));
  }
  CHECK_THROWS_AS(aly_chan_analytic(-0.1), std::domain_error);
  CHECK_THROWS_AS(aly_chan_analytic(M_PI / 2 + 0.1), std::domain_error);
}

TEST_CASE("swing-equation singular policy closes the loop onto the linear system") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> dx1(-0.2, 1.2), dx2(-20.0, 20.0);
  for (double H : {0.01, 0.1, 1.0, 5.0}) {
    SmibParams p;
    p.H = H;
    const auto ocp = smib(p);
    const Mat A = smib_autonomous_matrix(p);
    CHECK(A(0, 0) == 0.0);
    CHECK(A(0, 1) == 1.0);
    CHECK(A(1, 0) == doctest::Approx(100.0).epsilon(1e-14));
    CHECK(A(1, 1) == 0.0);
    for (int i = 0; i < 100; ++i) {
      Vec x(2);
      x << dx1(rng), dx2(rng);
      const double u = smib_singular_policy(x, p);
      const Vec f = ocp.dynamics(x, (Vec(1) << u).finished(), 0.0);
      const Vec ax = A * x;
      const double scale = std::max(1.0, ax.lpNorm<Eigen::Infinity>());
      CHECK((f - ax).lpNorm<Eigen::Infinity>() / scale <= 1e-10);
    }
  }
}

TEST_CASE("swing-equation policy is undefined where the control channel vanishes") {
  SmibParams p;
  Vec x(2);
  x << M_PI - p.delta_ep, 0.0;  // sin(delta_ep + x1) = sin(pi) = 0
  CHECK_THROWS_AS(smib_singular_policy(x, p), OracleError);
  x << -p.delta_ep, 3.0;
  CHECK_THROWS_AS(smib_singular_policy(x, p), OracleError);
}

TEST_CASE("swing-equation Kelley inequality keys on the control channel sign") {
  SmibParams p;
  CHECK(smib_kelley((Vec(2) << 0.0, 0.0).finished(), p));
  CHECK(smib_kelley((Vec(2) << 1.5, 15.0).finished(), p));
  CHECK(!smib_kelley((Vec(2) << -p.delta_ep - 0.1, 0.0).finished(), p));
  CHECK(!smib_kelley((Vec(2) << M_PI - p.delta_ep + 0.1, 0.0).finished(), p));
}

TEST_CASE("autonomous singular-arc system is unstable with symmetric eigenvalues") {
  const auto rep = smib_autonomous_eigenvalues();
  CHECK(rep.lambda_plus == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(rep.lambda_minus == doctest::Approx(-10.0).epsilon(1e-14));
  CHECK(rep.unstable);

  SmibParams p;
  p.C1 = 2.0;
  p.C2 = 5.0;
  const auto rep2 = smib_autonomous_eigenvalues(p);
  CHECK(rep2.lambda_plus == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(rep2.lambda_minus == doctest::Approx(-2.5).epsilon(1e-14));

  // Eigenvalues of the reported matrix itself.
  const Mat A = smib_autonomous_matrix(p);
  const Vec ev = Eigen::EigenSolver<Mat>(A).eigenvalues().real();
  CHECK(ev.maxCoeff() == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(ev.minCoeff() == doctest::Approx(-2.5).epsilon(1e-12));
}

TEST_CASE("analysis records carry the per-problem case split") {
  const auto so = second_order_analysis();
  CHECK(so.benchmark == "second-order");
  CHECK(so.arc_order == 1);
  CHECK(so.policy((Vec(2) << 0.4, 0.0).finished()) == 0.4);
  CHECK(so.kelley_ok((Vec(2) << 123.0, -7.0).finished()));
  CHECK(!so.switching_structure.empty());

  const auto ac = aly_chan_analysis();
  CHECK(ac.benchmark == "aly-chan");
  CHECK(ac.switching_structure.find("singular") != std::string::npos);

  const auto sm = smib_analysis();
  CHECK(sm.benchmark == "smib");
  CHECK(sm.policy((Vec(2) << 0.0, 0.0).finished()) ==
        doctest::Approx(smib_singular_policy((Vec(2) << 0.0, 0.0).finished())).epsilon(1e-14));
  CHECK(sm.kelley_ok((Vec(2) << 0.0, 0.0).finished()));
  CHECK(!sm.kelley_ok((Vec(2) << -1.0, 0.0).finished()));
}

TEST_CASE("feedback rollout stays at a fixed point and lands on the horizon") {
  const auto ocp = second_order_singular();
  auto policy = [](const Vec& x, double) { return second_order_policy(x); };
  const auto roll = rollout_feedback(policy, ocp, Vec::Zero(2), 0.0095);
  CHECK(!roll.diverged);
  CHECK(!roll.policy_failed);
  CHECK(roll.times.front() == 0.0);
  CHECK(roll.times.back() == doctest::Approx(0.0095).epsilon(1e-14));
  for (size_t i = 1; i < roll.times.size(); ++i) CHECK(roll.times[i] > roll.times[i - 1]);
  CHECK(roll.states.cwiseAbs().maxCoeff() == 0.0);
  CHECK(roll.controls.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("feedback rollout flags divergence of the unstable closed loop") {
  SmibParams p;
  const auto ocp = smib(p);
  auto policy = [&](const Vec& x, double) { return smib_singular_policy(x, p); };
  const auto roll =
      rollout_feedback(policy, ocp, (Vec(2) << 1.5, 15.0).finished(), ocp.tf - ocp.t0);
  CHECK((roll.diverged || roll.policy_failed));
  CHECK(roll.times.back() < ocp.tf);  // truncated before the horizon
  CHECK(!roll.note.empty());

  // Same call, same truncation point: the rollout is deterministic.
  const auto roll2 =
      rollout_feedback(policy, ocp, (Vec(2) << 1.5, 15.0).finished(), ocp.tf - ocp.t0);
  CHECK(roll.times.size() == roll2.times.size());
  CHECK(roll.times.back() == roll2.times.back());
  CHECK((roll.states - roll2.states).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("feedback rollout reports a policy failure with its reason") {
  const auto ocp = second_order_singular();
  auto policy = [](const Vec&, double t) -> double {
    if (t > 0.5) throw OracleError("deliberate");
    return 0.0;
  };
  const auto roll = rollout_feedback(policy, ocp, (Vec(2) << 0.0, 1.0).finished(), 2.0);
  CHECK(roll.policy_failed);
  CHECK(!roll.diverged);
  CHECK(roll.note.find("deliberate") != std::string::npos);
  CHECK(roll.times.back() < 2.0);
}
