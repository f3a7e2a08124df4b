#include "singarc/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace singarc::oracles {

namespace {

// Bang phase from x0 = (0, 1) under u = -1: x1 = t - t^2/2, x2 = 1 - t.
// Running cost 0.5 (x1^2 + x2^2) integrates to a polynomial.
double bang_cost(double t) {
  const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
  return 0.5 * (2.0 * t3 / 3.0 - t4 / 4.0 + t5 / 20.0 + t - t2);
}

struct CostAndState {
  double cost;
  double x1, x2;
};

// RK4 on the bang-then-singular structure with the running cost as an
// augmented state. Kept independent of the closed form on purpose.
CostAndState switch_cost_rk4(double ts, double step) {
  double x1 = 0.0, x2 = 1.0, J = 0.0;
  auto run = [&](double t_end, double t_begin, bool singular) {
    const double span = t_end - t_begin;
    if (span <= 0.0) return;
    const int n = std::max(1, static_cast<int>(std::ceil(span / step)));
    const double h = span / n;
    auto f = [&](double a, double b, double& d1, double& d2, double& dJ) {
      d1 = b;
      d2 = singular ? a : -1.0;
      dJ = 0.5 * (a * a + b * b);
    };
    for (int k = 0; k < n; ++k) {
      double k1a, k1b, k1J, k2a, k2b, k2J, k3a, k3b, k3J, k4a, k4b, k4J;
      f(x1, x2, k1a, k1b, k1J);
      f(x1 + 0.5 * h * k1a, x2 + 0.5 * h * k1b, k2a, k2b, k2J);
      f(x1 + 0.5 * h * k2a, x2 + 0.5 * h * k2b, k3a, k3b, k3J);
      f(x1 + h * k3a, x2 + h * k3b, k4a, k4b, k4J);
      x1 += h / 6.0 * (k1a + 2 * k2a + 2 * k3a + k4a);
      x2 += h / 6.0 * (k1b + 2 * k2b + 2 * k3b + k4b);
      J += h / 6.0 * (k1J + 2 * k2J + 2 * k3J + k4J);
    }
  };
  run(ts, 0.0, false);
  run(5.0, ts, true);
  return {J, x1, x2};
}

}  // namespace

double second_order_policy(const Vec& x) { return std::clamp(x[0], -1.0, 1.0); }

double second_order_switch_cost(double ts) {
  const double x1s = ts - 0.5 * ts * ts;
  const double x2s = 1.0 - ts;
  const double A = 0.5 * (x1s + x2s);   // growing mode coefficient
  const double B = 0.5 * (x1s - x2s);   // decaying mode coefficient
  const double T = 5.0 - ts;
  return bang_cost(ts) + 0.5 * A * A * (std::exp(2.0 * T) - 1.0) +
         0.5 * B * B * (1.0 - std::exp(-2.0 * T));
}

double second_order_switch_cost_rk4(double ts, double step) {
  return switch_cost_rk4(ts, step).cost;
}

ShootingResult second_order_shooting_oracle(double lo, double hi, double tol) {
  if (!(lo < hi) || tol <= 0.0) throw OracleError("shooting oracle: bad bracket parameters");
  constexpr double step = 1e-4;
  int evals = 0;
  auto J = [&](double t) {
    ++evals;
    return switch_cost_rk4(t, step).cost;
  };
  const double J_lo = J(lo), J_hi = J(hi);
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double Jc = J(c), Jd = J(d);
  while (b - a > tol) {
    if (Jc < Jd) {
      b = d;
      d = c;
      Jd = Jc;
      c = b - invphi * (b - a);
      Jc = J(c);
    } else {
      a = c;
      c = d;
      Jc = Jd;
      d = a + invphi * (b - a);
      Jd = J(d);
    }
  }
  ShootingResult out;
  out.t_switch = 0.5 * (a + b);
  const CostAndState fin = switch_cost_rk4(out.t_switch, step);
  out.cost = fin.cost;
  out.terminal_norm = std::hypot(fin.x1, fin.x2);
  out.evaluations = evals;
  if (!(out.cost < J_lo && out.cost < J_hi))
    throw OracleError("shooting oracle: no interior minimum in bracket");
  return out;
}

SingularAnalysis second_order_analysis() {
  SingularAnalysis a;
  a.benchmark = "second-order";
  a.policy = [](const Vec& x) { return second_order_policy(x); };
  a.kelley_ok = [](const Vec&) { return true; };  // -d(S'')/du = 1 > 0 everywhere
  a.arc_order = 1;
  a.switching_structure =
      "S = p2: S > 0 -> u = -1, S < 0 -> u = +1, S = 0 -> u_S = x1; "
      "from x0 = (0,1) the solution is one bang (u = -1) then singular";
  return a;
}

AlyChanPoint aly_chan_analytic(double t) {
  constexpr double half_pi = 1.57079632679489661923;
  if (t < -1e-12 || t > half_pi + 1e-12)
    throw std::domain_error("aly_chan_analytic: t outside [0, pi/2]");
  t = std::clamp(t, 0.0, half_pi);
  AlyChanPoint p;
  p.x = Vec(3);
  p.x << std::sin(t), std::cos(t), 0.25 * std::sin(2.0 * t);
  p.u = -std::sin(t);
  p.costate = Vec(3);
  p.costate << -std::cos(t), 0.0, 1.0;
  return p;
}

SingularAnalysis aly_chan_analysis() {
  SingularAnalysis a;
  a.benchmark = "aly-chan";
  a.policy = [](const Vec& x) { return -x[0]; };  // u = -sin t = -x1 on the arc
  a.kelley_ok = [](const Vec&) { return true; };
  a.arc_order = 1;
  a.switching_structure = "fully singular: S = p2 = 0 on all of [0, pi/2]";
  return a;
}

double smib_singular_policy(const Vec& x, const SmibParams& p) {
  p.validate();
  const double s = std::sin(p.delta_ep + x[0]);
  if (std::abs(s) <= 1e-9)
    throw OracleError("smib singular policy undefined: sin(delta_ep + x1) vanishes");
  const double r = p.C2 / p.C1;
  return (p.P_M - p.D * x[1] - 2.0 * p.H * r * r * x[0]) / (p.P_E * s);
}

bool smib_kelley(const Vec& x, const SmibParams& p) {
  return std::sin(p.delta_ep + x[0]) >= 0.0;
}

EigenReport smib_autonomous_eigenvalues(const SmibParams& p) {
  p.validate();
  EigenReport r;
  r.lambda_plus = p.C2 / p.C1;
  r.lambda_minus = -p.C2 / p.C1;
  r.unstable = r.lambda_plus > 0.0;
  return r;
}

Mat smib_autonomous_matrix(const SmibParams& p) {
  p.validate();
  const double r = p.C2 / p.C1;
  Mat A(2, 2);
  A << 0.0, 1.0, r * r, 0.0;
  return A;
}

SingularAnalysis smib_analysis(const SmibParams& p) {
  SingularAnalysis a;
  a.benchmark = "smib";
  a.policy = [p](const Vec& x) { return smib_singular_policy(x, p); };
  a.kelley_ok = [p](const Vec& x) { return smib_kelley(x, p); };
  a.arc_order = 1;
  a.switching_structure =
      "S = p2: S > 0 -> u = u_L, S < 0 -> u = u_U, S = 0 -> u_S; "
      "Kelley test reduces to sin(delta_ep + x1) >= 0";
  return a;
}

FeedbackRollout rollout_feedback(const std::function<double(const Vec&, double)>& policy,
                                 const OcpDefinition& ocp, const Vec& x0, double T,
                                 const RolloutOptions& opts) {
  if (x0.size() != ocp.n_states) throw std::invalid_argument("rollout_feedback: x0 size");
  if (ocp.n_controls != 1) throw std::invalid_argument("rollout_feedback: scalar-control only");
  if (T <= 0.0 || opts.step <= 0.0) throw std::invalid_argument("rollout_feedback: bad horizon/step");

  FeedbackRollout out;
  out.step_used = opts.step;
  std::vector<Vec> xs;
  std::vector<double> us;

  auto u_of = [&](const Vec& x, double t) {
    double u = policy(x, t);
    if (opts.saturate) u = std::clamp(u, ocp.control_lower[0], ocp.control_upper[0]);
    return u;
  };
  auto f = [&](const Vec& x, double t) {
    Vec u(1);
    u[0] = u_of(x, t);
    return ocp.dynamics(x, u, t);
  };

  Vec x = x0;
  double t = ocp.t0;
  const double t_end = ocp.t0 + T;
  try {
    xs.push_back(x);
    out.times.push_back(t);
    us.push_back(u_of(x, t));
    while (t < t_end - 1e-12) {
      const double h = std::min(opts.step, t_end - t);
      const Vec k1 = f(x, t);
      const Vec k2 = f(x + 0.5 * h * k1, t + 0.5 * h);
      const Vec k3 = f(x + 0.5 * h * k2, t + 0.5 * h);
      const Vec k4 = f(x + h * k3, t + h);
      x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      t += h;
      xs.push_back(x);
      out.times.push_back(t);
      us.push_back(u_of(x, t));
      if (!x.allFinite() || x.norm() > opts.divergence_norm) {
        out.diverged = true;
        out.note = "state norm exceeded " + std::to_string(opts.divergence_norm) + " at t = " +
                   std::to_string(t);
        break;
      }
    }
  } catch (const std::exception& e) {
    out.policy_failed = true;
    out.note = std::string("policy undefined at t = ") + std::to_string(t) + ": " + e.what();
    if (xs.size() > out.times.size()) xs.pop_back();
    while (us.size() < out.times.size()) us.push_back(std::numeric_limits<double>::quiet_NaN());
  }

  const int N = static_cast<int>(out.times.size());
  out.states = Mat(N, ocp.n_states);
  for (int k = 0; k < N; ++k) out.states.row(k) = xs[k].transpose();
  out.controls = Eigen::Map<const Vec>(us.data(), N);
  return out;
}

}  // namespace singarc::oracles
