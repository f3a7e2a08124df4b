#include "singarc/simulator.hpp"

#include "singarc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace singarc::sim {

namespace {

OcpDefinition horizon_slice(const OcpDefinition& ocp, double t0, double tf, const Vec& x0,
                            bool keep_terminal) {
  OcpDefinition sub = ocp;
  sub.t0 = t0;
  sub.tf = tf;
  sub.initial_state = x0;
  if (!keep_terminal) sub.terminal_state.reset();
  return sub;
}

// Time-shifted warm start: the previous horizon solution sampled at the
// new mesh, holding its last values past its own horizon.
Vec warm_from_previous(const NlpLayout& L, const Mesh& mesh, const Trajectory& prev) {
  auto at = [&](double t) { return std::clamp(t, prev.mesh().t0(), prev.mesh().tf()); };
  Vec w(L.dim());
  for (int k = 0; k <= L.Z; ++k) {
    const double t = mesh.nodes[k];
    w.segment(L.node_state(k, 0), L.n) = prev.eval_state(at(t));
    w.segment(L.node_control(k, 0), L.m) = prev.eval_control(at(t));
  }
  for (int z = 0; z < L.Z; ++z) {
    const double t = mesh.midpoint(z);
    w.segment(L.mid_state(z, 0), L.n) = prev.eval_state(at(t));
    w.segment(L.mid_control(z, 0), L.m) = prev.eval_control(at(t));
  }
  return w;
}

}  // namespace

const char* to_string(EmpcMode m) {
  return m == EmpcMode::receding ? "receding" : "shrinking";
}

const char* to_string(Method m) { return m == Method::dc ? "dc" : "irrdc"; }

DenseTrace integrate_plant(const OcpDefinition& ocp, const Vec& x0,
                           const std::function<Vec(double)>& control, double t0, double t1,
                           double max_step) {
  if (!(t1 > t0)) throw std::invalid_argument("integrate_plant: t1 must exceed t0");
  if (!(max_step > 0)) throw std::invalid_argument("integrate_plant: max_step must be positive");
  if (x0.size() != ocp.n_states) throw std::invalid_argument("integrate_plant: x0 size");

  const double span = t1 - t0;
  int n = static_cast<int>(std::ceil(span / max_step - 1e-12));
  if (n < 2) n = 2;
  if (n % 2 != 0) ++n;
  const double h = span / n;

  DenseTrace trace;
  trace.times = Vec(n + 1);
  trace.states = Mat(n + 1, ocp.n_states);
  trace.controls = Mat(n + 1, ocp.n_controls);

  Vec x = x0;
  for (int k = 0; k < n; ++k) {
    const double t = t0 + k * h;
    const Vec u1 = control(t);
    const Vec um = control(t + 0.5 * h);
    const Vec u4 = control(t + h);
    trace.times[k] = t;
    trace.states.row(k) = x.transpose();
    trace.controls.row(k) = u1.transpose();
    const Vec k1 = ocp.dynamics(x, u1, t);
    const Vec k2 = ocp.dynamics(x + 0.5 * h * k1, um, t + 0.5 * h);
    const Vec k3 = ocp.dynamics(x + 0.5 * h * k2, um, t + 0.5 * h);
    const Vec k4 = ocp.dynamics(x + h * k3, u4, t + h);
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite())
      throw IntegrationError("integrate_plant: state became non-finite", t + h);
  }
  trace.times[n] = t1;
  trace.states.row(n) = x.transpose();
  trace.controls.row(n) = control(t1).transpose();
  return trace;
}

SimResult simulate_open_loop(const OcpDefinition& ocp, const Trajectory& traj, double max_step) {
  ocp.validate();
  if (traj.n_states() != ocp.n_states || traj.n_controls() != ocp.n_controls)
    throw std::invalid_argument("simulate_open_loop: trajectory does not match the problem");
  auto control = [&](double t) {
    return traj.eval_control(std::clamp(t, traj.mesh().t0(), traj.mesh().tf()));
  };
  SimResult out;
  out.trace = integrate_plant(ocp, ocp.initial_state, control, ocp.t0, ocp.tf, max_step);
  out.achieved_cost = metrics::simulated_cost(out.trace, ocp);
  return out;
}

void EmpcConfig::validate() const {
  if (!(step > 0.0)) throw std::invalid_argument("EmpcConfig: step must be positive");
  if (horizon < step) throw std::invalid_argument("EmpcConfig: horizon must be >= step");
  if (mesh_Z < 2) throw std::invalid_argument("EmpcConfig: mesh_Z must be >= 2");
}

ClosedLoopResult run_empc(const OcpDefinition& ocp, const EmpcConfig& cfg) {
  ocp.validate();
  cfg.validate();

  const double t0 = ocp.t0;
  const double run_len = (cfg.mode == EmpcMode::receding)
                             ? (cfg.duration > 0.0 ? cfg.duration : ocp.tf - ocp.t0)
                             : ocp.tf - ocp.t0;
  const double t_end = t0 + run_len;
  const int N = static_cast<int>(std::llround(run_len / cfg.step));
  if (N < 1 || std::abs(N * cfg.step - run_len) > 1e-9 * std::max(1.0, run_len))
    throw std::invalid_argument("run_empc: run length must be a positive multiple of step");
  const double h_p = std::min(cfg.step / 10.0, 1e-3);

  ClosedLoopResult res;
  res.times = Vec(N + 1);
  res.plant_states = Mat(N + 1, ocp.n_states);
  res.applied_controls = Mat(N + 1, ocp.n_controls);
  res.steps.reserve(N);

  Vec x = ocp.initial_state;
  std::optional<Trajectory> prev;
  bool openloop_tail = false;
  std::vector<DenseTrace> segments;
  segments.reserve(N);

  for (int k = 0; k < N; ++k) {
    const double t_k = t0 + k * cfg.step;
    res.times[k] = t_k;
    res.plant_states.row(k) = x.transpose();

    EmpcStepRecord rec;
    rec.t = t_k;

    int Z_k = cfg.mesh_Z;
    double tf_k = t_k + cfg.horizon;
    if (cfg.mode == EmpcMode::shrinking) {
      const double remaining = t_end - t_k;
      tf_k = t_end;
      const int proportional =
          static_cast<int>(std::llround(cfg.mesh_Z * remaining / run_len));
      Z_k = std::max(5, proportional);
      if (proportional < 5 && prev) openloop_tail = true;
    }

    if (!openloop_tail) {
      const OcpDefinition sub =
          horizon_slice(ocp, t_k, tf_k, x, cfg.mode == EmpcMode::shrinking);
      const Mesh mesh = Mesh::uniform(t_k, tf_k, Z_k);
      bool solved = false;
      std::string failure;
      try {
        if (cfg.method == Method::dc) {
          const HsTranscription engine(sub, mesh);
          const NlpProblem problem = transcribe_dc(sub, mesh);
          const Vec w0 = (cfg.warm_start && prev) ? warm_from_previous(engine.layout(), mesh, *prev)
                                                  : engine.cold_start();
          const SolveResult r = solve(problem, w0, cfg.solver);
          rec.status = r.status;
          rec.objective = r.objective;
          rec.kkt_residual = r.kkt_residual;
          rec.iterations = r.iterations;
          if (r.ok()) {
            prev = engine.reconstruct(r.w);
            solved = true;
          } else {
            failure = to_string(r.status);
          }
        } else {
          const ResidualQuadrature quad = ResidualQuadrature::build(mesh, sub.n_states);
          IrrConfig ic = cfg.irr;
          if (cfg.warm_start && prev) {
            // Seed phase 1 with the time-shifted previous plan; its output
            // (that plan pulled back onto the residual manifold) is then the
            // phase-2 start. Starting phase 2 from the shifted plan directly
            // would hand it a point far outside the residual budget.
            HsTranscription probe(sub, mesh);
            ic.phase1_start = warm_from_previous(probe.layout(), mesh, *prev);
          }
          const IrrdcTranscription irr = transcribe_irrdc(sub, mesh, quad, ic);
          const SolveResult r = solve(irr.problem, irr.warm_start, cfg.solver);
          rec.status = r.status;
          rec.objective = r.objective;
          rec.kkt_residual = r.kkt_residual;
          rec.iterations = r.iterations;
          if (r.ok()) {
            prev = irr.engine->reconstruct(r.w.head(irr.engine->layout().dim()));
            solved = true;
          } else {
            failure = to_string(r.status);
          }
        }
      } catch (const TranscriptionError& e) {
        rec.status = e.phase1.status;
        failure = e.what();
      }
      rec.mesh_Z = Z_k;
      if (!solved) {
        ++res.solver_failures;
        rec.reused_previous = true;
        if (cfg.on_solver_failure == FailurePolicy::abort || !prev)
          throw std::runtime_error("run_empc: solver failed at t = " + std::to_string(t_k) +
                                   (failure.empty() ? "" : " (" + failure + ")"));
      }
    } else {
      rec.reused_previous = true;
      rec.status = SolveStatus::optimal;  // carried by the last accepted solve
      rec.objective = std::numeric_limits<double>::quiet_NaN();
    }
    res.steps.push_back(rec);

    const Trajectory& plan = *prev;
    auto control = [&](double t) {
      return plan.eval_control(std::clamp(t, plan.mesh().t0(), plan.mesh().tf()));
    };
    res.applied_controls.row(k) = control(t_k).transpose();
    segments.push_back(integrate_plant(ocp, x, control, t_k, t_k + cfg.step, h_p));
    x = segments.back().states.row(segments.back().states.rows() - 1).transpose();
  }

  res.times[N] = t_end;
  res.plant_states.row(N) = x.transpose();
  {
    const Trajectory& plan = *prev;
    res.applied_controls.row(N) =
        plan.eval_control(std::clamp(t_end, plan.mesh().t0(), plan.mesh().tf())).transpose();
  }

  // Concatenate the per-period dense segments (boundary samples shared).
  Eigen::Index total = 1;
  for (const auto& s : segments) total += s.times.size() - 1;
  res.dense.times = Vec(total);
  res.dense.states = Mat(total, ocp.n_states);
  res.dense.controls = Mat(total, ocp.n_controls);
  Eigen::Index at = 0;
  for (size_t s = 0; s < segments.size(); ++s) {
    const auto& seg = segments[s];
    const Eigen::Index start = (s == 0) ? 0 : 1;
    const Eigen::Index len = seg.times.size() - start;
    res.dense.times.segment(at, len) = seg.times.tail(len);
    res.dense.states.middleRows(at, len) = seg.states.bottomRows(len);
    res.dense.controls.middleRows(at, len) = seg.controls.bottomRows(len);
    at += len;
  }

  OcpDefinition run_window = ocp;
  run_window.tf = t_end;
  res.achieved_cost = metrics::simulated_cost(res.dense, run_window);
  res.fluctuation_tv = metrics::total_variation(res.applied_controls);
  return res;
}

}  // namespace singarc::sim
