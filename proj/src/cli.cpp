#include "singarc/cli.hpp"

#include "singarc/benchmarks.hpp"
#include "singarc/metrics.hpp"
#include "singarc/oracles.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace singarc::cli {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  if (!j.is_object()) throw ConfigError("config section '" + where + "' must be an object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* a : allowed)
      if (item.key() == a) {
        known = true;
        break;
      }
    if (!known) throw ConfigError("unknown config key '" + item.key() + "' in " + where);
  }
}

template <typename T>
void assign(const json& j, const char* key, T& slot, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    j.at(key).get_to(slot);
  } catch (const json::exception&) {
    throw ConfigError("config key '" + std::string(key) + "' in " + where + " has the wrong type");
  }
}

void parse_empc(const json& j, sim::EmpcConfig& e, std::string& mode) {
  check_keys(j, {"step", "horizon", "mode", "warm_start", "on_solver_failure", "duration"},
             "empc");
  assign(j, "step", e.step, "empc");
  assign(j, "horizon", e.horizon, "empc");
  assign(j, "duration", e.duration, "empc");
  assign(j, "warm_start", e.warm_start, "empc");
  assign(j, "mode", mode, "empc");
  if (j.contains("on_solver_failure")) {
    const auto v = j.at("on_solver_failure").get<std::string>();
    if (v == "hold_previous")
      e.on_solver_failure = sim::FailurePolicy::hold_previous;
    else if (v == "abort")
      e.on_solver_failure = sim::FailurePolicy::abort;
    else
      throw ConfigError("empc.on_solver_failure must be hold_previous or abort");
  }
}

void parse_solver(const json& j, SolverOptions& s) {
  check_keys(j,
             {"tol_kkt", "max_iter", "barrier_init", "barrier_reduction", "fraction_to_boundary",
              "reg_init", "reg_min", "reg_max", "dense_threshold", "verbose"},
             "solver");
  assign(j, "tol_kkt", s.tol_kkt, "solver");
  assign(j, "max_iter", s.max_iter, "solver");
  assign(j, "barrier_init", s.barrier_init, "solver");
  assign(j, "barrier_reduction", s.barrier_reduction, "solver");
  assign(j, "fraction_to_boundary", s.fraction_to_boundary, "solver");
  assign(j, "reg_init", s.reg_init, "solver");
  assign(j, "reg_min", s.reg_min, "solver");
  assign(j, "reg_max", s.reg_max, "solver");
  assign(j, "dense_threshold", s.dense_threshold, "solver");
  assign(j, "verbose", s.verbose, "solver");
}

void parse_irr(const json& j, IrrConfig& c) {
  check_keys(j, {"eta", "eps_abs"}, "irr");
  assign(j, "eta", c.eta, "irr");
  assign(j, "eps_abs", c.eps_abs, "irr");
}

void parse_smib(const json& j, SmibParams& p) {
  check_keys(j, {"C1", "C2", "P_M", "P_E", "D", "H", "delta_ep", "t_final", "x0"}, "smib");
  assign(j, "C1", p.C1, "smib");
  assign(j, "C2", p.C2, "smib");
  assign(j, "P_M", p.P_M, "smib");
  assign(j, "P_E", p.P_E, "smib");
  assign(j, "D", p.D, "smib");
  assign(j, "H", p.H, "smib");
  assign(j, "delta_ep", p.delta_ep, "smib");
  assign(j, "t_final", p.t_final, "smib");
  if (j.contains("x0")) {
    std::vector<double> v;
    assign(j, "x0", v, "smib");
    if (v.size() != 2) throw ConfigError("smib.x0 must hold exactly two numbers");
    p.x0 = (Vec(2) << v[0], v[1]).finished();
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// shared run pieces

const char* method_label(const std::string& method) {
  return method == "dc" ? "DC" : "IRR-DC";
}

double analytic_reference(const std::string& problem) {
  if (problem == "second-order") {
    static const double J_a = oracles::second_order_shooting_oracle().cost;
    return J_a;
  }
  if (problem == "aly-chan") return 0.0;
  return kNan;  // no closed-form cost for the smib benchmark
}

struct SolveArtifacts {
  SolveResult result;
  std::optional<Trajectory> traj;
  double integrated_residual = kNan;
  double r_min = kNan;
  double budget = kNan;
};

SolveArtifacts solve_problem(const OcpDefinition& ocp, const RunConfig& cfg) {
  const Mesh mesh = Mesh::uniform(ocp.t0, ocp.tf, cfg.mesh_Z);
  const ResidualQuadrature quad = ResidualQuadrature::build(mesh, ocp.n_states);
  SolveArtifacts a;
  if (cfg.method == "dc") {
    const HsTranscription engine(ocp, mesh);
    const NlpProblem problem = transcribe_dc(ocp, mesh);
    a.result = solve(problem, engine.cold_start(), cfg.solver);
    a.traj = engine.reconstruct(a.result.w);
    a.integrated_residual = integrated_residual(*a.traj, ocp, quad);
  } else {
    IrrConfig ic = cfg.irr;
    ic.phase1_options = cfg.solver;
    const IrrdcTranscription irr = transcribe_irrdc(ocp, mesh, quad, ic);
    a.result = solve(irr.problem, irr.warm_start, cfg.solver);
    a.traj = irr.engine->reconstruct(a.result.w.head(irr.engine->layout().dim()));
    a.integrated_residual = irr.residual_of(a.result.w);
    a.r_min = irr.r_min;
    a.budget = irr.budget;
  }
  return a;
}

// Total variation of the interpolated control on a grid 10x finer than the
// per-interval control sampling (two values per interval), so open-loop
// numbers are comparable with closed-loop ones.
double open_loop_tv(const Trajectory& traj) {
  const double t0 = traj.mesh().t0(), tf = traj.mesh().tf();
  const int samples = 20 * traj.mesh().intervals();
  Mat u(samples + 1, traj.n_controls());
  for (int i = 0; i <= samples; ++i)
    u.row(i) = traj.eval_control(t0 + (tf - t0) * i / samples).transpose();
  return metrics::total_variation(u);
}

sim::EmpcConfig empc_config(const RunConfig& cfg) {
  sim::EmpcConfig ec = cfg.empc;
  ec.method = cfg.method == "dc" ? sim::Method::dc : sim::Method::irrdc;
  ec.mesh_Z = cfg.mesh_Z;
  ec.solver = cfg.solver;
  ec.irr = cfg.irr;
  ec.irr.phase1_options = cfg.solver;
  std::string mode = cfg.empc_mode;
  if (mode == "auto") mode = cfg.problem == "second-order" ? "receding" : "shrinking";
  ec.mode = mode == "receding" ? sim::EmpcMode::receding : sim::EmpcMode::shrinking;
  return ec;
}

bool wants(const RunConfig& cfg, const char* fmt) {
  for (const auto& f : cfg.formats)
    if (f == fmt) return true;
  return false;
}

fs::path artifact_dir(const RunConfig& cfg) {
  fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string());
  return dir;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_table_csv(const fs::path& path, const metrics::MetricsTable& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << "label,solver_reported_cost,simulated_cost,optimality_gap_percent,gap_is_absolute,"
         "total_variation,integrated_residual,failed\n";
  for (const auto& r : t.rows) {
    out << r.label << "," << fmt17(r.solver_reported_cost) << "," << fmt17(r.simulated_cost) << ","
        << fmt17(r.optimality_gap_percent) << "," << (r.gap_is_absolute ? 1 : 0) << ","
        << fmt17(r.total_variation) << "," << fmt17(r.integrated_residual) << ","
        << (r.failed ? 1 : 0) << "\n";
  }
}

DenseTrace grid_trace(const sim::ClosedLoopResult& r) {
  return DenseTrace{r.times, r.plant_states, r.applied_controls};
}

std::vector<metrics::StepAnnotation> step_annotations(const sim::ClosedLoopResult& r) {
  std::vector<metrics::StepAnnotation> ann;
  ann.reserve(r.steps.size() + 1);
  for (const auto& s : r.steps)
    ann.push_back({s.reused_previous && std::isnan(s.objective) ? "carried"
                                                                : to_string(s.status),
                   s.kkt_residual});
  if (!ann.empty()) ann.push_back(ann.back());
  return ann;
}

}  // namespace

void RunConfig::validate() const {
  if (!problem.empty() && problem != "second-order" && problem != "aly-chan" && problem != "smib")
    throw ConfigError("problem must be second-order, aly-chan or smib");
  if (method != "dc" && method != "irrdc") throw ConfigError("method must be dc or irrdc");
  if (mesh_Z < 2) throw ConfigError("mesh_Z must be at least 2");
  if (empc_mode != "auto" && empc_mode != "receding" && empc_mode != "shrinking")
    throw ConfigError("empc mode must be auto, receding or shrinking");
  if (!sweep_initial.empty() && sweep_initial != "phase-grid")
    throw ConfigError("sweep-initial supports only 'phase-grid'");
  for (const auto& f : formats)
    if (f != "csv" && f != "json" && f != "svg")
      throw ConfigError("formats may contain only csv, json, svg");
  try {
    empc.validate();
    if (problem == "smib") smib.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (solver.tol_kkt <= 0 || solver.max_iter < 1) throw ConfigError("invalid solver options");
  if (irr.eta < 1.0 || irr.eps_abs <= 0.0) throw ConfigError("invalid irr options");
}

std::string RunConfig::to_json() const {
  json j;
  j["problem"] = problem;
  j["method"] = method;
  j["mesh_Z"] = mesh_Z;
  j["empc"] = {{"step", empc.step},
               {"horizon", empc.horizon},
               {"mode", empc_mode},
               {"warm_start", empc.warm_start},
               {"on_solver_failure",
                empc.on_solver_failure == sim::FailurePolicy::abort ? "abort" : "hold_previous"},
               {"duration", empc.duration}};
  j["solver"] = {{"tol_kkt", solver.tol_kkt},
                 {"max_iter", solver.max_iter},
                 {"barrier_init", solver.barrier_init},
                 {"barrier_reduction", solver.barrier_reduction},
                 {"fraction_to_boundary", solver.fraction_to_boundary},
                 {"reg_init", solver.reg_init},
                 {"reg_min", solver.reg_min},
                 {"reg_max", solver.reg_max},
                 {"dense_threshold", solver.dense_threshold},
                 {"verbose", solver.verbose}};
  j["irr"] = {{"eta", irr.eta}, {"eps_abs", irr.eps_abs}};
  j["smib"] = {{"C1", smib.C1},
               {"C2", smib.C2},
               {"P_M", smib.P_M},
               {"P_E", smib.P_E},
               {"D", smib.D},
               {"H", smib.H},
               {"delta_ep", smib.delta_ep},
               {"t_final", smib.t_final},
               {"x0", {smib.x0[0], smib.x0[1]}}};
  j["output_dir"] = output_dir;
  j["formats"] = formats;
  j["sweep_initial"] = sweep_initial;
  j["report_input"] = report_input;
  return j.dump(2);
}

RunConfig load_config_file(const std::string& path, RunConfig base) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  check_keys(j,
             {"problem", "method", "mesh_Z", "empc", "solver", "irr", "smib", "output_dir",
              "formats", "sweep_initial", "report_input"},
             "top level");
  assign(j, "problem", base.problem, "top level");
  assign(j, "method", base.method, "top level");
  assign(j, "mesh_Z", base.mesh_Z, "top level");
  assign(j, "output_dir", base.output_dir, "top level");
  assign(j, "formats", base.formats, "top level");
  assign(j, "sweep_initial", base.sweep_initial, "top level");
  assign(j, "report_input", base.report_input, "top level");
  if (j.contains("empc")) parse_empc(j.at("empc"), base.empc, base.empc_mode);
  if (j.contains("solver")) parse_solver(j.at("solver"), base.solver);
  if (j.contains("irr")) parse_irr(j.at("irr"), base.irr);
  if (j.contains("smib")) parse_smib(j.at("smib"), base.smib);
  return base;
}

OcpDefinition make_problem(const RunConfig& cfg) {
  if (cfg.problem == "second-order") return second_order_singular();
  if (cfg.problem == "aly-chan") return aly_chan();
  if (cfg.problem == "smib") return smib(cfg.smib);
  throw ConfigError(cfg.problem.empty() ? "missing required --problem"
                                        : "unknown problem '" + cfg.problem + "'");
}

int cmd_solve(const RunConfig& cfg) {
  cfg.validate();
  const OcpDefinition ocp = make_problem(cfg);
  const fs::path dir = artifact_dir(cfg);

  metrics::MetricsTable table;
  table.problem = cfg.problem;
  table.analytic_reference = analytic_reference(cfg.problem);

  SolveArtifacts a;
  try {
    a = solve_problem(ocp, cfg);
  } catch (const TranscriptionError& e) {
    std::cerr << "solve: " << e.what() << "\n";
    table.add_row(method_label(cfg.method), kNan, kNan, kNan, kNan).failed = true;
    if (wants(cfg, "json"))
      metrics::write_json((dir / "solve_metrics.json").string(), table, cfg.to_json());
    return 2;
  }

  const sim::SimResult open_loop = sim::simulate_open_loop(ocp, *a.traj);
  auto& row = table.add_row(method_label(cfg.method), a.result.objective, open_loop.achieved_cost,
                            open_loop_tv(*a.traj), a.integrated_residual);
  row.failed = !a.result.ok();

  if (wants(cfg, "csv"))
    metrics::write_csv((dir / "solve_trace.csv").string(), open_loop.trace);
  if (wants(cfg, "json"))
    metrics::write_json((dir / "solve_metrics.json").string(), table, cfg.to_json());
  if (wants(cfg, "svg")) {
    auto plots = metrics::trace_plots(open_loop.trace,
                                      cfg.problem + " " + method_label(cfg.method) + " open loop");
    if (cfg.problem == "smib")
      plots.push_back(metrics::phase_portrait({open_loop.trace}, {method_label(cfg.method)},
                                              cfg.smib.C1, cfg.smib.C2));
    metrics::write_svg((dir / "solve_plots.svg").string(), plots);
  }

  std::cout << "solve problem=" << cfg.problem << " method=" << cfg.method
            << " status=" << to_string(a.result.status) << " iters=" << a.result.iterations
            << " objective=" << fmt17(a.result.objective)
            << " simulated=" << fmt17(open_loop.achieved_cost)
            << " residual=" << fmt17(a.integrated_residual) << "\n";
  return a.result.ok() ? 0 : 2;
}

namespace {

int empc_single(const RunConfig& cfg, const OcpDefinition& ocp, const fs::path& dir) {
  const sim::EmpcConfig ec = empc_config(cfg);
  sim::ClosedLoopResult r;
  try {
    r = sim::run_empc(ocp, ec);
  } catch (const std::exception& e) {
    std::cerr << "empc: " << e.what() << "\n";
    return 2;
  }

  metrics::MetricsTable table;
  table.problem = cfg.problem;
  table.analytic_reference = analytic_reference(cfg.problem);
  auto& row = table.add_row(std::string("Closed-loop ") + method_label(cfg.method), kNan,
                            r.achieved_cost, r.fluctuation_tv, kNan);
  row.failed = r.solver_failures > 0;

  if (wants(cfg, "csv"))
    metrics::write_csv((dir / "empc_closed_loop.csv").string(), grid_trace(r),
                       step_annotations(r));
  if (wants(cfg, "json"))
    metrics::write_json((dir / "empc_metrics.json").string(), table, cfg.to_json());
  if (wants(cfg, "svg")) {
    auto plots = metrics::trace_plots(r.dense, cfg.problem + " closed loop");
    if (cfg.problem == "smib")
      plots.push_back(
          metrics::phase_portrait({r.dense}, {"closed loop"}, cfg.smib.C1, cfg.smib.C2));
    metrics::write_svg((dir / "empc_plots.svg").string(), plots);
  }

  std::cout << "empc problem=" << cfg.problem << " method=" << cfg.method
            << " mode=" << to_string(ec.mode) << " steps=" << r.steps.size()
            << " failures=" << r.solver_failures << " achieved=" << fmt17(r.achieved_cost)
            << " tv=" << fmt17(r.fluctuation_tv) << "\n";
  return r.solver_failures == 0 ? 0 : 2;
}

int empc_sweep(const RunConfig& cfg, const OcpDefinition& ocp, const fs::path& dir) {
  if (cfg.problem != "smib")
    throw ConfigError("--sweep-initial phase-grid is only defined for the smib problem");
  const sim::EmpcConfig ec = empc_config(cfg);

  std::vector<double> x1s = {0.5, 1.0, 1.5};
  std::vector<double> x2s = {5.0, 10.0, 15.0};
  metrics::MetricsTable table;
  table.problem = cfg.problem;
  std::vector<DenseTrace> traces;
  std::vector<std::string> labels;
  int failures = 0;

  for (double x1 : x1s)
    for (double x2 : x2s) {
      OcpDefinition run = ocp;
      run.initial_state = (Vec(2) << x1, x2).finished();
      char label[64];
      std::snprintf(label, sizeof label, "x0=(%g, %g)", x1, x2);
      try {
        const sim::ClosedLoopResult r = sim::run_empc(run, ec);
        auto& row = table.add_row(label, kNan, r.achieved_cost, r.fluctuation_tv, kNan);
        row.failed = r.solver_failures > 0;
        failures += r.solver_failures;
        traces.push_back(r.dense);
        labels.push_back(label);
      } catch (const std::exception& e) {
        std::cerr << "empc sweep " << label << ": " << e.what() << "\n";
        table.add_row(label, kNan, kNan, kNan, kNan).failed = true;
        ++failures;
      }
    }

  if (wants(cfg, "json"))
    metrics::write_json((dir / "empc_sweep_metrics.json").string(), table, cfg.to_json());
  if (wants(cfg, "svg") && !traces.empty())
    metrics::write_svg((dir / "empc_sweep.svg").string(),
                       {metrics::phase_portrait(traces, labels, cfg.smib.C1, cfg.smib.C2)});

  std::cout << "empc sweep problem=smib runs=" << labels.size() << " failures=" << failures
            << "\n";
  return failures == 0 ? 0 : 2;
}

}  // namespace

int cmd_empc(const RunConfig& cfg) {
  cfg.validate();
  const OcpDefinition ocp = make_problem(cfg);
  const fs::path dir = artifact_dir(cfg);
  if (!cfg.sweep_initial.empty()) return empc_sweep(cfg, ocp, dir);
  return empc_single(cfg, ocp, dir);
}

int cmd_table1(const RunConfig& cfg) {
  cfg.validate();
  RunConfig base = cfg;
  base.problem = "second-order";
  const OcpDefinition ocp = make_problem(base);
  const fs::path dir = artifact_dir(base);

  metrics::MetricsTable table;
  table.problem = base.problem;
  table.analytic_reference = analytic_reference(base.problem);

  std::vector<metrics::SvgPlot> plots;
  int failed_rows = 0;

  for (const std::string method : {"dc", "irrdc"}) {
    RunConfig rc = base;
    rc.method = method;
    const char* label = method_label(method);

    std::optional<SolveArtifacts> solved;
    try {
      solved = solve_problem(ocp, rc);
    } catch (const std::exception& e) {
      std::cerr << "table1 solver " << label << ": " << e.what() << "\n";
    }
    if (solved && solved->result.ok()) {
      table.add_row(std::string("Solver ") + label, solved->result.objective, kNan, kNan,
                    solved->integrated_residual);
      const sim::SimResult ol = sim::simulate_open_loop(ocp, *solved->traj);
      table.add_row(std::string("Open-loop ") + label, solved->result.objective, ol.achieved_cost,
                    open_loop_tv(*solved->traj), solved->integrated_residual);
      metrics::SvgPlot up;
      up.title = std::string("open-loop control, ") + label;
      up.x_label = "t";
      up.y_label = "u";
      const auto& tr = ol.trace;
      up.curves.push_back({label, tr.times, tr.controls.col(0)});
      plots.push_back(std::move(up));
    } else {
      table.add_row(std::string("Solver ") + label, kNan, kNan, kNan, kNan).failed = true;
      table.add_row(std::string("Open-loop ") + label, kNan, kNan, kNan, kNan).failed = true;
      failed_rows += 2;
    }

    try {
      const sim::ClosedLoopResult r = sim::run_empc(ocp, empc_config(rc));
      auto& row = table.add_row(std::string("Closed-loop ") + label, kNan, r.achieved_cost,
                                r.fluctuation_tv, kNan);
      if (r.solver_failures > 0) {
        row.failed = true;
        ++failed_rows;
      }
      metrics::SvgPlot up;
      up.title = std::string("closed-loop applied control, ") + label;
      up.x_label = "t";
      up.y_label = "u";
      up.curves.push_back({label, r.times, r.applied_controls.col(0)});
      plots.push_back(std::move(up));
    } catch (const std::exception& e) {
      std::cerr << "table1 closed-loop " << label << ": " << e.what() << "\n";
      table.add_row(std::string("Closed-loop ") + label, kNan, kNan, kNan, kNan).failed = true;
      ++failed_rows;
    }
  }

  table.add_row("Analytic", kNan, table.analytic_reference, kNan, kNan);

  if (wants(base, "json"))
    metrics::write_json((dir / "table1.json").string(), table, base.to_json());
  if (wants(base, "csv")) write_table_csv(dir / "table1.csv", table);
  if (wants(base, "svg") && !plots.empty())
    metrics::write_svg((dir / "table1_controls.svg").string(), plots);

  for (const auto& r : table.rows)
    std::cout << "table1 row label=\"" << r.label << "\" solver=" << fmt17(r.solver_reported_cost)
              << " simulated=" << fmt17(r.simulated_cost)
              << " gap%=" << fmt17(r.optimality_gap_percent) << (r.failed ? " FAILED" : "")
              << "\n";
  return failed_rows == 0 ? 0 : 2;
}

int cmd_report(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.report_input.empty()) throw ConfigError("report requires --input <metrics json>");
  metrics::MetricsTable table;
  try {
    table = metrics::MetricsTable::from_json(read_text_file(cfg.report_input));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("cannot parse metrics file " + cfg.report_input + ": " + e.what());
  }

  // Consistency audit: stored gaps must be recomputable from stored costs.
  int inconsistent = 0;
  for (const auto& r : table.rows) {
    if (std::isnan(r.optimality_gap_percent) || r.failed) continue;
    const double J_m = std::isnan(r.simulated_cost) ? r.solver_reported_cost : r.simulated_cost;
    const double expect = r.gap_is_absolute
                              ? std::abs(J_m)
                              : 100.0 * metrics::optimality_gap(J_m, table.analytic_reference);
    if (std::abs(expect - r.optimality_gap_percent) > 1e-12 * std::max(1.0, std::abs(expect))) {
      std::cerr << "report: row '" << r.label << "' gap " << fmt17(r.optimality_gap_percent)
                << " does not match recomputed " << fmt17(expect) << "\n";
      ++inconsistent;
    }
  }

  std::printf("problem: %s\nanalytic reference: %s\n", table.problem.c_str(),
              fmt17(table.analytic_reference).c_str());
  std::printf("%-22s %16s %16s %14s %12s %14s\n", "label", "solver cost", "simulated", "gap",
              "TV", "residual");
  for (const auto& r : table.rows)
    std::printf("%-22s %16.9g %16.9g %13.6g%s %12.6g %14.6g%s\n", r.label.c_str(),
                r.solver_reported_cost, r.simulated_cost, r.optimality_gap_percent,
                r.gap_is_absolute ? " " : "%", r.total_variation, r.integrated_residual,
                r.failed ? "  FAILED" : "");

  if (wants(cfg, "csv")) write_table_csv(artifact_dir(cfg) / "report_table.csv", table);
  return inconsistent == 0 ? 0 : 2;
}

int run_cli(int argc, const char* const* argv) {
  RunConfig cfg;
  if (const char* env = std::getenv("SINGARC_OUTPUT_DIR")) cfg.output_dir = env;

  // The config file is applied before flag parsing so that flags override
  // file values; find it with a light pre-scan.
  std::string config_path;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc)
      config_path = argv[i + 1];
    else if (a.rfind("--config=", 0) == 0)
      config_path = a.substr(9);
  }
  try {
    if (!config_path.empty()) cfg = load_config_file(config_path, cfg);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }

  CLI::App app{"singular-arc optimal control workbench"};
  app.require_subcommand(1);
  std::string config_sink;  // consumed above; declared so parsing accepts it
  app.add_option("--config", config_sink, "JSON config file; flags override its values");
  app.add_option("--output-dir", cfg.output_dir,
                 "artifact directory (default: $SINGARC_OUTPUT_DIR or .)");
  app.add_option("--formats", cfg.formats, "comma-separated artifact formats: csv,json,svg")
      ->delimiter(',');

  std::string failure_policy;
  std::vector<double> smib_x0;
  auto add_common = [&](CLI::App* c) {
    c->fallthrough();
    c->add_option("--problem", cfg.problem, "second-order | aly-chan | smib");
    c->add_option("--method", cfg.method, "dc | irrdc");
    c->add_option("--mesh", cfg.mesh_Z, "collocation interval count");
    c->add_option("--tol", cfg.solver.tol_kkt, "solver KKT tolerance");
    c->add_option("--max-iter", cfg.solver.max_iter, "solver iteration cap");
    c->add_flag("--verbose", cfg.solver.verbose, "solver iteration log to stderr");
    c->add_option("--eta", cfg.irr.eta, "residual budget multiplier");
    c->add_option("--eps-abs", cfg.irr.eps_abs, "residual budget floor");
    c->add_option("--smib-H", cfg.smib.H, "smib inertia");
    c->add_option("--smib-D", cfg.smib.D, "smib damping");
    c->add_option("--smib-tf", cfg.smib.t_final, "smib horizon");
    c->add_option("--smib-x0", smib_x0, "smib initial state (two values)")->expected(2);
  };

  CLI::App* c_solve = app.add_subcommand("solve", "transcribe, solve, simulate open-loop");
  add_common(c_solve);
  CLI::App* c_empc = app.add_subcommand("empc", "closed-loop receding/shrinking horizon run");
  add_common(c_empc);
  c_empc->add_option("--step", cfg.empc.step, "controller period");
  c_empc->add_option("--horizon", cfg.empc.horizon, "receding look-ahead length");
  c_empc->add_option("--duration", cfg.empc.duration, "receding run length (default: OCP horizon)");
  c_empc->add_option("--mode", cfg.empc_mode, "auto | receding | shrinking");
  c_empc->add_flag("--warm-start,!--no-warm-start", cfg.empc.warm_start, "warm start each solve");
  c_empc->add_option("--on-failure", failure_policy, "hold_previous | abort");
  c_empc->add_option("--sweep-initial", cfg.sweep_initial, "'phase-grid' for the 3x3 sweep");
  CLI::App* c_table = app.add_subcommand("table1", "full method comparison, second-order problem");
  add_common(c_table);
  c_table->add_option("--step", cfg.empc.step, "controller period");
  c_table->add_option("--horizon", cfg.empc.horizon, "receding look-ahead length");
  CLI::App* c_report = app.add_subcommand("report", "re-render an emitted metrics file");
  c_report->fallthrough();
  c_report->add_option("--input", cfg.report_input, "metrics json produced by another command");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the error message itself
    return code == 0 ? 0 : 1;
  }

  try {
    if (!failure_policy.empty()) {
      if (failure_policy == "hold_previous")
        cfg.empc.on_solver_failure = sim::FailurePolicy::hold_previous;
      else if (failure_policy == "abort")
        cfg.empc.on_solver_failure = sim::FailurePolicy::abort;
      else
        throw ConfigError("--on-failure must be hold_previous or abort");
    }
    if (!smib_x0.empty()) cfg.smib.x0 = (Vec(2) << smib_x0[0], smib_x0[1]).finished();

    if (c_solve->parsed()) return cmd_solve(cfg);
    if (c_empc->parsed()) return cmd_empc(cfg);
    if (c_table->parsed()) return cmd_table1(cfg);
    if (c_report->parsed()) return cmd_report(cfg);
    throw ConfigError("no subcommand given");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n\n" << app.help() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace singarc::cli
