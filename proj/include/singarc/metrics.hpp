#pragma once

#include "singarc/ocp.hpp"
#include "singarc/transcription.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace singarc {

/// Quantitative comparison helpers: costs achieved in simulation vs.
/// reported by solvers, relative optimality gaps, control-fluctuation
/// scores, residual breakdowns, and file emission (csv / json / svg).
namespace metrics {

/// Relative gap |J_a - J_m| / J_a. Throws std::domain_error when the
/// analytic reference J_a is zero (use absolute error instead).
double optimality_gap(double J_m, double J_a);

/// Cost of a densely sampled run: composite Simpson quadrature of the
/// running cost over the trace (piecewise-uniform sample spacing with an
/// even panel count per uniform block; isolated non-uniform panels fall
/// back to trapezoids) plus the Mayer term on the trace endpoints.
double simulated_cost(const DenseTrace& trace, const OcpDefinition& ocp);

/// Total variation sum_k |u_{k+1} - u_k|, summed over channels.
/// `u` has one row per sample. Requires >= 2 samples.
double total_variation(const Mat& u);
double total_variation(const Vec& u);

/// Per-interval and total integrated dynamics residual of a trajectory
/// (delegates to the transcription module's quadrature).
struct ResidualReport {
  Vec per_interval;
  double total = 0.0;
  int worst_interval = 0;
};
ResidualReport residual_report(const Trajectory& traj, const OcpDefinition& ocp,
                               const ResidualQuadrature& quad);

/// One comparison row: a solve or simulation labelled as in the summary
/// table. `gap_is_absolute` flags rows whose analytic reference is zero,
/// where the stored gap is |J_a - J_m| rather than a ratio.
struct MetricsRow {
  std::string label;
  double solver_reported_cost = std::numeric_limits<double>::quiet_NaN();
  double simulated_cost = std::numeric_limits<double>::quiet_NaN();
  double optimality_gap_percent = std::numeric_limits<double>::quiet_NaN();
  double total_variation = std::numeric_limits<double>::quiet_NaN();
  double integrated_residual = std::numeric_limits<double>::quiet_NaN();
  bool gap_is_absolute = false;
  bool failed = false;

  /// Field-wise equality; NaN slots compare equal to NaN so serialization
  /// round-trips can be checked with ==.
  bool operator==(const MetricsRow& o) const;
};

struct MetricsTable {
  std::string problem;
  double analytic_reference = std::numeric_limits<double>::quiet_NaN();
  std::vector<MetricsRow> rows;

  bool operator==(const MetricsTable& o) const;

  /// Gap of a simulated (or, when absent, solver-reported) cost against
  /// analytic_reference, honoring the zero-reference absolute-error rule.
  MetricsRow& add_row(const std::string& label, double solver_cost, double sim_cost,
                      double tv, double integrated_residual);

  std::string to_json() const;                      // deterministic, 17 significant digits
  static MetricsTable from_json(const std::string& text);
};

/// Serialization of dense traces and tables.
///
/// csv: one row per sample, header "t,x_1..x_n,u_1..u_m" plus
///      ",solve_status,kkt_residual" when step metadata is attached.
/// json: the MetricsTable together with the run configuration snapshot.
/// svg: states/control vs. time; for 2-state problems additionally a
///      phase portrait of (x1/s1, x2/s2) with configurable axis scales.
struct StepAnnotation {
  std::string solve_status;
  double kkt_residual = 0.0;
};

void write_csv(const std::string& path, const DenseTrace& trace,
               const std::vector<StepAnnotation>& steps = {});
void write_json(const std::string& path, const MetricsTable& table,
                const std::string& config_json = "{}");

struct SvgCurve {
  std::string label;
  Vec x;
  Vec y;
};
struct SvgPlot {
  std::string title, x_label, y_label;
  std::vector<SvgCurve> curves;
};
/// Hand-rolled standalone SVG with axes, ticks and a legend; one <svg>
/// per plot stacked vertically. Deterministic output.
void write_svg(const std::string& path, const std::vector<SvgPlot>& plots);

/// Convenience plots for a trace: one panel per state, one per control.
std::vector<SvgPlot> trace_plots(const DenseTrace& trace, const std::string& run_label);

/// Scaled phase portrait (x1/s1 vs x2/s2), one curve per trace.
SvgPlot phase_portrait(const std::vector<DenseTrace>& traces,
                       const std::vector<std::string>& labels, double s1, double s2);

}  // namespace metrics
}  // namespace singarc
