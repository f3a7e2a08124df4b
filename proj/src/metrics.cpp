#include "singarc/metrics.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace singarc::metrics {

namespace {

using json = nlohmann::ordered_json;

bool same_double(double a, double b) {
  return (std::isnan(a) && std::isnan(b)) || a == b;
}

json num_or_null(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

double null_or_num(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.at(key).get<double>();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double optimality_gap(double J_m, double J_a) {
  if (J_a == 0.0)
    throw std::domain_error("optimality_gap: analytic reference is zero; use absolute error");
  return std::abs(J_a - J_m) / std::abs(J_a);
}

double simulated_cost(const DenseTrace& trace, const OcpDefinition& ocp) {
  const auto N = trace.times.size();
  if (N < 1 || trace.states.rows() != N) throw std::invalid_argument("simulated_cost: bad trace");
  double J = 0.0;
  if (ocp.has_lagrange()) {
    auto ell = [&](Eigen::Index i) {
      const Vec x = trace.states.row(i).transpose();
      const Vec u = trace.controls.row(i).transpose();
      return ocp.lagrange(x, u, trace.times[i]);
    };
    Eigen::Index i = 0;
    while (i + 1 < N) {
      const double h1 = trace.times[i + 1] - trace.times[i];
      if (i + 2 < N) {
        const double h2 = trace.times[i + 2] - trace.times[i + 1];
        if (std::abs(h2 - h1) <= 1e-12 * std::max(h1, h2)) {
          J += h1 / 3.0 * (ell(i) + 4.0 * ell(i + 1) + ell(i + 2));
          i += 2;
          continue;
        }
      }
      J += 0.5 * h1 * (ell(i) + ell(i + 1));  // lone panel at a spacing change
      i += 1;
    }
  }
  if (ocp.has_mayer()) {
    const Vec x_first = trace.states.row(0).transpose();
    const Vec x_last = trace.states.row(N - 1).transpose();
    J += ocp.mayer(x_first, x_last, trace.times[0], trace.times[N - 1]);
  }
  return J;
}

double total_variation(const Mat& u) {
  if (u.rows() < 2) throw std::invalid_argument("total_variation: need at least two samples");
  double tv = 0.0;
  for (Eigen::Index c = 0; c < u.cols(); ++c)
    for (Eigen::Index k = 0; k + 1 < u.rows(); ++k) tv += std::abs(u(k + 1, c) - u(k, c));
  return tv;
}

double total_variation(const Vec& u) {
  Mat m(u.size(), 1);
  m.col(0) = u;
  return total_variation(m);
}

ResidualReport residual_report(const Trajectory& traj, const OcpDefinition& ocp,
                               const ResidualQuadrature& quad) {
  ResidualReport rep;
  rep.per_interval = integrated_residual_per_interval(traj, ocp, quad);
  rep.total = rep.per_interval.sum();
  rep.per_interval.maxCoeff(&rep.worst_interval);
  return rep;
}

bool MetricsRow::operator==(const MetricsRow& o) const {
  return label == o.label && same_double(solver_reported_cost, o.solver_reported_cost) &&
         same_double(simulated_cost, o.simulated_cost) &&
         same_double(optimality_gap_percent, o.optimality_gap_percent) &&
         same_double(total_variation, o.total_variation) &&
         same_double(integrated_residual, o.integrated_residual) &&
         gap_is_absolute == o.gap_is_absolute && failed == o.failed;
}

bool MetricsTable::operator==(const MetricsTable& o) const {
  return problem == o.problem && same_double(analytic_reference, o.analytic_reference) &&
         rows == o.rows;
}

MetricsRow& MetricsTable::add_row(const std::string& label, double solver_cost, double sim_cost,
                                  double tv, double integrated_residual) {
  MetricsRow row;
  row.label = label;
  row.solver_reported_cost = solver_cost;
  row.simulated_cost = sim_cost;
  row.total_variation = tv;
  row.integrated_residual = integrated_residual;
  const double J_m = std::isnan(sim_cost) ? solver_cost : sim_cost;
  if (!std::isnan(analytic_reference) && !std::isnan(J_m)) {
    if (analytic_reference == 0.0) {
      row.gap_is_absolute = true;
      row.optimality_gap_percent = std::abs(J_m);  // absolute cost error, not a percentage
    } else {
      row.optimality_gap_percent = 100.0 * optimality_gap(J_m, analytic_reference);
    }
  }
  rows.push_back(row);
  return rows.back();
}

std::string MetricsTable::to_json() const {
  json j;
  j["problem"] = problem;
  j["analytic_reference"] = num_or_null(analytic_reference);
  j["rows"] = json::array();
  for (const auto& r : rows) {
    json row;
    row["label"] = r.label;
    row["solver_reported_cost"] = num_or_null(r.solver_reported_cost);
    row["simulated_cost"] = num_or_null(r.simulated_cost);
    row["optimality_gap_percent"] = num_or_null(r.optimality_gap_percent);
    row["gap_is_absolute"] = r.gap_is_absolute;
    row["total_variation"] = num_or_null(r.total_variation);
    row["integrated_residual"] = num_or_null(r.integrated_residual);
    row["failed"] = r.failed;
    j["rows"].push_back(std::move(row));
  }
  return j.dump(2);
}

MetricsTable MetricsTable::from_json(const std::string& text) {
  const json j = json::parse(text);
  MetricsTable t;
  t.problem = j.at("problem").get<std::string>();
  t.analytic_reference = null_or_num(j, "analytic_reference");
  for (const auto& row : j.at("rows")) {
    MetricsRow r;
    r.label = row.at("label").get<std::string>();
    r.solver_reported_cost = null_or_num(row, "solver_reported_cost");
    r.simulated_cost = null_or_num(row, "simulated_cost");
    r.optimality_gap_percent = null_or_num(row, "optimality_gap_percent");
    r.gap_is_absolute = row.at("gap_is_absolute").get<bool>();
    r.total_variation = null_or_num(row, "total_variation");
    r.integrated_residual = null_or_num(row, "integrated_residual");
    r.failed = row.value("failed", false);
    t.rows.push_back(std::move(r));
  }
  return t;
}

void write_csv(const std::string& path, const DenseTrace& trace,
               const std::vector<StepAnnotation>& steps) {
  const auto N = trace.times.size();
  const auto n = trace.states.cols();
  const auto m = trace.controls.cols();
  const bool annotated = !steps.empty();
  if (annotated && static_cast<Eigen::Index>(steps.size()) != N)
    throw std::invalid_argument("write_csv: annotation count does not match sample count");

  std::ostringstream out;
  out << "t";
  for (Eigen::Index i = 0; i < n; ++i) out << ",x_" << (i + 1);
  for (Eigen::Index j = 0; j < m; ++j) out << ",u_" << (j + 1);
  if (annotated) out << ",solve_status,kkt_residual";
  out << "\n";
  for (Eigen::Index k = 0; k < N; ++k) {
    out << fmt17(trace.times[k]);
    for (Eigen::Index i = 0; i < n; ++i) out << "," << fmt17(trace.states(k, i));
    for (Eigen::Index j = 0; j < m; ++j) out << "," << fmt17(trace.controls(k, j));
    if (annotated)
      out << "," << steps[k].solve_status << "," << fmt17(steps[k].kkt_residual);
    out << "\n";
  }
  write_text_file(path, out.str());
}

void write_json(const std::string& path, const MetricsTable& table,
                const std::string& config_json) {
  json j = json::parse(table.to_json());
  j["config"] = json::parse(config_json);
  write_text_file(path, j.dump(2) + "\n");
}

namespace {

constexpr int kPlotW = 640, kPlotH = 400;
constexpr int kMarginL = 70, kMarginR = 20, kMarginT = 36, kMarginB = 46;

const char* kPalette[] = {"#1f6fb2", "#d1495b", "#2e8b57", "#e6a817",
                          "#7b5ea7", "#2aa6a1", "#8c564b", "#5c5c5c"};

struct AxisScale {
  double lo = 0.0, hi = 1.0;
  void widen(const Vec& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (!std::isfinite(v[i])) continue;
      lo = std::min(lo, v[i]);
      hi = std::max(hi, v[i]);
    }
  }
  void finalize() {
    if (!(hi > lo)) hi = lo + 1.0;
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  double frac(double v) const { return (v - lo) / (hi - lo); }
};

std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

void render_plot(std::ostringstream& out, const SvgPlot& plot, int y_offset) {
  AxisScale xs, ys;
  bool any = false;
  for (const auto& c : plot.curves) {
    if (c.x.size() == 0) continue;
    if (!any) {
      xs.lo = xs.hi = c.x[0];
      ys.lo = ys.hi = c.y[0];
      any = true;
    }
    xs.widen(c.x);
    ys.widen(c.y);
  }
  xs.finalize();
  ys.finalize();

  const int x0 = kMarginL, x1 = kPlotW - kMarginR;
  const int y0 = y_offset + kPlotH - kMarginB, y1 = y_offset + kMarginT;
  auto px = [&](double v) { return x0 + xs.frac(v) * (x1 - x0); };
  auto py = [&](double v) { return y0 - ys.frac(v) * (y0 - y1); };

  out << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<text x=\"" << (kPlotW / 2) << "\" y=\"" << (y_offset + 18)
      << "\" text-anchor=\"middle\" font-size=\"14\">" << plot.title << "</text>\n";
  out << "<rect x=\"" << x0 << "\" y=\"" << y1 << "\" width=\"" << (x1 - x0) << "\" height=\""
      << (y0 - y1) << "\" fill=\"none\" stroke=\"#888\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double fx = xs.lo + k / 5.0 * (xs.hi - xs.lo);
    const double fy = ys.lo + k / 5.0 * (ys.hi - ys.lo);
    out << "<line x1=\"" << px(fx) << "\" y1=\"" << y0 << "\" x2=\"" << px(fx) << "\" y2=\""
        << (y0 + 4) << "\" stroke=\"#888\"/>\n";
    out << "<text x=\"" << px(fx) << "\" y=\"" << (y0 + 18) << "\" text-anchor=\"middle\">"
        << fmt_tick(fx) << "</text>\n";
    out << "<line x1=\"" << (x0 - 4) << "\" y1=\"" << py(fy) << "\" x2=\"" << x0 << "\" y2=\""
        << py(fy) << "\" stroke=\"#888\"/>\n";
    out << "<text x=\"" << (x0 - 8) << "\" y=\"" << (py(fy) + 4)
        << "\" text-anchor=\"end\">" << fmt_tick(fy) << "</text>\n";
  }
  out << "<text x=\"" << ((x0 + x1) / 2) << "\" y=\"" << (y0 + 36)
      << "\" text-anchor=\"middle\">" << plot.x_label << "</text>\n";
  out << "<text x=\"16\" y=\"" << ((y0 + y1) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << ((y0 + y1) / 2) << ")\">" << plot.y_label << "</text>\n";

  int ci = 0;
  for (const auto& c : plot.curves) {
    const char* color = kPalette[ci % 8];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (Eigen::Index i = 0; i < c.x.size(); ++i) {
      if (!std::isfinite(c.x[i]) || !std::isfinite(c.y[i])) continue;
      out << px(c.x[i]) << "," << py(c.y[i]) << " ";
    }
    out << "\"/>\n";
    out << "<text x=\"" << (x1 - 8) << "\" y=\"" << (y1 + 16 + 16 * ci)
        << "\" text-anchor=\"end\" fill=\"" << color << "\">" << c.label << "</text>\n";
    ++ci;
  }
  out << "</g>\n";
}

}  // namespace

void write_svg(const std::string& path, const std::vector<SvgPlot>& plots) {
  const int total_h = std::max<int>(1, static_cast<int>(plots.size())) * kPlotH;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kPlotW << "\" height=\""
      << total_h << "\" viewBox=\"0 0 " << kPlotW << " " << total_h << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  int y = 0;
  for (const auto& p : plots) {
    render_plot(out, p, y);
    y += kPlotH;
  }
  out << "</svg>\n";
  write_text_file(path, out.str());
}

std::vector<SvgPlot> trace_plots(const DenseTrace& trace, const std::string& run_label) {
  std::vector<SvgPlot> plots;
  SvgPlot states;
  states.title = run_label + ": states";
  states.x_label = "t";
  states.y_label = "x";
  for (Eigen::Index i = 0; i < trace.states.cols(); ++i)
    states.curves.push_back({"x_" + std::to_string(i + 1), trace.times, trace.states.col(i)});
  plots.push_back(std::move(states));
  if (trace.controls.cols() > 0) {
    SvgPlot controls;
    controls.title = run_label + ": controls";
    controls.x_label = "t";
    controls.y_label = "u";
    for (Eigen::Index j = 0; j < trace.controls.cols(); ++j)
      controls.curves.push_back({"u_" + std::to_string(j + 1), trace.times, trace.controls.col(j)});
    plots.push_back(std::move(controls));
  }
  return plots;
}

SvgPlot phase_portrait(const std::vector<DenseTrace>& traces,
                       const std::vector<std::string>& labels, double s1, double s2) {
  if (traces.size() != labels.size())
    throw std::invalid_argument("phase_portrait: one label per trace");
  SvgPlot plot;
  plot.title = "phase portrait";
  plot.x_label = "x_1 / " + fmt_tick(s1);
  plot.y_label = "x_2 / " + fmt_tick(s2);
  for (size_t k = 0; k < traces.size(); ++k) {
    if (traces[k].states.cols() < 2)
      throw std::invalid_argument("phase_portrait: need two states");
    plot.curves.push_back(
        {labels[k], traces[k].states.col(0) / s1, traces[k].states.col(1) / s2});
  }
  return plot;
}

}  // namespace singarc::metrics
