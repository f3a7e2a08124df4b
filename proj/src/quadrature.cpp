#include "singarc/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace singarc {

GaussLegendreRule gauss_legendre(int q) {
  if (q < 1) throw std::invalid_argument("gauss_legendre: need q >= 1");
  GaussLegendreRule rule;
  rule.nodes.resize(q);
  rule.weights.resize(q);

  // Newton iteration on the Legendre polynomial P_q, one root at a time,
  // seeded with the Chebyshev estimate. Roots come in +/- pairs so only
  // the lower half is computed.
  const int half = (q + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = -std::cos(M_PI * (i + 0.75) / (q + 0.5));
    double dp = 0.0;
    for (int k = 0; k < 100; ++k) {
      // Recurrence for P_q(x) and P'_q(x).
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= q; ++j) {
        double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = q * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.nodes[i] = x;
    rule.nodes[q - 1 - i] = -x;
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.weights[i] = w;
    rule.weights[q - 1 - i] = w;
  }
  if (q % 2 == 1) rule.nodes[q / 2] = 0.0;  // exact midpoint, kill roundoff
  return rule;
}

double simpson_uniform(const Eigen::VectorXd& y, double a, double b) {
  const Eigen::Index n = y.size() - 1;
  if (n < 2 || n % 2 != 0)
    throw std::invalid_argument("simpson_uniform: need an even number of panels");
  const double h = (b - a) / static_cast<double>(n);
  double s4 = 0.0, s2 = 0.0;
  for (Eigen::Index i = 1; i < n; i += 2) s4 += y[i];
  for (Eigen::Index i = 2; i < n; i += 2) s2 += y[i];
  return h / 3.0 * (y[0] + 4.0 * s4 + 2.0 * s2 + y[n]);
}

}  // namespace singarc
