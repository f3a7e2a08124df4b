#pragma once

#include <Eigen/Core>

namespace singarc {

/// Nodes and weights of the q-point Gauss-Legendre rule on [-1, 1].
/// Nodes are returned in ascending order. Exact for polynomials of
/// degree 2q-1.
struct GaussLegendreRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

GaussLegendreRule gauss_legendre(int q);

/// Composite Simpson integral of uniformly spaced samples y(0..N) on a
/// span of length (b - a). N must be even and >= 2.
double simpson_uniform(const Eigen::VectorXd& y, double a, double b);

}  // namespace singarc
