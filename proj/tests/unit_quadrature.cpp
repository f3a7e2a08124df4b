#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "singarc/ocp.hpp"
#include "singarc/quadrature.hpp"
#include "singarc/transcription.hpp"

#include <cmath>

using namespace singarc;

namespace {

double poly_eval(const Vec& coeff, double t) {
  double v = 0.0;
  for (Eigen::Index k = coeff.size() - 1; k >= 0; --k) v = v * t + coeff[k];
  return v;
}

double poly_integral(const Vec& coeff, double a, double b) {
  double va = 0.0, vb = 0.0;
  for (Eigen::Index k = 0; k < coeff.size(); ++k) {
    va += coeff[k] * std::pow(a, static_cast<double>(k) + 1) / (static_cast<double>(k) + 1);
    vb += coeff[k] * std::pow(b, static_cast<double>(k) + 1) / (static_cast<double>(k) + 1);
  }
  return vb - va;
}

}  // namespace

TEST_CASE("gauss-legendre weights sum to the interval length") {
  for (int q = 1; q <= 8; ++q) {
    const auto rule = gauss_legendre(q);
    REQUIRE(rule.nodes.size() == q);
    REQUIRE(rule.weights.size() == q);
    CHECK(std::abs(rule.weights.sum() - 2.0) <= 1e-14);
  }
}

TEST_CASE("gauss-legendre nodes are symmetric, ascending and interior") {
  for (int q = 1; q <= 8; ++q) {
    const auto rule = gauss_legendre(q);
    for (int i = 0; i + 1 < q; ++i) CHECK(rule.nodes[i] < rule.nodes[i + 1]);
    for (int i = 0; i < q; ++i) {
      CHECK(rule.nodes[i] > -1.0);
      CHECK(rule.nodes[i] < 1.0);
      CHECK(rule.weights[i] > 0.0);
      CHECK(std::abs(rule.nodes[i] + rule.nodes[q - 1 - i]) <= 1e-14);
      CHECK(std::abs(rule.weights[i] - rule.weights[q - 1 - i]) <= 1e-14);
    }
  }
}

TEST_CASE("gauss-legendre is exact through degree 2q-1") {
  for (int q = 1; q <= 6; ++q) {
    const auto rule = gauss_legendre(q);
    for (int d = 0; d <= 2 * q - 1; ++d) {
      double got = 0.0;
      for (int i = 0; i < q; ++i) got += rule.weights[i] * std::pow(rule.nodes[i], d);
      const double want = (d % 2 == 0) ? 2.0 / (d + 1) : 0.0;
      CHECK(std::abs(got - want) <= 1e-13);
    }
  }
}

TEST_CASE("five-point gauss-legendre matches known abscissae") {
  const auto rule = gauss_legendre(5);
  CHECK(std::abs(rule.nodes[2]) <= 1e-15);
  CHECK(rule.nodes[4] == doctest::Approx(0.9061798459386640).epsilon(1e-14));
  CHECK(rule.weights[2] == doctest::Approx(128.0 / 225.0).epsilon(1e-14));
}

TEST_CASE("composite simpson is exact for cubics") {
  const Vec coeff = (Vec(4) << 0.7, -1.3, 2.1, 0.9).finished();
  const double a = -0.4, b = 2.3;
  for (int N : {2, 4, 10, 64}) {
    Vec y(N + 1);
    for (int i = 0; i <= N; ++i) y[i] = poly_eval(coeff, a + (b - a) * i / N);
    const double got = simpson_uniform(y, a, b);
    CHECK(std::abs(got - poly_integral(coeff, a, b)) <= 1e-14);
  }
}

TEST_CASE("composite simpson converges at fourth order on a smooth integrand") {
  const double a = 0.0, b = 3.0;
  auto run = [&](int N) {
    Vec y(N + 1);
    for (int i = 0; i <= N; ++i) y[i] = std::sin(a + (b - a) * i / N);
    return simpson_uniform(y, a, b);
  };
  const double want = std::cos(a) - std::cos(b);
  const double e1 = std::abs(run(8) - want);
  const double e2 = std::abs(run(16) - want);
  CHECK(e2 * 12.0 < e1);  // ~16x shrink per halving, with slack
}

TEST_CASE("simpson rejects odd and undersized sample counts") {
  CHECK_THROWS_AS(simpson_uniform(Vec::Ones(4), 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(simpson_uniform(Vec::Ones(2), 0.0, 1.0), std::invalid_argument);
  CHECK_NOTHROW(simpson_uniform(Vec::Ones(3), 0.0, 1.0));
}

TEST_CASE("residual quadrature integrates polynomials over every interval") {
  const Mesh mesh = Mesh::uniform(0.0, 5.0, 7);
  const auto quad = ResidualQuadrature::build(mesh, 2);
  REQUIRE(quad.abscissae.rows() == 7);
  REQUIRE(quad.abscissae.cols() == quad.points_per_interval);
  REQUIRE(quad.alpha.size() == 2);
  CHECK((quad.alpha.array() == 1.0).all());

  const Vec coeff = (Vec(10) << 1.0, -0.5, 0.25, 3.0, -2.0, 0.125, 1.5, -0.75, 0.3, 0.1).finished();
  for (int z = 0; z < mesh.intervals(); ++z) {
    double got = 0.0;
    for (int i = 0; i < quad.points_per_interval; ++i)
      got += quad.weights(z, i) * poly_eval(coeff, quad.abscissae(z, i));
    const double want = poly_integral(coeff, mesh.nodes[z], mesh.nodes[z + 1]);
    CHECK(got == doctest::Approx(want).epsilon(1e-13));
    CHECK(std::abs(quad.weights.row(z).sum() - mesh.h(z)) <= 1e-14);
  }
}

TEST_CASE("residual quadrature validates its arguments") {
  const Mesh mesh = Mesh::uniform(0.0, 1.0, 3);
  CHECK_THROWS_AS(ResidualQuadrature::build(mesh, 2, 0), std::invalid_argument);
  CHECK_THROWS_AS(ResidualQuadrature::build(mesh, 2, 5, Vec::Ones(3)), std::invalid_argument);
  CHECK_THROWS_AS(gauss_legendre(0), std::invalid_argument);
}
