#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "latspec/errors.hpp"
#include "latspec/finite_rank.hpp"

using namespace latspec;

namespace {

HoppingCoefficients sample_potential() {
  HoppingCoefficients v;
  v.set({0, 0, 0}, -2.0);
  v.set({1, 0, 0}, 0.7), v.set({-1, 0, 0}, 0.7);
  v.set({0, 1, -1}, -0.4);
  v.set({0, 0, 2}, 0.3), v.set({0, 0, -2}, 0.3);
  return v;
}

Eigen::VectorXd diagonal_on(const TorusGrid& g) {
  Eigen::VectorXd d(g.size());
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    const Point p = g.node(j);
    d[j] = 2.0 * (3.0 - std::cos(p[0]) - std::cos(p[1]) - std::cos(p[2])) + 0.1 * std::sin(p[0]);
  }
  return d;
}

}  // namespace

TEST_CASE("factorization reproduces the convolution matrix") {
  const TorusGrid g = make_grid(8);
  const HoppingCoefficients v = sample_potential();
  const FiniteRankKernel k = factorize_convolution(v, g);
  CHECK(k.rank() == 6);
  CHECK(k.dimension() == g.size());
  const Eigen::MatrixXcd rebuilt = k.basis * k.coupling.cast<Complex>().asDiagonal() * k.basis.adjoint();
  CHECK((rebuilt - convolution_matrix(v, g)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("factorization refuses bad input") {
  const TorusGrid g = make_grid(4);
  HoppingCoefficients far;
  far.set({2, 0, 0}, 1.0), far.set({-2, 0, 0}, 1.0);
  CHECK_THROWS_AS(factorize_convolution(far, g), std::invalid_argument);
  HoppingCoefficients complex_v;
  complex_v.set({1, 0, 0}, Complex(0.0, 1.0)), complex_v.set({-1, 0, 0}, Complex(0.0, -1.0));
  CHECK_THROWS_AS(factorize_convolution(complex_v, g), ModelValidationError);
}

TEST_CASE("finite-rank spectrum equals the nonzero dense spectrum") {
  const TorusGrid g = make_grid(6);
  const HoppingCoefficients v = sample_potential();
  const Eigen::VectorXd low = finite_rank_spectrum(factorize_convolution(v, g));
  const Eigen::MatrixXcd dense = convolution_matrix(v, g);
  Eigen::VectorXcd all = Eigen::ComplexEigenSolver<Eigen::MatrixXcd>(dense).eigenvalues();
  std::vector<double> nonzero;
  for (const Complex& z : all)
    if (std::abs(z) > 1e-10) nonzero.push_back(z.real());
  std::sort(nonzero.begin(), nonzero.end());
  REQUIRE(nonzero.size() == std::size_t(low.size()));
  for (std::size_t i = 0; i < nonzero.size(); ++i) CHECK(std::abs(nonzero[i] - low[Eigen::Index(i)]) < 1e-12);
}

TEST_CASE("inertia count and bisection agree with a dense eigensolve") {
  for (int n : {6, 8}) {
    const TorusGrid g = make_grid(n);
    HoppingCoefficients v = sample_potential().scaled(6.0);
    const FiniteRankKernel k = factorize_convolution(v, g);
    const Eigen::VectorXd diag = diagonal_on(g);
    Eigen::MatrixXcd h = convolution_matrix(v, g, true);
    h.diagonal() += diag.cast<Complex>();
    const Eigen::VectorXd dense = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(h).eigenvalues();
    const double floor = diag.minCoeff();

    for (double z : {floor - 5.0, floor - 1.0, floor - 1e-3}) {
      const int expected = int((dense.array() < z).count());
      CHECK(count_below(k, diag, z) == expected);
    }
    const LowRankBelow below = eigenpairs_below(k, diag, floor);
    const int expected = int((dense.array() < floor).count());
    REQUIRE(below.values.size() == expected);
    REQUIRE(expected > 0);
    for (Eigen::Index i = 0; i < below.values.size(); ++i) {
      CHECK(std::abs(below.values[i] - dense[i]) < 1e-10);
      const Eigen::VectorXcd x = below.vectors.col(i);
      CHECK(std::abs(x.norm() - 1.0) < 1e-10);
      CHECK((h * x - below.values[i] * x).norm() < 1e-8);
    }
  }
}

TEST_CASE("low-rank Birman-Schwinger eigenpairs") {
  const TorusGrid g = make_grid(6);
  const HoppingCoefficients v = sample_potential();
  const FiniteRankKernel k = factorize_convolution(v, g);
  const Eigen::VectorXd d = diagonal_on(g).array() + 0.5;
  const LowRankEigen e = birman_schwinger_lowrank(k, d);
  const Eigen::MatrixXcd m = convolution_matrix(v, g) * d.cwiseInverse().cast<Complex>().asDiagonal();
  CHECK(e.values.size() == k.rank());
  for (Eigen::Index i = 0; i < e.values.size(); ++i) {
    const Eigen::VectorXcd psi = e.vectors.col(i);
    CHECK((m * psi - e.values[i] * psi).norm() < 1e-10);
    CHECK(std::abs((d.cwiseSqrt().cwiseInverse().cast<Complex>().asDiagonal() * psi).norm() - 1.0) < 1e-10);
  }
}
