#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <vector>

#include "doctest.h"
#include "latspec/torus_grid.hpp"
#include "oracles.hpp"

using namespace latspec;

TEST_CASE("grid construction") {
  const TorusGrid g = make_grid(4);
  CHECK(g.size() == 64);
  CHECK(g.weight() * double(g.size()) == doctest::Approx(std::pow(kTwoPi, 3)).epsilon(1e-15));
  double closest = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < g.size(); ++j) closest = std::min(closest, g.node(j).norm());
  CHECK(closest == doctest::Approx(std::sqrt(3.0) * kPi / 4).epsilon(1e-14));
  CHECK_THROWS_AS(make_grid(5), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(2), std::invalid_argument);
}

TEST_CASE("node ordering is lexicographic") {
  const TorusGrid g = make_grid(6);
  CHECK(g.node(0).isApprox(Point(g.axis(0), g.axis(0), g.axis(0))));
  CHECK(g.node(1).isApprox(Point(g.axis(0), g.axis(0), g.axis(1))));
  CHECK(g.node(6).isApprox(Point(g.axis(0), g.axis(1), g.axis(0))));
  CHECK(g.node(36).isApprox(Point(g.axis(1), g.axis(0), g.axis(0))));
}

TEST_CASE("node set is closed under negation") {
  for (int n : {4, 8, 10}) {
    const TorusGrid g = make_grid(n);
    std::set<std::array<long, 3>> nodes, negated;
    auto key = [&](const Point& p) {
      return std::array<long, 3>{std::lround(p[0] * 1e9), std::lround(p[1] * 1e9), std::lround(p[2] * 1e9)};
    };
    for (Eigen::Index j = 0; j < g.size(); ++j) {
      nodes.insert(key(g.node(j)));
      negated.insert(key(-g.node(j)));
      CHECK((g.node(g.negated(j)) + g.node(j)).norm() < 1e-14);
    }
    CHECK(nodes == negated);
  }
}

TEST_CASE("trigonometric monomials are integrated exactly") {
  const double volume = std::pow(kTwoPi, 3);
  for (int a = -3; a <= 3; ++a)
    for (int b = -3; b <= 3; ++b)
      for (int c = -3; c <= 3; ++c) {
        const Point s(a, b, c);
        const Complex value = midpoint_sum([&](const Point& p) { return std::polar(1.0, s.dot(p)); }, 8);
        const double expected = (a == 0 && b == 0 && c == 0) ? volume : 0.0;
        CHECK(std::abs(value - expected) < 1e-12);
      }
}

TEST_CASE("integrate_refined") {
  const std::vector<int> schedule{8, 16};
  SUBCASE("constant") {
    const auto r = integrate_refined([](const Point&) { return 1.0; }, std::span<const int>(schedule));
    for (double v : r.per_resolution) CHECK(v == doctest::Approx(std::pow(kTwoPi, 3)).epsilon(1e-14));
    CHECK(r.error_estimate < 1e-10);
  }
  SUBCASE("cos p1") {
    const auto r = integrate_refined([](const Point& p) { return std::cos(p[0]); }, std::span<const int>(schedule));
    CHECK(std::abs(r.value) < 1e-12);
  }
  SUBCASE("non-finite integrand identifies the node") {
    const std::vector<int> one{4};
    try {
      integrate_refined([](const Point& p) { return p[0] > 0 ? std::numeric_limits<double>::infinity() : 1.0; }, std::span<const int>(one));
      FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
      CHECK(std::string(e.what()).find("N=4") != std::string::npos);
    }
  }
  SUBCASE("single resolution has no error estimate") {
    const std::vector<int> one{8};
    CHECK(std::isinf(integrate_refined([](const Point&) { return 1.0; }, std::span<const int>(one)).error_estimate));
  }
}

TEST_CASE("inverse Laplacian integral against the N=512 oracle") {
  const double a_oracle = oracle::watson_half(512);
  const std::vector<int> schedule{64, 128, 256};
  const auto eps = [](const Point& q) { return 2.0 * (3.0 - std::cos(q[0]) - std::cos(q[1]) - std::cos(q[2])); };
  const auto r = integrate_refined([&](const Point& q) { return 1.0 / eps(q); }, std::span<const int>(schedule));
  const double a = r.value / std::pow(kTwoPi, 3);
  CHECK(std::abs(a - a_oracle) < 5e-4);
  CHECK(std::abs(a - 0.252731) < 5e-4);
  CHECK(r.per_resolution.back() / std::pow(kTwoPi, 3) == doctest::Approx(oracle::watson_half_midpoint(256)).epsilon(1e-12));
}

TEST_CASE("error estimate decreases along the schedule") {
  const auto f = [](const Point& q) { return 1.0 / (2.0 * (3.0 - std::cos(q[0]) - std::cos(q[1]) - std::cos(q[2]))); };
  const std::vector<int> schedule{32, 64, 128, 256};
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t m = 2; m <= schedule.size(); ++m) {
    const auto r = integrate_refined(f, std::span<const int>(schedule.data(), m));
    CHECK(r.error_estimate < previous);
    previous = r.error_estimate;
  }
}

TEST_CASE("convolution matrix") {
  const TorusGrid g = make_grid(4);
  SUBCASE("on-site potential") {
    const double mu = -1.7;
    const Eigen::MatrixXcd m = convolution_matrix(HoppingCoefficients::on_site(mu), g);
    const double expected = mu / double(g.size());
    CHECK((m.array() - Complex(expected)).abs().maxCoeff() < 1e-15);
  }
  SUBCASE("separable cosine kernel has rank at most 6") {
    HoppingCoefficients v;
    for (const Site& e : unit_sites()) v.set(e, 1.0);
    const TorusGrid g8 = make_grid(8);
    const Eigen::MatrixXcd m = convolution_matrix(v, g8);
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXcd>(m).singularValues();
    CHECK((sv.array() > 1e-10 * sv[0]).count() <= 6);
    const TorusGrid gn = make_grid(6);
    const Eigen::MatrixXcd small = convolution_matrix(v, gn);
    for (Eigen::Index i = 0; i < gn.size(); i += 7)
      for (Eigen::Index j = 0; j < gn.size(); j += 5) {
        const Point d = gn.node(i) - gn.node(j);
        const double expected = 2.0 * (std::cos(d[0]) + std::cos(d[1]) + std::cos(d[2])) / double(gn.size());
        CHECK(std::abs(small(i, j) - expected) < 1e-15);
      }
  }
  SUBCASE("hermitian for real even coefficients, plain and symmetrized agree") {
    HoppingCoefficients v = HoppingCoefficients::laplacian(0.3);
    v.set({1, 2, 0}, 0.2), v.set({-1, -2, 0}, 0.2);
    const Eigen::MatrixXcd m = convolution_matrix(v, g);
    CHECK((m - m.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((m - convolution_matrix(v, g, true)).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("matrix export") {
  Eigen::MatrixXcd m(2, 3);
  m << Complex(1, 2), Complex(3, 0), Complex(-0.5, 0.25), Complex(0, 1), Complex(7, -7), Complex(1e-20, 0);
  const std::string csv = "matrix_export_test.csv", bin = "matrix_export_test.bin";
  write_matrix_csv(csv, m);
  write_matrix_binary(bin, m);

  std::ifstream in(csv);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == "1,2,3,0,-0.5,0.25");

  std::ifstream raw(bin, std::ios::binary);
  std::int64_t shape[2];
  raw.read(reinterpret_cast<char*>(shape), sizeof(shape));
  CHECK(shape[0] == 2);
  CHECK(shape[1] == 3);
  double values[12];
  raw.read(reinterpret_cast<char*>(values), sizeof(values));
  CHECK(values[2] == 3.0);
  CHECK(values[8] == 7.0);
  CHECK(values[9] == -7.0);
  std::remove(csv.c_str());
  std::remove(bin.c_str());
}
