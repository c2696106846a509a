#include <doctest.h>

#include <cmath>
#include <map>

#include <Eigen/Eigenvalues>

#include "fbmbt/calculus.hpp"
#include "fbmbt/rng.hpp"
#include "fbmbt/test_function.hpp"

using namespace fbmbt;

namespace {

// Golub-Welsch nodes and weights for the standard normal weight.
std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_hermite(int size) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(size, size);
  for (int k = 1; k < size; ++k) jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  Eigen::VectorXd w = es.eigenvectors().row(0).array().square();
  return {es.eigenvalues(), w};
}

double falling(int a, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= a - i;
  return r;
}

struct Poly {
  std::map<std::pair<int, int>, double> c;

  double d(int a1, int a2, double x, double y) const {
    double s = 0.0;
    for (const auto& [e, v] : c) {
      if (e.first < a1 || e.second < a2) continue;
      s += v * falling(e.first, a1) * falling(e.second, a2) * std::pow(x, e.first - a1) * std::pow(y, e.second - a2);
    }
    return s;
  }
};

double five_point(const std::function<double(double)>& g, double x, double h) {
  auto d = [&](double k) { return (-g(x + 2 * k) + 8 * g(x + k) - 8 * g(x - k) + g(x - 2 * k)) / (12 * k); };
  // Richardson step on top of the fourth-order stencil
  return (16.0 * d(0.5 * h) - d(h)) / 15.0;
}

}  // namespace

TEST_CASE("hermite_eval") {
  CHECK(hermite_eval(0, 3.3) == 1.0);
  CHECK(hermite_eval(1, 3.3) == 3.3);
  for (double x : {-1.5, 0.0, 0.4, 2.0}) CHECK(hermite_eval(2, x) == doctest::Approx(x * x - 1));
  CHECK(hermite_eval(3, 2.0) == 2.0);
  CHECK_THROWS_AS(hermite_eval(-1, 0.0), std::invalid_argument);
}

TEST_CASE("hermite orthogonality under Gauss-Hermite quadrature") {
  const auto [x, w] = gauss_hermite(30);
  for (int p = 0; p <= 6; ++p) {
    for (int q = 0; q <= 6; ++q) {
      double s = 0.0;
      for (int i = 0; i < x.size(); ++i) s += w[i] * hermite_eval(p, x[i]) * hermite_eval(q, x[i]);
      CHECK(std::abs(s - (p == q ? std::tgamma(p + 1.0) : 0.0)) <= 1e-10);
    }
  }
}

TEST_CASE("hermite_expand examples") {
  const auto e3 = hermite_expand(3);
  CHECK(e3.coefficients == std::map<int, Rational>{{1, 3}, {3, 1}});
  const auto e2 = hermite_expand(2);
  CHECK(e2.coefficients == std::map<int, Rational>{{0, 1}, {2, 1}});
  const auto e5 = hermite_expand(5);
  CHECK(e5.coefficients == std::map<int, Rational>{{1, 15}, {3, 10}, {5, 1}});
  CHECK_THROWS_AS(hermite_expand(0), std::invalid_argument);
}

TEST_CASE("hermite_expand reconstruction") {
  CounterRng rng(31);
  for (int p = 1; p <= 13; ++p) {
    const auto e = hermite_expand(p);
    for (const auto& [q, c] : e.coefficients) CHECK(q % 2 == p % 2);
    for (int i = 0; i < 100; ++i) {
      const double x = -4.0 + 8.0 * rng.uniform();
      double s = 0.0;
      for (const auto& [q, c] : e.coefficients) s += to_double(c) * hermite_eval(q, x);
      CHECK(std::abs(std::pow(x, p) - s) <= 1e-9 * (1 + std::pow(std::abs(x), p)));
    }
  }
}

TEST_CASE("midpoint Taylor table entries") {
  const auto t1 = midpoint_taylor_table(1);
  CHECK(t1.at(1, 0) == 1);
  CHECK(t1.at(0, 1) == 1);
  const auto t = midpoint_taylor_table(13);
  CHECK(t.at(3, 0) == Rational(1, 24));
  CHECK(t.at(0, 3) == Rational(1, 24));
  CHECK(t.at(2, 1) == Rational(1, 8));
  CHECK(t.at(1, 2) == Rational(1, 8));
  CHECK(t.at(5, 0) == Rational(1, 1920));
  for (const auto& [alpha, c] : t.entries) {
    if ((alpha.first + alpha.second) % 2 == 0) CHECK(c == 0);
  }
  CHECK(t.entries.size() == 104);  // sum over k = 1..13 of (k + 1)
  CHECK_THROWS_AS(midpoint_taylor_table(0), std::invalid_argument);
  CHECK_THROWS_AS(midpoint_taylor_table(14), std::invalid_argument);
  CHECK_THROWS_AS(t1.at(3, 0), std::out_of_range);
}

TEST_CASE("midpoint expansion is exact on polynomials up to degree 7") {
  const auto table = midpoint_taylor_table(7);
  CounterRng rng(2024);
  for (int trial = 0; trial < 500; ++trial) {
    Poly f;
    for (int i = 0; i <= 7; ++i)
      for (int j = 0; i + j <= 7; ++j) f.c[{i, j}] = -1.0 + 2.0 * rng.uniform();
    auto u = [&] { return -2.0 + 4.0 * rng.uniform(); };
    const double a = u(), b = u(), c = u(), d = u();
    const double m1 = 0.5 * (a + b), m2 = 0.5 * (c + d);
    const double lhs = f.d(0, 0, b, d) - f.d(0, 0, a, c);
    double rhs = 0.0;
    double scale = std::abs(f.d(0, 0, b, d)) + std::abs(f.d(0, 0, a, c));
    for (const auto& [alpha, coeff] : table.entries) {
      if ((alpha.first + alpha.second) % 2 == 0) continue;
      const double term =
          to_double(coeff) * f.d(alpha.first, alpha.second, m1, m2) * std::pow(b - a, alpha.first) *
          std::pow(d - c, alpha.second);
      rhs += term;
      scale += std::abs(term);
    }
    CHECK(std::abs(lhs - rhs) <= 1e-10 * scale);
  }
}

TEST_CASE("catalog derivatives match finite differences") {
  const std::vector<TestFunction2D> catalog{TestFunction2D::sin_cos(1.0, 1.0), TestFunction2D::sin_cos(0.7, 1.9),
                                            TestFunction2D::bump(),          TestFunction2D::monomial(3, 0),
                                            TestFunction2D::monomial(1, 2),  TestFunction2D::monomial(2, 3),
                                            TestFunction2D::constant(2.5)};
  CounterRng rng(8);
  for (const auto& f : catalog) {
    const double span = f.id() == "bump" ? 0.9 : 2.0;
    for (int i = 0; i < 100; ++i) {
      const double x = span * (2 * rng.uniform() - 1);
      const double y = span * (2 * rng.uniform() - 1);
      for (int a1 = 0; a1 <= 2; ++a1) {
        for (int a2 = 0; a1 + a2 <= 2; ++a2) {
          const double dx = f.derivative(a1 + 1, a2, x, y);
          const double fdx = five_point([&](double s) { return f.derivative(a1, a2, s, y); }, x, 1e-3);
          CHECK(std::abs(dx - fdx) <= 1e-6 * std::max(1.0, std::abs(dx)));
          const double dy = f.derivative(a1, a2 + 1, x, y);
          const double fdy = five_point([&](double s) { return f.derivative(a1, a2, x, s); }, y, 1e-3);
          CHECK(std::abs(dy - fdy) <= 1e-6 * std::max(1.0, std::abs(dy)));
        }
      }
    }
  }
}

TEST_CASE("test function catalog and parser") {
  CHECK(TestFunction2D::parse("x3")(2.0, 5.0) == 8.0);
  CHECK(TestFunction2D::parse("xy2")(2.0, 3.0) == 18.0);
  CHECK(TestFunction2D::parse("mono:2,1").derivative(2, 1, 0.3, 0.4) == 2.0);
  CHECK(TestFunction2D::parse("sincos:2,3")(0.1, 0.2) == doctest::Approx(std::sin(0.2) * std::cos(0.6)));
  CHECK(TestFunction2D::parse("const:1.5")(9.0, 9.0) == 1.5);
  CHECK(TestFunction2D::parse("bump")(1.0, 0.0) == 0.0);
  CHECK(TestFunction2D::parse("bump")(0.0, 0.0) == doctest::Approx(std::exp(-2.0)));
  CHECK_FALSE(TestFunction2D::parse("x3").bounded());
  CHECK(TestFunction2D::parse("sin_cos").bounded());
  CHECK_THROWS_AS(TestFunction2D::parse("nope"), std::invalid_argument);
  CHECK_THROWS_AS(TestFunction2D::parse("mono:7,0"), std::invalid_argument);
  CHECK_THROWS_AS(TestFunction2D::parse("mono:a,b"), std::invalid_argument);
  const auto d = TestFunction2D::parse("x3").partial(1, 0);
  CHECK(d(2.0, 0.0) == 12.0);
  CHECK(d.derivative(2, 0, 1.0, 0.0) == 6.0);
}
