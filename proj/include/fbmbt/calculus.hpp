#pragma once

#include <map>
#include <utility>

#include <boost/multiprecision/cpp_int.hpp>

namespace fbmbt {

using Rational = boost::multiprecision::cpp_rational;

double to_double(const Rational& r);

/// Probabilists' Hermite polynomial H_q(x).
double hermite_eval(int q, double x);

/// x^p = sum_q coefficients[q] * H_q(x).
struct HermiteExpansion {
  int power = 0;
  std::map<int, Rational> coefficients;
};

HermiteExpansion hermite_expand(int p);

/// f(b,d) - f(a,c) = sum_alpha C(alpha) d^alpha f(midpoint) (b-a)^alpha1 (d-c)^alpha2
/// for polynomials of total degree <= max_order.
struct MidpointTaylorTable {
  int max_order = 0;
  std::map<std::pair<int, int>, Rational> entries;

  const Rational& at(int a1, int a2) const;
};

/// Exact table for 1 <= max_order <= 13.
MidpointTaylorTable midpoint_taylor_table(int max_order);

}  // namespace fbmbt
