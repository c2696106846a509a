#include "fbmbt/calculus.hpp"

#include <stdexcept>
#include <string>
#include <vector>

#include "fbmbt/errors.hpp"

namespace fbmbt {

namespace {

using boost::multiprecision::cpp_int;

cpp_int factorial(int k) {
  cpp_int r = 1;
  for (int i = 2; i <= k; ++i) r *= i;
  return r;
}

cpp_int binomial(int n, int k) { return factorial(n) / (factorial(k) * factorial(n - k)); }

}  // namespace

double to_double(const Rational& r) { return r.convert_to<double>(); }

double hermite_eval(int q, double x) {
  if (q < 0) throw std::invalid_argument("hermite_eval: negative degree");
  if (q == 0) return 1.0;
  double prev = 1.0;
  double cur = x;
  for (int k = 1; k < q; ++k) {
    const double next = x * cur - k * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

HermiteExpansion hermite_expand(int p) {
  if (p < 1) throw std::invalid_argument("hermite_expand: power must be >= 1");
  // x * H_q = H_{q+1} + q H_{q-1}
  std::map<int, Rational> c{{1, Rational(1)}};
  for (int k = 2; k <= p; ++k) {
    std::map<int, Rational> next;
    for (const auto& [q, v] : c) {
      next[q + 1] += v;
      if (q > 0) next[q - 1] += v * q;
    }
    c = std::move(next);
  }
  return HermiteExpansion{p, std::move(c)};
}

const Rational& MidpointTaylorTable::at(int a1, int a2) const {
  auto it = entries.find({a1, a2});
  if (it == entries.end()) {
    throw std::out_of_range("midpoint Taylor entry (" + std::to_string(a1) + "," + std::to_string(a2) +
                            ") beyond order " + std::to_string(max_order));
  }
  return it->second;
}

MidpointTaylorTable midpoint_taylor_table(int max_order) {
  if (max_order < 1 || max_order > 13) {
    throw std::invalid_argument("midpoint_taylor_table: order must lie in [1, 13]");
  }
  // Plug f = x^a1 y^a2 with a = m - D/2, b = m + D/2. The coefficient of
  // m^(alpha-beta) D^beta on the left is binom(alpha, beta) 2^-|beta| (1 - (-1)^|beta|);
  // on the right it is C(beta) alpha! / (alpha - beta)!.
  MidpointTaylorTable table{max_order, {}};
  auto lhs = [](int a1, int a2, int b1, int b2) {
    const int total = b1 + b2;
    if (total % 2 == 0) return Rational(0);
    Rational r(binomial(a1, b1) * binomial(a2, b2) * 2);
    return r / Rational(cpp_int(1) << total);
  };
  for (int order = 1; order <= max_order; ++order) {
    for (int a1 = order; a1 >= 0; --a1) {
      const int a2 = order - a1;
      const Rational falling(factorial(a1) * factorial(a2));
      table.entries[{a1, a2}] = lhs(a1, a2, a1, a2) / falling;
      for (int b1 = 0; b1 <= a1; ++b1) {
        for (int b2 = 0; b2 <= a2; ++b2) {
          if (b1 + b2 == 0 || (b1 == a1 && b2 == a2)) continue;
          const Rational rhs = table.entries.at({b1, b2}) *
                               Rational(factorial(a1) / factorial(a1 - b1) * (factorial(a2) / factorial(a2 - b2)));
          if (rhs != lhs(a1, a2, b1, b2)) {
            throw InternalError("midpoint Taylor system inconsistent at (" + std::to_string(a1) + "," +
                                std::to_string(a2) + ")");
          }
        }
      }
    }
  }
  return table;
}

}  // namespace fbmbt
