#include "fbmbt/variations.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbmbt/calculus.hpp"
#include "fbmbt/compensated_sum.hpp"

namespace fbmbt {

namespace {

struct Sum {
  double value;
  double abs_sum;
};

double ipow(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

// Weights C(p,q) for p + q = 3, indexed by p.
const std::array<double, 4>& third_order_weights() {
  static const std::array<double, 4> w = [] {
    const auto table = midpoint_taylor_table(3);
    return std::array<double, 4>{to_double(table.at(0, 3)), to_double(table.at(1, 2)), to_double(table.at(2, 1)),
                                 to_double(table.at(3, 0))};
  }();
  return w;
}

void check_odd(int p, int q) {
  if (p < 0 || q < 0) throw std::invalid_argument("negative power");
  if ((p + q) % 2 == 0) {
    throw std::invalid_argument("p + q must be odd, got p=" + std::to_string(p) + ", q=" + std::to_string(q));
  }
}

bool is_one_sixth(const FbmGridPath2D& path) { return std::abs(path.H.value() - 1.0 / 6.0) <= 1e-12; }

std::int64_t checked_grid_count(const FbmGridPath2D& path, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("t must be non-negative");
  const auto count = grid_count(t, path.level);
  if (!path.covers(0, count)) {
    throw std::invalid_argument("fBm path covers [" + std::to_string(path.j_min) + ", " + std::to_string(path.j_max) +
                                "] but the sum needs [0, " + std::to_string(count) + "]");
  }
  return count;
}

// Term receives (x1 from, x1 to, x2 from, x2 to).
template <class Term>
Sum grid_sum(const FbmGridPath2D& path, std::int64_t count, Term&& term) {
  CompensatedSum s;
  CompensatedSum a;
  for (std::int64_t j = 0; j < count; ++j) {
    const double v = term(path.x1(j), path.x1(j + 1), path.x2(j), path.x2(j + 1));
    s += v;
    a += std::abs(v);
  }
  return {s.value(), a.value()};
}

// Sum over skeleton steps k < M of term(Z_k, Z_{k+1}). Every step crosses one
// edge [j, j+1]; the term is evaluated once per edge in the forward direction
// and negated for downward steps, which is exact for terms odd under reversal.
template <class Term>
Sum skeleton_sum(const FbmGridPath2D& fbm, const SkeletonPath& walk, double t, Term&& term) {
  if (!(t >= 0.0)) throw std::invalid_argument("t must be non-negative");
  if (!(fbm.level == walk.level)) throw std::invalid_argument("fBm and skeleton levels differ");
  const auto steps = skeleton_count(t, walk.level);
  if (steps > walk.steps()) {
    throw std::invalid_argument("skeleton has " + std::to_string(walk.steps()) + " steps, need " +
                                std::to_string(steps));
  }
  const auto first = walk.positions.begin();
  const auto [lo_it, hi_it] = std::minmax_element(first, first + steps + 1);
  const std::int64_t lo = *lo_it;
  const std::int64_t hi = *hi_it;
  if (!fbm.covers(lo, hi)) {
    throw std::invalid_argument("fBm path does not cover the visited range [" + std::to_string(lo) + ", " +
                                std::to_string(hi) + "]");
  }
  std::vector<double> edge(static_cast<std::size_t>(hi - lo));
  for (std::int64_t j = lo; j < hi; ++j) {
    edge[static_cast<std::size_t>(j - lo)] = term(fbm.x1(j), fbm.x1(j + 1), fbm.x2(j), fbm.x2(j + 1));
  }
  CompensatedSum s;
  CompensatedSum a;
  for (std::int64_t k = 0; k < steps; ++k) {
    const auto from = walk.positions[static_cast<std::size_t>(k)];
    const auto to = walk.positions[static_cast<std::size_t>(k + 1)];
    const double v = to > from ? edge[static_cast<std::size_t>(from - lo)] : -edge[static_cast<std::size_t>(to - lo)];
    s += v;
    a += std::abs(v);
  }
  return {s.value(), a.value()};
}

auto pq_term(const TestFunction2D& f, int p, int q) {
  return [&f, p, q](double a1, double b1, double a2, double b2) {
    const double m1 = 0.5 * (a1 + b1);
    const double m2 = 0.5 * (a2 + b2);
    return f(m1, m2) * ipow(b1 - a1, p) * ipow(b2 - a2, q);
  };
}

auto gradient_term(const TestFunction2D& f) {
  return [&f](double a1, double b1, double a2, double b2) {
    const double m1 = 0.5 * (a1 + b1);
    const double m2 = 0.5 * (a2 + b2);
    return f.derivative(1, 0, m1, m2) * (b1 - a1) + f.derivative(0, 1, m1, m2) * (b2 - a2);
  };
}

auto third_order_term(const TestFunction2D& f) {
  return [&f](double a1, double b1, double a2, double b2) {
    const auto& w = third_order_weights();
    const double m1 = 0.5 * (a1 + b1);
    const double m2 = 0.5 * (a2 + b2);
    const double d1 = b1 - a1;
    const double d2 = b2 - a2;
    return w[3] * f.derivative(3, 0, m1, m2) * d1 * d1 * d1 + w[0] * f.derivative(0, 3, m1, m2) * d2 * d2 * d2 +
           w[1] * f.derivative(1, 2, m1, m2) * d1 * d2 * d2 + w[2] * f.derivative(2, 1, m1, m2) * d1 * d1 * d2;
  };
}

VariationStatistic make(StatisticKind kind, Sum s, const FbmGridPath2D& path, double t, int p = 0, int q = 0,
                        std::uint64_t walk_seed = 0) {
  return VariationStatistic{kind, s.value, s.abs_sum, path.H.value(), path.level.n(), t, p, q, path.seed, walk_seed};
}

// One-sided W sum: forward increments on the positive side, X_{-u} on the negative side.
template <class Term>
Sum one_sided_sum(const FbmGridPath2D& fbm, double t_signed, Term&& term) {
  if (!std::isfinite(t_signed)) throw std::invalid_argument("t must be finite");
  const auto count = grid_count(std::abs(t_signed), fbm.level);
  if (t_signed >= 0.0) {
    if (!fbm.covers(0, count)) throw std::invalid_argument("fBm path does not cover the positive side up to t");
    return grid_sum(fbm, count, term);
  }
  if (!fbm.covers(-count, 0)) throw std::invalid_argument("fBm path does not cover the negative side down to t");
  CompensatedSum s;
  CompensatedSum a;
  for (std::int64_t i = 0; i < count; ++i) {
    const double v = term(fbm.x1(-i), fbm.x1(-i - 1), fbm.x2(-i), fbm.x2(-i - 1));
    s += v;
    a += std::abs(v);
  }
  return {s.value(), a.value()};
}

}  // namespace

std::string to_string(StatisticKind kind) {
  switch (kind) {
    case StatisticKind::O: return "O";
    case StatisticKind::V_pq: return "V_pq";
    case StatisticKind::V3: return "V3";
    case StatisticKind::K1: return "K1";
    case StatisticKind::K2: return "K2";
    case StatisticKind::K3: return "K3";
    case StatisticKind::K4: return "K4";
    case StatisticKind::P: return "P";
    case StatisticKind::O_tilde: return "O_tilde";
    case StatisticKind::Vt_pq: return "Vt_pq";
    case StatisticKind::Vt3: return "Vt3";
    case StatisticKind::W_pq: return "W_pq";
    case StatisticKind::W3: return "W3";
  }
  return "?";
}

std::int64_t grid_count(double t, DyadicLevel level) {
  const double x = std::abs(t) * std::exp2(0.5 * level.n());
  const double r = std::nearbyint(x);
  if (std::abs(x - r) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, x)) {
    return static_cast<std::int64_t>(r);
  }
  return static_cast<std::int64_t>(std::floor(x));
}

std::int64_t skeleton_count(double t, DyadicLevel level) {
  return static_cast<std::int64_t>(std::floor(std::ldexp(t, level.n())));
}

VariationStatistic o_n(const TestFunction2D& f, const FbmGridPath2D& path, double t) {
  const auto count = checked_grid_count(path, t);
  return make(StatisticKind::O, grid_sum(path, count, gradient_term(f)), path, t);
}

VariationStatistic v_pq(const TestFunction2D& f, const FbmGridPath2D& path, double t, int p, int q) {
  check_odd(p, q);
  const auto count = checked_grid_count(path, t);
  return make(StatisticKind::V_pq, grid_sum(path, count, pq_term(f, p, q)), path, t, p, q);
}

VariationStatistic v_pq_hermite(const TestFunction2D& f, const FbmGridPath2D& path, double t, int p, int q) {
  check_odd(p, q);
  if (p > 15 || q > 15) throw std::invalid_argument("Hermite route supports powers up to 15");
  const auto count = checked_grid_count(path, t);
  const double sigma = std::exp2(-0.5 * path.level.n() * path.H.value());
  auto expand = [sigma](int power) {
    std::vector<std::pair<int, long double>> terms;
    if (power == 0) {
      terms.emplace_back(0, 1.0L);
      return terms;
    }
    for (const auto& [k, c] : hermite_expand(power).coefficients) {
      terms.emplace_back(k, static_cast<long double>(to_double(c)) * ipow(sigma, power));
    }
    return terms;
  };
  const auto e1 = expand(p);
  const auto e2 = expand(q);
  auto combine = [sigma](const std::vector<std::pair<int, long double>>& e, double increment) {
    const long double x = static_cast<long double>(increment) / sigma;
    std::array<long double, 16> h{};
    h[0] = 1.0L;
    h[1] = x;
    for (int k = 1; k + 1 < static_cast<int>(h.size()); ++k) h[k + 1] = x * h[k] - k * h[k - 1];
    long double acc = 0.0L;
    for (const auto& [order, c] : e) acc += c * h[static_cast<std::size_t>(order)];
    return acc;
  };
  auto term = [&](double a1, double b1, double a2, double b2) {
    const double m1 = 0.5 * (a1 + b1);
    const double m2 = 0.5 * (a2 + b2);
    return static_cast<double>(f(m1, m2) * combine(e1, b1 - a1) * combine(e2, b2 - a2));
  };
  return make(StatisticKind::V_pq, grid_sum(path, count, term), path, t, p, q);
}

VariationStatistic v3(const TestFunction2D& f, const FbmGridPath2D& path, double t) {
  const auto count = checked_grid_count(path, t);
  return make(StatisticKind::V3, grid_sum(path, count, third_order_term(f)), path, t);
}

std::array<VariationStatistic, 4> k_components(const TestFunction2D& f, const FbmGridPath2D& path, double t) {
  if (!is_one_sixth(path)) throw std::invalid_argument("K components are defined at H = 1/6 only");
  const auto count = checked_grid_count(path, t);
  const auto& w = third_order_weights();
  // I_q(delta^{(x)q}) = sigma^q H_q(increment / sigma)
  const double sigma = std::exp2(-0.5 * path.level.n() * path.H.value());
  auto chaos = [sigma](int q, double d) { return ipow(sigma, q) * hermite_eval(q, d / sigma); };
  auto component = [&](StatisticKind kind, int a1, int a2, double weight, int q1, int q2) {
    auto term = [&](double x1a, double x1b, double x2a, double x2b) {
      const double m1 = 0.5 * (x1a + x1b);
      const double m2 = 0.5 * (x2a + x2b);
      return weight * f.derivative(a1, a2, m1, m2) * chaos(q1, x1b - x1a) * chaos(q2, x2b - x2a);
    };
    return make(kind, grid_sum(path, count, term), path, t);
  };
  return {component(StatisticKind::K1, 3, 0, w[3], 3, 0), component(StatisticKind::K2, 0, 3, w[0], 0, 3),
          component(StatisticKind::K3, 1, 2, w[1], 1, 2), component(StatisticKind::K4, 2, 1, w[2], 2, 1)};
}

VariationStatistic p_n(const TestFunction2D& f, const FbmGridPath2D& path, double t) {
  if (!is_one_sixth(path)) throw std::invalid_argument("P_n is defined at H = 1/6 only");
  const auto count = checked_grid_count(path, t);
  const double prefactor = 0.125 * std::exp2(-path.level.n() / 6.0);
  auto term = [&](double a1, double b1, double a2, double b2) {
    const double m1 = 0.5 * (a1 + b1);
    const double m2 = 0.5 * (a2 + b2);
    return prefactor * ((f.derivative(3, 0, m1, m2) + f.derivative(1, 2, m1, m2)) * (b1 - a1) +
                        (f.derivative(0, 3, m1, m2) + f.derivative(2, 1, m1, m2)) * (b2 - a2));
  };
  return make(StatisticKind::P, grid_sum(path, count, term), path, t);
}

VariationStatistic o_tilde_n(const TestFunction2D& f, const FbmGridPath2D& fbm, const SkeletonPath& walk, double t) {
  return make(StatisticKind::O_tilde, skeleton_sum(fbm, walk, t, gradient_term(f)), fbm, t, 0, 0, walk.seed);
}

VariationStatistic v_tilde_pq(const TestFunction2D& f, const FbmGridPath2D& fbm, const SkeletonPath& walk, double t,
                              int p, int q) {
  check_odd(p, q);
  return make(StatisticKind::Vt_pq, skeleton_sum(fbm, walk, t, pq_term(f, p, q)), fbm, t, p, q, walk.seed);
}

VariationStatistic v_tilde_3(const TestFunction2D& f, const FbmGridPath2D& fbm, const SkeletonPath& walk, double t) {
  return make(StatisticKind::Vt3, skeleton_sum(fbm, walk, t, third_order_term(f)), fbm, t, 0, 0, walk.seed);
}

VariationStatistic w_pq(const TestFunction2D& f, const FbmGridPath2D& fbm, double t_signed, int p, int q) {
  check_odd(p, q);
  return make(StatisticKind::W_pq, one_sided_sum(fbm, t_signed, pq_term(f, p, q)), fbm, t_signed, p, q);
}

VariationStatistic w3(const TestFunction2D& f, const FbmGridPath2D& fbm, double t_signed) {
  return make(StatisticKind::W3, one_sided_sum(fbm, t_signed, third_order_term(f)), fbm, t_signed);
}

VariationStatistic kl_reduce(const TestFunction2D& f, const FbmGridPath2D& fbm, const SkeletonPath& walk, double t,
                             int p, int q) {
  check_odd(p, q);
  if (!(t >= 0.0)) throw std::invalid_argument("t must be non-negative");
  if (!(fbm.level == walk.level)) throw std::invalid_argument("fBm and skeleton levels differ");
  const auto steps = skeleton_count(t, walk.level);
  const auto signs = signed_crossings_closed_form(walk, steps);
  if (!signs.empty() && !fbm.covers(signs.begin()->first, signs.rbegin()->first + 1)) {
    throw std::invalid_argument("fBm path does not cover the crossed range");
  }
  auto term = pq_term(f, p, q);
  CompensatedSum s;
  CompensatedSum a;
  for (const auto& [j, sign] : signs) {
    const double v = sign * term(fbm.x1(j), fbm.x1(j + 1), fbm.x2(j), fbm.x2(j + 1));
    s += v;
    a += std::abs(v);
  }
  return make(StatisticKind::Vt_pq, {s.value(), a.value()}, fbm, t, p, q, walk.seed);
}

FbmGridPath2D sample_fbm_for_time(HurstExponent H, DyadicLevel level, double t, std::uint64_t seed) {
  if (!(t >= 0.0)) throw std::invalid_argument("t must be non-negative");
  return sample_fbm_2d(H, level, 0, grid_count(t, level), seed);
}

FbmbtPath sample_fbmbt(HurstExponent H, DyadicLevel level, double t, std::uint64_t seed) {
  if (!(t >= 0.0)) throw std::invalid_argument("t must be non-negative");
  auto walk = sample_skeleton(level, skeleton_count(t, level), seed);
  auto fbm = sample_fbm_2d(H, level, walk.min_position(), walk.max_position(), seed);
  return FbmbtPath{std::move(walk), std::move(fbm)};
}

}  // namespace fbmbt
