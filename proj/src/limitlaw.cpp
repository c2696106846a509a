#include "fbmbt/limitlaw.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "fbmbt/compensated_sum.hpp"
#include "fbmbt/rng.hpp"

namespace fbmbt {

namespace {

const HurstExponent kOneSixth{1.0 / 6.0};

// Brownian path on k * T / 2^m, k = 0..2^m, by midpoint (Levy) refinement.
// Node ids do not depend on m, so paths at different m are restrictions of
// one another.
std::vector<double> brownian_levy(double T, int m, const CounterRng& rng) {
  const std::size_t size = std::size_t{1} << m;
  std::vector<double> b(size + 1, 0.0);
  b[size] = std::sqrt(T) * rng.normal_at(0);
  for (int level = 1; level <= m; ++level) {
    const std::size_t stride = size >> level;
    const double sd = std::sqrt(T / static_cast<double>(std::size_t{1} << (level + 1)));
    const std::size_t first_id = std::size_t{1} << (level - 1);
    for (std::size_t i = 1; i < (std::size_t{1} << level); i += 2) {
      const std::size_t k = i * stride;
      b[k] = 0.5 * (b[k - stride] + b[k + stride]) + sd * rng.normal_at(first_id + (i - 1) / 2);
    }
  }
  return b;
}

CorrectionSample integrate(const TestFunction2D& f, double T, double mesh_bound, std::uint64_t seed) {
  CorrectionSample out;
  out.seed = seed;
  if (T == 0.0) return out;
  int m = 0;
  while (T / std::ldexp(1.0, m) > mesh_bound) ++m;
  const double h = T / std::ldexp(1.0, m);
  const std::int64_t steps = std::int64_t{1} << m;
  out.mesh = h;

  const double scale = std::pow(h, kOneSixth.value());
  auto fbm = [&](std::uint64_t stream) {
    CounterRng rng(stream_seed(seed, stream));
    const auto inc = sample_fgn(kOneSixth, steps, rng);
    std::vector<double> x(inc.size() + 1, 0.0);
    for (std::size_t k = 0; k < inc.size(); ++k) x[k + 1] = x[k] + scale * inc[k];
    return x;
  };
  const auto x1 = fbm(streams::kCorrectionFbm);
  const auto x2 = fbm(streams::kCorrectionFbm + 1);

  std::array<std::vector<double>, 4> b;
  for (std::size_t i = 0; i < 4; ++i) {
    b[i] = brownian_levy(T, m, CounterRng(stream_seed(seed, streams::kBrownian1 + i)));
  }

  const auto& kappa = default_kappa();
  CompensatedSum sum(steps > kCompensationThreshold);
  for (std::int64_t k = 0; k < steps; ++k) {
    const auto i = static_cast<std::size_t>(k);
    const double u = x1[i];
    const double v = x2[i];
    sum += kappa.kappa1 * f.derivative(3, 0, u, v) * (b[0][i + 1] - b[0][i]) +
           kappa.kappa2 * f.derivative(0, 3, u, v) * (b[1][i + 1] - b[1][i]) +
           kappa.kappa3 * f.derivative(2, 1, u, v) * (b[2][i + 1] - b[2][i]) +
           kappa.kappa4 * f.derivative(1, 2, u, v) * (b[3][i + 1] - b[3][i]);
  }
  out.value = sum.value();
  out.x1_end = x1.back();
  out.x2_end = x2.back();
  return out;
}

void check_mesh(double t, double mesh) {
  if (!(mesh > 0.0)) throw std::invalid_argument("mesh must be positive");
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("t must be finite and non-negative");
}

}  // namespace

KappaConstants kappa_constants(const RhoSeriesResult& series) {
  if (std::abs(series.H.value() - 1.0 / 6.0) > 1e-12) {
    throw std::invalid_argument("kappa constants require the H = 1/6 series");
  }
  const double s = series.value;
  return KappaConstants{std::sqrt(s / 96.0), std::sqrt(s / 96.0), std::sqrt(s / 32.0), std::sqrt(s / 32.0), series};
}

const KappaConstants& default_kappa() {
  static const KappaConstants k = kappa_constants(sum_rho_cubed(kOneSixth, 1'000'000));
  return k;
}

CorrectionSample sample_correction_fbm(const TestFunction2D& f, double t, double mesh, std::uint64_t seed) {
  check_mesh(t, mesh);
  auto out = integrate(f, t, mesh, seed);
  out.t_effective = t;
  return out;
}

CorrectionSample sample_correction_fbmbt(const TestFunction2D& f, double t, double mesh, std::uint64_t seed) {
  check_mesh(t, mesh);
  const double y = std::sqrt(t) * CounterRng(stream_seed(seed, streams::kTimeChange)).normal_at(0);
  auto out = integrate(f, std::abs(y), mesh * std::max(1.0, std::abs(y)), seed);
  out.t_effective = y;
  return out;
}

}  // namespace fbmbt
