#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "fbmbt/limitlaw.hpp"
#include "fbmbt/rng.hpp"
#include "fbmbt/stats.hpp"

using namespace fbmbt;

namespace {

const HurstExponent kSixth{1.0 / 6.0};

double sample_variance(const std::vector<double>& x) { return summarize(x).variance; }

std::vector<double> draws(const TestFunction2D& f, double t, double mesh, int count, std::uint64_t master,
                          bool brownian_time) {
  return mc_run(
      [&](std::uint64_t s) {
        return brownian_time ? sample_correction_fbmbt(f, t, mesh, s).value : sample_correction_fbm(f, t, mesh, s).value;
      },
      count, master);
}

}  // namespace

TEST_CASE("kappa constants") {
  const auto k = kappa_constants(RhoSeriesResult{kSixth, 10, 0.89853, 0.0, 0.89853});
  CHECK(k.kappa1 == doctest::Approx(0.09675).epsilon(1e-4));
  CHECK(k.kappa2 == k.kappa1);
  CHECK(k.kappa3 == doctest::Approx(0.16757).epsilon(1e-4));
  CHECK(k.kappa4 == k.kappa3);
  CHECK(12 * k.kappa1 == doctest::Approx(std::sqrt(1.5 * 0.89853)));
  CHECK(12 * k.kappa1 == doctest::Approx(1.161).epsilon(1e-3));

  const auto zero = kappa_constants(RhoSeriesResult{kSixth, 10, 0.0, 0.0, 0.0});
  CHECK(zero.kappa1 == 0.0);
  CHECK(zero.kappa3 == 0.0);
  CHECK_THROWS_AS(kappa_constants(RhoSeriesResult{HurstExponent(0.3), 10, 1.0, 0.0, 1.0}), std::invalid_argument);

  const auto& d = default_kappa();
  CHECK(d.kappa1 == doctest::Approx(0.0967453).epsilon(1e-6));
  CHECK(d.kappa3 == doctest::Approx(0.1675678).epsilon(1e-6));
  CHECK(std::sqrt(6 * d.source.value) == doctest::Approx(2.322).epsilon(0.005 / 2.322));
}

TEST_CASE("argument checks and determinism") {
  const auto f = TestFunction2D::sin_cos(1, 1);
  CHECK_THROWS_AS(sample_correction_fbm(f, 1.0, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_correction_fbm(f, 1.0, -1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_correction_fbmbt(f, 1.0, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_correction_fbm(f, -1.0, 0.01, 1), std::invalid_argument);
  const auto a = sample_correction_fbm(f, 1.0, kDefaultMesh, 9);
  const auto b = sample_correction_fbm(f, 1.0, kDefaultMesh, 9);
  CHECK(a.value == b.value);
  CHECK(a.mesh == kDefaultMesh);
  CHECK(a.t_effective == 1.0);
  CHECK(std::isfinite(a.value));
  const auto c = sample_correction_fbm(f, 0.3, 0.01, 9);
  CHECK(c.mesh <= 0.01);
  CHECK(c.mesh * std::round(0.3 / c.mesh) == doctest::Approx(0.3).epsilon(1e-15));
  const auto y = sample_correction_fbmbt(f, 1.0, kDefaultMesh, 9);
  CHECK(y.value == sample_correction_fbmbt(f, 1.0, kDefaultMesh, 9).value);
  CHECK(y.mesh <= kDefaultMesh * std::max(1.0, std::abs(y.t_effective)));
}

TEST_CASE("quadratic integrands give zero") {
  const auto q = TestFunction2D::monomial(1, 1);
  for (std::uint64_t s = 0; s < 20; ++s) {
    CHECK(sample_correction_fbm(q, 1.0, kDefaultMesh, s).value == 0.0);
    CHECK(sample_correction_fbmbt(q, 1.0, kDefaultMesh, s).value == 0.0);
  }
}

TEST_CASE("constant-integrand variances") {
  const auto& k = default_kappa();
  const int count = 20000;
  const auto x3 = draws(TestFunction2D::monomial(3, 0), 1.0, kDefaultMesh, count, 101, false);
  CHECK(sample_variance(x3) == doctest::Approx(36 * k.kappa1 * k.kappa1).epsilon(0.05));
  const auto xy2 = draws(TestFunction2D::monomial(1, 2), 1.0, kDefaultMesh, count, 102, false);
  CHECK(sample_variance(xy2) == doctest::Approx(4 * k.kappa3 * k.kappa3).epsilon(0.05));
  const auto half = draws(TestFunction2D::monomial(3, 0), 0.5, kDefaultMesh, count, 103, false);
  CHECK(sample_variance(half) == doctest::Approx(36 * k.kappa1 * k.kappa1 * 0.5).epsilon(0.05));

  const auto bt = draws(TestFunction2D::monomial(3, 0), 1.0, kDefaultMesh, count, 104, true);
  const auto s = summarize(bt);
  CHECK(s.variance == doctest::Approx(36 * k.kappa1 * k.kappa1 * std::sqrt(2 / std::numbers::pi)).epsilon(0.05));
  double m4 = 0.0;
  for (double v : bt) m4 += std::pow(v - s.mean, 4);
  m4 /= count;
  CHECK(m4 / (s.variance * s.variance) - 3.0 > 0.0);
}

TEST_CASE("variance scales linearly in |Y| given Y") {
  const auto& k = default_kappa();
  const int count = 20000;
  const auto f = TestFunction2D::monomial(3, 0);
  std::vector<double> abs_y(count);
  std::vector<double> sq(count);
  for (int i = 0; i < count; ++i) {
    const auto c = sample_correction_fbmbt(f, 1.0, kDefaultMesh, replication_seed(105, i));
    abs_y[i] = std::abs(c.t_effective);
    sq[i] = c.value * c.value;
  }
  // E[value^2 | |Y|] = 36 kappa1^2 |Y|: regress value^2 on |Y| through the origin
  double num = 0.0;
  double den = 0.0;
  for (int i = 0; i < count; ++i) {
    num += abs_y[i] * sq[i];
    den += abs_y[i] * abs_y[i];
  }
  CHECK(num / den == doctest::Approx(36 * k.kappa1 * k.kappa1).epsilon(0.10));
}

TEST_CASE("halving the mesh leaves the variance in place") {
  const int count = 10000;
  for (bool brownian_time : {false, true}) {
    for (const auto& f : {TestFunction2D::monomial(3, 0), TestFunction2D::monomial(1, 2)}) {
      const auto coarse = draws(f, 1.0, 0x1.0p-8, count, 106, brownian_time);
      const auto fine = draws(f, 1.0, 0x1.0p-9, count, 106, brownian_time);
      CHECK(sample_variance(fine) == doctest::Approx(sample_variance(coarse)).epsilon(0.02));
    }
  }
}

TEST_CASE("independent streams for X, B and Y") {
  std::set<std::uint64_t> keys;
  for (std::uint64_t id : {streams::kFbmComponent1, streams::kFbmComponent2, streams::kWalk, streams::kBrownian1,
                           streams::kBrownian1 + 1, streams::kBrownian1 + 2, streams::kBrownian1 + 3,
                           streams::kTimeChange, streams::kCorrectionFbm, streams::kCorrectionFbm + 1}) {
    keys.insert(stream_seed(12345, id));
  }
  CHECK(keys.size() == 10);
}
