#include "fbmbt/fgn.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <stdexcept>
#include <string>

#include <fftw3.h>

#include "fbmbt/compensated_sum.hpp"
#include "fbmbt/errors.hpp"

namespace fbmbt {

HurstExponent::HurstExponent(double value) : value_(value) {
  if (!(value > 0.0 && value < 1.0)) {
    throw std::invalid_argument("Hurst exponent must lie in (0, 1), got " + std::to_string(value));
  }
}

DyadicLevel::DyadicLevel(int n) : n_(n) {
  if (n < 0) throw std::invalid_argument("dyadic level must be non-negative");
}

double DyadicLevel::spacing() const noexcept { return std::exp2(-0.5 * n_); }

namespace {

// |x|^{2H} with the zero branch spelled out.
double abs_pow(double x, double two_h) {
  const double a = std::abs(x);
  if (a == 0.0) return 0.0;
  return std::exp(two_h * std::log(a));
}

// Lags at or above this use the binomial series of the second difference.
constexpr std::int64_t kRhoSeriesLag = 64;

}  // namespace

double cov_fbm(double t, double s, HurstExponent H) {
  const double a = 2.0 * H.value();
  return 0.5 * (abs_pow(s, a) + abs_pow(t, a) - abs_pow(t - s, a));
}

double rho(std::int64_t k, HurstExponent H) {
  const double a = 2.0 * H.value();
  if (k < 0) k = -k;
  if (k == 0) return 1.0;
  const double kd = static_cast<double>(k);
  if (k < kRhoSeriesLag) {
    return 0.5 * (std::pow(kd + 1.0, a) + std::pow(kd - 1.0, a) - 2.0 * std::pow(kd, a));
  }
  // rho(k) = k^a * sum_{i>=1} binom(a, 2i) k^{-2i}
  const double x2 = 1.0 / (kd * kd);
  double binom = 1.0;  // binom(a, j)
  double power = 1.0;
  double sum = 0.0;
  for (int j = 0; j < 60; j += 2) {
    binom *= (a - j) / (j + 1.0);
    binom *= (a - j - 1.0) / (j + 2.0);
    power *= x2;
    const double term = binom * power;
    sum += term;
    if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
  }
  return std::pow(kd, a) * sum;
}

double rho_window_sum(HurstExponent H, std::int64_t m) {
  if (m < 0) throw std::invalid_argument("rho_window_sum: negative window");
  CompensatedSum one_side;
  for (std::int64_t r = 1; r <= m; ++r) one_side += rho(r, H);
  return 1.0 + 2.0 * one_side.value();
}

double rho_window_closed_form(HurstExponent H, std::int64_t m) {
  if (m < 0) throw std::invalid_argument("rho_window_closed_form: negative window");
  const double a = 2.0 * H.value();
  if (m == 0) return 1.0;
  const double md = static_cast<double>(m);
  return std::pow(md, a) * std::expm1(a * std::log1p(1.0 / md));
}

Eigen::MatrixXd increment_cov_matrix(HurstExponent H, DyadicLevel level, int count) {
  if (count <= 0) throw std::invalid_argument("increment_cov_matrix: count must be positive");
  const double scale = std::exp2(-level.n() * H.value());
  std::vector<double> lag(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) lag[k] = scale * rho(k, H);
  Eigen::MatrixXd m(count, count);
  for (int i = 0; i < count; ++i)
    for (int j = 0; j < count; ++j) m(i, j) = lag[static_cast<std::size_t>(std::abs(i - j))];
  return m;
}

namespace {

// Durbin-Levinson recursion: the innovations form of the Cholesky factor of
// the Toeplitz covariance. Row k depends only on lags 0..k, so a prefix of a
// longer draw is bit-identical to a shorter draw from the same stream.
std::vector<double> sample_fgn_levinson(HurstExponent H, std::int64_t count, CounterRng& rng) {
  const auto n = static_cast<std::size_t>(count);
  std::vector<double> gamma(n + 1);
  for (std::size_t k = 0; k <= n; ++k) gamma[k] = rho(static_cast<std::int64_t>(k), H);

  std::vector<double> x(n);
  std::vector<double> phi(n, 0.0);
  std::vector<double> phi_prev(n, 0.0);
  double v = gamma[0];
  x[0] = std::sqrt(v) * rng.normal();
  for (std::size_t k = 1; k < n; ++k) {
    double num = gamma[k];
    for (std::size_t j = 1; j < k; ++j) num -= phi_prev[j] * gamma[k - j];
    const double reflection = num / v;
    phi[k] = reflection;
    for (std::size_t j = 1; j < k; ++j) phi[j] = phi_prev[j] - reflection * phi_prev[k - j];
    v *= (1.0 - reflection * reflection);
    if (!(v > 0.0)) {
      throw InternalError("fGn covariance lost positive definiteness at lag " + std::to_string(k));
    }
    double mean = 0.0;
    for (std::size_t j = 1; j <= k; ++j) mean += phi[j] * x[k - j];
    x[k] = mean + std::sqrt(v) * rng.normal();
    std::copy(phi.begin() + 1, phi.begin() + static_cast<std::ptrdiff_t>(k) + 1,
              phi_prev.begin() + 1);
  }
  return x;
}

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

// In-place forward DFT of length `data.size()`.
void fft_forward(std::vector<std::complex<double>>& data) {
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(data.size()), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard lock(fftw_planner_mutex());
  fftw_destroy_plan(plan);
}

// Davies-Harte circulant embedding. Returns an empty vector when no embedding
// up to 4x the minimal size is non-negative definite.
std::vector<double> sample_fgn_circulant(HurstExponent H, std::int64_t count, CounterRng& rng) {
  std::int64_t half = 1;
  while (half < count) half <<= 1;
  for (int attempt = 0; attempt < 3; ++attempt, half <<= 1) {
    const std::int64_t size = 2 * half;
    std::vector<std::complex<double>> c(static_cast<std::size_t>(size));
    for (std::int64_t k = 0; k <= half; ++k) c[static_cast<std::size_t>(k)] = rho(k, H);
    for (std::int64_t k = 1; k < half; ++k) c[static_cast<std::size_t>(size - k)] = rho(k, H);
    fft_forward(c);

    double max_eig = 0.0;
    double min_eig = 0.0;
    for (const auto& e : c) {
      max_eig = std::max(max_eig, e.real());
      min_eig = std::min(min_eig, e.real());
    }
    if (min_eig < -1e-10 * max_eig) continue;

    std::vector<std::complex<double>> w(static_cast<std::size_t>(size));
    const double norm = 1.0 / static_cast<double>(size);
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double amp = std::sqrt(std::max(c[k].real(), 0.0) * norm);
      const double re = rng.normal();
      const double im = rng.normal();
      w[k] = {amp * re, amp * im};
    }
    fft_forward(w);
    std::vector<double> out(static_cast<std::size_t>(count));
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = w[k].real();
    return out;
  }
  return {};
}

}  // namespace

std::vector<double> sample_fgn(HurstExponent H, std::int64_t count, CounterRng& rng) {
  if (count < 0) throw std::invalid_argument("sample_fgn: negative count");
  if (count == 0) return {};
  if (count > kMaxGridIncrements) {
    throw CapacityError("fGn grid of " + std::to_string(count) + " increments exceeds the limit of " +
                        std::to_string(kMaxGridIncrements));
  }
  if (count <= kFactorizationLimit) return sample_fgn_levinson(H, count, rng);
  auto out = sample_fgn_circulant(H, count, rng);
  if (!out.empty()) return out;
  if (count > 4 * kFactorizationLimit) {
    throw CapacityError("circulant embedding failed and grid is too large to factorize exactly");
  }
  CounterRng fresh(rng.key() ^ 0xFA11BACCULL);
  return sample_fgn_levinson(H, count, fresh);
}

FbmGridPath2D sample_fbm_2d(HurstExponent H, DyadicLevel level, std::int64_t j_min,
                            std::int64_t j_max, std::uint64_t seed) {
  if (j_min > 0 || j_max < 0) throw std::invalid_argument("sample_fbm_2d: need j_min <= 0 <= j_max");
  const std::int64_t count = j_max - j_min;
  const double scale = std::exp2(-0.5 * level.n() * H.value());

  auto component = [&](std::uint64_t stream) {
    CounterRng rng(stream_seed(seed, stream));
    const auto increments = sample_fgn(H, count, rng);
    std::vector<double> values(static_cast<std::size_t>(count + 1));
    double acc = 0.0;
    values[0] = 0.0;
    for (std::size_t k = 0; k < increments.size(); ++k) {
      acc += scale * increments[k];
      values[k + 1] = acc;
    }
    const double anchor = values[static_cast<std::size_t>(-j_min)];
    for (auto& v : values) v -= anchor;
    return values;
  };

  FbmGridPath2D path{H, level, j_min, j_max, {}, {}, seed};
  path.values1 = component(streams::kFbmComponent1);
  path.values2 = component(streams::kFbmComponent2);
  return path;
}

RhoSeriesResult sum_rho_cubed(HurstExponent H, std::int64_t m) {
  const double h = H.value();
  if (!(h < 5.0 / 6.0)) throw std::domain_error("sum_rho_cubed: rho^3 is not summable for H >= 5/6");
  if (m < 2) throw std::invalid_argument("sum_rho_cubed: truncation must be at least 2");

  CompensatedSum one_side;
  for (std::int64_t r = 1; r <= m; ++r) {
    const double v = rho(r, H);
    one_side += v * v * v;
  }
  const double partial = 1.0 + 2.0 * one_side.value();

  // |rho(r)| <= c (r-1)^{2H-2} for r >= 2; the two tails are bounded by
  // 2 c^3 * int_{m-1}^inf x^{6H-6} dx.
  const double c = h * std::abs(2.0 * h - 1.0);
  const double tail = 2.0 * c * c * c * std::pow(static_cast<double>(m - 1), 6.0 * h - 5.0) / (5.0 - 6.0 * h);
  return RhoSeriesResult{H, m, partial, tail, partial};
}

}  // namespace fbmbt
