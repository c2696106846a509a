#pragma once

// Two-sided fractional Brownian motion on dyadic grids: covariance kernels,
// exact samplers and the rho^3 series behind the H = 1/6 constants.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "fbmbt/rng.hpp"

namespace fbmbt {

/// Hurst index, 0 < H < 1.
class HurstExponent {
 public:
  explicit HurstExponent(double value);
  double value() const noexcept { return value_; }
  friend bool operator==(HurstExponent, HurstExponent) = default;

 private:
  double value_;
};

/// Level n of the spatial dyadic grid; spacing h = 2^(-n/2).
class DyadicLevel {
 public:
  explicit DyadicLevel(int n);
  int n() const noexcept { return n_; }
  double spacing() const noexcept;
  friend bool operator==(DyadicLevel, DyadicLevel) = default;

 private:
  int n_;
};

/// Both components of a 2-D fBm on the grid j * h, j in [j_min, j_max].
struct FbmGridPath2D {
  HurstExponent H;
  DyadicLevel level;
  std::int64_t j_min = 0;
  std::int64_t j_max = 0;
  std::vector<double> values1;
  std::vector<double> values2;
  std::uint64_t seed = 0;

  double x1(std::int64_t j) const { return values1[static_cast<std::size_t>(j - j_min)]; }
  double x2(std::int64_t j) const { return values2[static_cast<std::size_t>(j - j_min)]; }
  bool covers(std::int64_t lo, std::int64_t hi) const noexcept { return j_min <= lo && hi <= j_max; }
};

struct RhoSeriesResult {
  HurstExponent H;
  std::int64_t truncation;
  double partial_sum;
  double tail_bound;
  double value;  // == partial_sum, exact series within +-tail_bound
};

/// Cov(X_t, X_s) = (|s|^{2H} + |t|^{2H} - |t-s|^{2H}) / 2 on the whole real line.
double cov_fbm(double t, double s, HurstExponent H);

/// Autocorrelation of unit-spacing fractional Gaussian noise at lag k.
double rho(std::int64_t k, HurstExponent H);

/// sum of rho(r) over |r| <= m, compensated.
double rho_window_sum(HurstExponent H, std::int64_t m);
/// (m+1)^{2H} - m^{2H}, evaluated without cancellation.
double rho_window_closed_form(HurstExponent H, std::int64_t m);

/// Covariance of `count` consecutive level-n increments: 2^(-nH) rho(k - l).
Eigen::MatrixXd increment_cov_matrix(HurstExponent H, DyadicLevel level, int count);

/// Grids up to this many increments use the Durbin-Levinson factorization;
/// larger ones go through circulant embedding.
inline constexpr std::int64_t kFactorizationLimit = 4096;
/// Hard upper bound on increments per component.
inline constexpr std::int64_t kMaxGridIncrements = std::int64_t{1} << 24;

/// Unit-spacing fGn of length `count`, drawn from `rng`.
std::vector<double> sample_fgn(HurstExponent H, std::int64_t count, CounterRng& rng);

/// Exact two-sided 2-D fBm on [j_min, j_max] * 2^(-n/2), anchored at X_0 = 0.
/// Throws CapacityError when the grid exceeds kMaxGridIncrements.
FbmGridPath2D sample_fbm_2d(HurstExponent H, DyadicLevel level, std::int64_t j_min,
                            std::int64_t j_max, std::uint64_t seed);

/// Sum of rho(r)^3 over |r| <= m with a certified bound on the remainder.
/// Requires H < 5/6 and m >= 2.
RhoSeriesResult sum_rho_cubed(HurstExponent H, std::int64_t m);

}  // namespace fbmbt
