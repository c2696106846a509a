#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace fbmbt {

struct TwoSampleResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  bool reliable = true;  // false when either sample has fewer than 50 points
};

/// Two-sample Kolmogorov-Smirnov distance with the asymptotic p-value.
TwoSampleResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Kolmogorov survival function Q(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda);

/// max over the grid of |phi_a(u) - phi_b(u)| for the empirical characteristic functions.
double ecf_distance(std::span<const double> a, std::span<const double> b, std::span<const double> grid);

struct RateFit {
  double slope = 0.0;  // per unit n, log2 scale
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// OLS of log2(values) on ns; needs >= 3 points and positive values.
RateFit fit_rate(std::span<const int> ns, std::span<const double> values);

struct SampleSummary {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double stderr_mean = 0.0;
  std::size_t count = 0;
};

SampleSummary summarize(std::span<const double> x);

using Estimator = std::function<double(std::uint64_t seed)>;
using MultiEstimator = std::function<std::vector<double>(std::uint64_t seed)>;

/// Runs estimator(replication_seed(master_seed, i)) for i < replications on up
/// to `workers` threads (0 = hardware concurrency). Output slot i always holds
/// replication i, so results do not depend on scheduling.
std::vector<double> mc_run(const Estimator& estimator, std::int64_t replications, std::uint64_t master_seed,
                           unsigned workers = 1);

/// As mc_run for estimators returning several statistics; result[i] is replication i.
std::vector<std::vector<double>> mc_run_multi(const MultiEstimator& estimator, std::int64_t replications,
                                              std::uint64_t master_seed, unsigned workers = 1);

}  // namespace fbmbt
