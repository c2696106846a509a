#include "fbmbt/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "fbmbt/rng.hpp"

namespace fbmbt {

double kolmogorov_q(double lambda) {
  if (lambda < 0.2) return 1.0;  // 1 - Q(0.2) < 1e-20
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

TwoSampleResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n1 = static_cast<double>(x.size());
  const double n2 = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n1 - static_cast<double>(j) / n2));
  }
  const double ne = n1 * n2 / (n1 + n2);
  const double root = std::sqrt(ne);
  TwoSampleResult r;
  r.statistic = d;
  r.p_value = kolmogorov_q((root + 0.12 + 0.11 / root) * d);
  r.n1 = x.size();
  r.n2 = y.size();
  r.reliable = x.size() >= 50 && y.size() >= 50;
  return r;
}

double ecf_distance(std::span<const double> a, std::span<const double> b, std::span<const double> grid) {
  if (a.empty() || b.empty() || grid.empty()) throw std::invalid_argument("ecf_distance: empty input");
  auto ecf = [](std::span<const double> x, double u) {
    double re = 0.0;
    double im = 0.0;
    for (double v : x) {
      re += std::cos(u * v);
      im += std::sin(u * v);
    }
    const double n = static_cast<double>(x.size());
    return std::complex<double>(re / n, im / n);
  };
  double best = 0.0;
  for (double u : grid) best = std::max(best, std::abs(ecf(a, u) - ecf(b, u)));
  return best;
}

RateFit fit_rate(std::span<const int> ns, std::span<const double> values) {
  if (ns.size() != values.size()) throw std::invalid_argument("fit_rate: size mismatch");
  if (ns.size() < 3) throw std::invalid_argument("fit_rate: need at least 3 points");
  const std::size_t k = ns.size();
  std::vector<double> y(k);
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (!(values[i] > 0.0)) throw std::invalid_argument("fit_rate: values must be positive");
    y[i] = std::log2(values[i]);
    mx += ns[i];
    my += y[i];
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double dx = ns[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_rate: levels must not all coincide");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
  return fit;
}

SampleSummary summarize(std::span<const double> x) {
  SampleSummary s;
  s.count = x.size();
  if (x.empty()) return s;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  s.mean = mean;
  s.variance = x.size() > 1 ? ss / static_cast<double>(x.size() - 1) : 0.0;
  s.stderr_mean = std::sqrt(s.variance / static_cast<double>(x.size()));
  return s;
}

namespace {

template <class Fn>
void parallel_for(std::int64_t count, unsigned workers, Fn&& body) {
  if (workers == 0) workers = std::max(1U, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::int64_t>(workers, count));
  if (workers <= 1) {
    for (std::int64_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::int64_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

std::vector<double> mc_run(const Estimator& estimator, std::int64_t replications, std::uint64_t master_seed,
                           unsigned workers) {
  if (replications < 1) throw std::invalid_argument("mc_run: replications must be >= 1");
  std::vector<double> out(static_cast<std::size_t>(replications));
  parallel_for(replications, workers, [&](std::int64_t i) {
    out[static_cast<std::size_t>(i)] = estimator(replication_seed(master_seed, static_cast<std::uint64_t>(i)));
  });
  return out;
}

std::vector<std::vector<double>> mc_run_multi(const MultiEstimator& estimator, std::int64_t replications,
                                              std::uint64_t master_seed, unsigned workers) {
  if (replications < 1) throw std::invalid_argument("mc_run: replications must be >= 1");
  std::vector<std::vector<double>> out(static_cast<std::size_t>(replications));
  parallel_for(replications, workers, [&](std::int64_t i) {
    out[static_cast<std::size_t>(i)] = estimator(replication_seed(master_seed, static_cast<std::uint64_t>(i)));
  });
  return out;
}

}  // namespace fbmbt
