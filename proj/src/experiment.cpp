#include "fbmbt/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "fbmbt/calculus.hpp"
#include "fbmbt/errors.hpp"
#include "fbmbt/fgn.hpp"
#include "fbmbt/limitlaw.hpp"
#include "fbmbt/rng.hpp"
#include "fbmbt/skeleton.hpp"
#include "fbmbt/stats.hpp"
#include "fbmbt/test_function.hpp"
#include "fbmbt/variations.hpp"

#ifndef FBMBT_VERSION
#define FBMBT_VERSION "dev"
#endif

namespace fbmbt {

using nlohmann::json;

namespace {

const std::map<std::string, ExperimentKind>& kind_names() {
  static const std::map<std::string, ExperimentKind> names{
      {"rho-table", ExperimentKind::RhoTable},           {"constants", ExperimentKind::Constants},
      {"taylor-table", ExperimentKind::TaylorTable},     {"identity-suite", ExperimentKind::IdentitySuite},
      {"converge-h-gt", ExperimentKind::ConvergeHGt},    {"law-h-eq", ExperimentKind::LawHEq},
      {"diverge-h-lt", ExperimentKind::DivergeHLt},      {"skeleton-suite", ExperimentKind::SkeletonSuite},
  };
  return names;
}

std::vector<int> default_levels(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::IdentitySuite: return {4, 6, 8, 10, 12, 14};
    case ExperimentKind::ConvergeHGt: return {8, 10, 12, 14, 16, 18};
    case ExperimentKind::LawHEq: return {20};
    case ExperimentKind::DivergeHLt: return {10, 12, 14, 16, 18, 20};
    case ExperimentKind::SkeletonSuite: return {12, 14, 16};
    default: return {};
  }
}

double parse_hurst(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    const auto slash = s.find('/');
    std::size_t used = 0;
    if (slash == std::string::npos) {
      const double x = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument("trailing characters");
      return x;
    }
    const double num = std::stod(s.substr(0, slash));
    const double den = std::stod(s.substr(slash + 1));
    return num / den;
  }
  throw std::invalid_argument("expected a number or a fraction string");
}

bool near_one_sixth(double h) { return std::abs(h - 1.0 / 6.0) <= 1e-12; }

double relative_deviation(double a, double b, double abs_sum) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-6 * abs_sum});
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

// Third partials paired with kappa_1..kappa_4.
constexpr std::array<std::pair<int, int>, 4> kThirdPartials{{{3, 0}, {0, 3}, {2, 1}, {1, 2}}};

// sum_i kappa_i^2 (d_i f)^2 when all third partials are constant, else NaN.
double constant_integrand_variance_rate(const TestFunction2D& f) {
  const auto& kappa = default_kappa();
  const std::array<double, 4> k{kappa.kappa1, kappa.kappa2, kappa.kappa3, kappa.kappa4};
  const std::array<std::pair<double, double>, 4> probes{{{0.0, 0.0}, {0.7, -1.3}, {-2.1, 0.4}, {1.9, 2.6}}};
  double rate = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto [a1, a2] = kThirdPartials[i];
    const double d = f.derivative(a1, a2, 0.0, 0.0);
    for (const auto& [x, y] : probes) {
      if (std::abs(f.derivative(a1, a2, x, y) - d) > 1e-12 * std::max(1.0, std::abs(d))) return std::nan("");
    }
    rate += k[i] * k[i] * d * d;
  }
  return rate;
}

class Run {
 public:
  Run(const ExperimentConfig& cfg, unsigned workers, std::ostream* log) : cfg_(cfg), workers_(workers), log_(log) {
    per_level_ = json::array();
    tests_ = json::array();
    rates_ = json::array();
    series_ = json::object();
    extra_ = json::object();
  }

  void say(const std::string& msg) const {
    if (log_) *log_ << "[fbmbt] " << msg << '\n' << std::flush;
  }

  void test(const std::string& name, double statistic, double threshold, bool pass,
            std::optional<double> p_value = std::nullopt) {
    json t{{"name", name}, {"statistic", statistic}, {"threshold", threshold}, {"verdict", pass ? "pass" : "fail"}};
    t["p_value"] = p_value ? json(*p_value) : json(nullptr);
    tests_.push_back(std::move(t));
    report_.all_pass = report_.all_pass && pass;
    say(name + ": " + std::to_string(statistic) + (pass ? " pass" : " FAIL"));
  }

  void rows(const std::string& statistic, const std::vector<double>& values, std::uint64_t master) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      report_.rows.push_back({static_cast<std::int64_t>(i), replication_seed(master, i), statistic, values[i]});
    }
  }

  void row(std::int64_t index, const std::string& statistic, double value) {
    report_.rows.push_back({index, 0, statistic, value});
  }

  SampleSummary level(const std::string& statistic, int n, const std::vector<double>& values) {
    const auto s = summarize(values);
    per_level_.push_back({{"statistic", statistic},
                          {"n", n},
                          {"mean", s.mean},
                          {"variance", s.variance},
                          {"stderr", s.stderr_mean},
                          {"count", s.count}});
    return s;
  }

  RateFit rate(const std::string& name, const std::vector<int>& ns, const std::vector<double>& values) {
    const auto fit = fit_rate(ns, values);
    rates_.push_back({{"name", name}, {"slope", fit.slope}, {"intercept", fit.intercept}, {"r_squared", fit.r_squared}});
    say(name + " slope " + std::to_string(fit.slope));
    return fit;
  }

  void use_series(const RhoSeriesResult& r) {
    series_["S"] = {{"H", r.H.value()},
                    {"truncation", r.truncation},
                    {"partial_sum", r.partial_sum},
                    {"tail_bound", r.tail_bound},
                    {"value", r.value}};
  }

  void use_kappa() {
    const auto& k = default_kappa();
    use_series(k.source);
    series_["kappa"] = {{"kappa1", k.kappa1}, {"kappa2", k.kappa2}, {"kappa3", k.kappa3}, {"kappa4", k.kappa4}};
  }

  std::vector<double> replicate(const Estimator& e, std::uint64_t master) const {
    return mc_run(e, cfg_.replications, master, workers_);
  }

  std::vector<std::vector<double>> replicate_multi(const MultiEstimator& e, std::uint64_t master,
                                                   std::size_t width) const {
    auto raw = mc_run_multi(e, cfg_.replications, master, workers_);
    std::vector<std::vector<double>> cols(width, std::vector<double>(raw.size()));
    for (std::size_t i = 0; i < raw.size(); ++i)
      for (std::size_t c = 0; c < width; ++c) cols[c][i] = raw[i][c];
    return cols;
  }

  json& extra() { return extra_; }

  ExperimentReport finish(double seconds) {
    json& s = report_.summary;
    s["config"] = config_echo();
    s["series_constants"] = series_;
    s["per_level"] = per_level_;
    s["tests"] = tests_;
    s["rates"] = rates_;
    s["runtime_seconds"] = seconds;
    s["version"] = FBMBT_VERSION;
    s["seed_lineage"] = {
        {"master_seed", cfg_.master_seed},
        {"auxiliary_master_seed", stream_seed(cfg_.master_seed, streams::kAuxiliary)},
        {"replication_seed", "mix64(master_seed ^ (0x9E3779B97F4A7C15 * i))"},
        {"stream_seed", "mix64(seed + k * 0xD1B54A32D192ED03)"},
        {"streams",
         {{"fbm_component_1", streams::kFbmComponent1},
          {"fbm_component_2", streams::kFbmComponent2},
          {"walk", streams::kWalk},
          {"brownian_1_to_4", streams::kBrownian1},
          {"time_change", streams::kTimeChange},
          {"correction_fbm", streams::kCorrectionFbm},
          {"instance", streams::kInstance},
          {"auxiliary", streams::kAuxiliary}}}};
    s["verdict"] = report_.all_pass ? "pass" : "fail";
    for (auto& [k, v] : extra_.items()) s[k] = v;
    return std::move(report_);
  }

 private:
  json config_echo() const {
    json c{{"experiment", to_string(cfg_.experiment)},
           {"H", cfg_.H},
           {"levels", cfg_.levels},
           {"t", cfg_.t},
           {"function", cfg_.function},
           {"replications", cfg_.replications},
           {"master_seed", cfg_.master_seed},
           {"mesh", cfg_.mesh},
           {"instances", cfg_.instances},
           {"truncations", cfg_.truncations},
           {"max_order", cfg_.max_order},
           {"brownian_time", cfg_.brownian_time},
           {"ito_function", cfg_.ito_function},
           {"thresholds", cfg_.thresholds}};
    return c;
  }

  const ExperimentConfig& cfg_;
  unsigned workers_;
  std::ostream* log_;
  ExperimentReport report_;
  json per_level_;
  json tests_;
  json rates_;
  json series_;
  json extra_;
};

void run_rho_table(const ExperimentConfig& cfg, Run& run) {
  const HurstExponent H(cfg.H);
  for (std::int64_t k = 0; k <= 32; ++k) run.row(k, "rho", rho(k, H));
  const double tol = cfg.threshold("telescoping", 1e-12);
  for (auto m : cfg.truncations) {
    const double lhs = rho_window_sum(H, m);
    const double rhs = rho_window_closed_form(H, m);
    run.row(m, "window_sum", lhs);
    run.row(m, "window_closed_form", rhs);
    const double dev = std::abs(lhs - rhs);
    run.test("telescoping m=" + std::to_string(m), dev, tol, dev <= tol);
  }
}

void run_constants(const ExperimentConfig& cfg, Run& run) {
  const HurstExponent H(cfg.H);
  const auto series = sum_rho_cubed(H, cfg.truncations.back());
  run.use_series(series);
  run.row(0, "S", series.value);
  run.row(0, "tail_bound", series.tail_bound);
  const double tail_tol = cfg.threshold("tail_bound", 1e-6);
  run.test("tail_bound", series.tail_bound, tail_tol, series.tail_bound < tail_tol);
  if (!near_one_sixth(cfg.H)) return;
  const auto k = kappa_constants(series);
  const double one_d = std::sqrt(6.0 * series.value);
  run.row(0, "kappa1", k.kappa1);
  run.row(0, "kappa3", k.kappa3);
  run.row(0, "sqrt_6S", one_d);
  json kj{{"kappa1", k.kappa1}, {"kappa2", k.kappa2}, {"kappa3", k.kappa3}, {"kappa4", k.kappa4}, {"sqrt_6S", one_d}};
  run.extra()["kappa"] = kj;
  auto near = [&](const std::string& name, double value, double ref, double tol) {
    run.test(name, std::abs(value - ref), tol, std::abs(value - ref) <= tol);
  };
  near("S", series.value, 0.89853, cfg.threshold("S", 5e-4));
  near("sqrt_6S", one_d, 2.322, cfg.threshold("sqrt_6S", 5e-3));
  near("kappa1", k.kappa1, 0.0967, cfg.threshold("kappa", 5e-4));
  near("kappa3", k.kappa3, 0.1676, cfg.threshold("kappa", 5e-4));
}

void run_taylor_table(const ExperimentConfig& cfg, Run& run) {
  const auto table = midpoint_taylor_table(cfg.max_order);
  json entries = json::array();
  std::int64_t idx = 0;
  bool even_zero = true;
  for (const auto& [alpha, c] : table.entries) {
    std::ostringstream os;
    os << c;
    entries.push_back({{"alpha1", alpha.first}, {"alpha2", alpha.second}, {"value", os.str()}, {"approx", to_double(c)}});
    run.row(idx++, "C_" + std::to_string(alpha.first) + "_" + std::to_string(alpha.second), to_double(c));
    if ((alpha.first + alpha.second) % 2 == 0 && alpha.first + alpha.second <= 12) even_zero = even_zero && c == 0;
  }
  run.extra()["taylor_table"] = entries;
  auto exact = [&](int a1, int a2, const Rational& expected) {
    if (a1 + a2 > cfg.max_order) return;
    const auto& c = table.at(a1, a2);
    run.test("C(" + std::to_string(a1) + "," + std::to_string(a2) + ")", to_double(c - expected), 0.0, c == expected);
  };
  exact(1, 0, Rational(1));
  exact(0, 1, Rational(1));
  exact(3, 0, Rational(1, 24));
  exact(0, 3, Rational(1, 24));
  exact(2, 1, Rational(1, 8));
  exact(1, 2, Rational(1, 8));
  run.test("even orders vanish", even_zero ? 0.0 : 1.0, 0.0, even_zero);
}

struct IdentityInstance {
  HurstExponent H;
  DyadicLevel level;
  double t;
  TestFunction2D f;
};

IdentityInstance draw_instance(const std::vector<int>& levels, std::uint64_t seed) {
  CounterRng rng(stream_seed(seed, streams::kInstance));
  static const std::array<double, 5> hs{0.1, 1.0 / 6.0, 0.3, 0.49, 0.7};
  const double H = hs[rng.next_u64() % hs.size()];
  const int n = levels[rng.next_u64() % levels.size()];
  const double t = 0.2 + 1.3 * rng.uniform();
  TestFunction2D f = [&] {
    switch (rng.next_u64() % 6) {
      case 0: return TestFunction2D::sin_cos(1.0, 1.0);
      case 1: return TestFunction2D::sin_cos(0.5 + rng.uniform(), 0.5 + rng.uniform());
      case 2: return TestFunction2D::bump();
      case 3: return TestFunction2D::monomial(3, 0);
      case 4: return TestFunction2D::monomial(1, 2);
      default: return TestFunction2D::monomial(2, 3);
    }
  }();
  return {HurstExponent(H), DyadicLevel(n), t, std::move(f)};
}

void run_identity_suite(const ExperimentConfig& cfg, Run& run) {
  static const std::array<std::pair<int, int>, 10> powers{
      {{3, 0}, {2, 1}, {1, 2}, {0, 3}, {5, 0}, {4, 1}, {3, 2}, {2, 3}, {1, 4}, {0, 5}}};
  double crossing_mismatch = 0.0;
  double kl_dev = 0.0;
  double sub_dev = 0.0;
  double chaos_dev = 0.0;
  double hermite_dev = 0.0;
  for (std::int64_t i = 0; i < cfg.instances; ++i) {
    const auto seed = replication_seed(cfg.master_seed, static_cast<std::uint64_t>(i));
    const auto inst = draw_instance(cfg.levels, seed);
    const auto path = sample_fbmbt(inst.H, inst.level, inst.t, seed);
    const auto horizon = path.walk.steps();

    const auto table = crossings_bruteforce(path.walk, horizon);
    const auto closed = signed_crossings_closed_form(path.walk, horizon);
    double mismatch = 0.0;
    for (std::int64_t j = path.walk.min_position(); j < path.walk.max_position(); ++j) {
      const auto it = closed.find(j);
      const int expected = it == closed.end() ? 0 : it->second;
      if (table.net(j) != expected) mismatch += 1.0;
    }
    crossing_mismatch = std::max(crossing_mismatch, mismatch);

    const double y = terminal_y(path.walk, horizon);
    double inst_kl = 0.0;
    double inst_sub = 0.0;
    double inst_herm = 0.0;
    const auto grid = sample_fbm_for_time(inst.H, inst.level, inst.t, seed);
    for (const auto& [p, q] : powers) {
      const auto direct = v_tilde_pq(inst.f, path.fbm, path.walk, inst.t, p, q);
      const auto reduced = kl_reduce(inst.f, path.fbm, path.walk, inst.t, p, q);
      const auto sub = w_pq(inst.f, path.fbm, y, p, q);
      inst_kl = std::max(inst_kl, relative_deviation(direct.value, reduced.value, direct.abs_sum));
      inst_sub = std::max(inst_sub, relative_deviation(direct.value, sub.value, direct.abs_sum));
      const auto v = v_pq(inst.f, grid, inst.t, p, q);
      const auto h = v_pq_hermite(inst.f, grid, inst.t, p, q);
      inst_herm = std::max(inst_herm, relative_deviation(v.value, h.value, v.abs_sum));
    }

    const auto sixth = sample_fbm_for_time(HurstExponent(1.0 / 6.0), inst.level, inst.t, seed);
    const auto total = v3(inst.f, sixth, inst.t);
    const auto ks = k_components(inst.f, sixth, inst.t);
    const auto pn = p_n(inst.f, sixth, inst.t);
    const double recomposed = ks[0].value + ks[1].value + ks[2].value + ks[3].value + pn.value;
    const double inst_chaos = relative_deviation(total.value, recomposed, total.abs_sum);

    run.row(i, "crossing_mismatch", mismatch);
    run.row(i, "kl_reduce_dev", inst_kl);
    run.row(i, "subordination_dev", inst_sub);
    run.row(i, "chaos_dev", inst_chaos);
    run.row(i, "hermite_dev", inst_herm);
    kl_dev = std::max(kl_dev, inst_kl);
    sub_dev = std::max(sub_dev, inst_sub);
    chaos_dev = std::max(chaos_dev, inst_chaos);
    hermite_dev = std::max(hermite_dev, inst_herm);
  }
  const double tol = cfg.threshold("relative", 1e-10);
  run.test("crossings closed form", crossing_mismatch, 0.0, crossing_mismatch == 0.0);
  run.test("kl_reduce", kl_dev, tol, kl_dev <= tol);
  run.test("subordination", sub_dev, tol, sub_dev <= tol);
  run.test("chaos decomposition", chaos_dev, tol, chaos_dev <= tol);
  run.test("hermite route", hermite_dev, tol, hermite_dev <= tol);
}

void run_converge(const ExperimentConfig& cfg, Run& run) {
  const HurstExponent H(cfg.H);
  const auto f = TestFunction2D::parse(cfg.function);
  static const std::array<std::pair<int, int>, 4> powers{{{3, 0}, {2, 1}, {1, 2}, {0, 3}}};
  std::array<std::vector<double>, 4> second_moments;
  std::vector<double> residuals;
  const double f0 = f(0.0, 0.0);
  for (int n : cfg.levels) {
    const DyadicLevel level(n);
    run.say("level " + std::to_string(n));
    const std::size_t width = cfg.brownian_time ? 5 : 4;
    auto cols = run.replicate_multi(
        [&](std::uint64_t seed) {
          std::vector<double> out;
          const auto path = sample_fbm_for_time(H, level, cfg.t, seed);
          for (const auto& [p, q] : powers) out.push_back(v_pq(f, path, cfg.t, p, q).value);
          if (cfg.brownian_time) {
            const auto z = sample_fbmbt(H, level, cfg.t, seed);
            out.push_back(f(z.z1_end(), z.z2_end()) - f0 - o_tilde_n(f, z.fbm, z.walk, cfg.t).value);
          }
          return out;
        },
        cfg.master_seed, width);
    for (std::size_t c = 0; c < width; ++c) {
      const std::string name = c < 4 ? "V" + std::to_string(powers[c].first) + std::to_string(powers[c].second)
                                     : std::string("skeleton_residual");
      run.rows(name + "@n=" + std::to_string(n), cols[c], cfg.master_seed);
      std::vector<double> sq(cols[c].size());
      std::transform(cols[c].begin(), cols[c].end(), sq.begin(), [](double v) { return v * v; });
      const auto s = run.level(name + "^2", n, sq);
      if (c < 4) {
        second_moments[c].push_back(s.mean);
      } else {
        residuals.push_back(s.mean);
      }
    }
  }
  const double target = -(3.0 * cfg.H - 0.5) + cfg.threshold("slope_margin", 0.15);
  const double ratio_tol = cfg.threshold("decay_ratio", 0.25);
  for (std::size_t c = 0; c < 4; ++c) {
    const std::string name = "V" + std::to_string(powers[c].first) + std::to_string(powers[c].second);
    const auto fit = run.rate(name + "^2", cfg.levels, second_moments[c]);
    run.test(name + " slope", fit.slope, target, fit.slope <= target);
    const double ratio = second_moments[c].back() / second_moments[c].front();
    run.test(name + " decay ratio", ratio, ratio_tol, ratio < ratio_tol);
  }
  if (cfg.brownian_time) {
    const auto fit = run.rate("skeleton_residual^2", cfg.levels, residuals);
    bool decreasing = true;
    for (std::size_t i = 1; i < residuals.size(); ++i) decreasing = decreasing && residuals[i] < residuals[i - 1];
    run.test("skeleton residual decreasing", decreasing ? 0.0 : 1.0, 0.0, decreasing);
    run.test("skeleton residual slope", fit.slope, 0.0, fit.slope < 0.0);
  }
}

void run_law(const ExperimentConfig& cfg, Run& run) {
  run.use_kappa();
  const HurstExponent H(cfg.H);
  const auto f = TestFunction2D::parse(cfg.function);
  const auto g = TestFunction2D::parse(cfg.ito_function);
  const auto aux = stream_seed(cfg.master_seed, streams::kAuxiliary);
  const double rate = constant_integrand_variance_rate(f);
  const double g0 = g(0.0, 0.0);

  auto corr = run.replicate([&](std::uint64_t s) { return sample_correction_fbm(f, cfg.t, cfg.mesh, s).value; }, aux);
  run.rows("correction_fbm", corr, aux);
  run.level("correction_fbm", cfg.levels.back(), corr);

  std::vector<double> corr_bt;
  std::vector<double> ito_target;
  if (cfg.brownian_time) {
    auto cols = run.replicate_multi(
        [&](std::uint64_t s) {
          const auto cf = sample_correction_fbmbt(f, cfg.t, cfg.mesh, s);
          const auto cg = sample_correction_fbmbt(g, cfg.t, cfg.mesh, s);
          return std::vector<double>{cf.value, g(cg.x1_end, cg.x2_end) - g0 - cg.value};
        },
        aux, 2);
    corr_bt = std::move(cols[0]);
    ito_target = std::move(cols[1]);
    run.rows("correction_fbmbt", corr_bt, aux);
    run.rows("ito_target", ito_target, aux);
  }

  for (int n : cfg.levels) {
    const DyadicLevel level(n);
    run.say("level " + std::to_string(n));
    const bool last = n == cfg.levels.back();
    auto v = run.replicate([&](std::uint64_t s) { return v3(f, sample_fbm_for_time(H, level, cfg.t, s), cfg.t).value; },
                           cfg.master_seed);
    run.rows("V3@n=" + std::to_string(n), v, cfg.master_seed);
    const auto sv = run.level("V3", n, v);
    if (last) {
      const auto ks = ks_two_sample(v, corr);
      const double tol = cfg.threshold("ks_fbm", 0.08);
      run.test("KS V3 vs correction", ks.statistic, tol, ks.statistic < tol, ks.p_value);
      if (std::isfinite(rate)) {
        const double expected = rate * cfg.t;
        const double dev = std::abs(sv.variance / expected - 1.0);
        const double vtol = cfg.threshold("variance_fbm", 0.10);
        run.test("Var V3 vs closed form", dev, vtol, dev <= vtol);
      }
    }
    if (!cfg.brownian_time) continue;
    auto cols = run.replicate_multi(
        [&](std::uint64_t s) {
          const auto z = sample_fbmbt(H, level, cfg.t, s);
          return std::vector<double>{v_tilde_3(f, z.fbm, z.walk, cfg.t).value,
                                     o_tilde_n(g, z.fbm, z.walk, cfg.t).value};
        },
        cfg.master_seed, 2);
    run.rows("Vt3@n=" + std::to_string(n), cols[0], cfg.master_seed);
    run.rows("O_tilde@n=" + std::to_string(n), cols[1], cfg.master_seed);
    const auto st = run.level("Vt3", n, cols[0]);
    run.level("O_tilde", n, cols[1]);
    if (last) {
      if (std::isfinite(rate)) {
        const double expected = rate * std::sqrt(2.0 * cfg.t / std::numbers::pi);
        const double dev = std::abs(st.variance / expected - 1.0);
        const double vtol = cfg.threshold("variance_fbmbt", 0.12);
        run.test("Var Vt3 vs closed form", dev, vtol, dev <= vtol);
      }
      const auto ks = ks_two_sample(cols[1], ito_target);
      const double tol = cfg.threshold("ks_fbmbt", 0.10);
      run.test("KS O_tilde vs change of variables", ks.statistic, tol, ks.statistic < tol, ks.p_value);
    }
  }
}

void run_diverge(const ExperimentConfig& cfg, Run& run) {
  const HurstExponent H(cfg.H);
  const auto f = TestFunction2D::parse(cfg.function);
  std::vector<double> var_v3;
  std::vector<double> var_vt3;
  for (int n : cfg.levels) {
    const DyadicLevel level(n);
    run.say("level " + std::to_string(n));
    const double norm = std::exp2(-n * (1.0 - 6.0 * cfg.H) / 4.0);
    const std::size_t width = cfg.brownian_time ? 2 : 1;
    auto cols = run.replicate_multi(
        [&](std::uint64_t s) {
          std::vector<double> out{v3(f, sample_fbm_for_time(H, level, cfg.t, s), cfg.t).value};
          if (cfg.brownian_time) {
            const auto z = sample_fbmbt(H, level, cfg.t, s);
            out.push_back(norm * v_tilde_3(f, z.fbm, z.walk, cfg.t).value);
          }
          return out;
        },
        cfg.master_seed, width);
    run.rows("V3@n=" + std::to_string(n), cols[0], cfg.master_seed);
    var_v3.push_back(run.level("V3", n, cols[0]).variance);
    if (cfg.brownian_time) {
      run.rows("Vt3_normalized@n=" + std::to_string(n), cols[1], cfg.master_seed);
      var_vt3.push_back(run.level("Vt3_normalized", n, cols[1]).variance);
    }
  }
  const double expected = 0.5 - 3.0 * cfg.H;
  const auto fit = run.rate("Var V3", cfg.levels, var_v3);
  const double tol = cfg.threshold("slope_v3", 0.10);
  run.test("Var V3 growth slope", fit.slope, expected, std::abs(fit.slope - expected) <= tol);
  if (cfg.brownian_time) {
    const auto fit_t = run.rate("Var Vt3 normalized", cfg.levels, var_vt3);
    const double ttol = cfg.threshold("slope_vt3", 0.08);
    run.test("normalized Vt3 level", fit_t.slope, ttol, std::abs(fit_t.slope) <= ttol);
  }
}

void run_skeleton(const ExperimentConfig& cfg, Run& run) {
  const double tol = cfg.threshold("variance", 0.05);
  for (int n : cfg.levels) {
    const DyadicLevel level(n);
    const auto steps = skeleton_count(cfg.t, level);
    auto y = run.replicate(
        [&](std::uint64_t s) { return terminal_y(sample_skeleton(level, steps, s), steps); }, cfg.master_seed);
    run.rows("terminal_y@n=" + std::to_string(n), y, cfg.master_seed);
    const auto s = run.level("terminal_y", n, y);
    if (n >= 12) {
      const double dev = std::abs(s.variance / cfg.t - 1.0);
      run.test("Var terminal_y n=" + std::to_string(n), dev, tol, dev <= tol);
    }
  }
  double mismatches = 0.0;
  for (std::int64_t i = 0; i < cfg.instances; ++i) {
    const auto seed = replication_seed(stream_seed(cfg.master_seed, streams::kAuxiliary), static_cast<std::uint64_t>(i));
    CounterRng rng(stream_seed(seed, streams::kInstance));
    const DyadicLevel level(cfg.levels[rng.next_u64() % cfg.levels.size()]);
    const auto steps = skeleton_count(cfg.t, level);
    const auto walk = sample_skeleton(level, steps, seed);
    const auto horizon = static_cast<std::int64_t>(rng.next_u64() % static_cast<std::uint64_t>(steps + 1));
    const auto table = crossings_bruteforce(walk, horizon);
    const auto closed = signed_crossings_closed_form(walk, horizon);
    std::int64_t total = 0;
    for (std::size_t k = 0; k < table.up.size(); ++k) total += table.up[k] + table.down[k];
    bool ok = total == horizon;
    for (std::int64_t j = table.j_min; j < table.j_min + static_cast<std::int64_t>(table.up.size()); ++j) {
      const auto it = closed.find(j);
      ok = ok && table.net(j) == (it == closed.end() ? 0 : it->second);
    }
    for (const auto& [j, sign] : closed) ok = ok && table.net(j) == sign;
    if (!ok) mismatches += 1.0;
  }
  run.test("crossing identity", mismatches, 0.0, mismatches == 0.0);
}

std::int64_t get_int(const json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ConfigError(key, "expected an integer");
  return v.get<std::int64_t>();
}

double get_number(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError(key, "expected a number");
  return v.get<double>();
}

void check_capacity(const ExperimentConfig& cfg) {
  for (int n : cfg.levels) {
    const double grid = cfg.t * std::exp2(0.5 * n);
    const double walk = std::ldexp(cfg.t, n);
    const bool uses_walk = cfg.experiment == ExperimentKind::SkeletonSuite || cfg.brownian_time;
    if (grid > static_cast<double>(kMaxGridIncrements) || (uses_walk && walk > std::ldexp(1.0, 30))) {
      throw ConfigError("levels", "level " + std::to_string(n) + " exceeds the sampler capacity");
    }
  }
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  for (const auto& [name, k] : kind_names())
    if (k == kind) return name;
  return "?";
}

double ExperimentConfig::threshold(const std::string& name, double fallback) const {
  const auto it = thresholds.find(name);
  return it == thresholds.end() ? fallback : it->second;
}

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("<root>", "config must be a JSON object");
  static const std::set<std::string> known{"experiment",  "H",           "levels",       "t",          "function",
                                           "ito_function", "replications", "master_seed",  "mesh",       "instances",
                                           "truncations", "max_order",   "brownian_time", "thresholds", "output"};
  for (const auto& [key, _] : doc.items()) {
    if (!known.count(key)) throw ConfigError(key, "unknown key");
  }
  ExperimentConfig cfg;
  cfg.raw = doc;

  if (!doc.contains("experiment") || !doc["experiment"].is_string()) {
    throw ConfigError("experiment", "missing or not a string");
  }
  const auto name = doc["experiment"].get<std::string>();
  const auto kind = kind_names().find(name);
  if (kind == kind_names().end()) throw ConfigError("experiment", "unknown experiment '" + name + "'");
  cfg.experiment = kind->second;

  if (doc.contains("H")) {
    try {
      cfg.H = parse_hurst(doc["H"]);
    } catch (const std::exception& e) {
      throw ConfigError("H", e.what());
    }
  }
  if (!(cfg.H > 0.0 && cfg.H < 1.0)) throw ConfigError("H", "must lie in (0, 1)");

  cfg.levels = default_levels(cfg.experiment);
  if (doc.contains("levels")) {
    if (!doc["levels"].is_array()) throw ConfigError("levels", "expected an array");
    cfg.levels.clear();
    for (const auto& v : doc["levels"]) cfg.levels.push_back(static_cast<int>(get_int(v, "levels")));
  }
  for (std::size_t i = 0; i < cfg.levels.size(); ++i) {
    if (cfg.levels[i] < 0 || cfg.levels[i] > 40) throw ConfigError("levels", "levels must lie in [0, 40]");
    if (i > 0 && cfg.levels[i] <= cfg.levels[i - 1]) throw ConfigError("levels", "levels must be strictly increasing");
  }

  if (doc.contains("t")) cfg.t = get_number(doc["t"], "t");
  if (!(cfg.t > 0.0) || !std::isfinite(cfg.t)) throw ConfigError("t", "must be positive and finite");

  auto parse_function = [&](const char* key, std::string& out) {
    if (!doc.contains(key)) return;
    if (!doc[key].is_string()) throw ConfigError(key, "expected a string");
    out = doc[key].get<std::string>();
  };
  parse_function("function", cfg.function);
  parse_function("ito_function", cfg.ito_function);
  for (const auto& [key, id] : {std::pair<const char*, std::string>{"function", cfg.function},
                                std::pair<const char*, std::string>{"ito_function", cfg.ito_function}}) {
    try {
      TestFunction2D::parse(id);
    } catch (const std::exception& e) {
      throw ConfigError(key, e.what());
    }
  }

  if (doc.contains("replications")) cfg.replications = get_int(doc["replications"], "replications");
  if (cfg.replications < 1) throw ConfigError("replications", "must be >= 1");
  if (doc.contains("master_seed")) {
    const auto& v = doc["master_seed"];
    if (v.is_number_unsigned()) {
      cfg.master_seed = v.get<std::uint64_t>();
    } else if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
      cfg.master_seed = static_cast<std::uint64_t>(v.get<std::int64_t>());
    } else if (v.is_string()) {
      try {
        std::size_t used = 0;
        const auto s = v.get<std::string>();
        cfg.master_seed = std::stoull(s, &used, 0);
        if (used != s.size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception& e) {
        throw ConfigError("master_seed", e.what());
      }
    } else {
      throw ConfigError("master_seed", "expected a non-negative integer");
    }
  }
  if (doc.contains("mesh")) cfg.mesh = get_number(doc["mesh"], "mesh");
  if (!(cfg.mesh > 0.0)) throw ConfigError("mesh", "must be positive");
  if (doc.contains("instances")) cfg.instances = get_int(doc["instances"], "instances");
  if (cfg.instances < 1) throw ConfigError("instances", "must be >= 1");
  if (doc.contains("truncations")) {
    if (!doc["truncations"].is_array() || doc["truncations"].empty()) {
      throw ConfigError("truncations", "expected a non-empty array");
    }
    cfg.truncations.clear();
    for (const auto& v : doc["truncations"]) cfg.truncations.push_back(get_int(v, "truncations"));
  }
  for (auto m : cfg.truncations) {
    if (m < 2 || m > 100'000'000) throw ConfigError("truncations", "truncations must lie in [2, 1e8]");
  }
  if (doc.contains("max_order")) cfg.max_order = static_cast<int>(get_int(doc["max_order"], "max_order"));
  if (cfg.max_order < 1 || cfg.max_order > 13) throw ConfigError("max_order", "must lie in [1, 13]");
  if (doc.contains("brownian_time")) {
    if (!doc["brownian_time"].is_boolean()) throw ConfigError("brownian_time", "expected a boolean");
    cfg.brownian_time = doc["brownian_time"].get<bool>();
  }
  if (doc.contains("thresholds")) {
    if (!doc["thresholds"].is_object()) throw ConfigError("thresholds", "expected an object");
    for (const auto& [k, v] : doc["thresholds"].items()) cfg.thresholds[k] = get_number(v, "thresholds." + k);
  }
  if (doc.contains("output")) {
    const auto& out = doc["output"];
    if (!out.is_object()) throw ConfigError("output", "expected an object");
    for (const auto& [k, v] : out.items()) {
      if (!v.is_string()) throw ConfigError("output." + k, "expected a file name");
      const auto file = v.get<std::string>();
      if (file.empty() || std::filesystem::path(file).has_parent_path()) {
        throw ConfigError("output." + k, "expected a bare file name");
      }
      if (k == "csv") {
        cfg.csv_name = file;
      } else if (k == "json") {
        cfg.json_name = file;
      } else {
        throw ConfigError("output." + k, "unknown key");
      }
    }
  }

  switch (cfg.experiment) {
    case ExperimentKind::Constants:
      if (!(cfg.H < 5.0 / 6.0)) throw ConfigError("H", "the rho^3 series diverges for H >= 5/6");
      break;
    case ExperimentKind::IdentitySuite:
    case ExperimentKind::SkeletonSuite:
    case ExperimentKind::LawHEq:
      if (cfg.levels.empty()) throw ConfigError("levels", "at least one level is required");
      if (cfg.experiment == ExperimentKind::LawHEq && !near_one_sixth(cfg.H)) {
        throw ConfigError("H", "law-h-eq runs at H = 1/6");
      }
      break;
    case ExperimentKind::ConvergeHGt:
      if (!(cfg.H > 1.0 / 6.0) || near_one_sixth(cfg.H)) throw ConfigError("H", "converge-h-gt needs H > 1/6");
      if (cfg.levels.size() < 3) throw ConfigError("levels", "rate fits need at least 3 levels");
      break;
    case ExperimentKind::DivergeHLt:
      if (!(cfg.H < 1.0 / 6.0) || near_one_sixth(cfg.H)) throw ConfigError("H", "diverge-h-lt needs H < 1/6");
      if (cfg.levels.size() < 3) throw ConfigError("levels", "rate fits need at least 3 levels");
      break;
    default:
      break;
  }
  check_capacity(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

ExperimentReport run_experiment(const ExperimentConfig& config, unsigned workers, std::ostream* log) {
  const auto start = std::chrono::steady_clock::now();
  Run run(config, workers, log);
  run.say("experiment " + to_string(config.experiment));
  try {
    switch (config.experiment) {
      case ExperimentKind::RhoTable: run_rho_table(config, run); break;
      case ExperimentKind::Constants: run_constants(config, run); break;
      case ExperimentKind::TaylorTable: run_taylor_table(config, run); break;
      case ExperimentKind::IdentitySuite: run_identity_suite(config, run); break;
      case ExperimentKind::ConvergeHGt: run_converge(config, run); break;
      case ExperimentKind::LawHEq: run_law(config, run); break;
      case ExperimentKind::DivergeHLt: run_diverge(config, run); break;
      case ExperimentKind::SkeletonSuite: run_skeleton(config, run); break;
    }
  } catch (const CapacityError& e) {
    throw ConfigError("levels", e.what());
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run.finish(seconds);
}

void write_csv(const ExperimentReport& report, std::ostream& out) {
  out << "replication,seed,statistic,value\n";
  out << std::setprecision(17);
  for (const auto& r : report.rows) {
    out << r.replication << ',' << r.seed << ',' << r.statistic << ',' << r.value << '\n';
  }
}

void write_report(const ExperimentReport& report, const ExperimentConfig& config, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream csv(dir / config.csv_name, std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write " + (dir / config.csv_name).string());
    write_csv(report, csv);
  }
  std::ofstream js(dir / config.json_name, std::ios::binary);
  if (!js) throw std::runtime_error("cannot write " + (dir / config.json_name).string());
  js << report.summary.dump(2) << '\n';
}

}  // namespace fbmbt
