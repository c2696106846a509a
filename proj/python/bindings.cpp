#include <algorithm>
#include <sstream>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fbmbt/calculus.hpp"
#include "fbmbt/errors.hpp"
#include "fbmbt/experiment.hpp"
#include "fbmbt/fgn.hpp"
#include "fbmbt/limitlaw.hpp"
#include "fbmbt/skeleton.hpp"
#include "fbmbt/stats.hpp"
#include "fbmbt/variations.hpp"

namespace py = pybind11;
using namespace fbmbt;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::dict statistic_dict(const VariationStatistic& s) {
  py::dict d;
  d["kind"] = to_string(s.kind);
  d["value"] = s.value;
  d["abs_sum"] = s.abs_sum;
  d["H"] = s.H;
  d["n"] = s.n;
  d["t"] = s.t;
  d["p"] = s.p;
  d["q"] = s.q;
  d["seed"] = s.seed;
  return d;
}

}  // namespace

PYBIND11_MODULE(_fbmbt, m) {
  m.doc() = "Native core of fbmbt";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<CapacityError>(m, "CapacityError", PyExc_ValueError);

  m.def("cov_fbm", [](double t, double s, double H) { return cov_fbm(t, s, HurstExponent(H)); }, py::arg("t"),
        py::arg("s"), py::arg("H"));
  m.def("rho", [](std::int64_t k, double H) { return rho(k, HurstExponent(H)); }, py::arg("k"), py::arg("H"));
  m.def("rho_window_sum", [](double H, std::int64_t m_) { return rho_window_sum(HurstExponent(H), m_); });
  m.def("rho_window_closed_form", [](double H, std::int64_t m_) { return rho_window_closed_form(HurstExponent(H), m_); });
  m.def(
      "sum_rho_cubed",
      [](double H, std::int64_t truncation) {
        const auto r = sum_rho_cubed(HurstExponent(H), truncation);
        py::dict d;
        d["value"] = r.value;
        d["partial_sum"] = r.partial_sum;
        d["tail_bound"] = r.tail_bound;
        d["truncation"] = r.truncation;
        return d;
      },
      py::arg("H"), py::arg("truncation") = 1000000);
  m.def("kappa", [] {
    const auto& k = default_kappa();
    return std::vector<double>{k.kappa1, k.kappa2, k.kappa3, k.kappa4};
  });

  m.def("hermite", &hermite_eval, py::arg("q"), py::arg("x"));
  m.def(
      "midpoint_taylor_table",
      [](int max_order) {
        py::dict d;
        for (const auto& [alpha, c] : midpoint_taylor_table(max_order).entries) {
          std::ostringstream os;
          os << c;
          d[py::make_tuple(alpha.first, alpha.second)] = os.str();
        }
        return d;
      },
      py::arg("max_order") = 13);

  m.def(
      "sample_fgn",
      [](double H, std::int64_t count, std::uint64_t seed) {
        CounterRng rng(seed);
        return to_array(sample_fgn(HurstExponent(H), count, rng));
      },
      py::arg("H"), py::arg("count"), py::arg("seed"));
  m.def(
      "sample_fbm",
      [](double H, int n, std::int64_t j_min, std::int64_t j_max, std::uint64_t seed) {
        const auto p = sample_fbm_2d(HurstExponent(H), DyadicLevel(n), j_min, j_max, seed);
        return py::make_tuple(to_array(p.values1), to_array(p.values2));
      },
      py::arg("H"), py::arg("n"), py::arg("j_min"), py::arg("j_max"), py::arg("seed"));
  m.def(
      "sample_skeleton",
      [](int n, std::int64_t steps, std::uint64_t seed) {
        return sample_skeleton(DyadicLevel(n), steps, seed).positions;
      },
      py::arg("n"), py::arg("steps"), py::arg("seed"));

  m.def(
      "v_pq",
      [](const std::string& f, double H, int n, double t, int p, int q, std::uint64_t seed) {
        const auto path = sample_fbm_for_time(HurstExponent(H), DyadicLevel(n), t, seed);
        return statistic_dict(v_pq(TestFunction2D::parse(f), path, t, p, q));
      },
      py::arg("f"), py::arg("H"), py::arg("n"), py::arg("t"), py::arg("p"), py::arg("q"), py::arg("seed"));
  m.def(
      "v3",
      [](const std::string& f, int n, double t, std::uint64_t seed) {
        const auto path = sample_fbm_for_time(HurstExponent(1.0 / 6.0), DyadicLevel(n), t, seed);
        return statistic_dict(v3(TestFunction2D::parse(f), path, t));
      },
      py::arg("f"), py::arg("n"), py::arg("t"), py::arg("seed"));
  m.def(
      "o_tilde_n",
      [](const std::string& f, double H, int n, double t, std::uint64_t seed) {
        const auto z = sample_fbmbt(HurstExponent(H), DyadicLevel(n), t, seed);
        auto d = statistic_dict(o_tilde_n(TestFunction2D::parse(f), z.fbm, z.walk, t));
        d["z_end"] = py::make_tuple(z.z1_end(), z.z2_end());
        return d;
      },
      py::arg("f"), py::arg("H"), py::arg("n"), py::arg("t"), py::arg("seed"));
  m.def(
      "sample_correction",
      [](const std::string& f, double t, std::uint64_t seed, bool brownian_time, double mesh) {
        const auto g = TestFunction2D::parse(f);
        const auto c = brownian_time ? sample_correction_fbmbt(g, t, mesh, seed) : sample_correction_fbm(g, t, mesh, seed);
        py::dict d;
        d["value"] = c.value;
        d["t_effective"] = c.t_effective;
        d["mesh"] = c.mesh;
        d["x_end"] = py::make_tuple(c.x1_end, c.x2_end);
        return d;
      },
      py::arg("f"), py::arg("t"), py::arg("seed"), py::arg("brownian_time") = false, py::arg("mesh") = kDefaultMesh);

  m.def("ks_two_sample", [](const std::vector<double>& a, const std::vector<double>& b) {
    const auto r = ks_two_sample(a, b);
    return py::make_tuple(r.statistic, r.p_value);
  });
  m.def("fit_rate", [](const std::vector<int>& ns, const std::vector<double>& values) {
    const auto r = fit_rate(ns, values);
    return py::make_tuple(r.slope, r.intercept, r.r_squared);
  });

  m.def(
      "_run_experiment",
      [](const std::string& config_json, unsigned workers) {
        const auto cfg = parse_config(nlohmann::json::parse(config_json));
        ExperimentReport report;
        {
          py::gil_scoped_release release;
          report = run_experiment(cfg, workers);
        }
        std::ostringstream csv;
        write_csv(report, csv);
        return py::make_tuple(report.summary.dump(), csv.str(), report.all_pass);
      },
      py::arg("config_json"), py::arg("workers") = 1);
  m.attr("__version__") = FBMBT_VERSION;
}
