#pragma once

// H = 1/6 limit objects: the kappa constants and samplers for the third-order
// correction integrals against independent Brownian motions.

#include <cstdint>

#include "fbmbt/fgn.hpp"
#include "fbmbt/test_function.hpp"

namespace fbmbt {

struct KappaConstants {
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  double kappa3 = 0.0;
  double kappa4 = 0.0;
  RhoSeriesResult source;
};

/// kappa1 = kappa2 = sqrt(S/96), kappa3 = kappa4 = sqrt(S/32). Requires series.H = 1/6.
KappaConstants kappa_constants(const RhoSeriesResult& series);

/// Constants from sum_rho_cubed(1/6, 10^6), computed once.
const KappaConstants& default_kappa();

struct CorrectionSample {
  double value = 0.0;
  double t_effective = 0.0;  // t, or the drawn Y_t
  double mesh = 0.0;         // step actually used
  std::uint64_t seed = 0;
  double x1_end = 0.0;  // X at t_effective
  double x2_end = 0.0;
};

inline constexpr double kDefaultMesh = 0x1.0p-10;

/// Left-point sum of kappa1 f_111 dB^1 + kappa2 f_222 dB^2 + kappa3 f_112 dB^3
/// + kappa4 f_122 dB^4 along a fresh H = 1/6 fBm on [0, t]. The step is
/// t / 2^m with m the smallest level giving a step <= mesh. The Brownian paths
/// are built by midpoint refinement, so halving the mesh refines the same paths.
CorrectionSample sample_correction_fbm(const TestFunction2D& f, double t, double mesh, std::uint64_t seed);

/// Same integral up to Y_t ~ N(0, t), drawn independently of X and B. The step
/// bound is mesh * max(1, |Y_t|). For Y_t < 0 the integral runs along the
/// mirrored paths u -> X_{-u}, B_{-u}.
CorrectionSample sample_correction_fbmbt(const TestFunction2D& f, double t, double mesh, std::uint64_t seed);

}  // namespace fbmbt
