#pragma once

// Finite-n functionals on the fBm clock (deterministic grid j * 2^(-n/2)) and on
// the Brownian clock (skeleton steps of the random walk).

#include <array>
#include <cstdint>
#include <string>

#include "fbmbt/fgn.hpp"
#include "fbmbt/skeleton.hpp"
#include "fbmbt/test_function.hpp"

namespace fbmbt {

enum class StatisticKind { O, V_pq, V3, K1, K2, K3, K4, P, O_tilde, Vt_pq, Vt3, W_pq, W3 };

std::string to_string(StatisticKind kind);

struct VariationStatistic {
  StatisticKind kind;
  double value = 0.0;
  double abs_sum = 0.0;  // sum of |term| over the summands
  double H = 0.0;
  int n = 0;
  double t = 0.0;
  int p = 0;
  int q = 0;
  std::uint64_t seed = 0;       // fBm path
  std::uint64_t walk_seed = 0;  // skeleton, when used
};

/// Number of increments on the fBm clock up to time |t|: floor(|t| 2^(n/2)).
/// Products within a few ulps of an integer are snapped to it.
std::int64_t grid_count(double t, DyadicLevel level);
/// Number of skeleton steps up to time t: floor(2^n t).
std::int64_t skeleton_count(double t, DyadicLevel level);

VariationStatistic o_n(const TestFunction2D& f, const FbmGridPath2D& path, double t);
VariationStatistic v_pq(const TestFunction2D& f, const FbmGridPath2D& path, double t, int p, int q);
/// V^{p,q} with x^p, x^q replaced by their Hermite expansions at the
/// increment standard deviation 2^(-nH/2).
VariationStatistic v_pq_hermite(const TestFunction2D& f, const FbmGridPath2D& path, double t, int p, int q);
VariationStatistic v3(const TestFunction2D& f, const FbmGridPath2D& path, double t);
std::array<VariationStatistic, 4> k_components(const TestFunction2D& f, const FbmGridPath2D& path, double t);
VariationStatistic p_n(const TestFunction2D& f, const FbmGridPath2D& path, double t);

VariationStatistic o_tilde_n(const TestFunction2D& f, const FbmGridPath2D& fbm, const SkeletonPath& walk, double t);
VariationStatistic v_tilde_pq(const TestFunction2D& f, const FbmGridPath2D& fbm, const SkeletonPath& walk, double t,
                              int p, int q);
VariationStatistic v_tilde_3(const TestFunction2D& f, const FbmGridPath2D& fbm, const SkeletonPath& walk, double t);

/// One-sided sums over the first floor(|t| 2^(n/2)) increments of X (t >= 0)
/// or of the reversed process u -> X_{-u} (t < 0).
VariationStatistic w_pq(const TestFunction2D& f, const FbmGridPath2D& fbm, double t_signed, int p, int q);
VariationStatistic w3(const TestFunction2D& f, const FbmGridPath2D& fbm, double t_signed);

/// V~^{p,q} as a spatial sum weighted by the signed crossing counts U_j - D_j.
VariationStatistic kl_reduce(const TestFunction2D& f, const FbmGridPath2D& fbm, const SkeletonPath& walk, double t,
                             int p, int q);

/// fBm on [0, grid_count(t)] at level n.
FbmGridPath2D sample_fbm_for_time(HurstExponent H, DyadicLevel level, double t, std::uint64_t seed);

/// A skeleton with floor(2^n t) steps and the fBm on its visited range, both
/// drawn from `seed` on disjoint streams.
struct FbmbtPath {
  SkeletonPath walk;
  FbmGridPath2D fbm;

  /// Z at the final skeleton step.
  double z1_end() const { return fbm.x1(walk.positions.back()); }
  double z2_end() const { return fbm.x2(walk.positions.back()); }
};

FbmbtPath sample_fbmbt(HurstExponent H, DyadicLevel level, double t, std::uint64_t seed);

}  // namespace fbmbt
