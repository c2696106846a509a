#pragma once

// Random-walk skeleton of the Brownian time change: the positions of Y at
// its successive hitting times of the grid 2^(-n/2) Z, in grid units.

#include <cstdint>
#include <map>
#include <vector>

#include "fbmbt/fgn.hpp"

namespace fbmbt {

struct SkeletonPath {
  DyadicLevel level;
  std::vector<std::int64_t> positions;  // s_0 = 0, |s_{k+1} - s_k| = 1
  std::uint64_t seed = 0;

  std::int64_t steps() const noexcept { return static_cast<std::int64_t>(positions.size()) - 1; }
  std::int64_t min_position() const;
  std::int64_t max_position() const;
};

/// Up/down crossing counts of [j, j+1] (grid units) over the first `horizon` steps.
struct CrossingTable {
  std::int64_t j_min = 0;  // index of up[0] / down[0]
  std::vector<std::int64_t> up;
  std::vector<std::int64_t> down;
  std::int64_t horizon = 0;

  bool empty() const noexcept { return up.empty(); }
  std::int64_t up_at(std::int64_t j) const;
  std::int64_t down_at(std::int64_t j) const;
  std::int64_t net(std::int64_t j) const { return up_at(j) - down_at(j); }
};

/// Simple symmetric random walk with `steps` steps, deterministic in `seed`.
SkeletonPath sample_skeleton(DyadicLevel level, std::int64_t steps, std::uint64_t seed);

/// Builds a path from explicit positions; validates s_0 = 0 and unit steps.
SkeletonPath skeleton_from_positions(DyadicLevel level, std::vector<std::int64_t> positions);

/// Counts crossings step by step.
CrossingTable crossings_bruteforce(const SkeletonPath& path, std::int64_t horizon);

/// U_j - D_j from the terminal position alone: +1 on [0, j*), -1 on [j*, 0).
std::map<std::int64_t, int> signed_crossings_closed_form(const SkeletonPath& path, std::int64_t horizon);

/// Y at the horizon-th hitting time: s_horizon * 2^(-n/2).
double terminal_y(const SkeletonPath& path, std::int64_t horizon);

}  // namespace fbmbt
