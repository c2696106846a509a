#include "fbmbt/skeleton.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "fbmbt/rng.hpp"

namespace fbmbt {

namespace {

void check_horizon(const SkeletonPath& path, std::int64_t horizon) {
  if (horizon < 0 || horizon > path.steps()) {
    throw std::invalid_argument("horizon " + std::to_string(horizon) + " outside [0, " +
                                std::to_string(path.steps()) + "]");
  }
}

}  // namespace

std::int64_t SkeletonPath::min_position() const {
  return *std::min_element(positions.begin(), positions.end());
}

std::int64_t SkeletonPath::max_position() const {
  return *std::max_element(positions.begin(), positions.end());
}

std::int64_t CrossingTable::up_at(std::int64_t j) const {
  const auto i = j - j_min;
  if (i < 0 || i >= static_cast<std::int64_t>(up.size())) return 0;
  return up[static_cast<std::size_t>(i)];
}

std::int64_t CrossingTable::down_at(std::int64_t j) const {
  const auto i = j - j_min;
  if (i < 0 || i >= static_cast<std::int64_t>(down.size())) return 0;
  return down[static_cast<std::size_t>(i)];
}

SkeletonPath sample_skeleton(DyadicLevel level, std::int64_t steps, std::uint64_t seed) {
  if (steps < 0) throw std::invalid_argument("sample_skeleton: negative step count");
  SkeletonPath path{level, {}, seed};
  path.positions.resize(static_cast<std::size_t>(steps) + 1);
  path.positions[0] = 0;
  CounterRng rng(stream_seed(seed, streams::kWalk));
  std::uint64_t bits = 0;
  int left = 0;
  std::int64_t s = 0;
  for (std::int64_t k = 1; k <= steps; ++k) {
    if (left == 0) {
      bits = rng.next_u64();
      left = 64;
    }
    s += (bits & 1U) ? 1 : -1;
    bits >>= 1;
    --left;
    path.positions[static_cast<std::size_t>(k)] = s;
  }
  return path;
}

SkeletonPath skeleton_from_positions(DyadicLevel level, std::vector<std::int64_t> positions) {
  if (positions.empty() || positions.front() != 0) {
    throw std::invalid_argument("skeleton path must start at 0");
  }
  for (std::size_t k = 1; k < positions.size(); ++k) {
    const auto d = positions[k] - positions[k - 1];
    if (d != 1 && d != -1) throw std::invalid_argument("skeleton steps must be +-1");
  }
  return SkeletonPath{level, std::move(positions), 0};
}

CrossingTable crossings_bruteforce(const SkeletonPath& path, std::int64_t horizon) {
  check_horizon(path, horizon);
  CrossingTable table;
  table.horizon = horizon;
  if (horizon == 0) return table;
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  for (std::int64_t k = 0; k <= horizon; ++k) {
    lo = std::min(lo, path.positions[static_cast<std::size_t>(k)]);
    hi = std::max(hi, path.positions[static_cast<std::size_t>(k)]);
  }
  table.j_min = lo;
  table.up.assign(static_cast<std::size_t>(hi - lo), 0);
  table.down.assign(static_cast<std::size_t>(hi - lo), 0);
  for (std::int64_t k = 0; k < horizon; ++k) {
    const auto a = path.positions[static_cast<std::size_t>(k)];
    const auto b = path.positions[static_cast<std::size_t>(k + 1)];
    if (b == a + 1) {
      ++table.up[static_cast<std::size_t>(a - lo)];
    } else {
      ++table.down[static_cast<std::size_t>(b - lo)];
    }
  }
  return table;
}

std::map<std::int64_t, int> signed_crossings_closed_form(const SkeletonPath& path, std::int64_t horizon) {
  check_horizon(path, horizon);
  const auto j_star = path.positions[static_cast<std::size_t>(horizon)];
  std::map<std::int64_t, int> out;
  for (std::int64_t j = 0; j < j_star; ++j) out.emplace_hint(out.end(), j, 1);
  for (std::int64_t j = j_star; j < 0; ++j) out.emplace_hint(out.end(), j, -1);
  return out;
}

double terminal_y(const SkeletonPath& path, std::int64_t horizon) {
  check_horizon(path, horizon);
  return static_cast<double>(path.positions[static_cast<std::size_t>(horizon)]) * path.level.spacing();
}

}  // namespace fbmbt
