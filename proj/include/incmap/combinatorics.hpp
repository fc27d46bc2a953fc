#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "incmap/core.hpp"

namespace incmap {

// One preintegrated connection per interval; (i, j) spans clusters i..j
// (0-based, i < j) and covers gaps i..j-1. A tiling covers every gap of the
// combination exactly once with non-overlapping intervals.
struct ConnectionTiling {
  std::vector<std::pair<int, int>> intervals;

  bool operator==(const ConnectionTiling& o) const { return intervals == o.intervals; }
  bool operator<(const ConnectionTiling& o) const { return intervals < o.intervals; }
};

struct CombinationCount {
  int n_core = 0;
  std::uint64_t merge_count = 0;           // 2^(n-1)
  std::uint64_t total_with_connections = 0;  // ceil(3^(n-1) / 2)
};

// All 2^(n-1) merge masks in ascending bitmask order.
// Throws ConfigError("combination explosion") when n exceeds n_max.
std::vector<MergeMask> enumerate_merges(int n, int n_max = 16);

// All full-coverage connection tilings for a combination given the available
// continuous measurements. An interval (i, j) is usable only if at least one
// continuous measurement lies strictly inside (t^C_i, t^C_j). K = 1 yields the
// single empty tiling. When no full cover exists (or there are no continuous
// measurements at all) the single empty tiling is returned and the candidate
// must connect through core-induced factors.
std::vector<ConnectionTiling> enumerate_tilings(const ClusterCombination& comb,
                                                std::span<const Measurement> continuous);

// Closed-form counts; exact integer arithmetic, throws ConfigError on overflow.
CombinationCount count_closed_form(int n);

// Literal enumeration of compositions x gap tilings (every gap assumed to
// hold continuous data). Refuses n > 12.
CombinationCount brute_force_oracle(int n);

}  // namespace incmap
