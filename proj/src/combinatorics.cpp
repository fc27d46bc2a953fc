#include "incmap/combinatorics.hpp"

#include <algorithm>

namespace incmap {

std::vector<MergeMask> enumerate_merges(int n, int n_max) {
  if (n < 1) throw ConfigError("enumerate_merges: n must be >= 1");
  if (n > n_max) {
    throw ConfigError("combination explosion: n=" + std::to_string(n) + " exceeds cap " +
                      std::to_string(n_max) + "; shrink the epoch window");
  }
  const std::uint64_t count = std::uint64_t{1} << (n - 1);
  std::vector<MergeMask> masks;
  masks.reserve(count);
  for (std::uint64_t bits = 0; bits < count; ++bits) {
    masks.push_back(MergeMask{bits, n});
  }
  return masks;
}

namespace {

// Does any continuous measurement fall strictly inside (t_lo, t_hi)?
bool span_has_continuous(double t_lo, double t_hi, std::span<const Measurement> continuous) {
  auto it = std::lower_bound(continuous.begin(), continuous.end(), t_lo,
                             [](const Measurement& m, double t) { return m.timestamp <= t; });
  return it != continuous.end() && it->timestamp < t_hi;
}

}  // namespace

std::vector<ConnectionTiling> enumerate_tilings(const ClusterCombination& comb,
                                                std::span<const Measurement> continuous) {
  const int k = static_cast<int>(comb.clusters.size());
  if (k <= 1) return {ConnectionTiling{}};

  // Usable intervals: (i, j) with continuous data strictly inside the span.
  std::vector<std::vector<int>> ends_from(k);  // ends_from[i] = usable j > i
  for (int i = 0; i + 1 < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      if (span_has_continuous(comb.clusters[i].timestamp, comb.clusters[j].timestamp,
                              continuous)) {
        ends_from[i].push_back(j);
      }
    }
  }

  // Full covers: partition the k-1 gaps into contiguous interval runs.
  std::vector<ConnectionTiling> out;
  ConnectionTiling current;
  auto extend = [&](auto&& self, int at) -> void {
    if (at == k - 1) {
      out.push_back(current);
      return;
    }
    for (int j : ends_from[at]) {
      current.intervals.emplace_back(at, j);
      self(self, j);
      current.intervals.pop_back();
    }
  };
  extend(extend, 0);

  std::sort(out.begin(), out.end());
  if (out.empty()) out.push_back(ConnectionTiling{});  // rely on core factors
  return out;
}

CombinationCount count_closed_form(int n) {
  if (n < 1) throw ConfigError("count_closed_form: n must be >= 1");
  if (n > 41) throw ConfigError("count_closed_form: overflow for n > 41");
  CombinationCount c;
  c.n_core = n;
  c.merge_count = std::uint64_t{1} << (n - 1);
  std::uint64_t pow3 = 1;
  for (int i = 0; i < n - 1; ++i) pow3 *= 3;
  c.total_with_connections = (pow3 + 1) / 2;  // ceil(3^(n-1) / 2)
  return c;
}

CombinationCount brute_force_oracle(int n) {
  if (n < 1) throw ConfigError("brute_force_oracle: n must be >= 1");
  if (n > 12) throw ConfigError("brute_force_oracle: refusing n > 12");

  // Synthetic timestamps with one continuous sample inside every gap.
  std::vector<Measurement> core(n), continuous;
  for (int i = 0; i < n; ++i) {
    core[i].timestamp = static_cast<double>(i);
    core[i].kind = SensorKind::gps;
  }
  for (int i = 0; i + 1 < n; ++i) {
    Measurement m;
    m.timestamp = i + 0.5;
    m.kind = SensorKind::continuous;
    continuous.push_back(m);
  }

  CombinationCount c;
  c.n_core = n;
  c.merge_count = 0;
  c.total_with_connections = 0;
  for (const MergeMask& mask : enumerate_merges(n, 12)) {
    auto comb = apply_merge_mask(mask, core);
    if (!comb) continue;
    ++c.merge_count;
    c.total_with_connections += enumerate_tilings(*comb, continuous).size();
  }
  return c;
}

}  // namespace incmap
