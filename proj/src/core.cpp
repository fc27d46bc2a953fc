#include "incmap/core.hpp"

#include <algorithm>
#include <optional>

namespace incmap {

const char* to_string(SensorKind k) {
  switch (k) {
    case SensorKind::scan: return "scan";
    case SensorKind::gps: return "gps";
    case SensorKind::continuous: return "continuous";
  }
  return "?";
}

SensorKind sensor_kind_from_string(const std::string& s) {
  if (s == "scan") return SensorKind::scan;
  if (s == "gps") return SensorKind::gps;
  if (s == "continuous") return SensorKind::continuous;
  throw DataError("unknown sensor kind: " + s);
}

MeasurementSequence MeasurementSequence::from_unsorted(std::vector<Measurement> items) {
  std::stable_sort(items.begin(), items.end(), [](const Measurement& a, const Measurement& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.sensor_id < b.sensor_id;
  });
  return MeasurementSequence{std::move(items)};
}

bool MeasurementSequence::sorted() const {
  return std::is_sorted(items.begin(), items.end(),
                        [](const Measurement& a, const Measurement& b) {
                          return a.timestamp < b.timestamp;
                        });
}

MeasurementCluster MeasurementCluster::from_members(std::vector<std::size_t> members,
                                                    std::span<const Measurement> core) {
  if (members.empty()) throw PipelineError("empty cluster");
  MeasurementCluster c;
  c.members = std::move(members);
  const std::size_t k = c.members.size();
  // Lower median keeps t^C equal to an actual measurement timestamp.
  c.timestamp = core[c.members[(k - 1) / 2]].timestamp;
  c.time_range = core[c.members.back()].timestamp - core[c.members.front()].timestamp;
  return c;
}

std::size_t ClusterCombination::total_members() const {
  std::size_t n = 0;
  for (const auto& c : clusters) n += c.members.size();
  return n;
}

bool ClusterCombination::operator==(const ClusterCombination& o) const {
  if (clusters.size() != o.clusters.size()) return false;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    if (clusters[i].members != o.clusters[i].members) return false;
  }
  return true;
}

std::pair<std::vector<Measurement>, std::vector<Measurement>> split_measurements(
    const MeasurementSequence& seq) {
  std::vector<Measurement> core, continuous;
  for (const auto& m : seq.items) {
    (m.role() == MeasurementRole::core ? core : continuous).push_back(m);
  }
  if (core.empty()) throw DataError("no core measurements");
  return {std::move(core), std::move(continuous)};
}

ClusterCombination init_clusters(std::span<const Measurement> core) {
  if (core.empty()) throw DataError("no core measurements");
  ClusterCombination comb;
  comb.clusters.reserve(core.size());
  for (std::size_t i = 0; i < core.size(); ++i) {
    comb.clusters.push_back(MeasurementCluster::from_members({i}, core));
  }
  return comb;
}

ClusterCombination merge_adjacent(const ClusterCombination& comb, std::size_t i,
                                  std::span<const Measurement> core) {
  if (i + 1 >= comb.clusters.size()) throw PipelineError("merge_adjacent: index out of range");
  ClusterCombination out;
  out.combination_id = comb.combination_id;
  out.clusters.reserve(comb.clusters.size() - 1);
  for (std::size_t k = 0; k < comb.clusters.size(); ++k) {
    if (k == i) {
      std::vector<std::size_t> members = comb.clusters[i].members;
      members.insert(members.end(), comb.clusters[i + 1].members.begin(),
                     comb.clusters[i + 1].members.end());
      out.clusters.push_back(MeasurementCluster::from_members(std::move(members), core));
      ++k;  // skip i+1
    } else {
      out.clusters.push_back(comb.clusters[k]);
    }
  }
  return out;
}

ClusterCombination coalesce_ties(const ClusterCombination& comb,
                                 std::span<const Measurement> core) {
  ClusterCombination out = comb;
  for (std::size_t i = 0; i + 1 < out.clusters.size();) {
    if (out.clusters[i].timestamp == out.clusters[i + 1].timestamp) {
      out = merge_adjacent(out, i, core);
    } else {
      ++i;
    }
  }
  return out;
}

std::optional<ClusterCombination> apply_merge_mask(const MergeMask& mask,
                                                   std::span<const Measurement> core) {
  if (static_cast<std::size_t>(mask.n) != core.size()) {
    throw PipelineError("merge mask size mismatch");
  }
  ClusterCombination comb;
  comb.combination_id = mask.bits;
  std::vector<std::size_t> run{0};
  for (int i = 0; i + 1 < mask.n; ++i) {
    if (mask.bits >> i & 1) {
      run.push_back(static_cast<std::size_t>(i + 1));
    } else {
      comb.clusters.push_back(MeasurementCluster::from_members(std::move(run), core));
      run = {static_cast<std::size_t>(i + 1)};
    }
  }
  comb.clusters.push_back(MeasurementCluster::from_members(std::move(run), core));
  for (std::size_t i = 0; i + 1 < comb.clusters.size(); ++i) {
    if (!(comb.clusters[i].timestamp < comb.clusters[i + 1].timestamp)) {
      return std::nullopt;  // degenerate tie between derived cluster timestamps
    }
  }
  return comb;
}

}  // namespace incmap
