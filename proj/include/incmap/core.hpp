#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "incmap/errors.hpp"
#include "incmap/pose2.hpp"

namespace incmap {

enum class SensorKind { scan, gps, continuous };
enum class MeasurementRole { core, continuous };

const char* to_string(SensorKind k);
SensorKind sensor_kind_from_string(const std::string& s);

inline MeasurementRole role_for(SensorKind k) {
  return k == SensorKind::continuous ? MeasurementRole::continuous : MeasurementRole::core;
}

struct SensorSpec {
  std::string sensor_id;
  SensorKind kind = SensorKind::scan;
  double nominal_period = 0.1;  // seconds, > 0
};

// Point set in the sensor frame plus the scan-matcher stand-in: a relative
// pose to the previous scan of the same sensor (absent for the first scan).
struct ScanPayload {
  std::shared_ptr<const std::vector<Eigen::Vector3d>> points;
  bool has_relative = false;
  Pose2 relative;
  Eigen::Matrix3d relative_cov = Eigen::Matrix3d::Identity();
};

struct GpsPayload {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();
};

// Body rates: planar linear velocity + angular rate.
struct RatePayload {
  Eigen::Vector2d linear = Eigen::Vector2d::Zero();
  double angular = 0.0;
  Eigen::Matrix3d cov = Eigen::Matrix3d::Identity();
};

struct Measurement {
  std::string sensor_id;
  double timestamp = 0.0;  // seconds on the shared time axis
  SensorKind kind = SensorKind::scan;
  std::variant<ScanPayload, GpsPayload, RatePayload> payload;

  MeasurementRole role() const { return role_for(kind); }
};

// Timestamp-sorted sequence; construction enforces the ordering (stable sort
// by timestamp then sensor_id so enumeration is deterministic).
struct MeasurementSequence {
  std::vector<Measurement> items;

  static MeasurementSequence from_unsorted(std::vector<Measurement> items);
  bool sorted() const;
};

// Group of adjacent core measurements, referenced by index into the epoch's
// core list. Timestamp = lower-median member, range = last - first.
struct MeasurementCluster {
  std::vector<std::size_t> members;  // indices into the core list, ascending
  double timestamp = 0.0;            // t^C
  double time_range = 0.0;           // delta T^C

  static MeasurementCluster from_members(std::vector<std::size_t> members,
                                         std::span<const Measurement> core);
};

struct ClusterCombination {
  std::vector<MeasurementCluster> clusters;
  std::uint64_t combination_id = 0;  // bitmask of N-1 merge decisions

  std::size_t total_members() const;
  bool operator==(const ClusterCombination& o) const;
};

// Algorithm step 1: partition by role, preserving order.
// Throws DataError("no core measurements") if the core side is empty.
std::pair<std::vector<Measurement>, std::vector<Measurement>> split_measurements(
    const MeasurementSequence& seq);

// Algorithm step 2: one singleton cluster per core measurement.
ClusterCombination init_clusters(std::span<const Measurement> core);

// Merge clusters i and i+1; timestamp and range recomputed.
ClusterCombination merge_adjacent(const ClusterCombination& comb, std::size_t i,
                                  std::span<const Measurement> core);

// Merge adjacent clusters that share an exact timestamp (cross-sensor ties);
// the result has strictly increasing singleton timestamps.
ClusterCombination coalesce_ties(const ClusterCombination& comb,
                                 std::span<const Measurement> core);

// Apply a merge bitmask (bit i set = merge neighbors i, i+1) to singleton
// clusters. Returns false through the optional if the derived cluster
// timestamps are not strictly increasing (degenerate tie).
struct MergeMask {
  std::uint64_t bits = 0;
  int n = 1;  // number of singleton clusters
};
std::optional<ClusterCombination> apply_merge_mask(const MergeMask& mask,
                                                   std::span<const Measurement> core);

}  // namespace incmap
