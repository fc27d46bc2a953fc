#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>
#include <vector>

#include "incmap/graph.hpp"
#include "incmap/pose2.hpp"

namespace incmap {

struct TimeShiftReport {
  double time_range = 0.0;  // sum of cluster time ranges
  double delta_imu = 0.0;   // sum of preintegrated first-sample shifts
  double total() const { return time_range + delta_imu; }
};

TimeShiftReport total_time_shift(const CandidateGraph& candidate);

struct TimedPose {
  double t = 0.0;
  Pose2 pose;
};

// Piecewise-linear translation, angle-interpolated rotation.
Pose2 interpolate_pose(std::span<const TimedPose> traj, double t);

struct RpeResult {
  double rmse_trans = 0.0;  // meters
  double rmse_rot = 0.0;    // radians
};

// RMSE of relative pose errors over consecutive matched-timestamp pairs; the
// reference is interpolated at the estimate's timestamps.
RpeResult rpe_rmse(std::span<const TimedPose> est, std::span<const TimedPose> ref);

struct MomParams {
  int k_nn = 10;
  double radius = 0.5;               // neighbor search radius, meters
  double orth_tol = 0.17364817766693041;  // cos(80 deg) on |dot| of group means
  int min_group = 30;
  double group_angle_tol_deg = 10.0;  // normal-clustering tolerance
};

struct MomResult {
  double value = 0.0;  // E^MOM_P = (V_x + V_y + V_z) / 3
  bool applicable = false;
  std::array<double, 3> group_variance{0.0, 0.0, 0.0};
  std::array<int, 3> group_size{0, 0, 0};
};

// Plane-variance map metric over one aggregated submap: PCA normals, grouping
// into three mutually orthogonal directions, mean smallest eigenvalue per
// group. Inapplicable (flagged) when no orthogonal triple of groups exists.
MomResult mom_local(std::span<const Eigen::Vector3d> points, const MomParams& params = {});

}  // namespace incmap
