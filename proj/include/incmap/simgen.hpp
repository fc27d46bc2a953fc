#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "incmap/core.hpp"
#include "incmap/metrics.hpp"

namespace incmap {

// Finite rectangle in 3D: origin + a * u * len_u + b * v * len_v, (a, b) in [0,1]^2.
struct Surface {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d u = Eigen::Vector3d::UnitX();
  Eigen::Vector3d v = Eigen::Vector3d::UnitY();
  double len_u = 1.0;
  double len_v = 1.0;
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
};

// Desk-scale indoor analogue of a structured urban scene: a floor, one long
// side wall, and cross walls, spanning three orthogonal directions.
struct WorldModel {
  std::vector<Surface> surfaces;
  double extent = 20.0;

  // Distinct surface normal directions (sign-invariant).
  int orthogonal_directions() const;
};

WorldModel make_default_world(double extent = 20.0);

enum class MotionRegime { zero_speed, acceleration, constant_speed, deceleration };

const char* to_string(MotionRegime r);
MotionRegime motion_regime_from_string(const std::string& s);

struct MotionProfile {
  MotionRegime regime = MotionRegime::constant_speed;
  double v_max = 1.5;      // m/s, desk scale
  double duration = 10.0;  // seconds
  double turn_rate = 0.0;  // rad/s, constant heading rate

  double speed_at(double t) const;
};

struct SimNoise {
  double gps_sigma = 0.05;           // m
  double odom_sigma_xy = 0.01;       // m
  double odom_sigma_theta = 0.2 * M_PI / 180.0;  // rad
  double rate_sigma_v = 0.02;        // m/s
  double rate_sigma_w = 0.1 * M_PI / 180.0;      // rad/s
  double scan_range_sigma = 0.01;    // m along the ray
};

struct SimConfig {
  std::vector<SensorSpec> sensors;
  SimNoise noise;
  double jitter = 0.0;        // gaussian sigma on sample times, seconds
  double dropout = 0.0;       // per-sample drop probability
  int scan_points = 200;
  double scan_range = 8.0;    // m
  double truth_dt = 0.005;    // dense ground-truth step
  double start_x = 0.0;
  double start_y = 2.0;
};

std::vector<SensorSpec> default_sensors();

struct SimOutput {
  std::vector<TimedPose> truth;
  MeasurementSequence stream;
};

// Seeded synthetic run: unicycle ground truth, per-sensor sample times with
// jitter/dropout, ray-sampled scan payloads, GPS positions, body rates, and
// scan-matcher stand-in odometry between consecutive emitted scans.
SimOutput generate(const WorldModel& world, const MotionProfile& profile, const SimConfig& cfg,
                   std::uint64_t seed);

// LCM of the sensor periods over an integer nanosecond grid.
double coincidence_peak_epoch(std::span<const SensorSpec> sensors);

}  // namespace incmap
