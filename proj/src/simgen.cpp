#include "incmap/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

namespace incmap {

int WorldModel::orthogonal_directions() const {
  std::vector<Eigen::Vector3d> dirs;
  for (const auto& s : surfaces) {
    bool seen = false;
    for (const auto& d : dirs) {
      if (std::abs(d.dot(s.normal)) > 0.99) seen = true;
    }
    if (!seen) dirs.push_back(s.normal.normalized());
  }
  return static_cast<int>(dirs.size());
}

WorldModel make_default_world(double extent) {
  WorldModel w;
  w.extent = extent;
  // Floor.
  w.surfaces.push_back(Surface{{-2.0, -2.0, 0.0},
                               Eigen::Vector3d::UnitX(),
                               Eigen::Vector3d::UnitY(),
                               extent + 6.0,
                               10.0,
                               Eigen::Vector3d::UnitZ()});
  // Long side wall along +x at y = 6.
  w.surfaces.push_back(Surface{{-2.0, 6.0, 0.0},
                               Eigen::Vector3d::UnitX(),
                               Eigen::Vector3d::UnitZ(),
                               extent + 6.0,
                               3.0,
                               -Eigen::Vector3d::UnitY()});
  // Cross walls every 5 m (fences with x-facing normals).
  for (double x = -1.0; x < extent + 3.0; x += 5.0) {
    w.surfaces.push_back(Surface{{x, -2.0, 0.0},
                                 Eigen::Vector3d::UnitY(),
                                 Eigen::Vector3d::UnitZ(),
                                 8.0,
                                 2.0,
                                 Eigen::Vector3d::UnitX()});
  }
  return w;
}

const char* to_string(MotionRegime r) {
  switch (r) {
    case MotionRegime::zero_speed: return "zero_speed";
    case MotionRegime::acceleration: return "acceleration";
    case MotionRegime::constant_speed: return "constant_speed";
    case MotionRegime::deceleration: return "deceleration";
  }
  return "?";
}

MotionRegime motion_regime_from_string(const std::string& s) {
  if (s == "zero_speed") return MotionRegime::zero_speed;
  if (s == "acceleration") return MotionRegime::acceleration;
  if (s == "constant_speed") return MotionRegime::constant_speed;
  if (s == "deceleration") return MotionRegime::deceleration;
  throw ConfigError("unknown motion regime: " + s);
}

double MotionProfile::speed_at(double t) const {
  const double s = std::clamp(t / duration, 0.0, 1.0);
  switch (regime) {
    case MotionRegime::zero_speed: return 0.0;
    case MotionRegime::acceleration: return v_max * s;
    case MotionRegime::constant_speed: return v_max;
    case MotionRegime::deceleration: return v_max * (1.0 - s);
  }
  return 0.0;
}

std::vector<SensorSpec> default_sensors() {
  return {
      SensorSpec{"lidar_left", SensorKind::scan, 0.45},
      SensorSpec{"lidar_right", SensorKind::scan, 0.50},
      SensorSpec{"gps", SensorKind::gps, 0.90},
      SensorSpec{"imu", SensorKind::continuous, 0.05},
  };
}

namespace {

constexpr double kSensorHeight = 1.0;

std::vector<Eigen::Vector3d> sample_scan(const WorldModel& world, const Pose2& pose,
                                         const SimConfig& cfg, std::mt19937_64& rng) {
  auto points = std::vector<Eigen::Vector3d>();
  points.reserve(static_cast<std::size_t>(cfg.scan_points));
  const Eigen::Vector3d sensor_pos(pose.x, pose.y, kSensorHeight);
  std::uniform_int_distribution<std::size_t> pick(0, world.surfaces.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> range_noise(0.0, cfg.noise.scan_range_sigma);
  const Eigen::Matrix2d rt = pose.rotation().transpose();
  int tries = 0;
  const int max_tries = cfg.scan_points * 100;
  while (static_cast<int>(points.size()) < cfg.scan_points && tries++ < max_tries) {
    const Surface& s = world.surfaces[pick(rng)];
    Eigen::Vector3d p = s.origin + unit(rng) * s.len_u * s.u + unit(rng) * s.len_v * s.v;
    const Eigen::Vector3d ray = p - sensor_pos;
    const double dist = ray.norm();
    if (dist > cfg.scan_range || dist < 0.1) continue;
    if (cfg.noise.scan_range_sigma > 0.0) p += range_noise(rng) * (ray / dist);
    // Into the sensor frame: planar rotation, z kept absolute.
    const Eigen::Vector2d xy = rt * (p.head<2>() - pose.translation());
    points.emplace_back(xy.x(), xy.y(), p.z());
  }
  return points;
}

}  // namespace

SimOutput generate(const WorldModel& world, const MotionProfile& profile, const SimConfig& cfg,
                   std::uint64_t seed) {
  SimOutput out;

  // Dense ground truth by exact per-step twist integration.
  Pose2 pose(cfg.start_x, cfg.start_y, 0.0);
  for (double t = 0.0; t <= profile.duration + 1e-9; t += cfg.truth_dt) {
    out.truth.push_back(TimedPose{t, pose});
    const double v = profile.speed_at(t);
    pose = pose.compose(
        exp_twist({v * cfg.truth_dt, 0.0, profile.turn_rate * cfg.truth_dt}));
  }
  auto truth_at = [&](double t) { return interpolate_pose(out.truth, t); };

  std::vector<Measurement> all;
  int sensor_index = 0;
  for (const auto& spec : cfg.sensors) {
    if (spec.nominal_period <= 0.0) throw ConfigError("sensor period must be > 0");
    std::mt19937_64 rng(seed ^ (std::hash<std::string>{}(spec.sensor_id) | 1));
    std::normal_distribution<double> jitter(0.0, cfg.jitter);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // Per-sensor phase offset avoids exact cross-sensor timestamp ties.
    const double phase = 0.003 * static_cast<double>(sensor_index + 1);
    ++sensor_index;

    double last_scan_time = -1.0;
    // k * period + phase for k = 1..floor(duration / period); the phase may
    // push the last sample marginally past the nominal duration.
    const auto samples = static_cast<std::int64_t>(profile.duration / spec.nominal_period);
    for (std::int64_t k = 1; k <= samples; ++k) {
      double t = static_cast<double>(k) * spec.nominal_period + phase;
      if (cfg.jitter > 0.0) t += jitter(rng);
      if (t < 0.0) continue;
      if (cfg.dropout > 0.0 && unit(rng) < cfg.dropout) continue;

      Measurement m;
      m.sensor_id = spec.sensor_id;
      m.timestamp = t;
      m.kind = spec.kind;
      const Pose2 truth_pose = truth_at(t);

      switch (spec.kind) {
        case SensorKind::gps: {
          GpsPayload p;
          p.position = truth_pose.translation() +
                       Eigen::Vector2d(gauss(rng), gauss(rng)) * cfg.noise.gps_sigma;
          p.cov = Eigen::Matrix2d::Identity() *
                  std::max(cfg.noise.gps_sigma * cfg.noise.gps_sigma, 1e-12);
          m.payload = std::move(p);
          break;
        }
        case SensorKind::continuous: {
          RatePayload p;
          p.linear = Eigen::Vector2d(profile.speed_at(t), 0.0) +
                     Eigen::Vector2d(gauss(rng), gauss(rng)) * cfg.noise.rate_sigma_v;
          p.angular = profile.turn_rate + gauss(rng) * cfg.noise.rate_sigma_w;
          p.cov = Eigen::Vector3d(cfg.noise.rate_sigma_v * cfg.noise.rate_sigma_v,
                                  cfg.noise.rate_sigma_v * cfg.noise.rate_sigma_v,
                                  cfg.noise.rate_sigma_w * cfg.noise.rate_sigma_w)
                      .cwiseMax(1e-12)
                      .asDiagonal();
          m.payload = std::move(p);
          break;
        }
        case SensorKind::scan: {
          ScanPayload p;
          p.points = std::make_shared<const std::vector<Eigen::Vector3d>>(
              sample_scan(world, truth_pose, cfg, rng));
          if (last_scan_time >= 0.0) {
            p.has_relative = true;
            Pose2 rel = truth_at(last_scan_time).between(truth_pose);
            p.relative = Pose2(rel.x + gauss(rng) * cfg.noise.odom_sigma_xy,
                               rel.y + gauss(rng) * cfg.noise.odom_sigma_xy,
                               rel.theta + gauss(rng) * cfg.noise.odom_sigma_theta);
          }
          p.relative_cov =
              Eigen::Vector3d(cfg.noise.odom_sigma_xy * cfg.noise.odom_sigma_xy,
                              cfg.noise.odom_sigma_xy * cfg.noise.odom_sigma_xy,
                              cfg.noise.odom_sigma_theta * cfg.noise.odom_sigma_theta)
                  .cwiseMax(1e-12)
                  .asDiagonal();
          last_scan_time = t;
          m.payload = std::move(p);
          break;
        }
      }
      all.push_back(std::move(m));
    }
  }

  out.stream = MeasurementSequence::from_unsorted(std::move(all));
  return out;
}

double coincidence_peak_epoch(std::span<const SensorSpec> sensors) {
  if (sensors.empty()) throw DataError("coincidence_peak_epoch: no sensors");
  std::uint64_t lcm_ns = 1;
  for (const auto& s : sensors) {
    if (s.nominal_period <= 0.0) throw DataError("coincidence_peak_epoch: zero period");
    const double ns_f = s.nominal_period * 1e9;
    const std::uint64_t ns = static_cast<std::uint64_t>(std::llround(ns_f));
    if (ns == 0 || std::abs(ns_f - static_cast<double>(ns)) > 1e-3 * std::max(1.0, ns_f * 1e-9)) {
      throw DataError("coincidence_peak_epoch: period not representable on ns grid");
    }
    const std::uint64_t g = std::gcd(lcm_ns, ns);
    const std::uint64_t next = lcm_ns / g * ns;
    if (next / ns != lcm_ns / g) throw DataError("coincidence_peak_epoch: overflow");
    lcm_ns = next;
  }
  return static_cast<double>(lcm_ns) * 1e-9;
}

}  // namespace incmap
