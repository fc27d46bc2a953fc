#pragma once

#include <random>
#include <string>
#include <vector>

#include "incmap/core.hpp"

namespace incmap::testing {

inline Measurement make_gps(double t, double x = 0.0, double y = 0.0, double sigma = 0.05,
                            const std::string& sensor = "gps") {
  Measurement m;
  m.sensor_id = sensor;
  m.timestamp = t;
  m.kind = SensorKind::gps;
  GpsPayload p;
  p.position = {x, y};
  p.cov = Eigen::Matrix2d::Identity() * sigma * sigma;
  m.payload = std::move(p);
  return m;
}

inline Measurement make_rate(double t, double vx = 1.0, double vy = 0.0, double w = 0.0,
                             double sigma = 0.02, const std::string& sensor = "imu") {
  Measurement m;
  m.sensor_id = sensor;
  m.timestamp = t;
  m.kind = SensorKind::continuous;
  RatePayload p;
  p.linear = {vx, vy};
  p.angular = w;
  p.cov = Eigen::Matrix3d::Identity() * sigma * sigma;
  m.payload = std::move(p);
  return m;
}

inline Measurement make_scan(double t, const std::string& sensor, bool has_relative,
                             const Pose2& rel = {}, double sigma = 0.01) {
  Measurement m;
  m.sensor_id = sensor;
  m.timestamp = t;
  m.kind = SensorKind::scan;
  ScanPayload p;
  p.has_relative = has_relative;
  p.relative = rel;
  p.relative_cov = Eigen::Matrix3d::Identity() * sigma * sigma;
  m.payload = std::move(p);
  return m;
}

}  // namespace incmap::testing
