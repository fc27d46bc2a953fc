#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "incmap/core.hpp"
#include "incmap/pipeline.hpp"
#include "incmap/simgen.hpp"

namespace incmap {

std::uint64_t fnv1a64(std::string_view data);
std::string to_hex(std::uint64_t v);

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, std::string_view content);

// Strict key=value run configuration; unknown keys are rejected.
struct RunConfig {
  std::uint64_t seed = 42;
  std::string scenario = "mom";

  // Simulation.
  double duration = 10.0;
  std::string regime = "constant_speed";
  double v_max = 1.5;
  double turn_rate = 0.0;
  double world_extent = 20.0;
  double start_x = 0.0;
  double start_y = 2.0;
  int scan_points = 200;
  double scan_range = 8.0;
  double jitter = 0.0;
  double dropout = 0.0;
  SimNoise noise;
  double period_lidar_left = 0.45;
  double period_lidar_right = 0.50;
  double period_gps = 0.90;
  double period_imu = 0.05;  // 0 disables a sensor

  // Pipeline.
  PipelineConfig pipeline;

  static RunConfig parse(const std::string& text);
  std::string canonical() const;  // deterministic round-trippable dump

  std::vector<SensorSpec> sensors() const;
  SimConfig sim_config() const;
  MotionProfile motion_profile() const;
};

// Stream / truth text formats (versioned header, integer nanoseconds, %.17g
// payload values; write-parse-write is byte stable).
std::string serialize_stream(const MeasurementSequence& stream,
                             std::span<const SensorSpec> sensors);
struct ParsedStream {
  MeasurementSequence stream;
  std::vector<SensorSpec> sensors;
};
ParsedStream parse_stream(const std::string& text);

std::string serialize_truth(std::span<const TimedPose> truth);
std::vector<TimedPose> parse_truth(const std::string& text);

std::string serialize_map_xyz(std::span<const Eigen::Vector3d> points);

// Table-I-style per-run report.
struct ReportValues {
  std::string scenario;
  double total_time_shift = 0.0;
  double solver_error = 0.0;
  double rpe_m = 0.0;
  double rpe_deg = 0.0;
  std::int64_t clusters = 0;
  std::int64_t vertices = 0;
  std::int64_t factors = 0;
  double compression_pct = 0.0;
};
std::string serialize_report(const ReportValues& v, const std::string& manifest_hash);
ReportValues parse_report(const std::string& text, std::string* manifest_hash = nullptr,
                          std::string* stream_hash = nullptr);

// Command layer (the CLI binary is a thin wrapper around these).
void cmd_simulate(const std::filesystem::path& config_path,
                  const std::filesystem::path& out_dir);
void cmd_run(const std::filesystem::path& stream_path, const std::filesystem::path& truth_path,
             const std::string& scenario, const std::filesystem::path& out_dir,
             const std::filesystem::path& config_path = {}, int workers_override = -1);
// Joined comparison across run directories; returns aligned text, optionally
// writes the combined CSV.
std::string cmd_report(const std::vector<std::filesystem::path>& run_dirs,
                       const std::filesystem::path& csv_out = {});
std::string cmd_enumerate(int n, bool list);

}  // namespace incmap
