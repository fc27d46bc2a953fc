#include "incmap/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace incmap {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot read file: " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, std::string_view content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write file: " + p.string());
  out << content;
  if (!out) throw DataError("write failed: " + p.string());
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::int64_t to_ns(double seconds) { return std::llround(seconds * 1e9); }
double from_ns(std::int64_t ns) { return static_cast<double>(ns) * 1e-9; }

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("invalid numeric value for " + what + ": '" + s + "'");
  }
}

}  // namespace

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig c;
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    // Trim helper.
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    if (trim(line).empty()) continue;
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
    }
    if (!kv.emplace(key, value).second) {
      throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key " + key);
    }
  }

  auto take = [&](const char* key) -> const std::string* {
    auto it = kv.find(key);
    if (it == kv.end()) return nullptr;
    return &it->second;
  };
  auto num = [&](const char* key, double& slot) {
    if (const auto* v = take(key)) slot = parse_double(*v, key);
  };
  auto integer = [&](const char* key, int& slot) {
    if (const auto* v = take(key)) slot = static_cast<int>(parse_double(*v, key));
  };

  if (const auto* v = take("seed")) {
    try {
      c.seed = std::stoull(*v);
    } catch (const std::exception&) {
      throw ConfigError("invalid numeric value for seed: '" + *v + "'");
    }
  }
  if (const auto* v = take("scenario")) {
    scenario_from_string(*v);  // validate
    c.scenario = *v;
  }
  if (const auto* v = take("regime")) {
    motion_regime_from_string(*v);  // validate
    c.regime = *v;
  }
  num("duration", c.duration);
  num("v_max", c.v_max);
  num("turn_rate", c.turn_rate);
  num("world_extent", c.world_extent);
  num("start_x", c.start_x);
  num("start_y", c.start_y);
  integer("scan_points", c.scan_points);
  num("scan_range", c.scan_range);
  num("jitter", c.jitter);
  num("dropout", c.dropout);
  num("gps_sigma", c.noise.gps_sigma);
  num("odom_sigma_xy", c.noise.odom_sigma_xy);
  num("odom_sigma_theta", c.noise.odom_sigma_theta);
  num("rate_sigma_v", c.noise.rate_sigma_v);
  num("rate_sigma_w", c.noise.rate_sigma_w);
  num("scan_range_sigma", c.noise.scan_range_sigma);
  num("period_lidar_left", c.period_lidar_left);
  num("period_lidar_right", c.period_lidar_right);
  num("period_gps", c.period_gps);
  num("period_imu", c.period_imu);
  num("window_seconds", c.pipeline.window_seconds);
  integer("n_max", c.pipeline.n_max);
  integer("workers", c.pipeline.workers);
  integer("relin_horizon", c.pipeline.relin_horizon);
  integer("mom_window", c.pipeline.mom_window);
  integer("mom_knn", c.pipeline.mom.k_nn);
  num("mom_radius", c.pipeline.mom.radius);
  num("mom_orth_tol", c.pipeline.mom.orth_tol);
  integer("mom_min_group", c.pipeline.mom.min_group);
  num("mom_group_angle_deg", c.pipeline.mom.group_angle_tol_deg);

  static const char* known[] = {
      "seed",          "scenario",       "regime",          "duration",
      "v_max",         "turn_rate",      "world_extent",    "start_x",
      "start_y",       "scan_points",    "scan_range",      "jitter",
      "dropout",       "gps_sigma",      "odom_sigma_xy",   "odom_sigma_theta",
      "rate_sigma_v",  "rate_sigma_w",   "scan_range_sigma", "period_lidar_left",
      "period_lidar_right", "period_gps", "period_imu",     "window_seconds",
      "n_max",         "workers",        "relin_horizon",   "mom_window",
      "mom_knn",       "mom_radius",     "mom_orth_tol",    "mom_min_group",
      "mom_group_angle_deg"};
  for (const auto& [key, value] : kv) {
    if (std::find_if(std::begin(known), std::end(known),
                     [&](const char* k) { return key == k; }) == std::end(known)) {
      throw ConfigError("unknown config key: " + key);
    }
  }
  return c;
}

std::string RunConfig::canonical() const {
  std::ostringstream out;
  out << "seed = " << seed << "\n"
      << "scenario = " << scenario << "\n"
      << "regime = " << regime << "\n"
      << "duration = " << fmt(duration) << "\n"
      << "v_max = " << fmt(v_max) << "\n"
      << "turn_rate = " << fmt(turn_rate) << "\n"
      << "world_extent = " << fmt(world_extent) << "\n"
      << "start_x = " << fmt(start_x) << "\n"
      << "start_y = " << fmt(start_y) << "\n"
      << "scan_points = " << scan_points << "\n"
      << "scan_range = " << fmt(scan_range) << "\n"
      << "jitter = " << fmt(jitter) << "\n"
      << "dropout = " << fmt(dropout) << "\n"
      << "gps_sigma = " << fmt(noise.gps_sigma) << "\n"
      << "odom_sigma_xy = " << fmt(noise.odom_sigma_xy) << "\n"
      << "odom_sigma_theta = " << fmt(noise.odom_sigma_theta) << "\n"
      << "rate_sigma_v = " << fmt(noise.rate_sigma_v) << "\n"
      << "rate_sigma_w = " << fmt(noise.rate_sigma_w) << "\n"
      << "scan_range_sigma = " << fmt(noise.scan_range_sigma) << "\n"
      << "period_lidar_left = " << fmt(period_lidar_left) << "\n"
      << "period_lidar_right = " << fmt(period_lidar_right) << "\n"
      << "period_gps = " << fmt(period_gps) << "\n"
      << "period_imu = " << fmt(period_imu) << "\n"
      << "window_seconds = " << fmt(pipeline.window_seconds) << "\n"
      << "n_max = " << pipeline.n_max << "\n"
      << "workers = " << pipeline.workers << "\n"
      << "relin_horizon = " << pipeline.relin_horizon << "\n"
      << "mom_window = " << pipeline.mom_window << "\n"
      << "mom_knn = " << pipeline.mom.k_nn << "\n"
      << "mom_radius = " << fmt(pipeline.mom.radius) << "\n"
      << "mom_orth_tol = " << fmt(pipeline.mom.orth_tol) << "\n"
      << "mom_min_group = " << pipeline.mom.min_group << "\n"
      << "mom_group_angle_deg = " << fmt(pipeline.mom.group_angle_tol_deg) << "\n";
  return out.str();
}

std::vector<SensorSpec> RunConfig::sensors() const {
  std::vector<SensorSpec> out;
  if (period_lidar_left > 0.0) out.push_back({"lidar_left", SensorKind::scan, period_lidar_left});
  if (period_lidar_right > 0.0) {
    out.push_back({"lidar_right", SensorKind::scan, period_lidar_right});
  }
  if (period_gps > 0.0) out.push_back({"gps", SensorKind::gps, period_gps});
  if (period_imu > 0.0) out.push_back({"imu", SensorKind::continuous, period_imu});
  return out;
}

SimConfig RunConfig::sim_config() const {
  SimConfig sc;
  sc.sensors = sensors();
  sc.noise = noise;
  sc.jitter = jitter;
  sc.dropout = dropout;
  sc.scan_points = scan_points;
  sc.scan_range = scan_range;
  sc.start_x = start_x;
  sc.start_y = start_y;
  return sc;
}

MotionProfile RunConfig::motion_profile() const {
  MotionProfile p;
  p.regime = motion_regime_from_string(regime);
  p.v_max = v_max;
  p.duration = duration;
  p.turn_rate = turn_rate;
  return p;
}

std::string serialize_stream(const MeasurementSequence& stream,
                             std::span<const SensorSpec> sensors) {
  std::ostringstream out;
  out << "incmap-stream v1\n";
  for (const auto& s : sensors) {
    out << "sensor " << s.sensor_id << ' ' << to_string(s.kind) << ' '
        << to_ns(s.nominal_period) << "\n";
  }
  for (const auto& m : stream.items) {
    out << "meas " << to_ns(m.timestamp) << ' ' << m.sensor_id << ' ' << to_string(m.kind);
    if (m.kind == SensorKind::gps) {
      const auto& p = std::get<GpsPayload>(m.payload);
      out << ' ' << fmt(p.position.x()) << ' ' << fmt(p.position.y()) << " cov";
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) out << ' ' << fmt(p.cov(i, j));
      }
    } else if (m.kind == SensorKind::continuous) {
      const auto& p = std::get<RatePayload>(m.payload);
      out << ' ' << fmt(p.linear.x()) << ' ' << fmt(p.linear.y()) << ' ' << fmt(p.angular)
          << " cov";
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) out << ' ' << fmt(p.cov(i, j));
      }
    } else {
      const auto& p = std::get<ScanPayload>(m.payload);
      out << " pts " << (p.points ? p.points->size() : 0);
      if (p.points) {
        for (const auto& pt : *p.points) {
          out << ' ' << fmt(pt.x()) << ' ' << fmt(pt.y()) << ' ' << fmt(pt.z());
        }
      }
      out << " odom " << (p.has_relative ? 1 : 0);
      if (p.has_relative) {
        out << ' ' << fmt(p.relative.x) << ' ' << fmt(p.relative.y) << ' '
            << fmt(p.relative.theta);
      }
      out << " cov";
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) out << ' ' << fmt(p.relative_cov(i, j));
      }
    }
    out << "\n";
  }
  return out.str();
}

ParsedStream parse_stream(const std::string& text) {
  ParsedStream out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& why) -> DataError {
    return DataError("stream line " + std::to_string(lineno) + ": " + why);
  };
  if (!std::getline(in, line) || line != "incmap-stream v1") {
    throw DataError("stream line 1: bad or missing header");
  }
  lineno = 1;
  std::vector<Measurement> items;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "sensor") {
      SensorSpec s;
      std::string kind;
      std::int64_t period_ns = 0;
      if (!(ls >> s.sensor_id >> kind >> period_ns)) throw fail("malformed sensor line");
      s.kind = sensor_kind_from_string(kind);
      s.nominal_period = from_ns(period_ns);
      out.sensors.push_back(std::move(s));
      continue;
    }
    if (tag != "meas") throw fail("unknown record '" + tag + "'");
    Measurement m;
    std::int64_t t_ns = 0;
    std::string kind;
    if (!(ls >> t_ns >> m.sensor_id >> kind)) throw fail("malformed measurement header");
    m.timestamp = from_ns(t_ns);
    try {
      m.kind = sensor_kind_from_string(kind);
    } catch (const DataError& e) {
      throw fail(e.what());
    }
    auto expect = [&](const char* word) {
      std::string w;
      if (!(ls >> w) || w != word) throw fail(std::string("expected '") + word + "'");
    };
    if (m.kind == SensorKind::gps) {
      GpsPayload p;
      if (!(ls >> p.position.x() >> p.position.y())) throw fail("malformed gps payload");
      expect("cov");
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
          if (!(ls >> p.cov(i, j))) throw fail("malformed gps covariance");
        }
      }
      m.payload = std::move(p);
    } else if (m.kind == SensorKind::continuous) {
      RatePayload p;
      if (!(ls >> p.linear.x() >> p.linear.y() >> p.angular)) {
        throw fail("malformed rate payload");
      }
      expect("cov");
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          if (!(ls >> p.cov(i, j))) throw fail("malformed rate covariance");
        }
      }
      m.payload = std::move(p);
    } else {
      ScanPayload p;
      expect("pts");
      std::size_t n = 0;
      if (!(ls >> n)) throw fail("malformed point count");
      auto pts = std::make_shared<std::vector<Eigen::Vector3d>>(n);
      for (std::size_t i = 0; i < n; ++i) {
        if (!(ls >> (*pts)[i].x() >> (*pts)[i].y() >> (*pts)[i].z())) {
          throw fail("malformed scan point");
        }
      }
      p.points = std::move(pts);
      expect("odom");
      int has = 0;
      if (!(ls >> has)) throw fail("malformed odom flag");
      p.has_relative = has != 0;
      if (p.has_relative) {
        double x, y, th;
        if (!(ls >> x >> y >> th)) throw fail("malformed odom payload");
        p.relative = Pose2(x, y, th);
      }
      expect("cov");
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          if (!(ls >> p.relative_cov(i, j))) throw fail("malformed odom covariance");
        }
      }
      m.payload = std::move(p);
    }
    items.push_back(std::move(m));
  }
  out.stream = MeasurementSequence::from_unsorted(std::move(items));
  return out;
}

std::string serialize_truth(std::span<const TimedPose> truth) {
  std::ostringstream out;
  out << "incmap-truth v1\n";
  for (const auto& p : truth) {
    out << "pose " << to_ns(p.t) << ' ' << fmt(p.pose.x) << ' ' << fmt(p.pose.y) << ' '
        << fmt(p.pose.theta) << "\n";
  }
  return out.str();
}

std::vector<TimedPose> parse_truth(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "incmap-truth v1") {
    throw DataError("truth line 1: bad or missing header");
  }
  std::vector<TimedPose> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    std::int64_t t_ns;
    double x, y, th;
    if (!(ls >> tag >> t_ns >> x >> y >> th) || tag != "pose") {
      throw DataError("truth line " + std::to_string(lineno) + ": malformed pose");
    }
    out.push_back(TimedPose{from_ns(t_ns), Pose2(x, y, th)});
  }
  return out;
}

std::string serialize_map_xyz(std::span<const Eigen::Vector3d> points) {
  std::ostringstream out;
  char buf[128];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof(buf), "%.6f %.6f %.6f\n", p.x(), p.y(), p.z());
    out << buf;
  }
  return out.str();
}

std::string serialize_report(const ReportValues& v, const std::string& manifest_hash) {
  std::ostringstream out;
  char buf[128];
  out << "# incmap-report v1\n";
  out << "# manifest " << manifest_hash << "\n";
  out << "# scenario " << v.scenario << "\n";
  out << "metric,value\n";
  auto row_f = [&](const char* name, double value) {
    std::snprintf(buf, sizeof(buf), "%s,%.9f\n", name, value);
    out << buf;
  };
  auto row_i = [&](const char* name, std::int64_t value) {
    out << name << ',' << value << "\n";
  };
  row_f("total_time_shift", v.total_time_shift);
  row_f("solver_error", v.solver_error);
  row_f("rpe_m", v.rpe_m);
  row_f("rpe_deg", v.rpe_deg);
  row_i("clusters", v.clusters);
  row_i("vertices", v.vertices);
  row_i("factors", v.factors);
  std::snprintf(buf, sizeof(buf), "compression_pct,%.2f\n", v.compression_pct);
  out << buf;
  return out.str();
}

ReportValues parse_report(const std::string& text, std::string* manifest_hash,
                          std::string* stream_hash) {
  ReportValues v;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("# manifest ", 0) == 0) {
      if (manifest_hash) *manifest_hash = line.substr(11);
      continue;
    }
    if (line.rfind("# stream ", 0) == 0) {
      if (stream_hash) *stream_hash = line.substr(9);
      continue;
    }
    if (line.rfind("# scenario ", 0) == 0) {
      v.scenario = line.substr(11);
      continue;
    }
    if (line.empty() || line[0] == '#' || line == "metric,value") continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw DataError("malformed report line: " + line);
    const std::string key = line.substr(0, comma);
    const double value = parse_double(line.substr(comma + 1), key);
    if (key == "total_time_shift") v.total_time_shift = value;
    else if (key == "solver_error") v.solver_error = value;
    else if (key == "rpe_m") v.rpe_m = value;
    else if (key == "rpe_deg") v.rpe_deg = value;
    else if (key == "clusters") v.clusters = static_cast<std::int64_t>(value);
    else if (key == "vertices") v.vertices = static_cast<std::int64_t>(value);
    else if (key == "factors") v.factors = static_cast<std::int64_t>(value);
    else if (key == "compression_pct") v.compression_pct = value;
    else throw DataError("unknown report metric: " + key);
  }
  return v;
}

void cmd_simulate(const fs::path& config_path, const fs::path& out_dir) {
  RunConfig cfg = RunConfig::parse(read_file(config_path));
  const WorldModel world = make_default_world(cfg.world_extent);
  if (world.orthogonal_directions() < 3 && cfg.scenario == "mom") {
    std::fprintf(stderr, "warning: world lacks 3 orthogonal directions; MOM may not apply\n");
  }
  SimOutput sim = generate(world, cfg.motion_profile(), cfg.sim_config(), cfg.seed);

  const std::string stream_text = serialize_stream(sim.stream, cfg.sensors());
  const std::string truth_text = serialize_truth(sim.truth);
  write_file(out_dir / "stream.txt", stream_text);
  write_file(out_dir / "truth.txt", truth_text);

  json manifest;
  manifest["kind"] = "simulate";
  manifest["format_version"] = 1;
  manifest["seed"] = cfg.seed;
  manifest["config"] = cfg.canonical();
  manifest["stream_hash"] = to_hex(fnv1a64(stream_text));
  manifest["truth_hash"] = to_hex(fnv1a64(truth_text));
  manifest["manifest_hash"] = to_hex(fnv1a64(manifest.dump()));
  write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

namespace {

ReportValues report_from(const TrajectoryReport& r, const std::string& scenario,
                         std::int64_t base_factors) {
  ReportValues v;
  v.scenario = scenario;
  v.total_time_shift = r.total_time_shift;
  v.solver_error = r.total_solver_error;
  v.rpe_m = r.rpe.rmse_trans;
  v.rpe_deg = r.rpe.rmse_rot * 180.0 / M_PI;
  v.clusters = r.stats.clusters;
  v.vertices = r.stats.vertices;
  v.factors = r.stats.factors;
  v.compression_pct =
      base_factors > 0
          ? 100.0 * (1.0 - static_cast<double>(r.stats.factors) /
                               static_cast<double>(base_factors))
          : 0.0;
  return v;
}

}  // namespace

void cmd_run(const fs::path& stream_path, const fs::path& truth_path,
             const std::string& scenario_name, const fs::path& out_dir,
             const fs::path& config_path, int workers_override) {
  const Scenario scenario = scenario_from_string(scenario_name);
  RunConfig cfg = config_path.empty() ? RunConfig{} : RunConfig::parse(read_file(config_path));
  cfg.scenario = scenario_name;
  if (workers_override >= 0) cfg.pipeline.workers = workers_override;

  const std::string stream_text = read_file(stream_path);
  ParsedStream parsed = parse_stream(stream_text);
  std::vector<TimedPose> truth;
  if (!truth_path.empty()) truth = parse_truth(read_file(truth_path));

  std::vector<Eigen::Vector3d> map_points;
  TrajectoryReport report =
      run_trajectory(parsed.stream, truth, scenario, cfg.pipeline, &map_points);

  std::int64_t base_factors = report.stats.factors;
  if (scenario != Scenario::base) {
    TrajectoryReport base = run_trajectory(parsed.stream, truth, Scenario::base, cfg.pipeline);
    base_factors = base.stats.factors;
  }

  // Manifest hash must be stable across worker counts.
  RunConfig hash_cfg = cfg;
  hash_cfg.pipeline.workers = 0;
  json manifest;
  manifest["kind"] = "run";
  manifest["format_version"] = 1;
  manifest["scenario"] = scenario_name;
  manifest["config"] = hash_cfg.canonical();
  manifest["stream_hash"] = to_hex(fnv1a64(stream_text));
  manifest["stream_path"] = stream_path.string();
  const std::string manifest_hash = to_hex(fnv1a64(manifest.dump()));

  ReportValues values = report_from(report, scenario_name, base_factors);
  std::string report_text = serialize_report(values, manifest_hash);
  report_text.insert(report_text.find("# scenario"),
                     "# stream " + to_hex(fnv1a64(stream_text)) + "\n");

  write_file(out_dir / "report.csv", report_text);
  write_file(out_dir / "graph.txt", dump_graph(report.graph));
  write_file(out_dir / "map.xyz", serialize_map_xyz(map_points));
  manifest["manifest_hash"] = manifest_hash;
  manifest["workers"] = cfg.pipeline.workers;
  write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

std::string cmd_report(const std::vector<fs::path>& run_dirs, const fs::path& csv_out) {
  if (run_dirs.empty()) throw ConfigError("report: no run directories given");
  std::vector<ReportValues> runs;
  std::string common_stream;
  for (const auto& dir : run_dirs) {
    std::string stream_hash;
    ReportValues v = parse_report(read_file(dir / "report.csv"), nullptr, &stream_hash);
    if (common_stream.empty()) {
      common_stream = stream_hash;
    } else if (stream_hash != common_stream) {
      throw DataError("report: stream hash mismatch across runs (" + dir.string() + ")");
    }
    runs.push_back(std::move(v));
  }

  struct Row {
    const char* name;
    bool higher_better;
    std::vector<double> values;
    bool integer;
  };
  std::vector<Row> rows = {
      {"total_time_shift", false, {}, false}, {"solver_error", false, {}, false},
      {"rpe_m", false, {}, false},            {"rpe_deg", false, {}, false},
      {"clusters", false, {}, true},          {"vertices", false, {}, true},
      {"factors", false, {}, true},           {"compression_pct", true, {}, false},
  };
  for (const auto& r : runs) {
    rows[0].values.push_back(r.total_time_shift);
    rows[1].values.push_back(r.solver_error);
    rows[2].values.push_back(r.rpe_m);
    rows[3].values.push_back(r.rpe_deg);
    rows[4].values.push_back(static_cast<double>(r.clusters));
    rows[5].values.push_back(static_cast<double>(r.vertices));
    rows[6].values.push_back(static_cast<double>(r.factors));
    rows[7].values.push_back(r.compression_pct);
  }

  std::ostringstream csv, txt;
  csv << "metric";
  for (const auto& r : runs) csv << ',' << r.scenario;
  csv << "\n";
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-18s", "metric");
  txt << buf;
  for (const auto& r : runs) {
    std::snprintf(buf, sizeof(buf), " %16s", r.scenario.c_str());
    txt << buf;
  }
  txt << "\n";
  for (const auto& row : rows) {
    csv << row.name;
    std::snprintf(buf, sizeof(buf), "%-18s", row.name);
    txt << buf;
    // Markers: * best, + second best, - worst.
    std::vector<std::size_t> order(row.values.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return row.higher_better ? row.values[a] > row.values[b] : row.values[a] < row.values[b];
    });
    for (std::size_t i = 0; i < row.values.size(); ++i) {
      const double v = row.values[i];
      char mark = ' ';
      if (order.size() > 1) {
        if (i == order.front()) mark = '*';
        else if (order.size() > 2 && i == order[1]) mark = '+';
        else if (i == order.back()) mark = '-';
      }
      if (row.integer) {
        csv << ',' << static_cast<std::int64_t>(v);
        std::snprintf(buf, sizeof(buf), " %14lld %c", static_cast<long long>(v), mark);
      } else {
        std::snprintf(buf, sizeof(buf), "%.6f", v);
        csv << ',' << buf;
        std::snprintf(buf, sizeof(buf), " %14.6f %c", v, mark);
      }
      txt << buf;
    }
    csv << "\n";
    txt << "\n";
  }
  if (!csv_out.empty()) write_file(csv_out, csv.str());
  return txt.str();
}

std::string cmd_enumerate(int n, bool list) {
  const CombinationCount c = count_closed_form(n);
  std::ostringstream out;
  out << "n_core: " << c.n_core << "\n";
  out << "merge_combinations: " << c.merge_count << "\n";
  out << "total_with_connections: " << c.total_with_connections << "\n";
  if (n <= 12) {
    const CombinationCount b = brute_force_oracle(n);
    out << "brute_force_total: " << b.total_with_connections << "\n";
  }
  if (list) {
    // Synthetic instance with continuous data in every gap, as in the oracle.
    std::vector<Measurement> core(static_cast<std::size_t>(n)), continuous;
    for (int i = 0; i < n; ++i) {
      core[static_cast<std::size_t>(i)].timestamp = i;
      core[static_cast<std::size_t>(i)].kind = SensorKind::gps;
      core[static_cast<std::size_t>(i)].payload = GpsPayload{};
    }
    for (int i = 0; i + 1 < n; ++i) {
      Measurement m;
      m.timestamp = i + 0.5;
      m.kind = SensorKind::continuous;
      m.payload = RatePayload{};
      continuous.push_back(m);
    }
    for (const MergeMask& mask : enumerate_merges(n, 16)) {
      auto comb = apply_merge_mask(mask, core);
      if (!comb) continue;
      for (const auto& tiling : enumerate_tilings(*comb, continuous)) {
        out << "combination " << mask.bits << " clusters";
        for (const auto& cl : comb->clusters) {
          out << " [";
          for (std::size_t i = 0; i < cl.members.size(); ++i) {
            out << (i ? " " : "") << cl.members[i];
          }
          out << "]";
        }
        out << " connections";
        for (const auto& [i, j] : tiling.intervals) out << " (" << i << "," << j << ")";
        out << "\n";
      }
    }
  }
  return out.str();
}

}  // namespace incmap
