#include "incmap/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <mutex>
#include <thread>

namespace incmap {

const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::base: return "base";
    case Scenario::min_time_shift: return "min-time-shift";
    case Scenario::min_solver_error: return "min-solver-error";
    case Scenario::mom_based: return "mom";
  }
  return "?";
}

Scenario scenario_from_string(const std::string& s) {
  if (s == "base") return Scenario::base;
  if (s == "min-time-shift") return Scenario::min_time_shift;
  if (s == "min-solver-error") return Scenario::min_solver_error;
  if (s == "mom") return Scenario::mom_based;
  throw ConfigError("unknown scenario: " + s);
}

std::size_t select_best(const std::vector<CandidateScore>& scored, double tie_abs,
                        double tie_rel) {
  if (scored.empty()) throw PipelineError("select_best: empty candidate list");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : scored) best = std::min(best, c.score);
  if (!std::isfinite(best)) throw PipelineError("select_best: no scorable candidate");
  const double tol = tie_abs + tie_rel * std::abs(best);

  std::size_t pick = scored.size();
  for (std::size_t i = 0; i < scored.size(); ++i) {
    if (scored[i].score > best + tol) continue;
    if (pick == scored.size()) {
      pick = i;
      continue;
    }
    const auto& a = scored[i];
    const auto& b = scored[pick];
    const auto key = [](const CandidateScore& c) {
      return std::make_tuple(c.vertices, c.combination_id);
    };
    if (key(a) < key(b) || (key(a) == key(b) && a.tiling < b.tiling)) pick = i;
  }
  return pick;
}

Pipeline::Pipeline(Scenario scenario, PipelineConfig config)
    : scenario_(scenario), config_(std::move(config)) {}

std::vector<Eigen::Vector3d> Pipeline::submap_points(const FactorGraph& solved,
                                                     const CandidateGraph& cand) const {
  std::vector<Eigen::Vector3d> pts;
  auto place = [&](VarId var, const std::vector<Eigen::Vector3d>& scan) {
    const Pose2 pose = solved.var(var).state;
    for (const auto& p : scan) {
      const Eigen::Vector2d xy = pose.act(p.head<2>());
      pts.emplace_back(xy.x(), xy.y(), p.z());
    }
  };
  const int first_epoch = epoch_ - config_.mom_window;
  for (const auto& ps : placed_) {
    if (ps.epoch >= first_epoch && ps.points) place(ps.var, *ps.points);
  }
  for (const auto& [var, scan] : cand.placed_scans) {
    if (scan) place(var, *scan);
  }
  return pts;
}

std::vector<Eigen::Vector3d> Pipeline::aggregated_map() const {
  std::vector<Eigen::Vector3d> pts;
  for (const auto& ps : placed_) {
    if (!ps.points) continue;
    const Pose2 pose = graph_.var(ps.var).state;
    for (const auto& p : *ps.points) {
      const Eigen::Vector2d xy = pose.act(p.head<2>());
      pts.emplace_back(xy.x(), xy.y(), p.z());
    }
  }
  return pts;
}

EpochResult Pipeline::run_epoch(const MeasurementSequence& epoch_seq) {
  auto [core, continuous] = split_measurements(epoch_seq);

  // Candidate topologies: cluster combination x connection tiling.
  struct Topology {
    ClusterCombination comb;
    ConnectionTiling tiling;
  };
  std::vector<Topology> topologies;
  if (scenario_ == Scenario::base) {
    // No clustering: singleton clusters (exact-tie coalescing only) with one
    // adjacent connection per gap that holds continuous data.
    ClusterCombination comb = coalesce_ties(init_clusters(core), core);
    ConnectionTiling tiling;
    for (std::size_t i = 0; i + 1 < comb.clusters.size(); ++i) {
      const double lo = comb.clusters[i].timestamp;
      const double hi = comb.clusters[i + 1].timestamp;
      const bool has = std::any_of(continuous.begin(), continuous.end(), [&](const auto& m) {
        return m.timestamp > lo && m.timestamp < hi;
      });
      if (has) tiling.intervals.emplace_back(static_cast<int>(i), static_cast<int>(i + 1));
    }
    topologies.push_back({std::move(comb), std::move(tiling)});
  } else {
    for (const MergeMask& mask : enumerate_merges(static_cast<int>(core.size()), config_.n_max)) {
      auto comb = apply_merge_mask(mask, core);
      if (!comb) continue;  // degenerate timestamp tie
      for (auto& tiling : enumerate_tilings(*comb, continuous)) {
        topologies.push_back({*comb, std::move(tiling)});
      }
    }
  }
  if (topologies.empty()) throw PipelineError("no valid cluster combination in epoch");

  const bool anchored = !graph_.variables.empty();
  const std::size_t first_new_factor = graph_.factors.size();
  const int min_free_epoch = std::max(0, epoch_ - (config_.relin_horizon - 1));
  const bool want_mom_all = scenario_ == Scenario::mom_based;

  struct Evaluated {
    CandidateGraph cand;
    FactorGraph solved;
    CandidateScore score;
    bool usable = false;
  };
  std::vector<Evaluated> evals(topologies.size());

  auto evaluate_one = [&](std::size_t i) {
    Evaluated& ev = evals[i];
    ev.cand = build_candidate(graph_, topologies[i].comb, topologies[i].tiling, core, continuous,
                              epoch_);
    ev.score.combination_id = ev.cand.combination_id;
    ev.score.tiling = ev.cand.tiling;
    ev.score.vertices = static_cast<int>(ev.cand.delta.variables.size());
    ev.score.connected = is_connected(ev.cand, anchored);
    if (!ev.score.connected) return;
    ev.solved = compose(graph_, ev.cand);
    optimize(ev.solved, min_free_epoch, config_.solve,
             "epoch " + std::to_string(epoch_) + " candidate " + std::to_string(i));
    ev.score.time_shift = total_time_shift(ev.cand).total();
    ev.score.solver_error = solver_error(ev.solved, first_new_factor);
    if (want_mom_all) {
      const auto pts = submap_points(ev.solved, ev.cand);
      const MomResult mr = pts.empty() ? MomResult{} : mom_local(pts, config_.mom);
      ev.score.mom = mr.value;
      ev.score.mom_applicable = mr.applicable;
    }
    ev.usable = true;
  };

  // Candidates are independent; fan out and reduce in index order.
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers = config_.workers > 0 ? static_cast<unsigned>(config_.workers) : hw;
  if (workers <= 1 || topologies.size() <= 1) {
    for (std::size_t i = 0; i < topologies.size(); ++i) evaluate_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto work = [&] {
      for (std::size_t i = next.fetch_add(1); i < topologies.size(); i = next.fetch_add(1)) {
        try {
          evaluate_one(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < std::min<std::size_t>(workers, topologies.size()); ++t) {
      pool.emplace_back(work);
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  EpochResult result;
  result.epoch = epoch_;
  bool any_connected = false;
  bool any_mom = false;
  for (auto& ev : evals) {
    if (ev.usable) any_connected = true;
    if (ev.usable && ev.score.mom_applicable) any_mom = true;
  }
  if (!any_connected) {
    throw PipelineError("no connected candidate in epoch " + std::to_string(epoch_) + " (" +
                        std::to_string(topologies.size()) + " topologies enumerated)");
  }
  result.mom_fallback = want_mom_all && !any_mom;

  for (auto& ev : evals) {
    CandidateScore s = ev.score;
    if (!ev.usable) {
      s.score = std::numeric_limits<double>::infinity();
    } else {
      switch (scenario_) {
        case Scenario::base:
          s.score = 0.0;  // single fixed topology
          break;
        case Scenario::min_time_shift:
          s.score = s.time_shift;
          break;
        case Scenario::min_solver_error:
          s.score = s.solver_error;
          break;
        case Scenario::mom_based:
          if (result.mom_fallback) {
            s.score = s.solver_error;
          } else {
            s.score = s.mom_applicable ? s.mom : std::numeric_limits<double>::infinity();
          }
          break;
      }
    }
    result.candidates.push_back(std::move(s));
  }

  result.chosen_index = select_best(result.candidates, config_.tie_abs, config_.tie_rel);
  Evaluated& chosen = evals[result.chosen_index];

  // Reports carry all metric columns for the committed graph.
  if (!want_mom_all) {
    const auto pts = submap_points(chosen.solved, chosen.cand);
    const MomResult mr = pts.empty() ? MomResult{} : mom_local(pts, config_.mom);
    chosen.score.mom = mr.value;
    chosen.score.mom_applicable = mr.applicable;
    result.candidates[result.chosen_index].mom = mr.value;
    result.candidates[result.chosen_index].mom_applicable = mr.applicable;
  }
  result.dropped_loops = chosen.cand.dropped_loops;
  result.chosen_time_shift = chosen.score.time_shift;
  result.chosen_solver_error = chosen.score.solver_error;
  result.chosen_mom = chosen.score.mom;
  result.chosen_mom_applicable = chosen.score.mom_applicable;

  for (const auto& [var, scan] : chosen.cand.placed_scans) {
    placed_.push_back(PlacedScan{var, scan, epoch_});
  }
  graph_ = std::move(chosen.solved);
  ++epoch_;
  return result;
}

std::vector<MeasurementSequence> split_epochs(const MeasurementSequence& stream,
                                              double window_seconds) {
  std::vector<MeasurementSequence> epochs;
  if (stream.items.empty()) return epochs;
  if (window_seconds <= 0.0) throw ConfigError("window_seconds must be > 0");

  double boundary = stream.items.front().timestamp + window_seconds;
  MeasurementSequence current;
  auto has_core = [](const MeasurementSequence& s) {
    return std::any_of(s.items.begin(), s.items.end(),
                       [](const Measurement& m) { return m.role() == MeasurementRole::core; });
  };
  for (const auto& m : stream.items) {
    while (m.timestamp >= boundary) {
      if (has_core(current)) {
        epochs.push_back(std::move(current));
        current = {};
      }
      boundary += window_seconds;
    }
    current.items.push_back(m);
  }
  if (has_core(current)) {
    epochs.push_back(std::move(current));
  } else if (!current.items.empty() && !epochs.empty()) {
    // Continuous-only tail: fold into the final epoch.
    for (auto& m : current.items) epochs.back().items.push_back(std::move(m));
  }
  return epochs;
}

TrajectoryReport run_trajectory(const MeasurementSequence& stream,
                                const std::vector<TimedPose>& truth, Scenario scenario,
                                const PipelineConfig& config,
                                std::vector<Eigen::Vector3d>* map_out) {
  TrajectoryReport report;
  report.scenario = scenario;

  const bool any_gps = std::any_of(stream.items.begin(), stream.items.end(),
                                   [](const Measurement& m) { return m.kind == SensorKind::gps; });
  if (!any_gps) {
    std::cerr << "warning: no unary constraints (gps) in stream; trajectory is only "
                 "anchored at the start\n";
  }

  auto epochs = split_epochs(stream, config.window_seconds);
  if (epochs.empty()) throw DataError("stream yields no epochs");

  Pipeline pipeline(scenario, config);
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    try {
      EpochResult er = pipeline.run_epoch(epochs[i]);
      report.total_time_shift += er.chosen_time_shift;
      report.total_solver_error += er.chosen_solver_error;
      if (er.chosen_mom_applicable) {
        report.total_mom += er.chosen_mom;
      } else {
        ++report.mom_inapplicable_epochs;
      }
      report.epochs.push_back(std::move(er));
    } catch (const PipelineError& e) {
      throw PipelineError("epoch " + std::to_string(i) + ": " + e.what());
    }
  }

  const FactorGraph& g = pipeline.graph();
  report.stats = graph_stats(g);
  report.dropped_loops = g.dropped_loops;
  for (const auto& v : g.variables) report.estimate.push_back(TimedPose{v.timestamp, v.state});
  std::stable_sort(report.estimate.begin(), report.estimate.end(),
                   [](const TimedPose& a, const TimedPose& b) { return a.t < b.t; });
  if (truth.size() >= 2 && report.estimate.size() >= 2) {
    report.rpe = rpe_rmse(report.estimate, truth);
  }
  if (map_out) *map_out = pipeline.aggregated_map();
  report.graph = g;
  return report;
}

}  // namespace incmap
