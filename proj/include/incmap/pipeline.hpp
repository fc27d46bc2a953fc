#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "incmap/combinatorics.hpp"
#include "incmap/core.hpp"
#include "incmap/graph.hpp"
#include "incmap/metrics.hpp"
#include "incmap/solver.hpp"

namespace incmap {

enum class Scenario { base, min_time_shift, min_solver_error, mom_based };

const char* to_string(Scenario s);
Scenario scenario_from_string(const std::string& s);

struct PipelineConfig {
  double window_seconds = 1.0;
  int n_max = 16;            // enumeration cap on core measurements per epoch
  int workers = 0;           // 0 = hardware concurrency
  int relin_horizon = 3;     // epochs re-linearized when solving
  int mom_window = 2;        // previous epochs aggregated into the MOM submap
  MomParams mom;
  OptimizeOptions solve;
  // Score ties (within abs + rel tolerance) fall through to the deterministic
  // tie-break: fewer vertices, lower combination id, lexicographic tiling.
  double tie_abs = 1e-12;
  double tie_rel = 1e-9;
};

struct CandidateScore {
  std::uint64_t combination_id = 0;
  ConnectionTiling tiling;
  int vertices = 0;
  bool connected = false;
  double time_shift = 0.0;
  double solver_error = std::numeric_limits<double>::quiet_NaN();
  double mom = std::numeric_limits<double>::quiet_NaN();
  bool mom_applicable = false;
  double score = std::numeric_limits<double>::infinity();
};

struct EpochResult {
  int epoch = 0;
  std::size_t chosen_index = 0;
  std::vector<CandidateScore> candidates;
  int dropped_loops = 0;
  bool mom_fallback = false;  // MOM inapplicable everywhere, scored by solver error
  double chosen_time_shift = 0.0;
  double chosen_solver_error = 0.0;
  double chosen_mom = 0.0;
  bool chosen_mom_applicable = false;
};

struct TrajectoryReport {
  Scenario scenario = Scenario::base;
  std::vector<EpochResult> epochs;
  double total_time_shift = 0.0;
  double total_solver_error = 0.0;
  double total_mom = 0.0;
  int mom_inapplicable_epochs = 0;
  RpeResult rpe;
  GraphStats stats;
  std::int64_t dropped_loops = 0;
  std::vector<TimedPose> estimate;
  FactorGraph graph;
};

// Deterministic minimum with tolerance ties broken by structure; returns the
// index into `scored` (entries with score = +inf are never chosen).
std::size_t select_best(const std::vector<CandidateScore>& scored, double tie_abs,
                        double tie_rel);

// Epoch-by-epoch execution of the candidate-enumeration pipeline.
class Pipeline {
 public:
  Pipeline(Scenario scenario, PipelineConfig config);

  EpochResult run_epoch(const MeasurementSequence& epoch_seq);

  const FactorGraph& graph() const { return graph_; }
  int epochs_run() const { return epoch_; }

  // Aggregated point-cloud map at the current solved states.
  std::vector<Eigen::Vector3d> aggregated_map() const;

 private:
  struct PlacedScan {
    VarId var;
    std::shared_ptr<const std::vector<Eigen::Vector3d>> points;
    int epoch;
  };

  std::vector<Eigen::Vector3d> submap_points(const FactorGraph& solved,
                                             const CandidateGraph& cand) const;

  Scenario scenario_;
  PipelineConfig config_;
  FactorGraph graph_;
  std::vector<PlacedScan> placed_;
  int epoch_ = 0;
};

// Fixed-duration epoch windows aligned to the stream start; windows without a
// core measurement are folded into the next one.
std::vector<MeasurementSequence> split_epochs(const MeasurementSequence& stream,
                                              double window_seconds);

TrajectoryReport run_trajectory(const MeasurementSequence& stream,
                                const std::vector<TimedPose>& truth, Scenario scenario,
                                const PipelineConfig& config,
                                std::vector<Eigen::Vector3d>* map_out = nullptr);

}  // namespace incmap
