#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "incmap/combinatorics.hpp"
#include "incmap/core.hpp"
#include "incmap/pose2.hpp"

namespace incmap {

using VarId = std::int64_t;
using FactorId = std::int64_t;

enum class FactorKind {
  anchor,               // full-pose unary prior (gauge fix)
  prior_position,       // (x, y) unary prior from GPS
  odometry,             // pairwise, consecutive same-sensor scan poses
  preintegrated_motion  // pairwise, from one connection-tiling interval
};

const char* to_string(FactorKind k);

struct VariableNode {
  VarId id = -1;
  double timestamp = 0.0;  // owning cluster's t^C
  Pose2 state;
  int epoch = 0;
};

struct FactorNode {
  FactorId id = -1;
  FactorKind kind = FactorKind::odometry;
  std::array<VarId, 2> vars{-1, -1};
  int n_vars = 1;
  // Measurement: z_pos for unary position, z_pose for pose-valued factors.
  Eigen::Vector2d z_pos = Eigen::Vector2d::Zero();
  Pose2 z_pose;
  Eigen::MatrixXd sqrt_info;  // Sigma^{-1/2}, residual-dimension square
  double time_shift_contribution = 0.0;

  int residual_dim() const { return kind == FactorKind::prior_position ? 2 : 3; }
};

struct GraphStats {
  std::int64_t clusters = 0;
  std::int64_t vertices = 0;
  std::int64_t factors = 0;
};

// Bipartite variable/factor structure, composed incrementally epoch by epoch.
// Bookkeeping (per-sensor last scan variable, committed cluster count) rides
// along so candidate construction can chain odometry across epochs.
struct FactorGraph {
  std::vector<VariableNode> variables;
  std::vector<FactorNode> factors;
  std::map<std::string, VarId> last_scan_var;  // sensor_id -> newest scan pose
  std::int64_t committed_clusters = 0;
  std::int64_t dropped_loops = 0;
  int epochs = 0;

  VarId next_var_id() const;
  FactorId next_factor_id() const;
  const VariableNode& var(VarId id) const;
  VariableNode& var(VarId id);
  bool has_var(VarId id) const;
};

// One epoch's worth of new structure, built against a previous graph.
struct CandidateGraph {
  FactorGraph delta;  // only new variables/factors; binary factors may
                      // reference prev-graph variable ids
  std::uint64_t combination_id = 0;
  ConnectionTiling tiling;
  std::vector<double> cluster_time_ranges;
  int dropped_loops = 0;       // self-loop odometry discarded by merging
  int unchained_scans = 0;     // first-ever scans with no relative measurement
  std::vector<std::size_t> consumed_continuous;  // indices into the epoch list
  std::map<std::string, VarId> last_scan_var_updates;
  // Scan payloads with the pose variable they are placed at (map building).
  std::vector<std::pair<VarId, std::shared_ptr<const std::vector<Eigen::Vector3d>>>> placed_scans;
};

// Algorithm core: one pose per cluster, factors from member measurements and
// tiling intervals. Self-loop factors are dropped and counted.
CandidateGraph build_candidate(const FactorGraph& prev, const ClusterCombination& comb,
                               const ConnectionTiling& tiling,
                               std::span<const Measurement> core,
                               std::span<const Measurement> continuous, int epoch);

// True iff the candidate's incidence graph forms one component, with all
// referenced prev-graph variables contracted to a single super-node when
// anchored_to_prev is set.
bool is_connected(const CandidateGraph& g, bool anchored_to_prev);

// Whole-graph connectivity over the full incidence structure (no contraction).
bool is_connected_full(const FactorGraph& g);

// G_t = G_{t-1} (+) G_best. Throws PipelineError on id collision.
FactorGraph compose(const FactorGraph& prev, const CandidateGraph& best);

GraphStats graph_stats(const FactorGraph& g);

// Line-oriented dump for fixtures and diffing.
std::string dump_graph(const FactorGraph& g);

}  // namespace incmap
