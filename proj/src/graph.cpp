#include "incmap/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_map>

#include "incmap/solver.hpp"

namespace incmap {

const char* to_string(FactorKind k) {
  switch (k) {
    case FactorKind::anchor: return "anchor";
    case FactorKind::prior_position: return "prior_position";
    case FactorKind::odometry: return "odometry";
    case FactorKind::preintegrated_motion: return "preintegrated_motion";
  }
  return "?";
}

VarId FactorGraph::next_var_id() const {
  return variables.empty() ? 0 : variables.back().id + 1;
}

FactorId FactorGraph::next_factor_id() const {
  return factors.empty() ? 0 : factors.back().id + 1;
}

namespace {
std::size_t var_index(const std::vector<VariableNode>& vars, VarId id) {
  auto it = std::lower_bound(vars.begin(), vars.end(), id,
                             [](const VariableNode& v, VarId i) { return v.id < i; });
  if (it == vars.end() || it->id != id) throw PipelineError("unknown variable id");
  return static_cast<std::size_t>(it - vars.begin());
}
}  // namespace

const VariableNode& FactorGraph::var(VarId id) const { return variables[var_index(variables, id)]; }
VariableNode& FactorGraph::var(VarId id) { return variables[var_index(variables, id)]; }

bool FactorGraph::has_var(VarId id) const {
  auto it = std::lower_bound(variables.begin(), variables.end(), id,
                             [](const VariableNode& v, VarId i) { return v.id < i; });
  return it != variables.end() && it->id == id;
}

CandidateGraph build_candidate(const FactorGraph& prev, const ClusterCombination& comb,
                               const ConnectionTiling& tiling,
                               std::span<const Measurement> core,
                               std::span<const Measurement> continuous, int epoch) {
  CandidateGraph cand;
  cand.combination_id = comb.combination_id;
  cand.tiling = tiling;

  const std::size_t k = comb.clusters.size();
  VarId vid = prev.next_var_id();
  FactorId fid = prev.next_factor_id();

  std::vector<VarId> cluster_var(k);
  for (std::size_t c = 0; c < k; ++c) {
    VariableNode v;
    v.id = vid++;
    v.timestamp = comb.clusters[c].timestamp;
    v.epoch = epoch;
    cand.delta.variables.push_back(v);
    cluster_var[c] = v.id;
    cand.cluster_time_ranges.push_back(comb.clusters[c].time_range);
  }

  std::map<std::string, VarId> last_scan = prev.last_scan_var;

  // Gauge anchor on the very first variable of the run. Its target pose is
  // filled in below, once initial states are seeded, so that it fixes the
  // gauge at the first estimate instead of fighting the measurements.
  std::size_t anchor_index = std::numeric_limits<std::size_t>::max();
  if (prev.variables.empty()) {
    FactorNode f;
    f.id = fid++;
    f.kind = FactorKind::anchor;
    f.vars = {cluster_var[0], -1};
    f.n_vars = 1;
    f.z_pose = Pose2::identity();
    f.sqrt_info = Eigen::Matrix3d::Identity() * 1e4;  // sigma 1e-4 per dim
    anchor_index = cand.delta.factors.size();
    cand.delta.factors.push_back(std::move(f));
  }

  // Factors induced by core member measurements.
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t idx : comb.clusters[c].members) {
      const Measurement& m = core[idx];
      if (m.kind == SensorKind::gps) {
        const auto& gps = std::get<GpsPayload>(m.payload);
        FactorNode f;
        f.id = fid++;
        f.kind = FactorKind::prior_position;
        f.vars = {cluster_var[c], -1};
        f.n_vars = 1;
        f.z_pos = gps.position;
        f.sqrt_info = matrix_inverse_sqrt(gps.cov);
        cand.delta.factors.push_back(std::move(f));
      } else if (m.kind == SensorKind::scan) {
        const auto& scan = std::get<ScanPayload>(m.payload);
        if (scan.points) cand.placed_scans.emplace_back(cluster_var[c], scan.points);
        auto it = last_scan.find(m.sensor_id);
        if (it == last_scan.end() || !scan.has_relative) {
          ++cand.unchained_scans;  // first scan of this sensor, nothing to chain
        } else if (it->second == cluster_var[c]) {
          ++cand.dropped_loops;  // both endpoints merged into one cluster
        } else {
          FactorNode f;
          f.id = fid++;
          f.kind = FactorKind::odometry;
          f.vars = {it->second, cluster_var[c]};
          f.n_vars = 2;
          f.z_pose = scan.relative;
          f.sqrt_info = matrix_inverse_sqrt(scan.relative_cov);
          cand.delta.factors.push_back(std::move(f));
        }
        last_scan[m.sensor_id] = cluster_var[c];
      }
    }
  }

  // Preintegrated connections from the tiling.
  for (const auto& [i, j] : tiling.intervals) {
    const double t_lo = comb.clusters[static_cast<std::size_t>(i)].timestamp;
    const double t_hi = comb.clusters[static_cast<std::size_t>(j)].timestamp;
    std::vector<Measurement> samples;
    for (std::size_t s = 0; s < continuous.size(); ++s) {
      if (continuous[s].timestamp > t_lo && continuous[s].timestamp < t_hi) {
        samples.push_back(continuous[s]);
        cand.consumed_continuous.push_back(s);
      }
    }
    if (samples.empty()) throw PipelineError("tiling interval without continuous data");
    PreintegratedMotion pim = preintegrate(samples, t_lo, t_hi);
    FactorNode f;
    f.id = fid++;
    f.kind = FactorKind::preintegrated_motion;
    f.vars = {cluster_var[static_cast<std::size_t>(i)], cluster_var[static_cast<std::size_t>(j)]};
    f.n_vars = 2;
    f.z_pose = pim.relative;
    f.sqrt_info = matrix_inverse_sqrt(pim.covariance);
    f.time_shift_contribution = std::abs(pim.first_sample_shift);
    cand.delta.factors.push_back(std::move(f));
  }

  // Initial states: dead-reckon from the nearest already-solved pose.
  auto state_of = [&](VarId id, Pose2& out) -> bool {
    if (prev.has_var(id)) {
      out = prev.var(id).state;
      return true;
    }
    for (const auto& v : cand.delta.variables) {
      if (v.id == id) {
        out = v.state;
        return true;
      }
    }
    return false;
  };
  std::vector<bool> initialized(k, false);
  for (std::size_t c = 0; c < k; ++c) {
    Pose2 init;
    bool found = false;
    for (const auto& f : cand.delta.factors) {
      if (f.n_vars != 2 || f.vars[1] != cluster_var[c]) continue;
      // Only dead-reckon from variables already placed (prev or earlier cluster).
      bool source_ok = prev.has_var(f.vars[0]);
      if (!source_ok) {
        for (std::size_t p = 0; p < c; ++p) {
          if (cluster_var[p] == f.vars[0] && initialized[p]) source_ok = true;
        }
      }
      Pose2 source;
      if (source_ok && state_of(f.vars[0], source)) {
        init = source.compose(f.z_pose);
        found = true;
        break;
      }
    }
    if (!found) {
      // Copy the nearest available pose, then let a GPS member pin x, y.
      if (c > 0 && initialized[c - 1]) {
        state_of(cluster_var[c - 1], init);
      } else if (!prev.variables.empty()) {
        init = prev.variables.back().state;
      } else {
        init = Pose2::identity();
      }
      for (std::size_t idx : comb.clusters[c].members) {
        if (core[idx].kind == SensorKind::gps) {
          const auto& gps = std::get<GpsPayload>(core[idx].payload);
          init.x = gps.position.x();
          init.y = gps.position.y();
        }
      }
    }
    cand.delta.var(cluster_var[c]).state = init;
    initialized[c] = true;
  }

  if (anchor_index != std::numeric_limits<std::size_t>::max()) {
    cand.delta.factors[anchor_index].z_pose = cand.delta.var(cluster_var[0]).state;
  }

  cand.last_scan_var_updates = std::move(last_scan);
  return cand;
}

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
  int components() {
    int c = 0;
    for (int i = 0; i < static_cast<int>(parent.size()); ++i) {
      if (find(i) == i) ++c;
    }
    return c;
  }
};

}  // namespace

bool is_connected(const CandidateGraph& g, bool anchored_to_prev) {
  const auto& vars = g.delta.variables;
  if (vars.empty()) return false;
  std::unordered_map<VarId, int> index;
  for (std::size_t i = 0; i < vars.size(); ++i) index[vars[i].id] = static_cast<int>(i);
  const int super = static_cast<int>(vars.size());
  UnionFind uf(vars.size() + 1);
  bool super_used = false;
  for (const auto& f : g.delta.factors) {
    if (f.n_vars != 2) continue;
    int a, b;
    auto resolve = [&](VarId id, int& out) -> bool {
      auto it = index.find(id);
      if (it != index.end()) {
        out = it->second;
        return true;
      }
      if (!anchored_to_prev) return false;  // dangling prev reference, ignore
      out = super;
      super_used = true;
      return true;
    };
    if (resolve(f.vars[0], a) && resolve(f.vars[1], b)) uf.unite(a, b);
  }
  int components = uf.components();
  if (!super_used) --components;  // super-node slot unused
  // With prev present, an epoch counts as connected only through prev.
  if (anchored_to_prev) return super_used && components == 1;
  return components == 1;
}

bool is_connected_full(const FactorGraph& g) {
  if (g.variables.empty()) return false;
  std::unordered_map<VarId, int> index;
  for (std::size_t i = 0; i < g.variables.size(); ++i) {
    index[g.variables[i].id] = static_cast<int>(i);
  }
  UnionFind uf(g.variables.size());
  for (const auto& f : g.factors) {
    if (f.n_vars == 2) uf.unite(index.at(f.vars[0]), index.at(f.vars[1]));
  }
  return uf.components() == 1;
}

FactorGraph compose(const FactorGraph& prev, const CandidateGraph& best) {
  FactorGraph out = prev;
  for (const auto& v : best.delta.variables) {
    if (out.has_var(v.id)) throw PipelineError("compose: variable id collision");
    out.variables.push_back(v);
  }
  const FactorId first_ok = prev.next_factor_id();
  for (const auto& f : best.delta.factors) {
    if (f.id < first_ok) throw PipelineError("compose: factor id collision");
    out.factors.push_back(f);
  }
  for (const auto& [sensor, vid] : best.last_scan_var_updates) out.last_scan_var[sensor] = vid;
  out.committed_clusters += static_cast<std::int64_t>(best.delta.variables.size());
  out.dropped_loops += best.dropped_loops;
  out.epochs += 1;
  return out;
}

GraphStats graph_stats(const FactorGraph& g) {
  return GraphStats{g.committed_clusters, static_cast<std::int64_t>(g.variables.size()),
                    static_cast<std::int64_t>(g.factors.size())};
}

std::string dump_graph(const FactorGraph& g) {
  std::string out = "incmap-graph v1\n";
  char buf[256];
  for (const auto& v : g.variables) {
    std::snprintf(buf, sizeof(buf), "var %lld %lld %.17g %.17g %.17g\n",
                  static_cast<long long>(v.id),
                  static_cast<long long>(std::llround(v.timestamp * 1e9)), v.state.x, v.state.y,
                  v.state.theta);
    out += buf;
  }
  for (const auto& f : g.factors) {
    if (f.n_vars == 1) {
      std::snprintf(buf, sizeof(buf), "factor %lld %s %lld\n", static_cast<long long>(f.id),
                    to_string(f.kind), static_cast<long long>(f.vars[0]));
    } else {
      std::snprintf(buf, sizeof(buf), "factor %lld %s %lld %lld\n", static_cast<long long>(f.id),
                    to_string(f.kind), static_cast<long long>(f.vars[0]),
                    static_cast<long long>(f.vars[1]));
    }
    out += buf;
  }
  return out;
}

}  // namespace incmap
