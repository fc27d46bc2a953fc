#include "incmap/metrics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "incmap/errors.hpp"

namespace incmap {

TimeShiftReport total_time_shift(const CandidateGraph& candidate) {
  TimeShiftReport r;
  for (double range : candidate.cluster_time_ranges) r.time_range += range;
  for (const auto& f : candidate.delta.factors) {
    if (f.kind == FactorKind::preintegrated_motion) {
      r.delta_imu += f.time_shift_contribution;
    }
  }
  return r;
}

Pose2 interpolate_pose(std::span<const TimedPose> traj, double t) {
  if (traj.empty()) throw DataError("interpolate_pose: empty trajectory");
  if (t <= traj.front().t) return traj.front().pose;
  if (t >= traj.back().t) return traj.back().pose;
  auto it = std::lower_bound(traj.begin(), traj.end(), t,
                             [](const TimedPose& p, double x) { return p.t < x; });
  const TimedPose& hi = *it;
  const TimedPose& lo = *(it - 1);
  const double span = hi.t - lo.t;
  const double s = span > 0.0 ? (t - lo.t) / span : 0.0;
  return Pose2(lo.pose.x + s * (hi.pose.x - lo.pose.x), lo.pose.y + s * (hi.pose.y - lo.pose.y),
               lo.pose.theta + s * wrap_angle(hi.pose.theta - lo.pose.theta));
}

RpeResult rpe_rmse(std::span<const TimedPose> est, std::span<const TimedPose> ref) {
  if (est.size() < 2) throw DataError("rpe_rmse: need at least 2 poses");
  double sum_t2 = 0.0, sum_r2 = 0.0;
  const std::size_t pairs = est.size() - 1;
  for (std::size_t i = 0; i + 1 < est.size(); ++i) {
    const Pose2 ref_a = interpolate_pose(ref, est[i].t);
    const Pose2 ref_b = interpolate_pose(ref, est[i + 1].t);
    const Pose2 ref_rel = ref_a.between(ref_b);
    const Pose2 est_rel = est[i].pose.between(est[i + 1].pose);
    const Pose2 e = ref_rel.inverse().compose(est_rel);
    sum_t2 += e.translation().squaredNorm();
    const double ang = std::abs(wrap_angle(e.theta));
    sum_r2 += ang * ang;
  }
  return RpeResult{std::sqrt(sum_t2 / static_cast<double>(pairs)),
                   std::sqrt(sum_r2 / static_cast<double>(pairs))};
}

namespace {

// Uniform grid for radius-limited k-nearest-neighbor queries.
struct Grid {
  double cell;
  std::unordered_map<std::int64_t, std::vector<int>> cells;
  std::span<const Eigen::Vector3d> pts;

  static std::int64_t key(int x, int y, int z) {
    return (static_cast<std::int64_t>(x) * 73856093) ^
           (static_cast<std::int64_t>(y) * 19349663) ^
           (static_cast<std::int64_t>(z) * 83492791);
  }

  Grid(std::span<const Eigen::Vector3d> points, double cell_size) : cell(cell_size), pts(points) {
    for (int i = 0; i < static_cast<int>(points.size()); ++i) {
      const auto& p = points[static_cast<std::size_t>(i)];
      cells[key(static_cast<int>(std::floor(p.x() / cell)),
                static_cast<int>(std::floor(p.y() / cell)),
                static_cast<int>(std::floor(p.z() / cell)))]
          .push_back(i);
    }
  }

  // Up to k nearest neighbors within radius (including the query point).
  void neighbors(int i, double radius, int k, std::vector<int>& out) const {
    out.clear();
    const auto& p = pts[static_cast<std::size_t>(i)];
    const double r2 = radius * radius;
    const int cx = static_cast<int>(std::floor(p.x() / cell));
    const int cy = static_cast<int>(std::floor(p.y() / cell));
    const int cz = static_cast<int>(std::floor(p.z() / cell));
    std::vector<std::pair<double, int>> found;
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dz = -1; dz <= 1; ++dz) {
          auto it = cells.find(key(cx + dx, cy + dy, cz + dz));
          if (it == cells.end()) continue;
          for (int j : it->second) {
            const double d2 = (pts[static_cast<std::size_t>(j)] - p).squaredNorm();
            if (d2 <= r2) found.emplace_back(d2, j);
          }
        }
      }
    }
    const std::size_t keep = std::min<std::size_t>(found.size(), static_cast<std::size_t>(k));
    std::partial_sort(found.begin(), found.begin() + static_cast<std::ptrdiff_t>(keep),
                      found.end());
    for (std::size_t j = 0; j < keep; ++j) out.push_back(found[j].second);
  }
};

struct NormalGroup {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  std::vector<int> members;  // indices into the per-point arrays
};

}  // namespace

MomResult mom_local(std::span<const Eigen::Vector3d> points, const MomParams& params) {
  if (points.empty()) throw DataError("mom: empty map");
  MomResult res;

  const Grid grid(points, params.radius);
  std::vector<Eigen::Vector3d> normals;
  std::vector<double> lambda_min;
  normals.reserve(points.size());
  lambda_min.reserve(points.size());

  std::vector<int> nn;
  for (int i = 0; i < static_cast<int>(points.size()); ++i) {
    grid.neighbors(i, params.radius, params.k_nn, nn);
    if (nn.size() < 5) continue;  // too sparse for a stable normal
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (int j : nn) mean += points[static_cast<std::size_t>(j)];
    mean /= static_cast<double>(nn.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (int j : nn) {
      const Eigen::Vector3d d = points[static_cast<std::size_t>(j)] - mean;
      cov += d * d.transpose();
    }
    cov /= static_cast<double>(nn.size());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
    Eigen::Vector3d n = es.eigenvectors().col(0);
    // Canonical sign: largest-magnitude component positive.
    int m = 0;
    n.cwiseAbs().maxCoeff(&m);
    if (n[m] < 0.0) n = -n;
    normals.push_back(n);
    lambda_min.push_back(std::max(es.eigenvalues()[0], 0.0));
  }

  // Greedy direction clustering (sign-invariant).
  const double cos_tol = std::cos(params.group_angle_tol_deg * M_PI / 180.0);
  std::vector<NormalGroup> groups;
  for (int i = 0; i < static_cast<int>(normals.size()); ++i) {
    bool placed = false;
    for (auto& g : groups) {
      if (std::abs(g.mean.dot(normals[static_cast<std::size_t>(i)])) >= cos_tol) {
        const double sgn = g.mean.dot(normals[static_cast<std::size_t>(i)]) >= 0.0 ? 1.0 : -1.0;
        g.mean = (g.mean * static_cast<double>(g.members.size()) +
                  sgn * normals[static_cast<std::size_t>(i)])
                     .normalized();
        g.members.push_back(i);
        placed = true;
        break;
      }
    }
    if (!placed) {
      NormalGroup g;
      g.mean = normals[static_cast<std::size_t>(i)];
      g.members.push_back(i);
      groups.push_back(std::move(g));
    }
  }

  std::sort(groups.begin(), groups.end(),
            [](const NormalGroup& a, const NormalGroup& b) {
              return a.members.size() > b.members.size();
            });

  // Largest triple of mutually orthogonal, sufficiently populated groups.
  std::array<const NormalGroup*, 3> chosen{nullptr, nullptr, nullptr};
  for (const auto& g : groups) {
    if (static_cast<int>(g.members.size()) < params.min_group) continue;
    int slot = 0;
    bool ok = true;
    while (slot < 3 && chosen[static_cast<std::size_t>(slot)]) ++slot;
    if (slot == 3) break;
    for (int s = 0; s < slot; ++s) {
      if (std::abs(chosen[static_cast<std::size_t>(s)]->mean.dot(g.mean)) > params.orth_tol) {
        ok = false;
        break;
      }
    }
    if (ok) chosen[static_cast<std::size_t>(slot)] = &g;
  }
  if (!chosen[0] || !chosen[1] || !chosen[2]) {
    res.applicable = false;
    return res;
  }

  for (int s = 0; s < 3; ++s) {
    const auto& g = *chosen[static_cast<std::size_t>(s)];
    double v = 0.0;
    for (int i : g.members) v += lambda_min[static_cast<std::size_t>(i)];
    v /= static_cast<double>(g.members.size());
    res.group_variance[static_cast<std::size_t>(s)] = v;
    res.group_size[static_cast<std::size_t>(s)] = static_cast<int>(g.members.size());
  }
  res.value = (res.group_variance[0] + res.group_variance[1] + res.group_variance[2]) / 3.0;
  res.applicable = true;
  return res;
}

}  // namespace incmap
