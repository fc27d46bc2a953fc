#include "incmap/solver.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace incmap {

Eigen::MatrixXd matrix_inverse_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw DataError("noise covariance is not positive definite");
  }
  return es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

PreintegratedMotion preintegrate(std::span<const Measurement> samples, double t_a, double t_b) {
  if (samples.empty()) throw PipelineError("preintegrate: no samples");
  PreintegratedMotion out;
  out.t_a = t_a;
  out.t_b = t_b;
  out.first_sample_shift = samples.front().timestamp - t_a;

  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& rate = std::get<RatePayload>(samples[i].payload);
    // The i-th rate holds until the next sample; the first also covers
    // [t_a, t_1] so a single sample spans the whole interval.
    double dwell = (i + 1 < samples.size() ? samples[i + 1].timestamp : t_b) -
                   samples[i].timestamp;
    if (i == 0) dwell += samples[0].timestamp - t_a;
    if (dwell < 0.0) throw PipelineError("preintegrate: samples outside [t_a, t_b]");
    const Eigen::Vector3d xi(rate.linear.x() * dwell, rate.linear.y() * dwell,
                             rate.angular * dwell);
    const Pose2 step = exp_twist(xi);
    const Eigen::Matrix3d ad_inv = adjoint(step.inverse());
    out.covariance = ad_inv * out.covariance * ad_inv.transpose() +
                     (dwell * dwell) * rate.cov;
    out.relative = out.relative.compose(step);
  }
  return out;
}

PreintegratedMotion compose(const PreintegratedMotion& a, const PreintegratedMotion& b) {
  PreintegratedMotion out;
  out.t_a = a.t_a;
  out.t_b = b.t_b;
  out.first_sample_shift = a.first_sample_shift;
  out.relative = a.relative.compose(b.relative);
  const Eigen::Matrix3d ad_inv = adjoint(b.relative.inverse());
  out.covariance = ad_inv * a.covariance * ad_inv.transpose() + b.covariance;
  return out;
}

ResidualBlock evaluate_factor(const FactorNode& f, const Pose2& x0, const Pose2& x1) {
  ResidualBlock out;
  switch (f.kind) {
    case FactorKind::prior_position: {
      Eigen::Vector2d e = x0.translation() - f.z_pos;
      out.r = f.sqrt_info * e;
      Eigen::MatrixXd j(2, 3);
      j << 1, 0, 0, 0, 1, 0;
      out.j0 = f.sqrt_info * j;
      return out;
    }
    case FactorKind::anchor: {
      Eigen::Vector3d e(x0.x - f.z_pose.x, x0.y - f.z_pose.y,
                        wrap_angle(x0.theta - f.z_pose.theta));
      out.r = f.sqrt_info * e;
      out.j0 = f.sqrt_info;  // identity chart Jacobian
      return out;
    }
    case FactorKind::odometry:
    case FactorKind::preintegrated_motion: {
      const Eigen::Matrix2d rt = x0.rotation().transpose();
      const Eigen::Vector2d d = x1.translation() - x0.translation();
      const Eigen::Vector2d ht = rt * d;
      Eigen::Vector3d e(ht.x() - f.z_pose.x, ht.y() - f.z_pose.y,
                        wrap_angle(x1.theta - x0.theta - f.z_pose.theta));
      Eigen::Matrix2d drt;  // d(R^T)/dtheta
      drt << rt(1, 0), rt(1, 1), -rt(0, 0), -rt(0, 1);
      Eigen::Matrix3d j0 = Eigen::Matrix3d::Zero();
      j0.topLeftCorner<2, 2>() = -rt;
      j0.block<2, 1>(0, 2) = drt * d;
      j0(2, 2) = -1.0;
      Eigen::Matrix3d j1 = Eigen::Matrix3d::Zero();
      j1.topLeftCorner<2, 2>() = rt;
      j1(2, 2) = 1.0;
      out.r = f.sqrt_info * e;
      out.j0 = f.sqrt_info * j0;
      out.j1 = f.sqrt_info * j1;
      return out;
    }
  }
  throw PipelineError("evaluate_factor: unknown kind");
}

namespace {

struct Workspace {
  std::unordered_map<VarId, int> col;  // var -> column block (free vars only)
  std::vector<VarId> free_vars;        // ordered by id
};

Workspace make_workspace(const FactorGraph& g, int min_free_epoch) {
  Workspace w;
  for (const auto& v : g.variables) {
    if (v.epoch >= min_free_epoch) {
      w.col[v.id] = static_cast<int>(w.free_vars.size()) * 3;
      w.free_vars.push_back(v.id);
    }
  }
  return w;
}

double total_error(const FactorGraph& g) {
  double e = 0.0;
  static const Pose2 dummy;
  for (const auto& f : g.factors) {
    const Pose2& x0 = g.var(f.vars[0]).state;
    const Pose2& x1 = f.n_vars == 2 ? g.var(f.vars[1]).state : dummy;
    e += evaluate_factor(f, x0, x1).r.squaredNorm();
  }
  return e;
}

void assemble(const FactorGraph& g, const Workspace& w, Eigen::MatrixXd& h, Eigen::VectorXd& b) {
  const int dim = static_cast<int>(w.free_vars.size()) * 3;
  h.setZero(dim, dim);
  b.setZero(dim);
  static const Pose2 dummy;
  for (const auto& f : g.factors) {
    auto c0 = w.col.find(f.vars[0]);
    auto c1 = f.n_vars == 2 ? w.col.find(f.vars[1]) : w.col.end();
    const bool free0 = c0 != w.col.end();
    const bool free1 = c1 != w.col.end();
    if (!free0 && !free1) continue;
    const Pose2& x0 = g.var(f.vars[0]).state;
    const Pose2& x1 = f.n_vars == 2 ? g.var(f.vars[1]).state : dummy;
    ResidualBlock rb = evaluate_factor(f, x0, x1);
    if (free0) {
      h.block(c0->second, c0->second, 3, 3) += rb.j0.transpose() * rb.j0;
      b.segment(c0->second, 3) -= rb.j0.transpose() * rb.r;
    }
    if (free1) {
      h.block(c1->second, c1->second, 3, 3) += rb.j1.transpose() * rb.j1;
      b.segment(c1->second, 3) -= rb.j1.transpose() * rb.r;
    }
    if (free0 && free1) {
      const Eigen::Matrix3d off = rb.j0.transpose() * rb.j1;
      h.block(c0->second, c1->second, 3, 3) += off;
      h.block(c1->second, c0->second, 3, 3) += off.transpose();
    }
  }
}

int deficiency_of(const Eigen::MatrixXd& h) {
  if (h.rows() == 0) return 0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  const double tol = std::max(es.eigenvalues().maxCoeff(), 0.0) * 1e-10;
  int d = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    if (es.eigenvalues()[i] <= tol) ++d;
  }
  return d;
}

}  // namespace

int rank_deficiency(const FactorGraph& g, int min_free_epoch) {
  Workspace w = make_workspace(g, min_free_epoch);
  Eigen::MatrixXd h;
  Eigen::VectorXd b;
  assemble(g, w, h, b);
  return deficiency_of(h);
}

OptimizeResult optimize(FactorGraph& g, int min_free_epoch, const OptimizeOptions& opts,
                        const std::string& context) {
  Workspace w = make_workspace(g, min_free_epoch);
  OptimizeResult res;
  res.final_error = total_error(g);
  if (w.free_vars.empty()) {
    res.converged = true;
    return res;
  }

  Eigen::MatrixXd h;
  Eigen::VectorXd b;
  double lambda = opts.initial_lambda;

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    assemble(g, w, h, b);
    if (iter == 0) {
      const int d = deficiency_of(h);
      if (d > 0) throw RankDeficiencyError(d, context);
    }

    const double error_before = res.final_error;
    bool accepted = false;
    double step_inf = 0.0;
    for (int tries = 0; tries < 32 && !accepted; ++tries) {
      Eigen::MatrixXd damped = h;
      damped.diagonal() += lambda * h.diagonal();
      Eigen::VectorXd delta = damped.ldlt().solve(b);
      if (!delta.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      std::vector<Pose2> saved(w.free_vars.size());
      for (std::size_t i = 0; i < w.free_vars.size(); ++i) {
        VariableNode& v = g.var(w.free_vars[i]);
        saved[i] = v.state;
        const auto d3 = delta.segment<3>(static_cast<int>(i) * 3);
        v.state = Pose2(v.state.x + d3.x(), v.state.y + d3.y(), v.state.theta + d3.z());
      }
      const double trial = total_error(g);
      if (trial <= error_before) {
        accepted = true;
        res.final_error = trial;
        step_inf = delta.lpNorm<Eigen::Infinity>();
        lambda = std::max(lambda / 10.0, 1e-12);
      } else {
        for (std::size_t i = 0; i < w.free_vars.size(); ++i) {
          g.var(w.free_vars[i]).state = saved[i];
        }
        lambda *= 10.0;
      }
    }
    ++res.iterations;
    if (!accepted) {
      res.converged = true;  // no accepted step at any damping: local minimum
      break;
    }
    const double rel_drop = (error_before - res.final_error) /
                            std::max(error_before, 1e-30);
    if (rel_drop < opts.relative_error_tol || step_inf < opts.step_tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

double solver_error(const FactorGraph& g, std::size_t first_factor_index) {
  double e = 0.0;
  static const Pose2 dummy;
  for (std::size_t i = first_factor_index; i < g.factors.size(); ++i) {
    const auto& f = g.factors[i];
    const Pose2& x0 = g.var(f.vars[0]).state;
    const Pose2& x1 = f.n_vars == 2 ? g.var(f.vars[1]).state : dummy;
    e += evaluate_factor(f, x0, x1).r.squaredNorm();
  }
  return e;
}

}  // namespace incmap
