#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "incmap/core.hpp"
#include "incmap/graph.hpp"
#include "incmap/pose2.hpp"

namespace incmap {

// Symmetric inverse square root of an SPD matrix (whitening transform).
// Throws DataError if the matrix is not positive definite.
Eigen::MatrixXd matrix_inverse_sqrt(const Eigen::MatrixXd& m);

// Body-rate samples composed into one relative-pose increment over [t_a, t_b].
struct PreintegratedMotion {
  Pose2 relative;
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
  double t_a = 0.0;
  double t_b = 0.0;
  double first_sample_shift = 0.0;  // t_m1 - t_a
};

// Exact unicycle integration under piecewise-constant rates: each sample's
// twist holds from its timestamp to the next sample (the first also covers
// [t_a, t_1]); covariance is propagated first-order through each composition.
PreintegratedMotion preintegrate(std::span<const Measurement> samples, double t_a, double t_b);

// Sequential composition of two preintegrated segments (a then b).
PreintegratedMotion compose(const PreintegratedMotion& a, const PreintegratedMotion& b);

struct ResidualBlock {
  Eigen::VectorXd r;   // whitened residual
  Eigen::MatrixXd j0;  // d r / d state(vars[0])
  Eigen::MatrixXd j1;  // d r / d state(vars[1]) (binary factors only)
};

// Whitened residual and analytic Jacobians in the additive chart
// (x, y, wrap(theta)).
ResidualBlock evaluate_factor(const FactorNode& f, const Pose2& x0, const Pose2& x1);

struct OptimizeOptions {
  int max_iterations = 100;
  double relative_error_tol = 1e-9;
  double step_tol = 1e-10;
  double initial_lambda = 1e-4;
};

struct OptimizeResult {
  double final_error = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Levenberg-Marquardt over all variables with epoch >= min_free_epoch; older
// variables are held fixed (sliding re-linearization horizon). Throws
// RankDeficiencyError when the undamped normal equations are singular.
OptimizeResult optimize(FactorGraph& g, int min_free_epoch = 0,
                        const OptimizeOptions& opts = {},
                        const std::string& context = "optimize");

// Rank deficiency of the undamped normal equations (0 for a well-posed graph).
int rank_deficiency(const FactorGraph& g, int min_free_epoch = 0);

// Mahalanobis objective over a factor range [first_factor_index, end).
double solver_error(const FactorGraph& g, std::size_t first_factor_index = 0);

}  // namespace incmap
