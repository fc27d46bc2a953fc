#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "incmap/graph.hpp"
#include "incmap/solver.hpp"

using namespace incmap;
using namespace incmap::testing;

namespace {

Pose2 random_pose(std::mt19937_64& rng, double span = 2.0) {
  std::uniform_real_distribution<> uni(-span, span);
  return Pose2(uni(rng), uni(rng), std::uniform_real_distribution<>(-M_PI, M_PI)(rng));
}

Eigen::MatrixXd random_spd(std::mt19937_64& rng, int n) {
  std::normal_distribution<> gauss;
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = gauss(rng);
  }
  return a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
}

// Central finite differences of the whitened residual in the additive chart.
void check_jacobians(const FactorNode& f, const Pose2& x0, const Pose2& x1) {
  const ResidualBlock rb = evaluate_factor(f, x0, x1);
  const double h = 1e-7;
  auto perturb = [](const Pose2& p, int k, double d) {
    Pose2 q = p;
    if (k == 0) q.x += d;
    if (k == 1) q.y += d;
    if (k == 2) q.theta += d;
    return q;
  };
  for (int k = 0; k < 3; ++k) {
    const Eigen::VectorXd rp = evaluate_factor(f, perturb(x0, k, h), x1).r;
    const Eigen::VectorXd rm = evaluate_factor(f, perturb(x0, k, -h), x1).r;
    const Eigen::VectorXd fd = (rp - rm) / (2 * h);
    const double scale = std::max(1.0, fd.norm());
    CHECK((rb.j0.col(k) - fd).norm() / scale < 1e-6);
  }
  if (f.n_vars == 2) {
    for (int k = 0; k < 3; ++k) {
      const Eigen::VectorXd rp = evaluate_factor(f, x0, perturb(x1, k, h)).r;
      const Eigen::VectorXd rm = evaluate_factor(f, x0, perturb(x1, k, -h)).r;
      const Eigen::VectorXd fd = (rp - rm) / (2 * h);
      const double scale = std::max(1.0, fd.norm());
      CHECK((rb.j1.col(k) - fd).norm() / scale < 1e-6);
    }
  }
}

FactorNode random_factor(std::mt19937_64& rng, FactorKind kind) {
  FactorNode f;
  f.kind = kind;
  if (kind == FactorKind::prior_position) {
    f.n_vars = 1;
    f.vars = {0, -1};
    std::uniform_real_distribution<> uni(-2, 2);
    f.z_pos = {uni(rng), uni(rng)};
    f.sqrt_info = matrix_inverse_sqrt(random_spd(rng, 2));
  } else {
    f.n_vars = kind == FactorKind::anchor ? 1 : 2;
    f.vars = {0, f.n_vars == 2 ? 1 : -1};
    f.z_pose = random_pose(rng);
    f.sqrt_info = matrix_inverse_sqrt(random_spd(rng, 3));
  }
  return f;
}

}  // namespace

TEST_CASE("matrix_inverse_sqrt whitens") {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd s = random_spd(rng, 3);
  const Eigen::MatrixXd w = matrix_inverse_sqrt(s);
  CHECK((w * s * w.transpose() - Eigen::Matrix3d::Identity()).norm() < 1e-10);
  CHECK((w - w.transpose()).norm() < 1e-10);
  Eigen::Matrix2d bad;
  bad << 1, 0, 0, -1;
  CHECK_THROWS_AS(matrix_inverse_sqrt(bad), DataError);
}

TEST_CASE("preintegrate straight line and pure rotation") {
  std::vector<Measurement> one = {make_rate(0.0, 1.0, 0.0, 0.0)};
  PreintegratedMotion straight = preintegrate(one, 0.0, 1.0);
  CHECK(straight.relative.x == doctest::Approx(1.0));
  CHECK(straight.relative.y == doctest::Approx(0.0));
  CHECK(straight.relative.theta == doctest::Approx(0.0));

  std::vector<Measurement> spin = {make_rate(0.0, 0.0, 0.0, M_PI / 2)};
  PreintegratedMotion rot = preintegrate(spin, 0.0, 1.0);
  CHECK(rot.relative.x == doctest::Approx(0.0));
  CHECK(rot.relative.y == doctest::Approx(0.0));
  CHECK(rot.relative.theta == doctest::Approx(M_PI / 2));
}

TEST_CASE("preintegrate constant-twist arc matches closed form and fine-step oracle") {
  // Two samples of (v=1, w=pi/2), 0.5 s each: quarter arc of radius 2/pi.
  std::vector<Measurement> samples = {make_rate(0.0, 1.0, 0.0, M_PI / 2),
                                      make_rate(0.5, 1.0, 0.0, M_PI / 2)};
  PreintegratedMotion arc = preintegrate(samples, 0.0, 1.0);
  CHECK(arc.relative.x == doctest::Approx(2 / M_PI).epsilon(1e-12));
  CHECK(arc.relative.y == doctest::Approx(2 / M_PI).epsilon(1e-12));
  CHECK(arc.relative.theta == doctest::Approx(M_PI / 2).epsilon(1e-12));

  // Independent oracle: Euler integration of the unicycle at dt = 1e-5.
  double x = 0, y = 0, th = 0;
  const double dt = 1e-5;
  for (int i = 0; i < 100000; ++i) {
    x += std::cos(th) * 1.0 * dt;
    y += std::sin(th) * 1.0 * dt;
    th += M_PI / 2 * dt;
  }
  CHECK(arc.relative.x == doctest::Approx(x).epsilon(1e-4));
  CHECK(arc.relative.y == doctest::Approx(y).epsilon(1e-4));
  CHECK(arc.relative.theta == doctest::Approx(th).epsilon(1e-4));
}

TEST_CASE("preintegrate first-sample shift and dwell coverage") {
  std::vector<Measurement> samples = {make_rate(2.05, 1.0, 0.0, 0.0),
                                      make_rate(2.5, 1.0, 0.0, 0.0)};
  PreintegratedMotion p = preintegrate(samples, 2.0, 3.0);
  CHECK(p.first_sample_shift == doctest::Approx(0.05));
  // First sample covers [2.0, 2.5], second [2.5, 3.0]: 1 m total.
  CHECK(p.relative.x == doctest::Approx(1.0));
  CHECK(p.t_a == doctest::Approx(2.0));
  CHECK(p.t_b == doctest::Approx(3.0));
  CHECK_THROWS_AS(preintegrate(std::vector<Measurement>{}, 0.0, 1.0), PipelineError);
}

TEST_CASE("preintegrate split composition is exact in pose") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<> uni(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Measurement> samples;
    for (int i = 0; i < 8; ++i) {
      samples.push_back(
          make_rate(0.1 + 0.1 * i, uni(rng), 0.2 * uni(rng), uni(rng)));
    }
    const double mid = samples[4].timestamp;
    PreintegratedMotion whole = preintegrate(samples, 0.0, 1.0);
    std::vector<Measurement> lo(samples.begin(), samples.begin() + 4);
    std::vector<Measurement> hi(samples.begin() + 4, samples.end());
    PreintegratedMotion a = preintegrate(lo, 0.0, mid);
    PreintegratedMotion b = preintegrate(hi, mid, 1.0);
    PreintegratedMotion joined = compose(a, b);
    CHECK(joined.relative.x == doctest::Approx(whole.relative.x).epsilon(1e-10));
    CHECK(joined.relative.y == doctest::Approx(whole.relative.y).epsilon(1e-10));
    CHECK(joined.relative.theta == doctest::Approx(whole.relative.theta).epsilon(1e-10));
    // Covariance composition agrees to first order.
    CHECK((joined.covariance - whole.covariance).norm() /
              std::max(1e-12, whole.covariance.norm()) <
          0.05);
  }
}

TEST_CASE("preintegrate covariance trace grows with sample count") {
  std::vector<Measurement> samples;
  double last_trace = 0.0;
  for (int i = 0; i < 6; ++i) {
    samples.push_back(make_rate(0.1 * i, 1.0, 0.0, 0.1));
    PreintegratedMotion p = preintegrate(samples, 0.0, 0.1 * i + 0.1);
    CHECK(p.covariance.trace() > last_trace);
    last_trace = p.covariance.trace();
  }
}

TEST_CASE("zero residual at consistent states") {
  std::mt19937_64 rng(17);
  FactorNode prior = random_factor(rng, FactorKind::prior_position);
  const Pose2 at(prior.z_pos.x(), prior.z_pos.y(), 0.3);
  CHECK(evaluate_factor(prior, at, {}).r.norm() == doctest::Approx(0.0));

  FactorNode odo = random_factor(rng, FactorKind::odometry);
  const Pose2 x0 = random_pose(rng);
  const Pose2 x1 = x0.compose(odo.z_pose);
  CHECK(evaluate_factor(odo, x0, x1).r.norm() < 1e-12);
}

TEST_CASE("analytic jacobians match finite differences on 1000 random factors") {
  std::mt19937_64 rng(23);
  const FactorKind kinds[] = {FactorKind::anchor, FactorKind::prior_position,
                              FactorKind::odometry, FactorKind::preintegrated_motion};
  for (int trial = 0; trial < 1000; ++trial) {
    FactorNode f = random_factor(rng, kinds[trial % 4]);
    check_jacobians(f, random_pose(rng), random_pose(rng));
  }
}

namespace {

// Anchor + noiseless odometry chain of n poses along ground truth.
FactorGraph exact_chain(int n, bool with_anchor = true) {
  FactorGraph g;
  std::mt19937_64 rng(31);
  Pose2 truth;
  std::vector<Pose2> gt;
  for (int i = 0; i < n; ++i) {
    VariableNode v;
    v.id = i;
    v.timestamp = i;
    v.state = Pose2(0.1 * i, -0.05 * i, 0.02 * i);  // deliberately wrong init
    g.variables.push_back(v);
    gt.push_back(truth);
    truth = truth.compose(Pose2(0.5, 0.1, 0.2));
  }
  FactorId fid = 0;
  if (with_anchor) {
    FactorNode a;
    a.id = fid++;
    a.kind = FactorKind::anchor;
    a.vars = {0, -1};
    a.n_vars = 1;
    a.z_pose = gt[0];
    a.sqrt_info = Eigen::Matrix3d::Identity() * 1e4;
    g.factors.push_back(std::move(a));
  }
  for (int i = 0; i + 1 < n; ++i) {
    FactorNode f;
    f.id = fid++;
    f.kind = FactorKind::odometry;
    f.vars = {i, i + 1};
    f.n_vars = 2;
    f.z_pose = gt[static_cast<std::size_t>(i)].between(gt[static_cast<std::size_t>(i) + 1]);
    f.sqrt_info = Eigen::Matrix3d::Identity() * 100.0;
    g.factors.push_back(std::move(f));
  }
  return g;
}

}  // namespace

TEST_CASE("noiseless chain converges to machine precision") {
  FactorGraph g = exact_chain(3);
  const OptimizeResult res = optimize(g);
  CHECK(res.converged);
  CHECK(res.final_error < 1e-12);
  // Solution equals composed ground truth.
  Pose2 truth;
  for (int i = 0; i < 3; ++i) {
    CHECK(g.variables[static_cast<std::size_t>(i)].state.x ==
          doctest::Approx(truth.x).epsilon(1e-9));
    CHECK(g.variables[static_cast<std::size_t>(i)].state.y ==
          doctest::Approx(truth.y).epsilon(1e-9));
    truth = truth.compose(Pose2(0.5, 0.1, 0.2));
  }
}

TEST_CASE("single pose with gps prior lands exactly on the measurement") {
  FactorGraph g;
  VariableNode v;
  v.id = 0;
  g.variables.push_back(v);
  FactorNode f;
  f.id = 0;
  f.kind = FactorKind::prior_position;
  f.vars = {0, -1};
  f.n_vars = 1;
  f.z_pos = {1.5, -2.5};
  f.sqrt_info = Eigen::Matrix2d::Identity() * 20.0;
  g.factors.push_back(std::move(f));
  // Theta is unobserved: pin only the theta row so x, y stay untouched.
  FactorNode a;
  a.id = 1;
  a.kind = FactorKind::anchor;
  a.vars = {0, -1};
  a.n_vars = 1;
  a.z_pose = Pose2(0, 0, 0);
  a.sqrt_info = Eigen::Matrix3d::Zero();
  a.sqrt_info(2, 2) = 1.0;
  g.factors.push_back(std::move(a));
  optimize(g);
  CHECK(g.variables[0].state.x == doctest::Approx(1.5).epsilon(1e-9));
  CHECK(g.variables[0].state.y == doctest::Approx(-2.5).epsilon(1e-9));
}

TEST_CASE("anchor removal is rank deficient by exactly 3") {
  FactorGraph with = exact_chain(4, true);
  CHECK(rank_deficiency(with) == 0);
  FactorGraph without = exact_chain(4, false);
  CHECK(rank_deficiency(without) == 3);
  try {
    optimize(without, 0, {}, "gauge test");
    FAIL("expected RankDeficiencyError");
  } catch (const RankDeficiencyError& e) {
    CHECK(e.deficiency == 3);
  }
}

TEST_CASE("solver_error hand computation") {
  // r1 = (0.1, 0) with Sigma = I and r2 = (0, 0.2, 0) with Sigma = 4I:
  // E = 0.01 + 0.04/4 = 0.02.
  FactorGraph g;
  VariableNode v;
  v.id = 0;
  v.state = Pose2(0.1, 0.0, 0.0);
  g.variables.push_back(v);
  FactorNode f1;
  f1.id = 0;
  f1.kind = FactorKind::prior_position;
  f1.vars = {0, -1};
  f1.n_vars = 1;
  f1.z_pos = {0.0, 0.0};
  f1.sqrt_info = Eigen::Matrix2d::Identity();
  g.factors.push_back(std::move(f1));
  FactorNode f2;
  f2.id = 1;
  f2.kind = FactorKind::anchor;
  f2.vars = {0, -1};
  f2.n_vars = 1;
  f2.z_pose = Pose2(0.1, -0.2, 0.0);
  f2.sqrt_info = matrix_inverse_sqrt(Eigen::Matrix3d::Identity() * 4.0);
  g.factors.push_back(std::move(f2));
  CHECK(solver_error(g) == doctest::Approx(0.02).epsilon(1e-12));

  // Scaling all covariances by c scales E by 1/c.
  g.factors[0].sqrt_info /= std::sqrt(10.0);
  g.factors[1].sqrt_info /= std::sqrt(10.0);
  CHECK(solver_error(g) == doctest::Approx(0.002).epsilon(1e-12));
}

TEST_CASE("optimize is invariant to variable ordering") {
  FactorGraph g = exact_chain(4);
  // Permute variable storage (ids keep meaning).
  FactorGraph p = g;
  std::swap(p.variables[1], p.variables[2]);
  std::sort(p.variables.begin(), p.variables.end(),
            [](const VariableNode& a, const VariableNode& b) { return a.id < b.id; });
  optimize(g);
  optimize(p);
  for (std::size_t i = 0; i < g.variables.size(); ++i) {
    CHECK(g.variables[i].state.x == doctest::Approx(p.variables[i].state.x).epsilon(1e-9));
    CHECK(g.variables[i].state.theta ==
          doctest::Approx(p.variables[i].state.theta).epsilon(1e-9));
  }
}

TEST_CASE("frozen epochs do not move") {
  FactorGraph g = exact_chain(4);
  optimize(g);
  for (auto& v : g.variables) v.epoch = static_cast<int>(v.id);
  const Pose2 frozen0 = g.variables[0].state;
  const Pose2 frozen1 = g.variables[1].state;
  const Pose2 solved2 = g.variables[2].state;
  // Perturb the free tail, freeze epochs < 2.
  g.variables[2].state.x += 0.3;
  g.variables[3].state.y -= 0.2;
  optimize(g, 2);
  CHECK(g.variables[0].state.x == frozen0.x);
  CHECK(g.variables[1].state.y == frozen1.y);
  CHECK(g.variables[2].state.x == doctest::Approx(solved2.x).epsilon(1e-6));
}
