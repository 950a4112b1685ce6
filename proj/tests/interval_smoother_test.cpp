// Copyright 2026 The Wellsense Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <limits>
#include <memory>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "wellsense/bounded_simplex.hpp"
#include "wellsense/error.hpp"
#include "wellsense/interval_smoother.hpp"

namespace wellsense {
namespace {

IntervalProblem linear_problem(const testing::LinearGaussianInstance& inst, Eigen::Index n) {
  return IntervalProblem{std::make_shared<LinearObservationModel>(inst.h, inst.r),
                         testing::unit_multipliers(2),
                         inst.q0,
                         inst.ys,
                         inst.times,
                         n,
                         {}};
}

MultiStartOptions box_options(Eigen::Index d, int starts) {
  MultiStartOptions o;
  o.bounds = {Eigen::VectorXd::Constant(d, 1e-6), Eigen::VectorXd::Constant(d, 10.0)};
  o.initial_sigma = Eigen::VectorXd::Constant(d, 0.5);
  o.n_starts = starts;
  return o;
}

TEST(IntervalCost, SingleObservationSingleParticle) {
  const auto inst = testing::make_linear_instance(RandomStream(1), 1);
  const IntervalProblem p = linear_problem(inst, 1);
  const auto eval = interval_cost(Eigen::Vector2d(0.5, 0.5), p, 9);
  EXPECT_DOUBLE_EQ(eval.cost, -p.obs->loglik(inst.ys[0], inst.q0));
  EXPECT_EQ(eval.seed, 9u);
}

TEST(IntervalCost, DeterministicInSigmaAndSeed) {
  const auto inst = testing::make_linear_instance(RandomStream(2));
  const IntervalProblem p = linear_problem(inst, 300);
  const Eigen::Vector2d s(0.4, 0.3);
  const auto a = interval_cost(s, p, 5);
  const auto b = interval_cost(s, p, 5);
  EXPECT_EQ(a.cost, b.cost);
  EXPECT_EQ(a.per_step_terms, b.per_step_terms);
  EXPECT_NE(a.cost, interval_cost(s, p, 6).cost);
  double sum = 0.0;
  for (double t : a.per_step_terms) sum += t;
  EXPECT_NEAR(a.cost, -sum, 1e-10);
  EXPECT_EQ(a.per_step_terms.size(), inst.ys.size());
}

TEST(IntervalCost, MatchesKalmanNegativeLogLikelihood) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto inst = testing::make_linear_instance(RandomStream(seed).split(100));
    const auto kf = testing::kalman_filter(inst);
    const auto eval = interval_cost(inst.sigma, linear_problem(inst, 10000), seed);
    EXPECT_NEAR(eval.cost, -kf.total_loglik, 0.5) << "seed " << seed;
  }
}

TEST(IntervalCost, DegeneracyGivesInfiniteCost) {
  auto inst = testing::make_linear_instance(RandomStream(3), 8);
  inst.ys[5] = Eigen::Vector2d::Constant(1e200);
  const auto eval = interval_cost(Eigen::Vector2d(0.5, 0.5), linear_problem(inst, 50), 1);
  EXPECT_EQ(eval.cost, std::numeric_limits<double>::infinity());
  EXPECT_EQ(eval.degenerate_step, 5);
}

TEST(IntervalCost, RejectsBadInput) {
  const auto inst = testing::make_linear_instance(RandomStream(3), 3);
  IntervalProblem p = linear_problem(inst, 10);
  EXPECT_THROW(interval_cost(Eigen::Vector2d(0, 1), p, 1), DomainError);
  EXPECT_THROW(interval_cost(Eigen::Vector3d(1, 1, 1), p, 1), DomainError);
  p.observations.clear();
  p.times.clear();
  EXPECT_THROW(interval_cost(Eigen::Vector2d(1, 1), p, 1), DomainError);
}

TEST(MultistartPoints, FirstIsInitialRestSpreadInLogSpace) {
  const MultiStartOptions o = box_options(2, 8);
  const auto pts = multistart_points(o);
  ASSERT_EQ(pts.size(), 8u);
  EXPECT_EQ(pts[0], o.initial_sigma);
  for (const auto& p : pts) {
    EXPECT_TRUE((p.array() >= o.bounds.lo.array()).all());
    EXPECT_TRUE((p.array() <= o.bounds.hi.array()).all());
  }
  // Halton index 1 in base 2 sits at the log-midpoint of the first axis
  EXPECT_NEAR(std::log(pts[1][0]), 0.5 * (std::log(1e-6) + std::log(10.0)), 1e-12);
}

TEST(MinimizeVariances, RecoversQuadraticMinimizer1D) {
  const double target = 0.0137;
  const auto cost = [&](const NoiseVariances& s) {
    const double z = std::log(s[0]) - std::log(target);
    return 3.0 + 2.0 * z * z;
  };
  const OptimizerReport r = minimize_variances(cost, box_options(1, 3));
  EXPECT_NEAR(r.best_sigma[0] / target, 1.0, 1e-3);
  for (const auto& s : r.starts) EXPECT_LE(r.best_cost, s.final_cost);
}

TEST(MinimizeVariances, RecoversQuadraticMinimizer2D) {
  const Eigen::Vector2d target(0.004, 0.1378);
  const auto cost = [&](const NoiseVariances& s) {
    const Eigen::Vector2d z = s.array().log().matrix() - target.array().log().matrix();
    return z[0] * z[0] + 0.5 * z[0] * z[1] + 2.0 * z[1] * z[1];
  };
  const OptimizerReport r = minimize_variances(cost, box_options(2, 3));
  EXPECT_NEAR(r.best_sigma[0] / target[0], 1.0, 1e-3);
  EXPECT_NEAR(r.best_sigma[1] / target[1], 1.0, 1e-3);
}

TEST(MinimizeVariances, StaysPutAtOptimum) {
  const double target = 0.7;
  const auto cost = [&](const NoiseVariances& s) {
    const double z = std::log(s[0] / target);
    return z * z;
  };
  MultiStartOptions o = box_options(1, 1);
  o.initial_sigma = Eigen::VectorXd::Constant(1, target);
  const OptimizerReport r = minimize_variances(cost, o);
  EXPECT_TRUE(r.starts[0].converged);
  EXPECT_LT(std::abs(r.best_sigma[0] / target - 1.0), 0.01);
}

TEST(MinimizeVariances, NeverLeavesBounds) {
  // unconstrained minimum far below the lower bound
  const auto cost = [](const NoiseVariances& s) { return s.array().log().sum(); };
  const OptimizerReport r = minimize_variances(cost, box_options(2, 3));
  for (const auto& st : r.starts) {
    for (const auto& [sig, c] : st.history) {
      EXPECT_TRUE((sig.array() >= 1e-6).all());
      EXPECT_TRUE((sig.array() <= 10.0).all());
    }
  }
  EXPECT_NEAR(r.best_sigma[0], 1e-6, 1e-8);
}

TEST(MinimizeVariances, InfeasibleEverywhereFails) {
  const auto cost = [](const NoiseVariances&) { return std::numeric_limits<double>::infinity(); };
  MultiStartOptions o = box_options(2, 2);
  o.simplex.max_evaluations = 20;
  EXPECT_THROW(minimize_variances(cost, o), DomainError);
}

TEST(MinimizeVariances, RejectsBadOptions) {
  const auto cost = [](const NoiseVariances& s) { return s.sum(); };
  MultiStartOptions o = box_options(2, 0);
  EXPECT_THROW(minimize_variances(cost, o), ConfigError);
  o = box_options(2, 1);
  o.bounds.hi[0] = 1e-7;
  EXPECT_THROW(minimize_variances(cost, o), ConfigError);
}

TEST(BoundedSimplex, BestSoFarIsMonotone) {
  const auto f = [](const Eigen::VectorXd& x) {
    return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
  };
  SimplexOptions o;
  o.max_evaluations = 400;
  const SimplexResult r = bounded_simplex_minimize(f, Eigen::Vector2d(-1.2, 1.0), Eigen::Vector2d(-2, -2),
                                                   Eigen::Vector2d(2, 2), o);
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& e : r.history) {
    EXPECT_LE(e.best_so_far, prev);
    prev = e.best_so_far;
    EXPECT_TRUE((e.x.array() >= -2.0).all() && (e.x.array() <= 2.0).all());
  }
  EXPECT_EQ(r.value, prev);
  EXPECT_LE(r.evaluations, 400);
}

TEST(BoundedSimplex, InfiniteValuesRankWorst) {
  // a wall of +inf beyond x = 1 with the minimum just inside it
  const auto f = [](const Eigen::VectorXd& x) {
    return x[0] > 1.0 ? std::numeric_limits<double>::infinity() : (x[0] - 0.9) * (x[0] - 0.9);
  };
  const SimplexResult r =
      bounded_simplex_minimize(f, Eigen::VectorXd::Constant(1, 0.0), Eigen::VectorXd::Constant(1, -5.0),
                               Eigen::VectorXd::Constant(1, 5.0));
  EXPECT_NEAR(r.x[0], 0.9, 1e-3);
}

TEST(OptimizeInterval, ImprovesOnInitialSigmaAndReportsArgmin) {
  const auto inst = testing::make_linear_instance(RandomStream(4), 20);
  MultiStartOptions o = box_options(2, 1);
  const OptimizerReport r = optimize_interval(linear_problem(inst, 500), o, 3);
  EXPECT_TRUE(r.best_sigma.allFinite());
  EXPECT_LE(r.best_cost, interval_cost(o.initial_sigma, linear_problem(inst, 500), 3).cost);
  double best_row = std::numeric_limits<double>::infinity();
  for (const auto& [s, c] : r.starts[0].history) best_row = std::min(best_row, c);
  EXPECT_EQ(best_row, r.best_cost);
}

}  // namespace
}  // namespace wellsense
