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

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "wellsense/apf.hpp"
#include "wellsense/bounded_simplex.hpp"
#include "wellsense/jump_process.hpp"
#include "wellsense/observation.hpp"

namespace wellsense {

/// Everything needed to replay the filter over a fixed observation window.
struct IntervalProblem {
  std::shared_ptr<const ObservationModel> obs;
  MultiplierDistribution multipliers;
  FlowRates initial_rates;  // particles start at these rates times multiplier draws
  std::vector<Eigen::VectorXd> observations;
  std::vector<double> times;
  Eigen::Index particles = 500;
  FilterOptions filter;
};

struct IntervalCostEvaluation {
  NoiseVariances sigma;
  double cost = 0.0;  // -sum(per_step_terms); +inf if the filter degenerated
  std::uint64_t seed = 0;
  std::vector<double> per_step_terms;
  std::ptrdiff_t degenerate_step = -1;
};

/// Negative log predictive likelihood of the whole window under constant
/// noise variances `sigma`. The filter is reseeded with `seed` on every call,
/// so the cost is a deterministic function of (sigma, seed).
IntervalCostEvaluation interval_cost(const NoiseVariances& sigma, const IntervalProblem& problem, std::uint64_t seed);

struct VarianceBounds {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
};

struct MultiStartOptions {
  VarianceBounds bounds;
  NoiseVariances initial_sigma;  // first start
  int n_starts = 3;
  SimplexOptions simplex{0.5, 1e-3, 200};
  int threads = 1;
};

struct StartReport {
  NoiseVariances start;
  NoiseVariances final_point;
  double final_cost = 0.0;
  int evaluations = 0;
  bool converged = false;
  /// (sigma, cost) of every evaluation in order.
  std::vector<std::pair<NoiseVariances, double>> history;
};

struct OptimizerReport {
  NoiseVariances best_sigma;
  double best_cost = 0.0;
  std::vector<StartReport> starts;
};

/// Start points: the initial sigma, then a Halton sequence spread uniformly
/// in log-variance across the bounds.
std::vector<NoiseVariances> multistart_points(const MultiStartOptions& options);

/// Multi-start bounded simplex search in log-variance coordinates over an
/// arbitrary cost. Throws DomainError if every start ends infeasible.
OptimizerReport minimize_variances(const std::function<double(const NoiseVariances&)>& cost,
                                   const MultiStartOptions& options);

/// minimize_variances applied to interval_cost with a fixed seed.
OptimizerReport optimize_interval(const IntervalProblem& problem, const MultiStartOptions& options, std::uint64_t seed);

}  // namespace wellsense
