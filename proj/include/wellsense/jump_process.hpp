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

#include <vector>

#include <Eigen/Core>

#include "wellsense/random.hpp"

namespace wellsense {

/// Per-zone mass flow rates in kg/s (the hidden state).
using FlowRates = Eigen::VectorXd;
/// Per-zone variances of the additive process noise, (kg/s)^2.
using NoiseVariances = Eigen::VectorXd;
/// One drawn multiplier per zone.
using MultiplierVector = Eigen::VectorXd;

/// Categorical law of one zone's multiplier.
struct ZoneMultipliers {
  std::vector<double> support;
  std::vector<double> probs;
};

/// Independent categorical multipliers, one law per zone. Construction
/// validates: equal lengths, positive support, probabilities summing to 1.
class MultiplierDistribution {
 public:
  explicit MultiplierDistribution(std::vector<ZoneMultipliers> zones);

  /// The same support/probabilities for every zone.
  static MultiplierDistribution uniform_across(Eigen::Index zone_count, std::vector<double> support,
                                               std::vector<double> probs);

  Eigen::Index zone_count() const noexcept { return static_cast<Eigen::Index>(zones_.size()); }
  const ZoneMultipliers& zone(Eigen::Index i) const { return zones_.at(static_cast<std::size_t>(i)); }
  const std::vector<ZoneMultipliers>& zones() const noexcept { return zones_; }

  /// Mean multiplier per zone.
  Eigen::VectorXd mean() const;

 private:
  std::vector<ZoneMultipliers> zones_;
};

/// Multiplier law plus the initial noise variances.
struct JumpProcessSpec {
  MultiplierDistribution multipliers;
  NoiseVariances sigma0;
};

MultiplierVector sample_multipliers(const MultiplierDistribution& dist, RandomStream& rng);

/// theta .* q + u with u ~ N(0, diag(sigma)). A zero variance makes that zone
/// deterministic. Negative results are kept unless `clamp_at_zero` is set.
FlowRates propagate(const FlowRates& q, const MultiplierVector& theta, const NoiseVariances& sigma, RandomStream& rng,
                    bool clamp_at_zero = false);

/// Sum over zones of log N(q_next_i; theta_i q_i, sigma_i). Requires sigma > 0.
double transition_logpdf_given_theta(const FlowRates& q_next, const FlowRates& q, const MultiplierVector& theta,
                                     const NoiseVariances& sigma);

/// One zone's marginal mixture density sum_j P_j N(x; c_j q, sigma).
double gmm_zone_pdf(double x, double q, const ZoneMultipliers& zone, double sigma);

/// Transition density with the multipliers marginalized out:
/// prod_i sum_j P_{j,i} N(q_next_i; c_{j,i} q_i, sigma_i).
double gmm_transition_pdf(const FlowRates& q_next, const FlowRates& q, const MultiplierDistribution& dist,
                          const NoiseVariances& sigma);

}  // namespace wellsense
