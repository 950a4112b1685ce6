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

#include "wellsense/jump_process.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "wellsense/error.hpp"
#include "wellsense/gaussian.hpp"

namespace wellsense {

namespace {

void check_same_size(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const char* what) {
  if (a.size() != b.size()) {
    std::ostringstream os;
    os << what << ": size mismatch (" << a.size() << " vs " << b.size() << ")";
    throw DomainError(os.str());
  }
}

void check_positive_variances(const NoiseVariances& sigma, const char* what) {
  for (Eigen::Index i = 0; i < sigma.size(); ++i)
    if (!(sigma[i] > 0.0)) throw DomainError(std::string(what) + ": variances must be > 0");
}

}  // namespace

MultiplierDistribution::MultiplierDistribution(std::vector<ZoneMultipliers> zones) : zones_(std::move(zones)) {
  if (zones_.empty()) throw ConfigError("multiplier distribution needs at least one zone");
  for (std::size_t i = 0; i < zones_.size(); ++i) {
    const auto& z = zones_[i];
    const std::string where = "multiplier zone " + std::to_string(i);
    if (z.support.empty()) throw ConfigError(where + ": empty support");
    if (z.support.size() != z.probs.size()) throw ConfigError(where + ": support and probs lengths differ");
    for (double c : z.support)
      if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError(where + ": support values must be finite and > 0");
    for (double p : z.probs)
      if (!(p >= 0.0)) throw ConfigError(where + ": probabilities must be >= 0");
    const double total = std::accumulate(z.probs.begin(), z.probs.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-12) {
      std::ostringstream os;
      os.precision(17);
      os << where << ": probabilities sum to " << total << ", expected 1";
      throw ConfigError(os.str());
    }
  }
}

MultiplierDistribution MultiplierDistribution::uniform_across(Eigen::Index zone_count, std::vector<double> support,
                                                              std::vector<double> probs) {
  return MultiplierDistribution(
      std::vector<ZoneMultipliers>(static_cast<std::size_t>(zone_count), ZoneMultipliers{support, probs}));
}

Eigen::VectorXd MultiplierDistribution::mean() const {
  Eigen::VectorXd m(zone_count());
  for (Eigen::Index i = 0; i < zone_count(); ++i) {
    const auto& z = zone(i);
    m[i] = std::inner_product(z.support.begin(), z.support.end(), z.probs.begin(), 0.0);
  }
  return m;
}

MultiplierVector sample_multipliers(const MultiplierDistribution& dist, RandomStream& rng) {
  MultiplierVector theta(dist.zone_count());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const auto& z = dist.zone(i);
    theta[i] = z.support[rng.categorical(z.probs)];
  }
  return theta;
}

FlowRates propagate(const FlowRates& q, const MultiplierVector& theta, const NoiseVariances& sigma, RandomStream& rng,
                    bool clamp_at_zero) {
  check_same_size(q, theta, "propagate");
  check_same_size(q, sigma, "propagate");
  FlowRates next(q.size());
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    if (!(sigma[i] >= 0.0)) throw DomainError("propagate: negative noise variance");
    next[i] = theta[i] * q[i];
    if (sigma[i] > 0.0) next[i] += std::sqrt(sigma[i]) * rng.normal();
    if (clamp_at_zero && next[i] < 0.0) next[i] = 0.0;
  }
  return next;
}

double transition_logpdf_given_theta(const FlowRates& q_next, const FlowRates& q, const MultiplierVector& theta,
                                     const NoiseVariances& sigma) {
  check_same_size(q_next, q, "transition_logpdf_given_theta");
  check_same_size(q, theta, "transition_logpdf_given_theta");
  check_same_size(q, sigma, "transition_logpdf_given_theta");
  check_positive_variances(sigma, "transition_logpdf_given_theta");
  return diag_gaussian_logpdf(q_next, theta.cwiseProduct(q), sigma);
}

double gmm_zone_pdf(double x, double q, const ZoneMultipliers& zone, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("gmm_zone_pdf: variance must be > 0");
  double p = 0.0;
  for (std::size_t j = 0; j < zone.support.size(); ++j)
    p += zone.probs[j] * std::exp(log_normal_pdf(x, zone.support[j] * q, sigma));
  return p;
}

double gmm_transition_pdf(const FlowRates& q_next, const FlowRates& q, const MultiplierDistribution& dist,
                          const NoiseVariances& sigma) {
  check_same_size(q_next, q, "gmm_transition_pdf");
  check_same_size(q, sigma, "gmm_transition_pdf");
  if (q.size() != dist.zone_count()) throw DomainError("gmm_transition_pdf: zone count mismatch");
  check_positive_variances(sigma, "gmm_transition_pdf");
  double p = 1.0;
  for (Eigen::Index i = 0; i < q.size(); ++i) p *= gmm_zone_pdf(q_next[i], q[i], dist.zone(i), sigma[i]);
  return p;
}

}  // namespace wellsense
