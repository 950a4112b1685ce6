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

#include "wellsense/apf.hpp"
#include "wellsense/jump_process.hpp"
#include "wellsense/observation.hpp"
#include "wellsense/random.hpp"

namespace wellsense {

struct EmConfig {
  NoiseVariances initial_sigma = Eigen::Vector2d(1.0, 1.0);
  double rel_tol = 1e-3;
  int max_iter = 100;
  double proposal_inflation = 3.0;
  Eigen::Index proposal_samples = 200;   // s
  Eigen::Index multiplier_samples = 50;  // m
  double variance_floor = 1e-8;          // proposal variance floor
  void validate() const;
};

enum class EmStopReason { tolerance, max_iter };

struct EmIteration {
  NoiseVariances sigma;
  /// Surrogate value E(sigma^j | sigma^{j-1}) with the weights normalized
  /// to sum 1.
  double objective;
};

struct EmIterationTrace {
  std::vector<EmIteration> iterations;
  bool converged = false;
  EmStopReason stop_reason = EmStopReason::max_iter;
};

/// Monte Carlo ingredients for one lag-1 estimate. Indices: h over posterior
/// particles, l over multiplier draws, q over proposal points.
struct EmSampleBank {
  Eigen::MatrixXd posterior_particles;  // r x n
  Eigen::VectorXd posterior_weights;    // n
  Eigen::MatrixXd multipliers;          // r x m
  Eigen::MatrixXd proposals;            // r x s
  Eigen::VectorXd proposal_mean;        // r
  Eigen::VectorXd proposal_variance;    // r, inflation x variance of the products
  /// log( w_h f(y | Q_q) / N(Q_q; mu, Sigma) ), stored s x n. The sigma-free
  /// factor does not depend on l.
  Eigen::MatrixXd log_static;
  bool floored = false;

  Eigen::Index n() const noexcept { return posterior_particles.cols(); }
  Eigen::Index m() const noexcept { return multipliers.cols(); }
  Eigen::Index s() const noexcept { return proposals.cols(); }
  Eigen::Index zone_count() const noexcept { return posterior_particles.rows(); }

  double log_static_component(Eigen::Index h, Eigen::Index /*l*/, Eigen::Index q) const { return log_static(q, h); }
};

/// Omega_{h,l,q} up to the common factor exp(log_scale); values are scaled so
/// the largest entry is 1. Entries that would scale below the smallest normal
/// double are stored as 0. Flat index (h * m + l) * s + q.
struct OmegaTensor {
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  Eigen::Index s = 0;
  Eigen::VectorXd values;
  double log_scale = 0.0;

  double operator()(Eigen::Index h, Eigen::Index l, Eigen::Index q) const { return values[(h * m + l) * s + q]; }
  double log_value(Eigen::Index h, Eigen::Index l, Eigen::Index q) const {
    return std::log((*this)(h, l, q)) + log_scale;
  }
};

/// Draws the multiplier and proposal samples and caches the sigma-free weight
/// factor. Posterior must be in the posterior stage.
EmSampleBank build_sample_bank(const ParticleEnsemble& posterior, const Eigen::VectorXd& y_next,
                               const MultiplierDistribution& dist, const ObservationModel& obs,
                               const EmConfig& config, RandomStream& rng, int threads = 1);

/// Omega_{h,l,q} = static_{h,q} * f(Q_q | theta_l .* Q_h, sigma_prev).
OmegaTensor omega_weights(const EmSampleBank& bank, const NoiseVariances& sigma_prev);

/// Closed-form maximizer of the surrogate: Omega-weighted mean squared
/// residual (Q_{q,i} - theta_{l,i} Q_{h,i})^2 per zone.
NoiseVariances em_update(const EmSampleBank& bank, const OmegaTensor& omega);

/// sum_{h,l,q} Omega_{h,l,q} log f(Q_q | theta_l .* Q_h, sigma) / sum Omega,
/// evaluated term by term.
double surrogate_objective(const EmSampleBank& bank, const OmegaTensor& omega, const NoiseVariances& sigma);

struct EmEstimate {
  NoiseVariances sigma;
  EmIterationTrace trace;
};

/// Builds the bank once, then alternates omega_weights and em_update from
/// config.initial_sigma until the relative change in sigma drops below
/// rel_tol or max_iter updates were made.
EmEstimate em_estimate(const EmSampleBank& bank, const EmConfig& config);

EmEstimate em_estimate(const ParticleEnsemble& posterior, const Eigen::VectorXd& y_next,
                       const MultiplierDistribution& dist, const ObservationModel& obs, const EmConfig& config,
                       RandomStream& rng, int threads = 1);

}  // namespace wellsense
