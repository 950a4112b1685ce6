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

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "wellsense/jump_process.hpp"
#include "wellsense/observation.hpp"
#include "wellsense/random.hpp"

namespace wellsense {

enum class EnsembleStage { prior, posterior, resampled };
enum class ResamplingScheme { multinomial, systematic };
enum class DegeneracyPolicy { abort, uniform_reset };

/// Weighted particle cloud. Particles are stored one per column
/// (zones x n). Weights sum to 1 for prior/posterior stages and are all 1/n
/// after resampling.
struct ParticleEnsemble {
  Eigen::MatrixXd particles;
  Eigen::VectorXd weights;
  EnsembleStage stage = EnsembleStage::prior;

  Eigen::Index size() const noexcept { return particles.cols(); }
  Eigen::Index zone_count() const noexcept { return particles.rows(); }

  static ParticleEnsemble equally_weighted(Eigen::MatrixXd particles, EnsembleStage stage);
};

struct FilterState {
  ParticleEnsemble ensemble;
  Eigen::Index time_index = 0;
  /// log p(y_k | y_0..y_{k-1}) estimates, one per assimilated observation.
  std::vector<double> log_predictive_terms;
};

struct FilterOptions {
  ResamplingScheme resampling = ResamplingScheme::multinomial;
  DegeneracyPolicy degeneracy = DegeneracyPolicy::abort;
  bool clamp_at_zero = false;
  int threads = 1;
};

/// Truth rates times independent multiplier draws, equal weights, prior stage.
ParticleEnsemble initialize_ensemble(const FlowRates& q0, const MultiplierDistribution& dist, Eigen::Index n,
                                     RandomStream& rng);

/// Bayes update of a prior ensemble with y; particles are unchanged. Appends
/// log sum_i w_i p(y | Q_i) to the state's predictive terms.
FilterState filter_step(FilterState state, const Eigen::VectorXd& y, const ObservationModel& obs,
                        const FilterOptions& options = {});

/// SIR over indices: `count` draws with probability proportional to `weights`.
std::vector<Eigen::Index> resample_indices(const Eigen::VectorXd& weights, Eigen::Index count, RandomStream& rng,
                                           ResamplingScheme scheme = ResamplingScheme::multinomial);

struct AuxResampleResult {
  ParticleEnsemble resampled;        // selected omega points, equal weights
  std::vector<Eigen::Index> indices; // j^s, 0-based into omega_points
  Eigen::MatrixXd omega_points;      // theta^j .* Q^j for every j
  Eigen::VectorXd omega_logliks;     // log p(y_next | omega^j)
  double log_first_stage = 0.0;      // log sum_j w^j p(y_next | omega^j)
  bool reset = false;                // degeneracy fallback engaged
};

/// First stage of the auxiliary filter: multiplier-only forecasts of each
/// posterior particle are scored against y_next and resampled by
/// mu^j proportional to w^j p(y_next | omega^j).
AuxResampleResult aux_resample(const FilterState& state, const Eigen::VectorXd& y_next,
                               const MultiplierDistribution& dist, const ObservationModel& obs, RandomStream& rng,
                               const FilterOptions& options = {});

struct PredictResult {
  ParticleEnsemble ensemble;     // posterior at the next time
  double log_predictive = 0.0;   // estimate of log p(y_next | past)
  bool reset = false;
};

/// Second stage: Q^s = omega^{j^s} + u, u ~ N(0, diag(sigma)), with weights
/// proportional to p(y_next | Q^s) / p(y_next | omega^{j^s}).
PredictResult predict_step(const AuxResampleResult& aux, const Eigen::VectorXd& y_next, const NoiseVariances& sigma,
                           const ObservationModel& obs, RandomStream& rng, const FilterOptions& options = {});

/// aux_resample followed by predict_step; advances the state by one time index.
FilterState apf_step(FilterState state, const Eigen::VectorXd& y_next, const MultiplierDistribution& dist,
                     const NoiseVariances& sigma, const ObservationModel& obs, RandomStream& rng,
                     const FilterOptions& options = {});

double effective_sample_size(const ParticleEnsemble& e);

struct PosteriorSummary {
  FlowRates mean;
  FlowRates std;  // population convention: sqrt(sum w (x - mean)^2)
};

PosteriorSummary posterior_summary(const ParticleEnsemble& e);

struct StepDiagnostics {
  double time_s = 0.0;
  double ess = 0.0;
  double loglik_increment = 0.0;
  double weight_sum = 0.0;
  FlowRates mean;
  FlowRates std;
  NoiseVariances sigma_used;  // noise variances that produced this step (empty at t0)
  bool reset = false;
};

/// Supplies the noise variances used to move from the posterior at index k to
/// k + 1, given y_{k+1}.
using SigmaProvider =
    std::function<NoiseVariances(const FilterState& posterior, const Eigen::VectorXd& y_next, RandomStream& rng)>;

struct ApfRun {
  FilterState final_state;
  std::vector<StepDiagnostics> steps;
};

/// Filters a whole observation sequence from an initial prior ensemble:
/// filter_step on the first observation, apf_step on each later one.
/// Degeneracy errors are rethrown tagged with the step index.
ApfRun run_apf(ParticleEnsemble prior, const std::vector<Eigen::VectorXd>& observations,
               const std::vector<double>& times, const MultiplierDistribution& dist, const ObservationModel& obs,
               const SigmaProvider& sigma, RandomStream& rng, const FilterOptions& options = {});

}  // namespace wellsense
