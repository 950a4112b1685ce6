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
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "wellsense/apf.hpp"
#include "wellsense/em_smoother.hpp"
#include "wellsense/interval_smoother.hpp"
#include "wellsense/jump_process.hpp"
#include "wellsense/well_model.hpp"

namespace wellsense {

struct TruthPiece {
  double t_start_s;
  FlowRates rates;
};

/// Piecewise-constant, right-continuous truth: at(t) is the rates of the last
/// piece whose start is <= t.
struct TruthSchedule {
  std::vector<TruthPiece> pieces;
  double t0_s = 0.0;
  double t_end_s = 0.0;
  double sample_period_s = 1.0;

  FlowRates at(double t) const;
  /// t0, t0 + period, ... up to and including t_end.
  std::vector<double> sample_times() const;
  void validate() const;
};

enum class VarianceRegime { manual, fixed_interval, lag1_em };

const char* to_string(VarianceRegime r);
VarianceRegime regime_from_string(const std::string& s);

/// Fixed-interval estimator settings.
struct IntervalSettings {
  Eigen::Index n_particles = 500;
  MultiStartOptions search;
};

struct ScenarioConfig {
  std::string name = "pos_default";
  TruthSchedule truth;
  WellGeometry geometry_truth;
  WellGeometry geometry_assim;
  std::vector<ZoneProperties> zones;
  FluidConstants fluid;
  double noise_rel_std = 2e-4;
  bool noise_enabled = true;
  double covariance_scaling_assim = 1.0;
  JumpProcessSpec jump{MultiplierDistribution::uniform_across(2, {0.5, 0.75, 1.0, 1.25, 1.5}, {0.1, 0.1, 0.6, 0.1, 0.1}),
                       Eigen::Vector2d(0.5, 0.5)};
  Eigen::Index n_particles = 500;
  VarianceRegime regime = VarianceRegime::manual;
  NoiseVariances manual_sigma;
  IntervalSettings fixed_interval;
  EmConfig em;
  FilterOptions filter;
  std::uint64_t seed = 1;

  void validate() const;
  bool imperfect() const { return geometry_truth.segment_length != geometry_assim.segment_length; }
};

/// The reference two-zone twin experiment (gas zone Z1, oil zone Z2).
ScenarioConfig default_scenario();
/// Same, with 5 m truth resolution against 50 m assimilation.
ScenarioConfig imperfect_scenario(double covariance_scaling = 1.0);

/// W for the truth noise: squared rel_std times the noise-free reading at the
/// truth's initial rates, computed once at the truth resolution.
ObservationNoiseModel truth_noise_model(const ScenarioConfig& scenario);
/// Observation model used in assimilation: assimilation resolution, W scaled.
std::shared_ptr<const WellObservationModel> assimilation_model(const ScenarioConfig& scenario);

/// Truth rates through the truth-resolution simulator, plus unscaled noise.
std::vector<GaugeRecord> synthesize_observations(const ScenarioConfig& scenario, RandomStream& rng);

struct EmStepRecord {
  double time_s;
  int iterations;
  NoiseVariances sigma;
  bool converged;
};

struct RunReport {
  std::string scenario_name;
  VarianceRegime regime = VarianceRegime::manual;
  double covariance_scaling = 1.0;
  std::uint64_t seed = 0;
  std::vector<double> times;
  std::vector<FlowRates> truth;
  std::vector<FlowRates> mean;
  std::vector<FlowRates> std;
  std::vector<StepDiagnostics> diagnostics;
  std::vector<EmStepRecord> em_steps;              // lag-1 regime
  std::vector<EmIterationTrace> em_traces;         // lag-1 regime, full traces
  std::optional<OptimizerReport> optimizer;        // fixed-interval regime
  NoiseVariances constant_sigma;                   // manual / fixed-interval
  double time_mean_rmse = 0.0;
};

/// Mean over steps of sqrt(mean over zones of squared error).
double time_mean_rmse(const std::vector<FlowRates>& estimate, const std::vector<FlowRates>& truth);

/// Runs the APF over `observations` under the scenario's regime. For the
/// fixed-interval regime `fixed_sigma` is used when given; otherwise the
/// optimizer is run first on the same observations.
RunReport run_filter(const ScenarioConfig& scenario, const std::vector<GaugeRecord>& observations,
                     std::optional<NoiseVariances> fixed_sigma = std::nullopt);

/// Seed used for common random numbers inside fixed-interval cost evaluations.
std::uint64_t interval_cost_seed(std::uint64_t scenario_seed);
IntervalProblem interval_problem(const ScenarioConfig& scenario, const std::vector<GaugeRecord>& observations);

struct ComparisonTable {
  std::vector<std::string> rows;     // scenario / covariance scaling label
  std::vector<std::string> columns;  // regimes
  Eigen::MatrixXd values;            // NaN where no run exists
};

std::string row_label(const RunReport& run);
ComparisonTable rmse_report(const std::vector<RunReport>& runs);

}  // namespace wellsense
