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

#include "wellsense/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include "wellsense/error.hpp"

namespace wellsense {

FlowRates TruthSchedule::at(double t) const {
  if (pieces.empty()) throw DomainError("truth schedule has no pieces");
  const TruthPiece* cur = &pieces.front();
  for (const auto& p : pieces)
    if (p.t_start_s <= t) cur = &p;
  return cur->rates;
}

std::vector<double> TruthSchedule::sample_times() const {
  std::vector<double> out;
  // integer step count keeps the grid free of accumulated rounding
  const auto n = static_cast<long>(std::floor((t_end_s - t0_s) / sample_period_s + 1e-9));
  for (long k = 0; k <= n; ++k) out.push_back(t0_s + static_cast<double>(k) * sample_period_s);
  return out;
}

void TruthSchedule::validate() const {
  if (pieces.empty()) throw ConfigError("truth: at least one piece is required");
  if (!(t0_s < t_end_s)) throw ConfigError("truth: t0_s must be < t_end_s");
  if (!(sample_period_s > 0.0)) throw ConfigError("truth: sample_period_s must be > 0");
  if (pieces.front().t_start_s > t0_s) throw ConfigError("truth: first piece must start at or before t0_s");
  for (std::size_t k = 0; k < pieces.size(); ++k) {
    if (k > 0 && !(pieces[k].t_start_s > pieces[k - 1].t_start_s))
      throw ConfigError("truth: pieces must be strictly time-ordered");
    if (pieces[k].rates.size() != pieces.front().rates.size())
      throw ConfigError("truth: every piece needs the same number of zone rates");
    if (!pieces[k].rates.allFinite() || (pieces[k].rates.array() < 0.0).any())
      throw ConfigError("truth: rates must be finite and >= 0");
  }
}

const char* to_string(VarianceRegime r) {
  switch (r) {
    case VarianceRegime::manual: return "manual";
    case VarianceRegime::fixed_interval: return "fixed_interval";
    case VarianceRegime::lag1_em: return "lag1_em";
  }
  return "?";
}

VarianceRegime regime_from_string(const std::string& s) {
  if (s == "manual") return VarianceRegime::manual;
  if (s == "fixed_interval") return VarianceRegime::fixed_interval;
  if (s == "lag1_em") return VarianceRegime::lag1_em;
  throw ConfigError("unknown variance regime '" + s + "' (expected manual, fixed_interval or lag1_em)");
}

void ScenarioConfig::validate() const {
  truth.validate();
  geometry_truth.validate();
  geometry_assim.validate();
  if (geometry_truth.zone_intervals.size() != geometry_assim.zone_intervals.size() ||
      geometry_truth.gauge_mds != geometry_assim.gauge_mds ||
      geometry_truth.vertical_depth_top != geometry_assim.vertical_depth_top ||
      geometry_truth.inclined_start_tvd != geometry_assim.inclined_start_tvd ||
      geometry_truth.inclined_end_tvd != geometry_assim.inclined_end_tvd ||
      geometry_truth.curvature_deg_per_m != geometry_assim.curvature_deg_per_m)
    throw ConfigError("scenario: truth and assimilation geometries must share the md layout");
  for (std::size_t i = 0; i < geometry_truth.zone_intervals.size(); ++i)
    if (geometry_truth.zone_intervals[i].md_start != geometry_assim.zone_intervals[i].md_start ||
        geometry_truth.zone_intervals[i].md_end != geometry_assim.zone_intervals[i].md_end)
      throw ConfigError("scenario: truth and assimilation geometries must share the md layout");
  const auto r = static_cast<Eigen::Index>(zones.size());
  if (r != static_cast<Eigen::Index>(geometry_truth.zone_intervals.size()))
    throw ConfigError("scenario: zone property count differs from zone interval count");
  if (truth.pieces.front().rates.size() != r) throw ConfigError("scenario: truth rates have wrong zone count");
  if (jump.multipliers.zone_count() != r) throw ConfigError("scenario: multiplier law has wrong zone count");
  if (jump.sigma0.size() != r || !((jump.sigma0.array() > 0.0).all()))
    throw ConfigError("scenario: sigma0 needs one positive variance per zone");
  if (!(noise_rel_std >= 0.0) || !std::isfinite(noise_rel_std)) throw ConfigError("scenario: noise_rel_std must be >= 0");
  if (!(covariance_scaling_assim > 0.0)) throw ConfigError("scenario: covariance_scaling_assim must be > 0");
  if (n_particles < 1) throw ConfigError("scenario: n_particles must be >= 1");
  if (fixed_interval.n_particles < 1) throw ConfigError("scenario: fixed_interval.n_particles must be >= 1");
  if (regime == VarianceRegime::manual && (manual_sigma.size() != r || !((manual_sigma.array() > 0.0).all())))
    throw ConfigError("scenario: manual regime needs one positive variance per zone");
  const auto& b = fixed_interval.search.bounds;
  if (b.lo.size() != r || b.hi.size() != r) throw ConfigError("scenario: optimizer bounds have wrong zone count");
  if (fixed_interval.search.initial_sigma.size() != r)
    throw ConfigError("scenario: optimizer initial_sigma has wrong zone count");
  if (fixed_interval.search.n_starts < 1) throw ConfigError("scenario: optimizer n_starts must be >= 1");
  em.validate();
  if (em.initial_sigma.size() != r) throw ConfigError("scenario: em initial_sigma has wrong zone count");
}

ScenarioConfig default_scenario() {
  ScenarioConfig s;
  s.name = "pos_default";
  s.truth.t0_s = 10000.0;
  s.truth.t_end_s = 16000.0;
  s.truth.sample_period_s = 120.0;
  s.truth.pieces = {{10000.0, Eigen::Vector2d(2.0, 10.0)},
                    {10600.0, Eigen::Vector2d(3.0, 15.0)},
                    {12800.0, Eigen::Vector2d(1.0, 15.0)}};
  s.geometry_truth = WellGeometry{};
  s.geometry_assim = WellGeometry{};
  s.zones = {ZoneProperties{1.4e7, 325.5, Phase::gas}, ZoneProperties{1.5e7, 335.5, Phase::oil}};
  s.manual_sigma = Eigen::Vector2d(0.5, 0.5);
  s.fixed_interval.n_particles = 500;
  s.fixed_interval.search.bounds = VarianceBounds{Eigen::Vector2d::Constant(1e-6), Eigen::Vector2d::Constant(10.0)};
  s.fixed_interval.search.initial_sigma = Eigen::Vector2d(0.5, 0.5);
  s.fixed_interval.search.n_starts = 3;
  return s;
}

ScenarioConfig imperfect_scenario(double covariance_scaling) {
  ScenarioConfig s = default_scenario();
  s.name = "ios_default";
  s.geometry_truth.segment_length = 5.0;
  s.covariance_scaling_assim = covariance_scaling;
  return s;
}

ObservationNoiseModel truth_noise_model(const ScenarioConfig& scenario) {
  const WellModel truth_model(scenario.geometry_truth, scenario.zones, scenario.fluid);
  const GaugeRecord ref = truth_model.simulate(scenario.truth.at(scenario.truth.t0_s));
  return ObservationNoiseModel::relative_to(ref, scenario.noise_rel_std, 1.0);
}

std::shared_ptr<const WellObservationModel> assimilation_model(const ScenarioConfig& scenario) {
  ObservationNoiseModel noise = truth_noise_model(scenario);
  noise.scaling = scenario.covariance_scaling_assim;
  return std::make_shared<const WellObservationModel>(
      WellModel(scenario.geometry_assim, scenario.zones, scenario.fluid), noise);
}

std::vector<GaugeRecord> synthesize_observations(const ScenarioConfig& scenario, RandomStream& rng) {
  scenario.validate();
  const WellModel truth_model(scenario.geometry_truth, scenario.zones, scenario.fluid);
  const ObservationNoiseModel noise = truth_noise_model(scenario);
  std::vector<GaugeRecord> out;
  for (double t : scenario.truth.sample_times()) {
    GaugeRecord clean = truth_model.simulate(scenario.truth.at(t));
    clean.time_s = t;
    out.push_back(scenario.noise_enabled ? observe(clean, noise, rng) : clean);
  }
  return out;
}

double time_mean_rmse(const std::vector<FlowRates>& estimate, const std::vector<FlowRates>& truth) {
  if (estimate.size() != truth.size() || estimate.empty())
    throw DomainError("time_mean_rmse: series must be non-empty and of equal length");
  double acc = 0.0;
  for (std::size_t k = 0; k < estimate.size(); ++k)
    acc += std::sqrt((estimate[k] - truth[k]).array().square().mean());
  return acc / static_cast<double>(estimate.size());
}

std::uint64_t interval_cost_seed(std::uint64_t scenario_seed) { return RandomStream(scenario_seed).split(3).engine()(); }

IntervalProblem interval_problem(const ScenarioConfig& scenario, const std::vector<GaugeRecord>& observations) {
  IntervalProblem p{assimilation_model(scenario), scenario.jump.multipliers, scenario.truth.at(scenario.truth.t0_s),
                    {}, {}, scenario.fixed_interval.n_particles, scenario.filter};
  for (const auto& r : observations) {
    p.observations.push_back(r.channels());
    p.times.push_back(r.time_s);
  }
  return p;
}

RunReport run_filter(const ScenarioConfig& scenario, const std::vector<GaugeRecord>& observations,
                     std::optional<NoiseVariances> fixed_sigma) {
  scenario.validate();
  if (observations.empty()) throw DomainError("run_filter: no observations");

  RunReport rep;
  rep.scenario_name = scenario.name;
  rep.regime = scenario.regime;
  rep.covariance_scaling = scenario.covariance_scaling_assim;
  rep.seed = scenario.seed;

  const auto obs = assimilation_model(scenario);
  std::vector<Eigen::VectorXd> ys;
  for (const auto& r : observations) {
    ys.push_back(r.channels());
    rep.times.push_back(r.time_s);
    rep.truth.push_back(scenario.truth.at(r.time_s));
  }

  SigmaProvider provider;
  NoiseVariances em_previous = scenario.em.initial_sigma;
  std::size_t em_step = 1;
  switch (scenario.regime) {
    case VarianceRegime::manual:
      rep.constant_sigma = scenario.manual_sigma;
      break;
    case VarianceRegime::fixed_interval:
      if (fixed_sigma) {
        rep.constant_sigma = *fixed_sigma;
      } else {
        MultiStartOptions opts = scenario.fixed_interval.search;
        opts.threads = scenario.filter.threads;
        rep.optimizer = optimize_interval(interval_problem(scenario, observations), opts,
                                          interval_cost_seed(scenario.seed));
        rep.constant_sigma = rep.optimizer->best_sigma;
      }
      break;
    case VarianceRegime::lag1_em:
      break;
  }

  if (scenario.regime == VarianceRegime::lag1_em) {
    provider = [&](const FilterState& post, const Eigen::VectorXd& y_next, RandomStream& rng) {
      const double t = rep.times[em_step++];
      try {
        EmEstimate est = em_estimate(post.ensemble, y_next, scenario.jump.multipliers, *obs, scenario.em, rng,
                                     scenario.filter.threads);
        rep.em_steps.push_back(EmStepRecord{t, static_cast<int>(est.trace.iterations.size()), est.sigma,
                                            est.trace.converged});
        rep.em_traces.push_back(est.trace);
        em_previous = est.sigma;
      } catch (const DegeneracyError& e) {
        std::clog << "warning: lag-1 estimate at t=" << t << " s degenerated (" << e.what()
                  << "); reusing previous variances\n";
        rep.em_steps.push_back(EmStepRecord{t, 0, em_previous, false});
        rep.em_traces.emplace_back();
      }
      return em_previous;
    };
  } else {
    const NoiseVariances sigma = rep.constant_sigma;
    provider = [sigma](const FilterState&, const Eigen::VectorXd&, RandomStream&) { return sigma; };
  }

  RandomStream rng = RandomStream(scenario.seed).split(2);
  ParticleEnsemble prior =
      initialize_ensemble(scenario.truth.at(scenario.truth.t0_s), scenario.jump.multipliers, scenario.n_particles, rng);
  ApfRun run = run_apf(std::move(prior), ys, rep.times, scenario.jump.multipliers, *obs, provider, rng, scenario.filter);
  rep.diagnostics = std::move(run.steps);
  for (const auto& d : rep.diagnostics) {
    rep.mean.push_back(d.mean);
    rep.std.push_back(d.std);
  }
  rep.time_mean_rmse = time_mean_rmse(rep.mean, rep.truth);
  return rep;
}

std::string row_label(const RunReport& run) {
  std::ostringstream os;
  os << run.scenario_name << " x" << run.covariance_scaling;
  return os.str();
}

ComparisonTable rmse_report(const std::vector<RunReport>& runs) {
  if (runs.empty()) throw DomainError("rmse_report: no runs");
  ComparisonTable t;
  for (const auto& r : runs) {
    const std::string row = row_label(r);
    if (std::find(t.rows.begin(), t.rows.end(), row) == t.rows.end()) t.rows.push_back(row);
  }
  for (VarianceRegime g : {VarianceRegime::manual, VarianceRegime::fixed_interval, VarianceRegime::lag1_em})
    if (std::any_of(runs.begin(), runs.end(), [g](const RunReport& r) { return r.regime == g; }))
      t.columns.emplace_back(to_string(g));
  t.values = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(t.rows.size()),
                                       static_cast<Eigen::Index>(t.columns.size()),
                                       std::numeric_limits<double>::quiet_NaN());
  // repeated (row, column) cells hold the mean over their runs
  std::map<std::pair<Eigen::Index, Eigen::Index>, std::pair<double, int>> cells;
  for (const auto& r : runs) {
    const auto i = std::find(t.rows.begin(), t.rows.end(), row_label(r)) - t.rows.begin();
    const auto j = std::find(t.columns.begin(), t.columns.end(), to_string(r.regime)) - t.columns.begin();
    auto& c = cells[{i, j}];
    c.first += r.time_mean_rmse;
    c.second += 1;
  }
  for (const auto& [key, c] : cells) t.values(key.first, key.second) = c.first / c.second;
  return t;
}

}  // namespace wellsense
