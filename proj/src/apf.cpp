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

#include "wellsense/apf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "wellsense/error.hpp"
#include "wellsense/gaussian.hpp"

namespace wellsense {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_stage(const ParticleEnsemble& e, EnsembleStage stage, const char* op) {
  if (e.stage != stage) throw DomainError(std::string(op) + ": ensemble is in the wrong stage");
  if (e.size() < 1) throw DomainError(std::string(op) + ": empty ensemble");
}

Eigen::VectorXd log_of(const Eigen::VectorXd& w) { return w.array().log().matrix(); }

DegeneracyError degenerate(const char* op, const Eigen::VectorXd& logw, const Eigen::VectorXd& prior_w) {
  const double ess = 1.0 / prior_w.squaredNorm();
  std::ostringstream os;
  os << op << ": all importance weights are zero";
  return DegeneracyError(os.str(), logw.size() ? logw.maxCoeff() : kNegInf, ess);
}

}  // namespace

ParticleEnsemble ParticleEnsemble::equally_weighted(Eigen::MatrixXd particles, EnsembleStage stage) {
  const auto n = particles.cols();
  if (n < 1) throw DomainError("ensemble: need at least one particle");
  return ParticleEnsemble{std::move(particles), Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)), stage};
}

ParticleEnsemble initialize_ensemble(const FlowRates& q0, const MultiplierDistribution& dist, Eigen::Index n,
                                     RandomStream& rng) {
  if (q0.size() != dist.zone_count()) throw DomainError("initialize_ensemble: zone count mismatch");
  Eigen::MatrixXd p(q0.size(), n);
  for (Eigen::Index j = 0; j < n; ++j) p.col(j) = sample_multipliers(dist, rng).cwiseProduct(q0);
  return ParticleEnsemble::equally_weighted(std::move(p), EnsembleStage::prior);
}

FilterState filter_step(FilterState state, const Eigen::VectorXd& y, const ObservationModel& obs,
                        const FilterOptions& options) {
  auto& e = state.ensemble;
  require_stage(e, EnsembleStage::prior, "filter_step");
  const Eigen::VectorXd logw = log_of(e.weights) + batch_loglik(obs, y, e.particles, options.threads);
  const double term = log_sum_exp(logw);
  if (!std::isfinite(term)) {
    if (options.degeneracy == DegeneracyPolicy::abort) throw degenerate("filter_step", logw, e.weights);
    e.weights.setConstant(1.0 / static_cast<double>(e.size()));
  } else {
    e.weights = normalized_weights(logw);
  }
  e.stage = EnsembleStage::posterior;
  state.log_predictive_terms.push_back(term);
  return state;
}

std::vector<Eigen::Index> resample_indices(const Eigen::VectorXd& weights, Eigen::Index count, RandomStream& rng,
                                           ResamplingScheme scheme) {
  const Eigen::Index n = weights.size();
  if (n < 1 || count < 1) throw DomainError("resample_indices: empty input");
  std::vector<double> cdf(static_cast<std::size_t>(n));
  double acc = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!(weights[j] >= 0.0)) throw DomainError("resample_indices: negative weight");
    acc += weights[j];
    cdf[static_cast<std::size_t>(j)] = acc;
  }
  if (!(acc > 0.0)) throw DomainError("resample_indices: weights sum to zero");

  std::vector<Eigen::Index> out(static_cast<std::size_t>(count));
  auto locate = [&](double u) {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u * acc);
    auto j = static_cast<Eigen::Index>(it - cdf.begin());
    if (j >= n) j = n - 1;
    // skip zero-weight slots reached through rounding at the top of the cdf
    while (j > 0 && weights[j] == 0.0) --j;
    return j;
  };
  if (scheme == ResamplingScheme::multinomial) {
    for (auto& idx : out) idx = locate(rng.uniform());
  } else {
    const double start = rng.uniform();
    for (Eigen::Index s = 0; s < count; ++s)
      out[static_cast<std::size_t>(s)] = locate((start + static_cast<double>(s)) / static_cast<double>(count));
  }
  return out;
}

AuxResampleResult aux_resample(const FilterState& state, const Eigen::VectorXd& y_next,
                               const MultiplierDistribution& dist, const ObservationModel& obs, RandomStream& rng,
                               const FilterOptions& options) {
  const auto& e = state.ensemble;
  require_stage(e, EnsembleStage::posterior, "aux_resample");
  const Eigen::Index n = e.size();

  AuxResampleResult r;
  r.omega_points.resize(e.zone_count(), n);
  for (Eigen::Index j = 0; j < n; ++j) r.omega_points.col(j) = sample_multipliers(dist, rng).cwiseProduct(e.particles.col(j));
  r.omega_logliks = batch_loglik(obs, y_next, r.omega_points, options.threads);

  const Eigen::VectorXd log_mu = log_of(e.weights) + r.omega_logliks;
  r.log_first_stage = log_sum_exp(log_mu);
  Eigen::VectorXd mu;
  if (!std::isfinite(r.log_first_stage)) {
    if (options.degeneracy == DegeneracyPolicy::abort) throw degenerate("aux_resample", log_mu, e.weights);
    // fall back to plain SIR on the posterior weights; no second-stage division
    mu = e.weights;
    r.omega_logliks.setZero();
    r.reset = true;
  } else {
    mu = normalized_weights(log_mu);
  }

  r.indices = resample_indices(mu, n, rng, options.resampling);
  Eigen::MatrixXd selected(e.zone_count(), n);
  for (Eigen::Index s = 0; s < n; ++s) selected.col(s) = r.omega_points.col(r.indices[static_cast<std::size_t>(s)]);
  r.resampled = ParticleEnsemble::equally_weighted(std::move(selected), EnsembleStage::resampled);
  return r;
}

PredictResult predict_step(const AuxResampleResult& aux, const Eigen::VectorXd& y_next, const NoiseVariances& sigma,
                           const ObservationModel& obs, RandomStream& rng, const FilterOptions& options) {
  const auto& base = aux.resampled;
  require_stage(base, EnsembleStage::resampled, "predict_step");
  if (sigma.size() != base.zone_count()) throw DomainError("predict_step: variance vector has wrong zone count");
  if ((sigma.array() < 0.0).any() || !sigma.allFinite()) throw DomainError("predict_step: invalid noise variance");
  const Eigen::Index n = base.size();

  const Eigen::ArrayXd sd = sigma.array().sqrt();
  Eigen::MatrixXd next = base.particles;
  for (Eigen::Index s = 0; s < n; ++s)
    for (Eigen::Index i = 0; i < next.rows(); ++i) {
      if (sd[i] > 0.0) next(i, s) += sd[i] * rng.normal();
      if (options.clamp_at_zero && next(i, s) < 0.0) next(i, s) = 0.0;
    }

  const Eigen::VectorXd ll = batch_loglik(obs, y_next, next, options.threads);
  Eigen::VectorXd logw(n);
  for (Eigen::Index s = 0; s < n; ++s) logw[s] = ll[s] - aux.omega_logliks[aux.indices[static_cast<std::size_t>(s)]];

  PredictResult r;
  const double lse = log_sum_exp(logw);
  if (!std::isfinite(lse)) {
    if (options.degeneracy == DegeneracyPolicy::abort) throw degenerate("predict_step", ll, base.weights);
    r.ensemble = ParticleEnsemble::equally_weighted(std::move(next), EnsembleStage::posterior);
    r.log_predictive = kNegInf;
    r.reset = true;
    return r;
  }
  r.log_predictive = aux.reset ? kNegInf : aux.log_first_stage + lse - std::log(static_cast<double>(n));
  r.ensemble = ParticleEnsemble{std::move(next), normalized_weights(logw), EnsembleStage::posterior};
  r.reset = aux.reset;
  return r;
}

FilterState apf_step(FilterState state, const Eigen::VectorXd& y_next, const MultiplierDistribution& dist,
                     const NoiseVariances& sigma, const ObservationModel& obs, RandomStream& rng,
                     const FilterOptions& options) {
  const AuxResampleResult aux = aux_resample(state, y_next, dist, obs, rng, options);
  PredictResult pred = predict_step(aux, y_next, sigma, obs, rng, options);
  state.ensemble = std::move(pred.ensemble);
  state.time_index += 1;
  state.log_predictive_terms.push_back(pred.log_predictive);
  return state;
}

double effective_sample_size(const ParticleEnsemble& e) {
  const double s2 = e.weights.squaredNorm();
  return s2 > 0.0 ? 1.0 / s2 : 0.0;
}

PosteriorSummary posterior_summary(const ParticleEnsemble& e) {
  const Eigen::VectorXd mean = e.particles * e.weights;
  const Eigen::MatrixXd centered = e.particles.colwise() - mean;
  const Eigen::VectorXd var = centered.array().square().matrix() * e.weights;
  return PosteriorSummary{mean, var.cwiseMax(0.0).cwiseSqrt()};
}

namespace {

StepDiagnostics diagnose(const FilterState& s, double time_s, NoiseVariances sigma, bool reset) {
  const auto summary = posterior_summary(s.ensemble);
  return StepDiagnostics{time_s,
                         effective_sample_size(s.ensemble),
                         s.log_predictive_terms.back(),
                         s.ensemble.weights.sum(),
                         summary.mean,
                         summary.std,
                         std::move(sigma),
                         reset};
}

}  // namespace

ApfRun run_apf(ParticleEnsemble prior, const std::vector<Eigen::VectorXd>& observations,
               const std::vector<double>& times, const MultiplierDistribution& dist, const ObservationModel& obs,
               const SigmaProvider& sigma, RandomStream& rng, const FilterOptions& options) {
  if (observations.empty()) throw DomainError("run_apf: no observations");
  if (times.size() != observations.size()) throw DomainError("run_apf: times and observations differ in length");

  ApfRun run;
  FilterState state{std::move(prior), 0, {}};
  try {
    state = filter_step(std::move(state), observations.front(), obs, options);
  } catch (const DegeneracyError& e) {
    throw e.at_step(0);
  }
  run.steps.push_back(diagnose(state, times.front(), {}, !std::isfinite(state.log_predictive_terms.back())));

  for (std::size_t k = 1; k < observations.size(); ++k) {
    const auto step = static_cast<std::ptrdiff_t>(k);
    try {
      NoiseVariances s = sigma(state, observations[k], rng);
      state = apf_step(std::move(state), observations[k], dist, s, obs, rng, options);
      run.steps.push_back(diagnose(state, times[k], std::move(s), !std::isfinite(state.log_predictive_terms.back())));
    } catch (const DegeneracyError& e) {
      throw e.at_step(step);
    }
  }
  run.final_state = std::move(state);
  return run;
}

}  // namespace wellsense
