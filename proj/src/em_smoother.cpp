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

#include "wellsense/em_smoother.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include "wellsense/error.hpp"
#include "wellsense/gaussian.hpp"

namespace wellsense {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// exp(-kUnderflow) is below the smallest normal double; scaled entries that
// small are stored as exactly 0
constexpr double kUnderflow = 708.0;

// rep[l] = first column equal to column l.
std::vector<Eigen::Index> representative_columns(const Eigen::MatrixXd& a) {
  std::vector<Eigen::Index> rep(static_cast<std::size_t>(a.cols()));
  for (Eigen::Index l = 0; l < a.cols(); ++l) {
    rep[l] = l;
    for (Eigen::Index k = 0; k < l; ++k)
      if (rep[k] == k && a.col(k) == a.col(l)) {
        rep[l] = k;
        break;
      }
  }
  return rep;
}

void require_positive(const NoiseVariances& sigma, Eigen::Index zones, const char* op) {
  if (sigma.size() != zones) throw DomainError(std::string(op) + ": variance vector has wrong zone count");
  if (!((sigma.array() > 0.0).all()) || !sigma.allFinite())
    throw DomainError(std::string(op) + ": variances must be finite and > 0");
}

// Omega-weighted sums: total weight and weighted squared residual per zone.
struct WeightedResiduals {
  double total = 0.0;
  Eigen::VectorXd squared;
};

WeightedResiduals weighted_residuals(const EmSampleBank& bank, const OmegaTensor& omega) {
  const Eigen::Index r = bank.zone_count();
  const Eigen::Index s = bank.s();
  const Eigen::Index m = bank.m();
  const std::vector<Eigen::Index> rep = representative_columns(bank.multipliers);
  // equal multiplier columns give equal Omega blocks; each distinct column is
  // summed once and counted with its multiplicity
  std::vector<double> multiplicity(static_cast<std::size_t>(m), 0.0);
  for (Eigen::Index l = 0; l < m; ++l) multiplicity[rep[l]] += 1.0;
  const Eigen::MatrixXd proposals_t = bank.proposals.transpose();
  WeightedResiduals out{0.0, Eigen::VectorXd::Zero(r)};
  Eigen::VectorXd mean(r);
  Eigen::VectorXd acc(r);
  for (Eigen::Index h = 0; h < bank.n(); ++h) {
    for (Eigen::Index l = 0; l < m; ++l) {
      if (rep[l] != l) continue;
      const double* w = omega.values.data() + (h * m + l) * s;
      mean = bank.multipliers.col(l).cwiseProduct(bank.posterior_particles.col(h));
      double wsum = 0.0;
      acc.setZero();
      for (Eigen::Index q = 0; q < s; ++q) {
        if (w[q] == 0.0) continue;
        wsum += w[q];
        for (Eigen::Index i = 0; i < r; ++i) {
          const double d = proposals_t(q, i) - mean[i];
          acc[i] += w[q] * d * d;
        }
      }
      const double c = multiplicity[l];
      out.total += c * wsum;
      out.squared += c * acc;
    }
  }
  return out;
}

double objective_from_residuals(const WeightedResiduals& wr, const NoiseVariances& sigma) {
  double e = 0.0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i)
    e += -0.5 * (std::log(2.0 * std::numbers::pi * sigma[i]) + wr.squared[i] / (wr.total * sigma[i]));
  return e;
}

}  // namespace

void EmConfig::validate() const {
  if (!(rel_tol > 0.0)) throw ConfigError("em: rel_tol must be > 0");
  if (max_iter < 1) throw ConfigError("em: max_iter must be >= 1");
  if (!(proposal_inflation >= 1.0)) throw ConfigError("em: proposal_inflation must be >= 1");
  if (proposal_samples < 1 || multiplier_samples < 1) throw ConfigError("em: sample counts must be >= 1");
  if (!(variance_floor > 0.0)) throw ConfigError("em: variance_floor must be > 0");
  if (initial_sigma.size() == 0 || !((initial_sigma.array() > 0.0).all()))
    throw ConfigError("em: initial_sigma entries must be > 0");
}

EmSampleBank build_sample_bank(const ParticleEnsemble& posterior, const Eigen::VectorXd& y_next,
                               const MultiplierDistribution& dist, const ObservationModel& obs,
                               const EmConfig& config, RandomStream& rng, int threads) {
  config.validate();
  if (posterior.stage != EnsembleStage::posterior) throw DomainError("build_sample_bank: ensemble is not a posterior");
  const Eigen::Index r = posterior.zone_count();
  const Eigen::Index n = posterior.size();
  const Eigen::Index m = config.multiplier_samples;
  const Eigen::Index s = config.proposal_samples;
  if (dist.zone_count() != r) throw DomainError("build_sample_bank: zone count mismatch");

  EmSampleBank bank;
  bank.posterior_particles = posterior.particles;
  bank.posterior_weights = posterior.weights;
  bank.multipliers.resize(r, m);
  for (Eigen::Index l = 0; l < m; ++l) bank.multipliers.col(l) = sample_multipliers(dist, rng);

  // moments of all n*m products theta_l .* Q_h (population convention)
  const double count = static_cast<double>(n * m);
  bank.proposal_mean = (posterior.particles.rowwise().sum().array() * bank.multipliers.rowwise().sum().array()).matrix() / count;
  Eigen::VectorXd second = (posterior.particles.array().square().rowwise().sum() *
                            bank.multipliers.array().square().rowwise().sum()).matrix() / count;
  Eigen::VectorXd var = (second.array() - bank.proposal_mean.array().square()).cwiseMax(0.0).matrix();
  bank.proposal_variance = config.proposal_inflation * var;
  for (Eigen::Index i = 0; i < r; ++i) {
    if (bank.proposal_variance[i] < config.variance_floor) {
      bank.proposal_variance[i] = config.variance_floor;
      bank.floored = true;
    }
  }
  if (bank.floored)
    std::clog << "warning: lag-1 proposal variance floored at " << config.variance_floor
              << " (degenerate product spread)\n";

  bank.proposals.resize(r, s);
  const Eigen::ArrayXd sd = bank.proposal_variance.array().sqrt();
  for (Eigen::Index q = 0; q < s; ++q)
    for (Eigen::Index i = 0; i < r; ++i) bank.proposals(i, q) = bank.proposal_mean[i] + sd[i] * rng.normal();

  const Eigen::VectorXd obs_ll = batch_loglik(obs, y_next, bank.proposals, threads);
  Eigen::VectorXd log_u(s);
  for (Eigen::Index q = 0; q < s; ++q)
    log_u[q] = obs_ll[q] - diag_gaussian_logpdf(bank.proposals.col(q), bank.proposal_mean, bank.proposal_variance);

  bank.log_static.resize(s, n);
  for (Eigen::Index h = 0; h < n; ++h) {
    const double lw = posterior.weights[h] > 0.0 ? std::log(posterior.weights[h]) : kNegInf;
    bank.log_static.col(h) = log_u.array() + lw;
  }
  return bank;
}

namespace {

// Fills `omega`, reusing its storage when the shape already matches.
void fill_omega(const EmSampleBank& bank, const NoiseVariances& sigma_prev, OmegaTensor& omega) {
  const Eigen::Index r = bank.zone_count();
  require_positive(sigma_prev, r, "omega_weights");
  const Eigen::Index n = bank.n();
  const Eigen::Index m = bank.m();
  const Eigen::Index s = bank.s();

  omega.n = n;
  omega.m = m;
  omega.s = s;
  omega.values.resize(n * m * s);
  omega.values.setConstant(kNegInf);
  const Eigen::ArrayXd half_inv = 0.5 / sigma_prev.array();
  const double log_norm = -0.5 * (static_cast<double>(r) * std::log(2.0 * std::numbers::pi) +
                                  sigma_prev.array().log().sum());
  const std::vector<Eigen::Index> rep = representative_columns(bank.multipliers);
  const Eigen::MatrixXd proposals_t = bank.proposals.transpose();

  // log f <= log_norm, so block h is bounded by max_q static + log_norm. Blocks
  // more than kUnderflow below the running maximum scale to exactly 0 and are
  // skipped; visiting blocks by decreasing bound lets the skip end the scan.
  std::vector<std::pair<double, Eigen::Index>> order;
  order.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index h = 0; h < n; ++h) order.emplace_back(bank.log_static.col(h).maxCoeff() + log_norm, h);
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

  Eigen::VectorXd mean(r);
  double max_log = kNegInf;
  for (const auto& [bound, h] : order) {
    if (!(bound > max_log - kUnderflow)) break;
    const double* ls = bank.log_static.col(h).data();
    for (Eigen::Index l = 0; l < m; ++l) {
      double* dst = omega.values.data() + (h * m + l) * s;
      if (rep[l] != l) {
        std::copy_n(omega.values.data() + (h * m + rep[l]) * s, s, dst);
        continue;
      }
      mean = bank.multipliers.col(l).cwiseProduct(bank.posterior_particles.col(h));
      double block_max = kNegInf;
      for (Eigen::Index q = 0; q < s; ++q) {
        double v = ls[q] + log_norm;
        for (Eigen::Index i = 0; i < r; ++i) {
          const double d = proposals_t(q, i) - mean[i];
          v -= d * d * half_inv[i];
        }
        dst[q] = v;
        block_max = std::max(block_max, v);
      }
      max_log = std::max(max_log, block_max);
    }
  }
  if (!std::isfinite(max_log))
    throw DegeneracyError("omega_weights: all lag-1 weights are zero", max_log, 0.0);
  omega.log_scale = max_log;
  const double cutoff = max_log - kUnderflow;
  omega.values = omega.values.unaryExpr([&](double v) { return v > cutoff ? std::exp(v - max_log) : 0.0; });
}

}  // namespace

OmegaTensor omega_weights(const EmSampleBank& bank, const NoiseVariances& sigma_prev) {
  OmegaTensor omega;
  fill_omega(bank, sigma_prev, omega);
  return omega;
}

NoiseVariances em_update(const EmSampleBank& bank, const OmegaTensor& omega) {
  const WeightedResiduals wr = weighted_residuals(bank, omega);
  if (!(wr.total > 0.0)) throw DegeneracyError("em_update: zero total weight", kNegInf, 0.0);
  return wr.squared / wr.total;
}

double surrogate_objective(const EmSampleBank& bank, const OmegaTensor& omega, const NoiseVariances& sigma) {
  require_positive(sigma, bank.zone_count(), "surrogate_objective");
  double num = 0.0;
  double den = 0.0;
  FlowRates mean(bank.zone_count());
  for (Eigen::Index h = 0; h < bank.n(); ++h)
    for (Eigen::Index l = 0; l < bank.m(); ++l) {
      mean = bank.multipliers.col(l).cwiseProduct(bank.posterior_particles.col(h));
      for (Eigen::Index q = 0; q < bank.s(); ++q) {
        const double w = omega(h, l, q);
        if (w == 0.0) continue;
        num += w * diag_gaussian_logpdf(bank.proposals.col(q), mean, sigma);
        den += w;
      }
    }
  return num / den;
}

EmEstimate em_estimate(const EmSampleBank& bank, const EmConfig& config) {
  config.validate();
  require_positive(config.initial_sigma, bank.zone_count(), "em_estimate");
  EmEstimate out{config.initial_sigma, {}};
  NoiseVariances prev = config.initial_sigma;
  OmegaTensor omega;
  for (int j = 1; j <= config.max_iter; ++j) {
    fill_omega(bank, prev, omega);
    const WeightedResiduals wr = weighted_residuals(bank, omega);
    if (!(wr.total > 0.0)) throw DegeneracyError("em_update: zero total weight", kNegInf, 0.0);
    NoiseVariances next = wr.squared / wr.total;
    if (!((next.array() > 0.0).all()))
      throw DegeneracyError("em_estimate: variance estimate collapsed to zero", omega.log_scale, 0.0);
    out.trace.iterations.push_back(EmIteration{next, objective_from_residuals(wr, next)});
    const double change = (next - prev).norm() / prev.norm();
    prev = std::move(next);
    if (change < config.rel_tol) {
      out.trace.converged = true;
      out.trace.stop_reason = EmStopReason::tolerance;
      break;
    }
  }
  if (!out.trace.converged) out.trace.stop_reason = EmStopReason::max_iter;
  out.sigma = prev;
  return out;
}

EmEstimate em_estimate(const ParticleEnsemble& posterior, const Eigen::VectorXd& y_next,
                       const MultiplierDistribution& dist, const ObservationModel& obs, const EmConfig& config,
                       RandomStream& rng, int threads) {
  const EmSampleBank bank = build_sample_bank(posterior, y_next, dist, obs, config, rng, threads);
  return em_estimate(bank, config);
}

}  // namespace wellsense
