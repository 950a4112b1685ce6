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
#include <map>
#include <vector>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "wellsense/apf.hpp"
#include "wellsense/error.hpp"

namespace wellsense {
namespace {

using testing::chi_square;
using testing::chi_square_99;
using testing::kalman_filter;
using testing::make_linear_instance;
using testing::unit_multipliers;

// Log-likelihood looked up from the particle's first coordinate.
class TableModel final : public ObservationModel {
 public:
  explicit TableModel(std::map<double, double> table) : table_(std::move(table)) {}
  Eigen::Index channel_count() const override { return 1; }
  Eigen::VectorXd predict(const FlowRates& q) const override { return q.head(1); }
  double loglik(const Eigen::VectorXd&, const FlowRates& q) const override {
    const auto it = table_.find(q[0]);
    return it == table_.end() ? -std::numeric_limits<double>::infinity() : it->second;
  }

 private:
  std::map<double, double> table_;
};

ParticleEnsemble ensemble_of(std::vector<double> xs, std::vector<double> ws, EnsembleStage stage) {
  Eigen::MatrixXd p(1, static_cast<Eigen::Index>(xs.size()));
  Eigen::VectorXd w(static_cast<Eigen::Index>(ws.size()));
  for (std::size_t j = 0; j < xs.size(); ++j) {
    p(0, static_cast<Eigen::Index>(j)) = xs[j];
    w[static_cast<Eigen::Index>(j)] = ws[j];
  }
  return ParticleEnsemble{p, w, stage};
}

const Eigen::VectorXd kY = Eigen::VectorXd::Zero(1);

TEST(FilterStep, SingleParticleKeepsUnitWeight) {
  const TableModel obs(std::map<double, double>{{3.0, -4.25}});
  FilterState s{ensemble_of({3.0}, {1.0}, EnsembleStage::prior), 0, {}};
  s = filter_step(std::move(s), kY, obs);
  EXPECT_EQ(s.ensemble.weights[0], 1.0);
  ASSERT_EQ(s.log_predictive_terms.size(), 1u);
  EXPECT_DOUBLE_EQ(s.log_predictive_terms[0], -4.25);
  EXPECT_EQ(s.ensemble.stage, EnsembleStage::posterior);
}

TEST(FilterStep, BayesArithmetic) {
  const TableModel obs({{1.0, std::log(2.0) - 3.0}, {2.0, -3.0}});
  FilterState s{ensemble_of({1.0, 2.0}, {0.5, 0.5}, EnsembleStage::prior), 0, {}};
  s = filter_step(std::move(s), kY, obs);
  EXPECT_NEAR(s.ensemble.weights[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(s.ensemble.weights[1], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(s.log_predictive_terms[0], std::log(1.5) - 3.0, 1e-14);
  EXPECT_EQ(s.ensemble.particles, ensemble_of({1.0, 2.0}, {0.5, 0.5}, EnsembleStage::prior).particles);
}

TEST(FilterStep, LargeLogLikelihoodSpreadStaysFinite) {
  const TableModel obs({{1.0, -1000.0}, {2.0, -1700.0}, {3.0, -1699.0}});
  FilterState s{ensemble_of({1.0, 2.0, 3.0}, {1.0 / 3, 1.0 / 3, 1.0 / 3}, EnsembleStage::prior), 0, {}};
  s = filter_step(std::move(s), kY, obs);
  EXPECT_TRUE(s.ensemble.weights.allFinite());
  EXPECT_NEAR(s.ensemble.weights.sum(), 1.0, 1e-12);
  EXPECT_GT(s.ensemble.weights[2], s.ensemble.weights[1]);
  EXPECT_NEAR(s.log_predictive_terms[0], -1000.0 - std::log(3.0), 1e-9);
}

TEST(FilterStep, DegeneracyPolicies) {
  const TableModel obs({});
  FilterState s{ensemble_of({1.0, 2.0}, {0.3, 0.7}, EnsembleStage::prior), 0, {}};
  try {
    filter_step(s, kY, obs);
    FAIL() << "expected a degeneracy error";
  } catch (const DegeneracyError& e) {
    EXPECT_EQ(e.max_loglik(), -std::numeric_limits<double>::infinity());
    EXPECT_GE(e.ess(), 1.0);
  }
  FilterOptions reset;
  reset.degeneracy = DegeneracyPolicy::uniform_reset;
  const FilterState r = filter_step(s, kY, obs, reset);
  EXPECT_EQ(r.ensemble.weights, Eigen::Vector2d(0.5, 0.5));
}

TEST(FilterStep, WrongStageRejected) {
  const TableModel obs(std::map<double, double>{{1.0, 0.0}});
  FilterState s{ensemble_of({1.0}, {1.0}, EnsembleStage::posterior), 0, {}};
  EXPECT_THROW(filter_step(s, kY, obs), DomainError);
}

TEST(ResampleIndices, MultinomialFrequencies) {
  const Eigen::Vector3d mu(0.7, 0.2, 0.1);
  RandomStream rng(31);
  std::vector<double> counts(3, 0.0);
  const int rounds = 100000;
  for (int k = 0; k < rounds; ++k) counts[static_cast<std::size_t>(resample_indices(mu, 1, rng)[0])] += 1.0;
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(counts[j] / rounds, mu[j], 0.01);
  EXPECT_LT(chi_square(counts, {0.7, 0.2, 0.1}), chi_square_99(2));
}

TEST(ResampleIndices, SystematicFrequencies) {
  const Eigen::Vector3d mu(0.7, 0.2, 0.1);
  RandomStream rng(32);
  std::vector<double> counts(3, 0.0);
  for (int k = 0; k < 10000; ++k)
    for (auto j : resample_indices(mu, 10, rng, ResamplingScheme::systematic)) counts[static_cast<std::size_t>(j)] += 1.0;
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(counts[j] / 100000.0, mu[j], 0.01);
}

TEST(ResampleIndices, NeverSelectsZeroWeight) {
  const Eigen::Vector4d mu(0.0, 0.5, 0.0, 0.5);
  RandomStream rng(2);
  for (auto j : resample_indices(mu, 10000, rng)) EXPECT_TRUE(j == 1 || j == 3);
  EXPECT_THROW(resample_indices(Eigen::Vector2d(0, 0), 1, rng), DomainError);
  EXPECT_THROW(resample_indices(Eigen::Vector2d(-1, 2), 1, rng), DomainError);
}

TEST(AuxResample, SingleParticle) {
  const LinearObservationModel obs(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(1, 1));
  const auto dist = testing::reference_multipliers();
  ParticleEnsemble e{Eigen::MatrixXd(Eigen::Vector2d(2, 10)), Eigen::VectorXd::Ones(1), EnsembleStage::posterior};
  const FilterState s{e, 0, {1.0}};
  RandomStream rng(4);
  const auto aux = aux_resample(s, Eigen::Vector2d(2, 10), dist, obs, rng);
  ASSERT_EQ(aux.indices.size(), 1u);
  EXPECT_EQ(aux.indices[0], 0);
  const Eigen::Vector2d theta = aux.omega_points.col(0).cwiseQuotient(Eigen::Vector2d(2, 10));
  for (Eigen::Index i = 0; i < 2; ++i) {
    const auto& sup = dist.zone(i).support;
    EXPECT_NE(std::find(sup.begin(), sup.end(), theta[i]), sup.end());
  }
  EXPECT_EQ(aux.resampled.stage, EnsembleStage::resampled);
}

TEST(AuxResample, FlatLikelihoodReducesToPosteriorWeights) {
  const LinearObservationModel obs(Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Constant(1, 1e14));
  const auto dist = unit_multipliers(1);
  const FilterState s{ensemble_of({1.0, 2.0, 3.0}, {0.5, 0.3, 0.2}, EnsembleStage::posterior), 0, {}};
  RandomStream rng(7);
  std::vector<double> counts(3, 0.0);
  for (int k = 0; k < 10000; ++k)
    for (auto j : aux_resample(s, kY, dist, obs, rng).indices) counts[static_cast<std::size_t>(j)] += 1.0;
  EXPECT_NEAR(counts[0] / 30000.0, 0.5, 0.01);
  EXPECT_NEAR(counts[1] / 30000.0, 0.3, 0.01);
  EXPECT_NEAR(counts[2] / 30000.0, 0.2, 0.01);
}

TEST(PredictStep, ZeroNoiseCollapse) {
  const LinearObservationModel obs(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(0.3, 0.3));
  const auto dist = testing::reference_multipliers();
  RandomStream rng(9);
  const FilterState s{testing::random_posterior(2, 50, rng), 0, {0.0}};
  const auto aux = aux_resample(s, Eigen::Vector2d(3, 3), dist, obs, rng);
  const PredictResult p = predict_step(aux, Eigen::Vector2d(3, 3), Eigen::Vector2d::Zero(), obs, rng);
  for (Eigen::Index k = 0; k < 50; ++k) EXPECT_EQ(p.ensemble.particles.col(k), aux.omega_points.col(aux.indices[k]));
  EXPECT_LT((p.ensemble.weights.array() - 1.0 / 50).abs().maxCoeff(), 1e-14);
}

TEST(PredictStep, WeightsNormalizedForRandomInputs) {
  const LinearObservationModel obs(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(0.5, 2.0));
  const auto dist = testing::reference_multipliers();
  RandomStream rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    const FilterState s{testing::random_posterior(2, 40, rng), 0, {0.0}};
    const Eigen::Vector2d y(5 * rng.uniform(), 5 * rng.uniform());
    const auto aux = aux_resample(s, y, dist, obs, rng);
    const auto p = predict_step(aux, y, Eigen::Vector2d(0.1 + rng.uniform(), 0.1 + rng.uniform()), obs, rng);
    EXPECT_NEAR(p.ensemble.weights.sum(), 1.0, 1e-10);
    EXPECT_TRUE((p.ensemble.weights.array() >= 0.0).all());
    const double ess = effective_sample_size(p.ensemble);
    EXPECT_GE(ess, 1.0 - 1e-12);
    EXPECT_LE(ess, 40.0 + 1e-9);
  }
}

TEST(EffectiveSampleSize, Arithmetic) {
  EXPECT_NEAR(effective_sample_size(ensemble_of({0, 1, 2, 3}, {0.25, 0.25, 0.25, 0.25}, EnsembleStage::posterior)), 4.0,
              1e-12);
  EXPECT_DOUBLE_EQ(effective_sample_size(ensemble_of({0, 1}, {1.0, 0.0}, EnsembleStage::posterior)), 1.0);
  EXPECT_DOUBLE_EQ(effective_sample_size(ensemble_of({0, 1, 2, 3}, {0.5, 0.5, 0, 0}, EnsembleStage::posterior)), 2.0);
}

TEST(PosteriorSummary, Arithmetic) {
  const auto same = posterior_summary(ensemble_of({4.0, 4.0, 4.0}, {0.2, 0.3, 0.5}, EnsembleStage::posterior));
  EXPECT_DOUBLE_EQ(same.mean[0], 4.0);
  EXPECT_DOUBLE_EQ(same.std[0], 0.0);
  const auto two = posterior_summary(ensemble_of({0.0, 2.0}, {0.5, 0.5}, EnsembleStage::posterior));
  EXPECT_DOUBLE_EQ(two.mean[0], 1.0);
  EXPECT_DOUBLE_EQ(two.std[0], 1.0);
}

TEST(PosteriorSummary, MatchesBruteForceMoments) {
  RandomStream rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const ParticleEnsemble e = testing::random_posterior(3, 25, rng);
    const auto s = posterior_summary(e);
    for (Eigen::Index i = 0; i < 3; ++i) {
      double m = 0.0;
      for (Eigen::Index j = 0; j < 25; ++j) m += e.weights[j] * e.particles(i, j);
      double v = 0.0;
      for (Eigen::Index j = 0; j < 25; ++j) v += e.weights[j] * (e.particles(i, j) - m) * (e.particles(i, j) - m);
      EXPECT_NEAR(s.mean[i], m, 1e-12);
      EXPECT_NEAR(s.std[i], std::sqrt(v), 1e-12);
    }
  }
}

struct LinearRun {
  ApfRun run;
  double total = 0.0;
};

LinearRun run_linear(const testing::LinearGaussianInstance& inst, Eigen::Index n, std::uint64_t seed, int threads = 1) {
  const LinearObservationModel obs(inst.h, inst.r);
  const auto dist = unit_multipliers(2);
  RandomStream rng(seed);
  FilterOptions opts;
  opts.threads = threads;
  auto prior = initialize_ensemble(inst.q0, dist, n, rng);
  const auto sigma = inst.sigma;
  LinearRun out{run_apf(std::move(prior), inst.ys, inst.times, dist, obs,
                        [sigma](const FilterState&, const Eigen::VectorXd&, RandomStream&) { return sigma; }, rng, opts),
                0.0};
  for (double t : out.run.final_state.log_predictive_terms) out.total += t;
  return out;
}

TEST(LinearGaussian, TotalLogLikelihoodMatchesKalman) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto inst = make_linear_instance(RandomStream(seed).split(100));
    const auto kf = kalman_filter(inst);
    const LinearRun apf = run_linear(inst, 10000, seed);
    EXPECT_NEAR(apf.total, kf.total_loglik, 0.5) << "seed " << seed;
    EXPECT_EQ(apf.run.final_state.log_predictive_terms.size(), inst.ys.size());
  }
}

TEST(LinearGaussian, ErrorShrinksWithParticleCount) {
  double err[3] = {0.0, 0.0, 0.0};
  const Eigen::Index ns[3] = {100, 1000, 10000};
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto inst = make_linear_instance(RandomStream(seed).split(100));
    const auto kf = kalman_filter(inst);
    for (int k = 0; k < 3; ++k) {
      const LinearRun apf = run_linear(inst, ns[k], seed);
      double e = std::abs(apf.total - kf.total_loglik);
      for (std::size_t t = 0; t < inst.ys.size(); ++t) e += (apf.run.steps[t].mean - kf.means[t]).norm();
      err[k] += e / 20.0;
    }
  }
  EXPECT_GT(err[0], err[1]);
  EXPECT_GT(err[1], err[2]);
}

TEST(RunApf, DeterministicAndThreadIndependent) {
  const auto inst = make_linear_instance(RandomStream(5));
  const LinearRun a = run_linear(inst, 2000, 77, 1);
  const LinearRun b = run_linear(inst, 2000, 77, 1);
  const LinearRun c = run_linear(inst, 2000, 77, 4);
  EXPECT_EQ(a.run.final_state.ensemble.weights, b.run.final_state.ensemble.weights);
  EXPECT_EQ(a.run.final_state.ensemble.weights, c.run.final_state.ensemble.weights);
  EXPECT_EQ(a.run.final_state.ensemble.particles, c.run.final_state.ensemble.particles);
  for (const auto& d : a.run.steps) {
    EXPECT_NEAR(d.weight_sum, 1.0, 1e-10);
    EXPECT_GE(d.ess, 1.0);
    EXPECT_LE(d.ess, 2000.0 + 1e-9);
  }
}

TEST(RunApf, DegeneracyIsTaggedWithStep) {
  const auto inst = make_linear_instance(RandomStream(5), 6);
  auto bad = inst;
  bad.ys[3] = Eigen::Vector2d::Constant(1e200);
  try {
    run_linear(bad, 100, 1);
    FAIL() << "expected a degeneracy error";
  } catch (const DegeneracyError& e) {
    EXPECT_EQ(e.step(), 3);
  }
}

}  // namespace
}  // namespace wellsense
