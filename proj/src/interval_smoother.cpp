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

#include "wellsense/interval_smoother.hpp"

#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <sstream>

#include "wellsense/error.hpp"

namespace wellsense {

namespace {

double halton(std::size_t index, std::size_t base) {
  double f = 1.0;
  double r = 0.0;
  while (index > 0) {
    f /= static_cast<double>(base);
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

constexpr std::size_t kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29};

}  // namespace

IntervalCostEvaluation interval_cost(const NoiseVariances& sigma, const IntervalProblem& problem, std::uint64_t seed) {
  if (!problem.obs) throw DomainError("interval_cost: no observation model");
  if (problem.observations.empty()) throw DomainError("interval_cost: no observations");
  if (sigma.size() != problem.initial_rates.size()) throw DomainError("interval_cost: variance vector has wrong size");
  if (!((sigma.array() > 0.0).all())) throw DomainError("interval_cost: variances must be > 0");

  IntervalCostEvaluation out;
  out.sigma = sigma;
  out.seed = seed;
  RandomStream rng(seed);
  FilterOptions options = problem.filter;
  options.degeneracy = DegeneracyPolicy::abort;
  try {
    ParticleEnsemble prior = initialize_ensemble(problem.initial_rates, problem.multipliers, problem.particles, rng);
    const SigmaProvider constant = [&](const FilterState&, const Eigen::VectorXd&, RandomStream&) { return sigma; };
    ApfRun run = run_apf(std::move(prior), problem.observations, problem.times, problem.multipliers, *problem.obs,
                         constant, rng, options);
    out.per_step_terms = std::move(run.final_state.log_predictive_terms);
    out.cost = -std::accumulate(out.per_step_terms.begin(), out.per_step_terms.end(), 0.0);
  } catch (const DegeneracyError& e) {
    out.cost = std::numeric_limits<double>::infinity();
    out.degenerate_step = e.step();
  }
  return out;
}

std::vector<NoiseVariances> multistart_points(const MultiStartOptions& options) {
  const auto& lo = options.bounds.lo;
  const auto& hi = options.bounds.hi;
  const Eigen::Index d = lo.size();
  if (d > static_cast<Eigen::Index>(std::size(kPrimes))) throw DomainError("multistart: too many dimensions");
  std::vector<NoiseVariances> pts;
  pts.push_back(options.initial_sigma.cwiseMax(lo).cwiseMin(hi));
  for (int k = 1; k < options.n_starts; ++k) {
    NoiseVariances p(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      const double u = halton(static_cast<std::size_t>(k), kPrimes[i]);
      p[i] = std::exp(std::log(lo[i]) + u * (std::log(hi[i]) - std::log(lo[i])));
    }
    pts.push_back(p);
  }
  return pts;
}

OptimizerReport minimize_variances(const std::function<double(const NoiseVariances&)>& cost,
                                   const MultiStartOptions& options) {
  const auto& b = options.bounds;
  if (b.lo.size() == 0 || b.lo.size() != b.hi.size()) throw ConfigError("optimizer: bounds have inconsistent sizes");
  if (!((b.lo.array() >= 0.0).all()) || !((b.hi.array() > b.lo.array()).all()))
    throw ConfigError("optimizer: bounds need 0 <= lo < hi");
  if (options.n_starts < 1) throw ConfigError("optimizer: n_starts must be >= 1");
  if (options.initial_sigma.size() != b.lo.size()) throw ConfigError("optimizer: initial sigma has wrong size");

  // log(0) is unusable as a simplex face; the smallest representable
  // positive variance stands in for a zero lower bound
  const Eigen::VectorXd log_lo = b.lo.cwiseMax(1e-300).array().log().matrix();
  const Eigen::VectorXd log_hi = b.hi.array().log().matrix();
  MultiStartOptions clamped = options;
  clamped.bounds.lo = b.lo.cwiseMax(1e-300);

  const auto starts = multistart_points(clamped);
  auto run_start = [&](const NoiseVariances& start) {
    StartReport rep;
    rep.start = start;
    const auto f = [&](const Eigen::VectorXd& z) {
      const NoiseVariances s = z.array().exp().matrix().cwiseMax(clamped.bounds.lo).cwiseMin(b.hi);
      const double c = cost(s);
      rep.history.emplace_back(s, c);
      return std::isnan(c) ? std::numeric_limits<double>::infinity() : c;
    };
    const SimplexResult res = bounded_simplex_minimize(f, start.array().log().matrix(), log_lo, log_hi, options.simplex);
    rep.final_point = res.x.array().exp().matrix().cwiseMax(clamped.bounds.lo).cwiseMin(b.hi);
    rep.final_cost = res.value;
    rep.evaluations = res.evaluations;
    rep.converged = res.converged;
    return rep;
  };

  OptimizerReport report;
  if (options.threads > 1 && starts.size() > 1) {
    std::vector<std::future<StartReport>> futures;
    for (const auto& s : starts) futures.push_back(std::async(std::launch::async, run_start, s));
    for (auto& fu : futures) report.starts.push_back(fu.get());
  } else {
    for (const auto& s : starts) report.starts.push_back(run_start(s));
  }

  report.best_cost = std::numeric_limits<double>::infinity();
  for (const auto& s : report.starts)
    if (s.final_cost < report.best_cost) {
      report.best_cost = s.final_cost;
      report.best_sigma = s.final_point;
    }
  if (!std::isfinite(report.best_cost)) {
    std::ostringstream os;
    os << "optimizer: all " << report.starts.size() << " starts ended infeasible";
    for (std::size_t k = 0; k < report.starts.size(); ++k)
      os << "; start " << k << " at (" << report.starts[k].start.transpose() << ") used "
         << report.starts[k].evaluations << " evaluations";
    throw DomainError(os.str());
  }
  return report;
}

OptimizerReport optimize_interval(const IntervalProblem& problem, const MultiStartOptions& options, std::uint64_t seed) {
  MultiStartOptions opts = options;
  // each start owns its own filter runs; particle-level threading is left off
  // when the starts already run concurrently
  IntervalProblem p = problem;
  if (opts.threads > 1) p.filter.threads = 1;
  return minimize_variances([&](const NoiseVariances& s) { return interval_cost(s, p, seed).cost; }, opts);
}

}  // namespace wellsense
