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

#include "wellsense/bounded_simplex.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "wellsense/error.hpp"

namespace wellsense {

namespace {

Eigen::VectorXd reflect_into(Eigen::VectorXd x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] < lo[i]) x[i] = lo[i] + (lo[i] - x[i]);
    if (x[i] > hi[i]) x[i] = hi[i] - (x[i] - hi[i]);
    x[i] = std::clamp(x[i], lo[i], hi[i]);
  }
  return x;
}

}  // namespace

SimplexResult bounded_simplex_minimize(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x0,
                                       const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                       const SimplexOptions& options) {
  const Eigen::Index d = x0.size();
  if (lo.size() != d || hi.size() != d) throw DomainError("simplex: bounds have wrong dimension");
  if (!((hi.array() > lo.array()).all())) throw DomainError("simplex: require hi > lo");
  if (options.max_evaluations < d + 1) throw DomainError("simplex: evaluation budget smaller than the simplex");

  SimplexResult result;
  double best = std::numeric_limits<double>::infinity();
  auto eval = [&](const Eigen::VectorXd& x) {
    const double v = f(x);
    ++result.evaluations;
    best = std::min(best, v);
    result.history.push_back(SimplexEvaluation{x, v, best});
    return v;
  };

  std::vector<Eigen::VectorXd> pts;
  std::vector<double> vals;
  x0 = reflect_into(std::move(x0), lo, hi);
  pts.push_back(x0);
  vals.push_back(eval(x0));
  for (Eigen::Index i = 0; i < d; ++i) {
    Eigen::VectorXd v = x0;
    const double step = std::min(options.initial_step, 0.5 * (hi[i] - lo[i]));
    v[i] = (v[i] + step <= hi[i]) ? v[i] + step : v[i] - step;
    pts.push_back(v);
    vals.push_back(eval(v));
  }

  std::vector<std::size_t> order(pts.size());
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    std::vector<Eigen::VectorXd> p2;
    std::vector<double> v2;
    for (auto k : order) {
      p2.push_back(pts[k]);
      v2.push_back(vals[k]);
    }
    pts = std::move(p2);
    vals = std::move(v2);
  };
  auto diameter = [&] {
    double dm = 0.0;
    for (std::size_t k = 1; k < pts.size(); ++k) dm = std::max(dm, (pts[k] - pts[0]).lpNorm<Eigen::Infinity>());
    return dm;
  };

  const auto worst = static_cast<std::size_t>(d);
  while (true) {
    sort_simplex();
    if (diameter() < options.diameter_tol) {
      result.converged = true;
      break;
    }
    if (result.evaluations >= options.max_evaluations) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (std::size_t k = 0; k < worst; ++k) centroid += pts[k];
    centroid /= static_cast<double>(d);

    const Eigen::VectorXd xr = reflect_into(centroid + (centroid - pts[worst]), lo, hi);
    const double fr = eval(xr);
    if (fr < vals[0]) {
      if (result.evaluations >= options.max_evaluations) {
        pts[worst] = xr;
        vals[worst] = fr;
        continue;
      }
      const Eigen::VectorXd xe = reflect_into(centroid + 2.0 * (centroid - pts[worst]), lo, hi);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        vals[worst] = fe;
      } else {
        pts[worst] = xr;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[worst - 1]) {
      pts[worst] = xr;
      vals[worst] = fr;
      continue;
    }
    if (result.evaluations >= options.max_evaluations) continue;
    // contraction, outside if the reflected point beat the worst vertex
    const bool outside = fr < vals[worst];
    const Eigen::VectorXd xc =
        outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid)) : Eigen::VectorXd(centroid + 0.5 * (pts[worst] - centroid));
    const double fc = eval(xc);
    if (fc < (outside ? fr : vals[worst])) {
      pts[worst] = xc;
      vals[worst] = fc;
      continue;
    }
    // shrink toward the best vertex
    for (std::size_t k = 1; k < pts.size(); ++k) {
      if (result.evaluations >= options.max_evaluations) break;
      pts[k] = pts[0] + 0.5 * (pts[k] - pts[0]);
      vals[k] = eval(pts[k]);
    }
  }

  sort_simplex();
  result.x = pts[0];
  result.value = vals[0];
  return result;
}

}  // namespace wellsense
