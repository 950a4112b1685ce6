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

namespace wellsense {

struct SimplexOptions {
  double initial_step = 0.5;     // edge length of the starting simplex
  double diameter_tol = 1e-3;    // stop when every vertex is this close to the best
  int max_evaluations = 200;
};

struct SimplexEvaluation {
  Eigen::VectorXd x;
  double value;
  double best_so_far;
};

struct SimplexResult {
  Eigen::VectorXd x;
  double value;
  int evaluations = 0;
  bool converged = false;
  std::vector<SimplexEvaluation> history;
};

/// Nelder-Mead restricted to the box [lo, hi]. Trial points that leave the
/// box are mirrored back across the violated face (then clamped). Infinite
/// objective values are accepted and ranked worst.
SimplexResult bounded_simplex_minimize(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x0,
                                       const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                       const SimplexOptions& options = {});

}  // namespace wellsense
