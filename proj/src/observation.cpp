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

#include "wellsense/observation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>
#include <vector>

#include "wellsense/error.hpp"
#include "wellsense/gaussian.hpp"

namespace wellsense {

WellObservationModel::WellObservationModel(WellModel model, ObservationNoiseModel noise)
    : model_(std::move(model)), noise_(std::move(noise)), variances_(noise_.variances()) {
  if (variances_.size() != 2 * static_cast<Eigen::Index>(model_.geometry().gauge_mds.size()))
    throw ConfigError("observation model: noise covariance has wrong channel count");
  if ((variances_.array() <= 0.0).any()) throw ConfigError("observation model: noise variances must be > 0");
}

double WellObservationModel::loglik(const Eigen::VectorXd& y, const FlowRates& q) const {
  if ((q.array() < 0.0).any() || !q.allFinite()) return -std::numeric_limits<double>::infinity();
  return diag_gaussian_logpdf(y, model_.simulate_channels(q), variances_);
}

LinearObservationModel::LinearObservationModel(Eigen::MatrixXd h, Eigen::VectorXd variances)
    : h_(std::move(h)), variances_(std::move(variances)) {
  if (variances_.size() != h_.rows()) throw ConfigError("linear observation model: variance size mismatch");
  if ((variances_.array() <= 0.0).any()) throw ConfigError("linear observation model: variances must be > 0");
}

double LinearObservationModel::loglik(const Eigen::VectorXd& y, const FlowRates& q) const {
  return diag_gaussian_logpdf(y, h_ * q, variances_);
}

Eigen::VectorXd batch_loglik(const ObservationModel& model, const Eigen::VectorXd& y, const Eigen::MatrixXd& particles,
                             int threads) {
  const Eigen::Index n = particles.cols();
  Eigen::VectorXd out(n);
  auto work = [&](Eigen::Index begin, Eigen::Index end) {
    for (Eigen::Index j = begin; j < end; ++j) out[j] = model.loglik(y, particles.col(j));
  };
  const Eigen::Index t = std::clamp<Eigen::Index>(threads, 1, std::max<Eigen::Index>(1, n / 64));
  if (t <= 1) {
    work(0, n);
    return out;
  }
  {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(t));
    const Eigen::Index chunk = (n + t - 1) / t;
    for (Eigen::Index b = 0; b < n; b += chunk) pool.emplace_back(work, b, std::min(n, b + chunk));
  }
  return out;
}

}  // namespace wellsense
