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

#include <memory>

#include <Eigen/Core>

#include "wellsense/jump_process.hpp"
#include "wellsense/well_model.hpp"

namespace wellsense {

/// Likelihood p(y | Q) as seen by the filters. Implementations must be
/// reentrant: the ensemble code evaluates them concurrently.
class ObservationModel {
 public:
  virtual ~ObservationModel() = default;

  virtual Eigen::Index channel_count() const = 0;
  /// Noise-free prediction H(q).
  virtual Eigen::VectorXd predict(const FlowRates& q) const = 0;
  /// log p(y | q); -inf when q lies outside the model's domain.
  virtual double loglik(const Eigen::VectorXd& y, const FlowRates& q) const = 0;
};

/// The wellbore simulator with a diagonal Gaussian error. Rates with a
/// negative entry have zero likelihood rather than raising.
class WellObservationModel final : public ObservationModel {
 public:
  WellObservationModel(WellModel model, ObservationNoiseModel noise);

  Eigen::Index channel_count() const override { return variances_.size(); }
  Eigen::VectorXd predict(const FlowRates& q) const override { return model_.simulate_channels(q); }
  double loglik(const Eigen::VectorXd& y, const FlowRates& q) const override;

  const WellModel& model() const noexcept { return model_; }
  const ObservationNoiseModel& noise() const noexcept { return noise_; }

 private:
  WellModel model_;
  ObservationNoiseModel noise_;
  Eigen::VectorXd variances_;
};

/// y = H q + v, v ~ N(0, diag(variances)). Used for the Kalman reference runs.
class LinearObservationModel final : public ObservationModel {
 public:
  LinearObservationModel(Eigen::MatrixXd h, Eigen::VectorXd variances);

  Eigen::Index channel_count() const override { return h_.rows(); }
  Eigen::VectorXd predict(const FlowRates& q) const override { return h_ * q; }
  double loglik(const Eigen::VectorXd& y, const FlowRates& q) const override;

  const Eigen::MatrixXd& matrix() const noexcept { return h_; }
  const Eigen::VectorXd& variances() const noexcept { return variances_; }

 private:
  Eigen::MatrixXd h_;
  Eigen::VectorXd variances_;
};

/// log p(y | column j of `particles`) for every column, split over `threads`.
/// The result does not depend on the thread count.
Eigen::VectorXd batch_loglik(const ObservationModel& model, const Eigen::VectorXd& y, const Eigen::MatrixXd& particles,
                             int threads = 1);

}  // namespace wellsense
