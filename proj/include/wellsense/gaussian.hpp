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

#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Core>

namespace wellsense {

template <typename Scalar>
Scalar log_normal_pdf(Scalar x, Scalar mean, Scalar variance) {
  const Scalar d = x - mean;
  return Scalar(-0.5) * (std::log(Scalar(2) * std::numbers::pi_v<Scalar> * variance) + d * d / variance);
}

/// log N(x; mean, diag(variance)). Variances must be positive.
template <typename DerivedX, typename DerivedM, typename DerivedV>
typename DerivedX::Scalar diag_gaussian_logpdf(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedM>& mean,
                                               const Eigen::MatrixBase<DerivedV>& variance) {
  using Scalar = typename DerivedX::Scalar;
  const auto n = static_cast<Scalar>(x.size());
  const Scalar log_det = variance.array().log().sum();
  const Scalar maha = ((x - mean).array().square() / variance.array()).sum();
  return Scalar(-0.5) * (n * std::log(Scalar(2) * std::numbers::pi_v<Scalar>) + log_det + maha);
}

/// log(sum(exp(v))) with max subtraction; -inf for an empty or all -inf input.
template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::DenseBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  if (v.size() == 0) return -std::numeric_limits<Scalar>::infinity();
  const Scalar m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.derived().array() - m).exp().sum());
}

/// exp(logw - max) normalized to sum 1. Caller must ensure max(logw) is finite.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> normalized_weights(const Eigen::MatrixBase<Derived>& logw) {
  const auto m = logw.maxCoeff();
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> w = (logw.array() - m).exp().matrix();
  w /= w.sum();
  return w;
}

/// Standard normal CDF.
template <typename Scalar>
Scalar normal_cdf(Scalar z) {
  return Scalar(0.5) * std::erfc(-z / std::numbers::sqrt2_v<Scalar>);
}

}  // namespace wellsense
