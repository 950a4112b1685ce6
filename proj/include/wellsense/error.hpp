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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wellsense {

/// Invalid or inconsistent configuration (maps to CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// An argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// File could not be read or written (exit code 3).
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// All importance weights vanished. Carries enough context for the caller's
/// degeneracy policy to decide between aborting and resetting (exit code 4).
class DegeneracyError : public std::runtime_error {
 public:
  DegeneracyError(const std::string& what, double max_loglik, double ess, std::ptrdiff_t step = -1)
      : std::runtime_error(what), max_loglik_(max_loglik), ess_(ess), step_(step) {}

  double max_loglik() const noexcept { return max_loglik_; }
  double ess() const noexcept { return ess_; }
  std::ptrdiff_t step() const noexcept { return step_; }

  DegeneracyError at_step(std::ptrdiff_t step) const {
    return DegeneracyError(std::string(what()) + " (step " + std::to_string(step) + ")", max_loglik_, ess_, step);
  }

 private:
  double max_loglik_;
  double ess_;
  std::ptrdiff_t step_;
};

}  // namespace wellsense
