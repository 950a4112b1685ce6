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

#include <vector>

#include <Eigen/Core>

#include "wellsense/jump_process.hpp"
#include "wellsense/random.hpp"

namespace wellsense {

enum class Phase { gas, oil };

/// Measured-depth interval of an influx zone, md_start < md_end.
struct ZoneInterval {
  double md_start;
  double md_end;
};

/// Vertical section down to `inclined_start_tvd`, a constant-curvature build
/// section reaching `inclined_end_tvd`, then horizontal to the toe (the deepest
/// zone end). Zone i is monitored by gauge i placed above it along md.
struct WellGeometry {
  double vertical_depth_top = 0.0;
  double inclined_start_tvd = 1000.0;
  double inclined_end_tvd = 1500.0;
  double curvature_deg_per_m = 0.11;
  std::vector<ZoneInterval> zone_intervals{{3500.0, 3550.0}, {3950.0, 4000.0}};
  std::vector<double> gauge_mds{3475.0, 3925.0};
  double segment_length = 50.0;

  double toe_md() const;
  /// Length along md of the build section (90 degrees at the given curvature).
  double build_length() const;
  double tvd_at(double md) const;
  /// Throws ConfigError when the layout is inconsistent.
  void validate() const;
};

struct ZoneProperties {
  double reservoir_pressure = 0.0;     // Pa
  double reservoir_temperature = 0.0;  // K
  Phase phase = Phase::oil;
};

/// Named constants of the steady-state wellbore model.
struct FluidConstants {
  double gas_density = 150.0;           // kg/m^3 at downhole conditions
  double oil_density = 800.0;           // kg/m^3
  double static_density = 800.0;        // column fill when nothing flows
  double friction_coefficient = 4.0;    // Pa / m / (kg/s)^2
  double wellhead_pressure = 1.0e6;     // Pa
  double surface_temperature = 288.15;  // K
  double geothermal_gradient = 0.03;    // K per m of tvd
  double relaxation_coefficient = 0.1;  // (kg/s) per m, wall heat exchange
  double gravity = 9.81;                // m/s^2

  double density(Phase p) const { return p == Phase::gas ? gas_density : oil_density; }
  double geothermal(double tvd) const { return surface_temperature + geothermal_gradient * tvd; }
};

/// Noise-free or observed gauge readings at one time.
/// Channel order: pressures of gauges 1..g, then temperatures of gauges 1..g.
struct GaugeRecord {
  double time_s = 0.0;
  Eigen::VectorXd pressures;     // Pa
  Eigen::VectorXd temperatures;  // K

  Eigen::Index gauge_count() const { return pressures.size(); }
  Eigen::VectorXd channels() const;
  static GaugeRecord from_channels(double time_s, const Eigen::VectorXd& channels);
};

/// Diagonal observation error covariance, scaled by `scaling`.
struct ObservationNoiseModel {
  Eigen::VectorXd covariance_diagonal;
  double scaling = 1.0;

  Eigen::VectorXd variances() const { return scaling * covariance_diagonal; }
  /// std of each channel = rel_std * |reference channel|.
  static ObservationNoiseModel relative_to(const GaugeRecord& reference, double rel_std, double scaling = 1.0);
};

/// Steady-state segment march. The well is cut into segments of
/// `segment_length` from the toe upward. Per segment, in flow order:
///   1. zone inflow enters in proportion to the segment's overlap with the zone;
///   2. the stream mixes to the mass-weighted temperature of inflow and
///      incoming fluid, then relaxes linearly toward the geothermal value at
///      the segment outlet by a = min(1, relaxation_coefficient * length / M);
///   3. pressure gains rho_mix * g * dTVD + friction_coefficient * M^2 * length
///      going down the segment, with rho_mix the mass-weighted phase density
///      of the outgoing stream M (static_density when M = 0).
/// Pressure is anchored at the wellhead. Gauges read linear interpolants of
/// the boundary values. Coarser segments coarsen all three quadratures.
class WellModel {
 public:
  WellModel(WellGeometry geometry, std::vector<ZoneProperties> zones, FluidConstants constants = {});

  /// Throws DomainError for negative or non-finite rates.
  GaugeRecord simulate(const FlowRates& q) const;
  Eigen::VectorXd simulate_channels(const FlowRates& q) const { return simulate(q).channels(); }

  const WellGeometry& geometry() const noexcept { return geometry_; }
  const std::vector<ZoneProperties>& zones() const noexcept { return zones_; }
  const FluidConstants& constants() const noexcept { return constants_; }
  Eigen::Index zone_count() const noexcept { return static_cast<Eigen::Index>(zones_.size()); }
  Eigen::Index segment_count() const noexcept { return static_cast<Eigen::Index>(lengths_.size()); }

 private:
  WellGeometry geometry_;
  std::vector<ZoneProperties> zones_;
  FluidConstants constants_;

  // Segment j spans boundaries j (deeper) to j+1; boundary 0 is the toe.
  std::vector<double> boundary_md_;
  std::vector<double> boundary_tvd_;
  std::vector<double> lengths_;
  std::vector<double> dtvd_;
  // inflow_fraction_[j * zones + i]: share of zone i's rate entering in segment j
  std::vector<double> inflow_fraction_;
  std::vector<double> outlet_geothermal_;
};

/// Convenience form that builds the model with default constants.
GaugeRecord simulate_gauges(const WellGeometry& geometry, const std::vector<ZoneProperties>& zones,
                            const FlowRates& q);

/// Adds independent N(0, scaling * covariance_diagonal) noise per channel.
/// Zero-variance channels pass through unchanged.
GaugeRecord observe(const GaugeRecord& record, const ObservationNoiseModel& noise, RandomStream& rng);

/// log N(y; simulate(q), scaling * W).
double observation_loglik(const GaugeRecord& y, const FlowRates& q, const WellModel& model,
                          const ObservationNoiseModel& noise);

}  // namespace wellsense
