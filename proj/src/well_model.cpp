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

#include "wellsense/well_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "wellsense/error.hpp"
#include "wellsense/gaussian.hpp"

namespace wellsense {

namespace {

bool on_grid(double offset, double step) {
  const double k = offset / step;
  return std::abs(k - std::round(k)) < 1e-9 * std::max(1.0, k);
}

}  // namespace

double WellGeometry::toe_md() const {
  double toe = 0.0;
  for (const auto& z : zone_intervals) toe = std::max(toe, z.md_end);
  return toe;
}

double WellGeometry::build_length() const { return 90.0 / curvature_deg_per_m; }

double WellGeometry::tvd_at(double md) const {
  // Vertical down to the kick-off point, then inclination grows linearly with
  // md; the arc's vertical extent is scaled so it lands on inclined_end_tvd.
  const double kickoff_md = inclined_start_tvd - vertical_depth_top;
  if (md <= kickoff_md) return vertical_depth_top + md;
  const double s = md - kickoff_md;
  const double build = build_length();
  const double drop = inclined_end_tvd - inclined_start_tvd;
  if (s >= build) return inclined_end_tvd;
  const double inclination = s / build * std::numbers::pi / 2.0;
  return inclined_start_tvd + drop * std::sin(inclination);
}

void WellGeometry::validate() const {
  if (!(segment_length > 0.0)) throw ConfigError("geometry: segment_length must be > 0");
  if (!(curvature_deg_per_m > 0.0)) throw ConfigError("geometry: curvature must be > 0");
  if (!(inclined_end_tvd > inclined_start_tvd) || !(inclined_start_tvd >= vertical_depth_top))
    throw ConfigError("geometry: require vertical_depth_top <= inclined_start_tvd < inclined_end_tvd");
  if (zone_intervals.empty()) throw ConfigError("geometry: no zones");
  if (gauge_mds.size() != zone_intervals.size()) throw ConfigError("geometry: one gauge per zone required");
  const double toe = toe_md();
  for (std::size_t i = 0; i < zone_intervals.size(); ++i) {
    const auto& z = zone_intervals[i];
    const std::string where = "geometry: zone " + std::to_string(i + 1);
    if (!(z.md_end > z.md_start) || z.md_start <= 0.0) throw ConfigError(where + ": invalid md interval");
    if (!on_grid(z.md_end - z.md_start, segment_length))
      throw ConfigError(where + ": segment_length must divide the zone length");
    if (!on_grid(toe - z.md_start, segment_length) || !on_grid(toe - z.md_end, segment_length))
      throw ConfigError(where + ": zone boundaries must lie on the segment grid measured from the toe");
    if (!(gauge_mds[i] < z.md_start) || gauge_mds[i] <= 0.0)
      throw ConfigError(where + ": gauge must be placed above (shallower than) its zone");
    for (std::size_t k = 0; k < zone_intervals.size(); ++k)
      if (k != i && zone_intervals[k].md_start < z.md_end && z.md_start < zone_intervals[k].md_end)
        throw ConfigError(where + ": overlaps another zone");
  }
}

Eigen::VectorXd GaugeRecord::channels() const {
  Eigen::VectorXd c(pressures.size() + temperatures.size());
  c << pressures, temperatures;
  return c;
}

GaugeRecord GaugeRecord::from_channels(double time_s, const Eigen::VectorXd& channels) {
  if (channels.size() % 2 != 0) throw DomainError("gauge record: odd channel count");
  const auto g = channels.size() / 2;
  return GaugeRecord{time_s, channels.head(g), channels.tail(g)};
}

ObservationNoiseModel ObservationNoiseModel::relative_to(const GaugeRecord& reference, double rel_std, double scaling) {
  if (!(rel_std > 0.0)) throw ConfigError("noise: relative std must be > 0");
  if (!(scaling > 0.0)) throw ConfigError("noise: scaling must be > 0");
  const Eigen::VectorXd sd = rel_std * reference.channels().cwiseAbs();
  return ObservationNoiseModel{sd.array().square().matrix(), scaling};
}

WellModel::WellModel(WellGeometry geometry, std::vector<ZoneProperties> zones, FluidConstants constants)
    : geometry_(std::move(geometry)), zones_(std::move(zones)), constants_(constants) {
  geometry_.validate();
  if (zones_.size() != geometry_.zone_intervals.size())
    throw ConfigError("well model: zone property count does not match zone intervals");
  for (std::size_t i = 0; i < zones_.size(); ++i)
    if (!(zones_[i].reservoir_pressure > 0.0) || !(zones_[i].reservoir_temperature > 0.0))
      throw ConfigError("zone " + std::to_string(i + 1) + ": reservoir pressure and temperature must be > 0");

  const double toe = geometry_.toe_md();
  const double step = geometry_.segment_length;
  for (double md = toe; md > 0.0; md -= step) boundary_md_.push_back(md);
  boundary_md_.push_back(0.0);
  // drop a sliver segment left by rounding at the wellhead
  if (boundary_md_.size() > 2 && boundary_md_[boundary_md_.size() - 2] < 1e-9 * step) boundary_md_.erase(boundary_md_.end() - 2);

  const std::size_t nseg = boundary_md_.size() - 1;
  const std::size_t nz = zones_.size();
  boundary_tvd_.resize(boundary_md_.size());
  for (std::size_t b = 0; b < boundary_md_.size(); ++b) boundary_tvd_[b] = geometry_.tvd_at(boundary_md_[b]);
  lengths_.resize(nseg);
  dtvd_.resize(nseg);
  outlet_geothermal_.resize(nseg);
  inflow_fraction_.assign(nseg * nz, 0.0);
  for (std::size_t j = 0; j < nseg; ++j) {
    const double deep = boundary_md_[j];
    const double shallow = boundary_md_[j + 1];
    lengths_[j] = deep - shallow;
    dtvd_[j] = boundary_tvd_[j] - boundary_tvd_[j + 1];
    outlet_geothermal_[j] = constants_.geothermal(boundary_tvd_[j + 1]);
    for (std::size_t i = 0; i < nz; ++i) {
      const auto& z = geometry_.zone_intervals[i];
      const double overlap = std::max(0.0, std::min(deep, z.md_end) - std::max(shallow, z.md_start));
      inflow_fraction_[j * nz + i] = overlap / (z.md_end - z.md_start);
    }
  }
}

GaugeRecord WellModel::simulate(const FlowRates& q) const {
  const std::size_t nz = zones_.size();
  if (static_cast<std::size_t>(q.size()) != nz) throw DomainError("simulate: rate vector has wrong zone count");
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    if (!std::isfinite(q[i])) throw DomainError("simulate: non-finite flow rate");
    if (q[i] < 0.0) throw DomainError("simulate: negative flow rate");
  }

  const std::size_t nb = boundary_md_.size();
  const std::size_t nseg = nb - 1;
  std::vector<double> temp(nb);
  std::vector<double> mass(nb);
  std::vector<double> dp(nseg);

  double m_total = 0.0;
  double m_density = 0.0;  // sum of mass * phase density
  double t = constants_.geothermal(boundary_tvd_[0]);
  temp[0] = t;
  mass[0] = 0.0;
  for (std::size_t j = 0; j < nseg; ++j) {
    double inflow = 0.0;
    double inflow_heat = 0.0;
    for (std::size_t i = 0; i < nz; ++i) {
      const double f = inflow_fraction_[j * nz + i];
      if (f == 0.0) continue;
      const double m = f * q[static_cast<Eigen::Index>(i)];
      inflow += m;
      inflow_heat += m * zones_[i].reservoir_temperature;
      m_density += m * constants_.density(zones_[i].phase);
    }
    const double m_out = m_total + inflow;
    const double rho = m_out > 0.0 ? m_density / m_out : constants_.static_density;
    if (m_out > 0.0) {
      const double t_mix = (m_total * t + inflow_heat) / m_out;
      const double a = std::min(1.0, constants_.relaxation_coefficient * lengths_[j] / m_out);
      t = t_mix + a * (outlet_geothermal_[j] - t_mix);
    } else {
      t = outlet_geothermal_[j];
    }
    m_total = m_out;
    temp[j + 1] = t;
    mass[j + 1] = m_total;
    dp[j] = rho * constants_.gravity * dtvd_[j] + constants_.friction_coefficient * m_out * m_out * lengths_[j];
  }

  std::vector<double> pressure(nb);
  pressure[nb - 1] = constants_.wellhead_pressure;
  for (std::size_t j = nseg; j-- > 0;) pressure[j] = pressure[j + 1] + dp[j];

  const auto ng = static_cast<Eigen::Index>(geometry_.gauge_mds.size());
  GaugeRecord out{0.0, Eigen::VectorXd(ng), Eigen::VectorXd(ng)};
  for (Eigen::Index g = 0; g < ng; ++g) {
    const double md = geometry_.gauge_mds[static_cast<std::size_t>(g)];
    // boundaries descend in md; find j with md in [boundary j+1, boundary j]
    std::size_t j = 0;
    while (j + 1 < nb - 1 && boundary_md_[j + 1] > md) ++j;
    const double deep = boundary_md_[j];
    const double shallow = boundary_md_[j + 1];
    const double w = (deep - md) / (deep - shallow);  // 0 at the deep end
    out.pressures[g] = (1.0 - w) * pressure[j] + w * pressure[j + 1];
    if ((1.0 - w) * mass[j] + w * mass[j + 1] > 0.0)
      out.temperatures[g] = (1.0 - w) * temp[j] + w * temp[j + 1];
    else
      out.temperatures[g] = constants_.geothermal(geometry_.tvd_at(md));
  }
  return out;
}

GaugeRecord simulate_gauges(const WellGeometry& geometry, const std::vector<ZoneProperties>& zones,
                            const FlowRates& q) {
  return WellModel(geometry, zones).simulate(q);
}

GaugeRecord observe(const GaugeRecord& record, const ObservationNoiseModel& noise, RandomStream& rng) {
  const Eigen::VectorXd var = noise.variances();
  Eigen::VectorXd c = record.channels();
  if (var.size() != c.size()) throw DomainError("observe: noise model has wrong channel count");
  for (Eigen::Index k = 0; k < c.size(); ++k) {
    if (!(var[k] >= 0.0)) throw DomainError("observe: negative noise variance");
    if (var[k] > 0.0) c[k] += std::sqrt(var[k]) * rng.normal();
  }
  return GaugeRecord::from_channels(record.time_s, c);
}

double observation_loglik(const GaugeRecord& y, const FlowRates& q, const WellModel& model,
                          const ObservationNoiseModel& noise) {
  const Eigen::VectorXd var = noise.variances();
  if ((var.array() <= 0.0).any()) throw DomainError("observation_loglik: noise variances must be > 0");
  return diag_gaussian_logpdf(y.channels(), model.simulate_channels(q), var);
}

}  // namespace wellsense
