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

#include "wellsense/config.hpp"

#include <algorithm>
#include <vector>

#include "json.hpp"
#include "wellsense/error.hpp"
#include "wellsense/io.hpp"

namespace wellsense {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Typed access into one object of the document; errors name the full key path.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config: '" + (path_.empty() ? "<root>" : path_) + "' must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  Node child(const std::string& key) const { return Node(at(key), join(path_, key)); }
  // absent optional sections read as empty objects
  Node child_or_empty(const std::string& key) const {
    static const json empty = json::object();
    return has(key) ? child(key) : Node(empty, join(path_, key));
  }

  double number(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number()) throw type_error(key, "a number");
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

  long long integer(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number_integer()) throw type_error(key, "an integer");
    return v.get<long long>();
  }
  long long integer(const std::string& key, long long fallback) const { return has(key) ? integer(key) : fallback; }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      throw type_error(key, "a non-negative integer");
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_boolean()) throw type_error(key, "true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_string()) throw type_error(key, "a string");
    return v.get<std::string>();
  }
  std::string text(const std::string& key, const std::string& fallback) const { return has(key) ? text(key) : fallback; }

  std::vector<double> numbers(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_array() || !std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); }))
      throw type_error(key, "an array of numbers");
    return v.get<std::vector<double>>();
  }
  Eigen::VectorXd vector(const std::string& key) const {
    const auto v = numbers(key);
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  Eigen::VectorXd vector(const std::string& key, const Eigen::VectorXd& fallback) const {
    return has(key) ? vector(key) : fallback;
  }

  std::vector<std::vector<double>> nested_numbers(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_array()) throw type_error(key, "an array of per-zone arrays");
    std::vector<std::vector<double>> out;
    for (const auto& row : v) {
      if (!row.is_array() || !std::all_of(row.begin(), row.end(), [](const json& e) { return e.is_number(); }))
        throw type_error(key, "an array of per-zone arrays of numbers");
      out.push_back(row.get<std::vector<double>>());
    }
    return out;
  }

  const json& array(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_array()) throw type_error(key, "an array");
    return v;
  }

  const std::string& path() const { return path_; }

 private:
  const json& at(const std::string& key) const {
    if (!j_.contains(key)) throw ConfigError("config: missing key '" + join(path_, key) + "'");
    return j_.at(key);
  }
  ConfigError type_error(const std::string& key, const std::string& what) const {
    return ConfigError("config: key '" + join(path_, key) + "' must be " + what);
  }

  const json& j_;
  std::string path_;
};

Phase phase_from(const std::string& s, const std::string& path) {
  if (s == "gas") return Phase::gas;
  if (s == "oil") return Phase::oil;
  throw ConfigError("config: key '" + path + "' must be \"gas\" or \"oil\"");
}

ResamplingScheme resampling_from(const std::string& s) {
  if (s == "multinomial") return ResamplingScheme::multinomial;
  if (s == "systematic") return ResamplingScheme::systematic;
  throw ConfigError("config: key 'filter.resampling' must be \"multinomial\" or \"systematic\"");
}

DegeneracyPolicy degeneracy_from(const std::string& s) {
  if (s == "abort") return DegeneracyPolicy::abort;
  if (s == "uniform-reset" || s == "uniform_reset") return DegeneracyPolicy::uniform_reset;
  throw ConfigError("config: key 'filter.degeneracy' must be \"abort\" or \"uniform-reset\"");
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

ScenarioConfig from_json(const json& doc) {
  const Node root(doc, "");
  ScenarioConfig s = default_scenario();
  s.name = root.text("name", s.name);
  s.seed = root.unsigned_integer("seed", s.seed);

  const Node truth = root.child("truth");
  s.truth.t0_s = truth.number("t0_s");
  s.truth.t_end_s = truth.number("t_end_s");
  s.truth.sample_period_s = truth.number("sample_period_s");
  s.truth.pieces.clear();
  const json& pieces = truth.array("pieces");
  for (std::size_t k = 0; k < pieces.size(); ++k) {
    const Node p(pieces[k], "truth.pieces[" + std::to_string(k) + "]");
    s.truth.pieces.push_back(TruthPiece{p.number("t_start_s"), p.vector("rates_kg_s")});
  }

  const Node well = root.child("well");
  WellGeometry g;
  g.vertical_depth_top = well.number("vertical_depth_top_m", g.vertical_depth_top);
  g.inclined_start_tvd = well.number("inclined_start_tvd_m", g.inclined_start_tvd);
  g.inclined_end_tvd = well.number("inclined_end_tvd_m", g.inclined_end_tvd);
  g.curvature_deg_per_m = well.number("curvature_deg_per_m", g.curvature_deg_per_m);
  g.gauge_mds = well.numbers("gauge_md_m");
  g.zone_intervals.clear();
  s.zones.clear();
  const json& zones = well.array("zones");
  for (std::size_t k = 0; k < zones.size(); ++k) {
    const Node z(zones[k], "well.zones[" + std::to_string(k) + "]");
    g.zone_intervals.push_back(ZoneInterval{z.number("md_start_m"), z.number("md_end_m")});
    s.zones.push_back(ZoneProperties{z.number("reservoir_pressure_pa"), z.number("reservoir_temperature_k"),
                                     phase_from(z.text("phase"), z.path() + ".phase")});
  }
  s.geometry_truth = g;
  s.geometry_assim = g;
  s.geometry_truth.segment_length = well.number("truth_segment_length_m", 50.0);
  s.geometry_assim.segment_length = well.number("assim_segment_length_m", 50.0);

  const Node fluid = well.child_or_empty("fluid");
  FluidConstants& f = s.fluid;
  f.gas_density = fluid.number("gas_density_kg_m3", f.gas_density);
  f.oil_density = fluid.number("oil_density_kg_m3", f.oil_density);
  f.static_density = fluid.number("static_density_kg_m3", f.static_density);
  f.friction_coefficient = fluid.number("friction_coefficient_pa_s2_per_kg2_m", f.friction_coefficient);
  f.wellhead_pressure = fluid.number("wellhead_pressure_pa", f.wellhead_pressure);
  f.surface_temperature = fluid.number("surface_temperature_k", f.surface_temperature);
  f.geothermal_gradient = fluid.number("geothermal_gradient_k_per_m", f.geothermal_gradient);
  f.relaxation_coefficient = fluid.number("relaxation_coefficient_kg_per_s_m", f.relaxation_coefficient);
  f.gravity = fluid.number("gravity_m_s2", f.gravity);

  const Node obs = root.child("observation");
  s.noise_rel_std = obs.number("noise_rel_std");
  s.covariance_scaling_assim = obs.number("covariance_scaling_assim", 1.0);
  s.noise_enabled = obs.boolean("noise_enabled", true);

  const Node jump = root.child("jump");
  const auto support = jump.nested_numbers("support");
  const auto probs = jump.nested_numbers("probs");
  if (support.size() != probs.size()) throw ConfigError("config: 'jump.support' and 'jump.probs' differ in zone count");
  std::vector<ZoneMultipliers> laws;
  for (std::size_t i = 0; i < support.size(); ++i) laws.push_back(ZoneMultipliers{support[i], probs[i]});
  s.jump = JumpProcessSpec{MultiplierDistribution(std::move(laws)), jump.vector("sigma0")};

  const Node filter = root.child_or_empty("filter");
  s.n_particles = filter.integer("n_particles", s.n_particles);
  s.regime = regime_from_string(filter.text("regime", to_string(s.regime)));
  s.manual_sigma = filter.vector("manual_sigma", s.jump.sigma0);
  s.filter.resampling = resampling_from(filter.text("resampling", "multinomial"));
  s.filter.degeneracy = degeneracy_from(filter.text("degeneracy", "abort"));
  s.filter.clamp_at_zero = filter.boolean("clamp_at_zero", false);

  const Node fi = root.child_or_empty("fixed_interval");
  auto& search = s.fixed_interval.search;
  s.fixed_interval.n_particles = fi.integer("n_particles", s.fixed_interval.n_particles);
  search.n_starts = static_cast<int>(fi.integer("n_starts", search.n_starts));
  search.bounds.lo = fi.vector("bounds_lo", search.bounds.lo);
  search.bounds.hi = fi.vector("bounds_hi", search.bounds.hi);
  search.initial_sigma = fi.vector("initial_sigma", search.initial_sigma);
  search.simplex.initial_step = fi.number("initial_step_log", search.simplex.initial_step);
  search.simplex.diameter_tol = fi.number("diameter_tol_log", search.simplex.diameter_tol);
  search.simplex.max_evaluations = static_cast<int>(fi.integer("max_evaluations", search.simplex.max_evaluations));

  const Node em = root.child_or_empty("lag1_em");
  s.em.initial_sigma = em.vector("initial_sigma", s.em.initial_sigma);
  s.em.rel_tol = em.number("rel_tol", s.em.rel_tol);
  s.em.max_iter = static_cast<int>(em.integer("max_iter", s.em.max_iter));
  s.em.proposal_inflation = em.number("proposal_inflation", s.em.proposal_inflation);
  s.em.proposal_samples = em.integer("proposal_samples", s.em.proposal_samples);
  s.em.multiplier_samples = em.integer("multiplier_samples", s.em.multiplier_samples);
  s.em.variance_floor = em.number("variance_floor", s.em.variance_floor);

  s.validate();
  return s;
}

ordered_json to_json(const ScenarioConfig& s) {
  ordered_json doc;
  doc["name"] = s.name;
  doc["seed"] = s.seed;
  ordered_json pieces = ordered_json::array();
  for (const auto& p : s.truth.pieces) pieces.push_back({{"t_start_s", p.t_start_s}, {"rates_kg_s", to_std(p.rates)}});
  doc["truth"] = {{"t0_s", s.truth.t0_s},
                  {"t_end_s", s.truth.t_end_s},
                  {"sample_period_s", s.truth.sample_period_s},
                  {"pieces", pieces}};
  const WellGeometry& g = s.geometry_assim;
  ordered_json zones = ordered_json::array();
  for (std::size_t i = 0; i < s.zones.size(); ++i)
    zones.push_back({{"phase", s.zones[i].phase == Phase::gas ? "gas" : "oil"},
                     {"md_start_m", g.zone_intervals[i].md_start},
                     {"md_end_m", g.zone_intervals[i].md_end},
                     {"reservoir_pressure_pa", s.zones[i].reservoir_pressure},
                     {"reservoir_temperature_k", s.zones[i].reservoir_temperature}});
  const FluidConstants& f = s.fluid;
  doc["well"] = {{"vertical_depth_top_m", g.vertical_depth_top},
                 {"inclined_start_tvd_m", g.inclined_start_tvd},
                 {"inclined_end_tvd_m", g.inclined_end_tvd},
                 {"curvature_deg_per_m", g.curvature_deg_per_m},
                 {"gauge_md_m", g.gauge_mds},
                 {"zones", zones},
                 {"truth_segment_length_m", s.geometry_truth.segment_length},
                 {"assim_segment_length_m", s.geometry_assim.segment_length},
                 {"fluid",
                  {{"gas_density_kg_m3", f.gas_density},
                   {"oil_density_kg_m3", f.oil_density},
                   {"static_density_kg_m3", f.static_density},
                   {"friction_coefficient_pa_s2_per_kg2_m", f.friction_coefficient},
                   {"wellhead_pressure_pa", f.wellhead_pressure},
                   {"surface_temperature_k", f.surface_temperature},
                   {"geothermal_gradient_k_per_m", f.geothermal_gradient},
                   {"relaxation_coefficient_kg_per_s_m", f.relaxation_coefficient},
                   {"gravity_m_s2", f.gravity}}}};
  doc["observation"] = {{"noise_rel_std", s.noise_rel_std},
                        {"covariance_scaling_assim", s.covariance_scaling_assim},
                        {"noise_enabled", s.noise_enabled}};
  ordered_json support = ordered_json::array();
  ordered_json probs = ordered_json::array();
  for (const auto& z : s.jump.multipliers.zones()) {
    support.push_back(z.support);
    probs.push_back(z.probs);
  }
  doc["jump"] = {{"support", support}, {"probs", probs}, {"sigma0", to_std(s.jump.sigma0)}};
  doc["filter"] = {{"n_particles", s.n_particles},
                   {"regime", to_string(s.regime)},
                   {"manual_sigma", to_std(s.manual_sigma)},
                   {"resampling", s.filter.resampling == ResamplingScheme::multinomial ? "multinomial" : "systematic"},
                   {"degeneracy", s.filter.degeneracy == DegeneracyPolicy::abort ? "abort" : "uniform-reset"},
                   {"clamp_at_zero", s.filter.clamp_at_zero}};
  const auto& search = s.fixed_interval.search;
  doc["fixed_interval"] = {{"n_particles", s.fixed_interval.n_particles},
                           {"n_starts", search.n_starts},
                           {"bounds_lo", to_std(search.bounds.lo)},
                           {"bounds_hi", to_std(search.bounds.hi)},
                           {"initial_sigma", to_std(search.initial_sigma)},
                           {"initial_step_log", search.simplex.initial_step},
                           {"diameter_tol_log", search.simplex.diameter_tol},
                           {"max_evaluations", search.simplex.max_evaluations}};
  doc["lag1_em"] = {{"initial_sigma", to_std(s.em.initial_sigma)},
                    {"rel_tol", s.em.rel_tol},
                    {"max_iter", s.em.max_iter},
                    {"proposal_inflation", s.em.proposal_inflation},
                    {"proposal_samples", s.em.proposal_samples},
                    {"multiplier_samples", s.em.multiplier_samples},
                    {"variance_floor", s.em.variance_floor}};
  return doc;
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // byte is 1-based and points one past the offending character
    const std::size_t at = e.byte == 0 ? 0 : std::min(e.byte - 1, text.size());
    const std::size_t line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(at), '\n'));
    const std::size_t bol = text.rfind('\n', at == 0 ? 0 : at - 1);
    const std::size_t col = at - (bol == std::string::npos ? 0 : bol + 1) + 1;
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": syntax error: " + e.what());
  }
  try {
    return from_json(doc);
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  } catch (const json::exception& e) {
    throw ConfigError(source + ": " + e.what());
  }
}

ScenarioConfig load_scenario(const std::filesystem::path& path) { return parse_scenario(read_text(path), path.string()); }

std::string scenario_to_text(const ScenarioConfig& scenario) { return to_json(scenario).dump(2) + "\n"; }

}  // namespace wellsense
