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

// wellsense: batch front end for the soft-sensing twin experiments.
//
//   wellsense generate CONFIG --out DIR
//   wellsense filter   CONFIG OBSERVATIONS --regime R [--sigma a,b] --out DIR
//   wellsense optimize CONFIG OBSERVATIONS [--starts N] --out DIR
//   wellsense report   RUN_DIR... --out DIR
//
// Exit codes: 0 success, 2 configuration or flag error, 3 I/O error,
// 4 filter degeneracy.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "wellsense/config.hpp"
#include "wellsense/error.hpp"
#include "wellsense/experiment.hpp"
#include "wellsense/io.hpp"
#include "wellsense/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wellsense;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitDegenerate = 4;

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads = 1;
  std::optional<std::string> degeneracy;
  std::vector<std::string> argv;
};

using Clock = std::chrono::steady_clock;

// Written once before any result and again with timings on completion.
class Manifest {
 public:
  Manifest(std::string command, const GlobalOptions& g, std::vector<std::string> args)
      : start_(Clock::now()), g_(g) {
    doc_["command"] = std::move(command);
    doc_["artifact_version"] = kVersion;
    doc_["output_directory"] = g.out;
    doc_["arguments"] = std::move(args);
    doc_["argv"] = g.argv;
    doc_["threads"] = g.threads;
  }

  void set(const std::string& key, json value) { doc_[key] = std::move(value); }
  void config(const ScenarioConfig& s) {
    doc_["seed"] = s.seed;
    doc_["config"] = json::parse(scenario_to_text(s));
    doc_["truth_segment_length_m"] = s.geometry_truth.segment_length;
    doc_["assim_segment_length_m"] = s.geometry_assim.segment_length;
    doc_["imperfect_observation"] = s.imperfect();
  }
  void phase(const std::string& name, double seconds) { doc_["timings_s"][name] = seconds; }

  void write(const std::string& status) {
    doc_["status"] = status;
    doc_["timings_s"]["total"] = std::chrono::duration<double>(Clock::now() - start_).count();
    write_text(fs::path(g_.out) / "manifest.json", doc_.dump(2) + "\n");
  }

 private:
  Clock::time_point start_;
  const GlobalOptions& g_;
  json doc_;
};

void prepare_out(const GlobalOptions& g) {
  std::error_code ec;
  fs::create_directories(g.out, ec);
  if (ec) throw IoError("cannot create output directory '" + g.out + "': " + ec.message());
}

ScenarioConfig resolve(const std::string& config_path, const GlobalOptions& g) {
  ScenarioConfig s = load_scenario(config_path);
  if (g.seed) s.seed = *g.seed;
  s.filter.threads = g.threads;
  if (g.degeneracy)
    s.filter.degeneracy = *g.degeneracy == "abort" ? DegeneracyPolicy::abort : DegeneracyPolicy::uniform_reset;
  s.validate();
  return s;
}

NoiseVariances parse_sigma(const std::string& text, Eigen::Index zones) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      v.push_back(parse_double(item, "--sigma entry"));
    } catch (const IoError& e) {
      throw ConfigError(e.what());
    }
  }
  if (static_cast<Eigen::Index>(v.size()) != zones)
    throw ConfigError("--sigma needs " + std::to_string(zones) + " comma-separated variances");
  for (double x : v)
    if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError("--sigma entries must be finite and > 0");
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

int cmd_generate(const std::string& config_path, const GlobalOptions& g) {
  const ScenarioConfig s = resolve(config_path, g);
  prepare_out(g);
  Manifest m("generate", g, {config_path});
  m.config(s);
  m.write("running");

  const auto t0 = Clock::now();
  RandomStream rng = RandomStream(s.seed).split(1);
  const auto obs = synthesize_observations(s, rng);
  std::vector<double> times;
  std::vector<FlowRates> truth;
  for (const auto& r : obs) {
    times.push_back(r.time_s);
    truth.push_back(s.truth.at(r.time_s));
  }
  write_csv(fs::path(g.out) / "truth.csv", truth_table(times, truth));
  write_csv(fs::path(g.out) / "observations.csv", gauge_table(obs));
  m.phase("generate", since(t0));
  m.set("observation_rows", obs.size());
  m.write("ok");
  std::cout << "wrote " << obs.size() << " observation records (truth at " << s.geometry_truth.segment_length
            << " m, assimilation at " << s.geometry_assim.segment_length << " m) to " << g.out << "\n";
  return 0;
}

std::vector<GaugeRecord> read_observations(const std::string& path) { return gauge_records(read_csv(path)); }

int cmd_filter(const std::string& config_path, const std::string& obs_path, const std::string& regime,
               const std::optional<std::string>& sigma_text, const GlobalOptions& g) {
  ScenarioConfig s = resolve(config_path, g);
  s.regime = regime_from_string(regime);
  const auto r = static_cast<Eigen::Index>(s.zones.size());
  if (s.regime == VarianceRegime::manual && !sigma_text) throw ConfigError("--sigma is required with --regime manual");
  if (s.regime != VarianceRegime::manual && sigma_text)
    throw ConfigError("--sigma is only valid with --regime manual");
  if (sigma_text) s.manual_sigma = parse_sigma(*sigma_text, r);
  s.validate();

  const auto obs = read_observations(obs_path);
  prepare_out(g);
  Manifest m("filter", g, {config_path, obs_path, "--regime", regime});
  m.config(s);
  m.write("running");

  const auto t0 = Clock::now();
  RunReport run;
  try {
    run = run_filter(s, obs);
  } catch (const DegeneracyError&) {
    m.phase("filter", since(t0));
    m.write("degenerate");
    throw;
  }
  m.phase("filter", since(t0));
  write_run_directory(g.out, run, obs, scenario_to_text(s), zone_labels(s.zones));
  m.write("ok");

  const fs::path truth_path = fs::path(obs_path).parent_path() / "truth.csv";
  if (fs::exists(truth_path)) {
    const CsvTable truth = read_csv(truth_path);
    std::vector<FlowRates> tq;
    for (std::size_t k = 0; k < truth.rows.size(); ++k) {
      FlowRates v(r);
      for (Eigen::Index i = 0; i < r; ++i) v[i] = truth.number(k, "q" + std::to_string(i + 1) + "_kg_s");
      tq.push_back(std::move(v));
    }
    if (tq.size() != run.mean.size()) throw IoError("'" + truth_path.string() + "' does not match the observations");
    std::cout << "time-mean RMSE (" << to_string(s.regime) << "): " << format_double(time_mean_rmse(run.mean, tq))
              << "\n";
  }
  return 0;
}

int cmd_optimize(const std::string& config_path, const std::string& obs_path, int starts, const GlobalOptions& g) {
  ScenarioConfig s = resolve(config_path, g);
  if (starts < 1) throw ConfigError("--starts must be >= 1");
  s.fixed_interval.search.n_starts = starts;
  s.regime = VarianceRegime::fixed_interval;
  s.validate();

  const auto obs = read_observations(obs_path);
  prepare_out(g);
  Manifest m("optimize", g, {config_path, obs_path, "--starts", std::to_string(starts)});
  m.config(s);
  m.write("running");

  const auto t0 = Clock::now();
  MultiStartOptions opts = s.fixed_interval.search;
  opts.threads = g.threads;
  const std::uint64_t cost_seed = interval_cost_seed(s.seed);
  const OptimizerReport rep = optimize_interval(interval_problem(s, obs), opts, cost_seed);
  m.phase("optimize", since(t0));

  const auto labels = zone_labels(s.zones);
  write_csv(fs::path(g.out) / "optimizer_evaluations.csv", optimizer_table(rep, labels));
  json doc;
  doc["best_sigma"] = std::vector<double>(rep.best_sigma.data(), rep.best_sigma.data() + rep.best_sigma.size());
  doc["best_cost"] = rep.best_cost;
  doc["cost_seed"] = cost_seed;
  doc["zones"] = labels;
  for (std::size_t k = 0; k < rep.starts.size(); ++k) {
    const auto& st = rep.starts[k];
    doc["starts"].push_back({{"start_id", k},
                             {"start", std::vector<double>(st.start.data(), st.start.data() + st.start.size())},
                             {"final", std::vector<double>(st.final_point.data(), st.final_point.data() + st.final_point.size())},
                             {"final_cost", st.final_cost},
                             {"evaluations", st.evaluations},
                             {"converged", st.converged}});
  }
  write_text(fs::path(g.out) / "optimizer_report.json", doc.dump(2) + "\n");
  m.write("ok");
  std::cout << "best sigma " << format_double(rep.best_sigma[0]);
  for (Eigen::Index i = 1; i < rep.best_sigma.size(); ++i) std::cout << "," << format_double(rep.best_sigma[i]);
  std::cout << " cost " << format_double(rep.best_cost) << "\n";
  return 0;
}

int cmd_report(const std::vector<std::string>& dirs, const GlobalOptions& g) {
  std::vector<RunReport> runs;
  for (const auto& d : dirs) runs.push_back(load_run_summary(d));
  prepare_out(g);
  Manifest m("report", g, dirs);
  m.write("running");
  const ComparisonTable t = rmse_report(runs);
  const std::string text = format_table(t);
  write_csv(fs::path(g.out) / "comparison.csv", comparison_csv(t));
  write_text(fs::path(g.out) / "comparison.txt", text);
  m.write("ok");
  std::cout << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flow-rate soft sensing with an auxiliary particle filter"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(kVersion));

  GlobalOptions g;
  g.argv.assign(argv, argv + argc);
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Override the scenario seed");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--threads", g.threads, "Worker threads for likelihood evaluation")->check(CLI::PositiveNumber);
  std::string degeneracy;
  auto* degen_opt = app.add_option("--degeneracy", degeneracy, "Degeneracy policy")
                        ->check(CLI::IsMember({"abort", "uniform-reset"}));

  std::string config_path;
  std::string obs_path;

  auto* gen = app.add_subcommand("generate", "Synthesize truth and gauge observations");
  gen->add_option("config", config_path, "Scenario file")->required();

  auto* filt = app.add_subcommand("filter", "Run the filter over an observation file");
  filt->add_option("config", config_path, "Scenario file")->required();
  filt->add_option("observations", obs_path, "Gauge CSV")->required();
  std::string regime;
  filt->add_option("--regime", regime, "manual, fixed_interval or lag1_em")
      ->required()
      ->check(CLI::IsMember({"manual", "fixed_interval", "lag1_em"}));
  std::string sigma_text;
  auto* sigma_opt = filt->add_option("--sigma", sigma_text, "Manual noise variances, comma separated");

  auto* opt = app.add_subcommand("optimize", "Fixed-interval variance optimization");
  opt->add_option("config", config_path, "Scenario file")->required();
  opt->add_option("observations", obs_path, "Gauge CSV")->required();
  int starts = 3;
  opt->add_option("--starts", starts, "Number of optimizer start points")->capture_default_str();

  auto* rep = app.add_subcommand("report", "Tabulate time-mean RMSE of run directories");
  std::vector<std::string> dirs;
  rep->add_option("run_dirs", dirs, "Run directories")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (*seed_opt) g.seed = seed;
  if (*degen_opt) g.degeneracy = degeneracy;
  if (g.out.empty()) {
    std::cerr << "error: --out DIR is required\n";
    return kExitConfig;
  }

  try {
    if (*gen) return cmd_generate(config_path, g);
    if (*filt)
      return cmd_filter(config_path, obs_path, regime, *sigma_opt ? std::optional<std::string>(sigma_text) : std::nullopt, g);
    if (*opt) return cmd_optimize(config_path, obs_path, starts, g);
    if (*rep) return cmd_report(dirs, g);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const DegeneracyError& e) {
    std::cerr << "filter degeneracy: " << e.what() << " (max loglik " << e.max_loglik()
              << ", ess " << e.ess() << ")\n";
    return kExitDegenerate;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
