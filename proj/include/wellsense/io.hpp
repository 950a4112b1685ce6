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

#include <filesystem>
#include <string>
#include <vector>

#include "wellsense/experiment.hpp"
#include "wellsense/interval_smoother.hpp"
#include "wellsense/well_model.hpp"

namespace wellsense {

/// Text table with a header row. Cells are kept as written.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Throws IoError if the column is absent.
  std::size_t column(const std::string& name) const;
  double number(std::size_t row, std::size_t col) const;
  double number(std::size_t row, const std::string& name) const { return number(row, column(name)); }
};

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);
/// Full-string parse; throws IoError naming `context` on failure.
double parse_double(const std::string& s, const std::string& context = "value");

CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

/// "gas"/"oil" per zone when the phases are distinct, otherwise "z1".."zr".
std::vector<std::string> zone_labels(const std::vector<ZoneProperties>& zones);

// time_s,p_gauge1_pa,...,t_gauge1_k,...
CsvTable gauge_table(const std::vector<GaugeRecord>& records);
std::vector<GaugeRecord> gauge_records(const CsvTable& table);

// time_s,q1_kg_s,...
CsvTable truth_table(const std::vector<double>& times, const std::vector<FlowRates>& truth);
// time_s,ess,loglik_increment,mean_q1,...,std_q1,...
CsvTable diagnostics_table(const std::vector<StepDiagnostics>& steps);
// time_s,iterations,sigma_<zone>...,converged
CsvTable variances_table(const std::vector<EmStepRecord>& steps, const std::vector<std::string>& labels);
// start_id,eval_id,sigma_<zone>...,cost
CsvTable optimizer_table(const OptimizerReport& report, const std::vector<std::string>& labels);

/// Column `prefix + k` for k = 1..count from every row.
std::vector<FlowRates> read_series(const CsvTable& table, const std::string& prefix, Eigen::Index count);

/// Persists a run as config.snapshot, truth.csv, observations.csv,
/// estimates.csv, summary.csv, plus variances.csv for the lag-1 regime and
/// optimizer_evaluations.csv when the optimizer ran.
void write_run_directory(const std::filesystem::path& dir, const RunReport& run,
                         const std::vector<GaugeRecord>& observations, const std::string& config_snapshot,
                         const std::vector<std::string>& labels);

/// The fields of summary.csv needed for comparison tables, with the RMSE
/// recomputed from estimates.csv and truth.csv.
RunReport load_run_summary(const std::filesystem::path& dir);

/// Aligned plain-text rendering of a comparison table.
std::string format_table(const ComparisonTable& table, int precision = 4);
CsvTable comparison_csv(const ComparisonTable& table);

/// Writes text to a file, throwing IoError on failure.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace wellsense
