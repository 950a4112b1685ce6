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

#include "wellsense/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "wellsense/error.hpp"

namespace wellsense {

namespace fs = std::filesystem;

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw IoError("csv: missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

double CsvTable::number(std::size_t row, std::size_t col) const {
  if (row >= rows.size() || col >= rows[row].size()) throw IoError("csv: cell out of range");
  return parse_double(rows[row][col], header.at(col));
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const std::string& context) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) throw IoError("csv: cannot parse " + context + " from '" + s + "'");
  return v;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<std::string> numbered(const std::string& prefix, Eigen::Index count, const std::string& suffix = "") {
  std::vector<std::string> out;
  for (Eigen::Index k = 1; k <= count; ++k) out.push_back(prefix + std::to_string(k) + suffix);
  return out;
}

}  // namespace

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw IoError("'" + path.string() + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  t.header = split_line(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != t.header.size())
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                    " fields, found " + std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
  }
  return t;
}

void write_csv(const fs::path& path, const CsvTable& table) {
  std::ostringstream os;
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) os << (k ? "," : "") << cells[k];
    os << '\n';
  };
  emit(table.header);
  for (const auto& r : table.rows) emit(r);
  write_text(path, os.str());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::string> zone_labels(const std::vector<ZoneProperties>& zones) {
  std::vector<std::string> out;
  for (const auto& z : zones) out.emplace_back(z.phase == Phase::gas ? "gas" : "oil");
  const bool distinct = std::adjacent_find(out.begin(), out.end()) == out.end() &&
                        std::count(out.begin(), out.end(), "gas") <= 1 && std::count(out.begin(), out.end(), "oil") <= 1;
  if (!distinct) out = numbered("z", static_cast<Eigen::Index>(zones.size()));
  return out;
}

CsvTable gauge_table(const std::vector<GaugeRecord>& records) {
  CsvTable t;
  const Eigen::Index g = records.empty() ? 2 : records.front().gauge_count();
  t.header = {"time_s"};
  for (const auto& h : numbered("p_gauge", g, "_pa")) t.header.push_back(h);
  for (const auto& h : numbered("t_gauge", g, "_k")) t.header.push_back(h);
  for (const auto& r : records) {
    std::vector<std::string> row{format_double(r.time_s)};
    for (Eigen::Index k = 0; k < g; ++k) row.push_back(format_double(r.pressures[k]));
    for (Eigen::Index k = 0; k < g; ++k) row.push_back(format_double(r.temperatures[k]));
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::vector<GaugeRecord> gauge_records(const CsvTable& t) {
  const std::size_t tc = t.column("time_s");
  Eigen::Index g = 0;
  while (std::find(t.header.begin(), t.header.end(), "p_gauge" + std::to_string(g + 1) + "_pa") != t.header.end()) ++g;
  if (g == 0) throw IoError("csv: no p_gauge1_pa column");
  std::vector<GaugeRecord> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    GaugeRecord rec;
    rec.time_s = t.number(r, tc);
    rec.pressures.resize(g);
    rec.temperatures.resize(g);
    for (Eigen::Index k = 0; k < g; ++k) {
      rec.pressures[k] = t.number(r, "p_gauge" + std::to_string(k + 1) + "_pa");
      rec.temperatures[k] = t.number(r, "t_gauge" + std::to_string(k + 1) + "_k");
    }
    if (!rec.channels().allFinite()) throw IoError("csv: non-finite gauge reading in row " + std::to_string(r + 1));
    out.push_back(std::move(rec));
  }
  return out;
}

CsvTable truth_table(const std::vector<double>& times, const std::vector<FlowRates>& truth) {
  CsvTable t;
  const Eigen::Index r = truth.empty() ? 0 : truth.front().size();
  t.header = {"time_s"};
  for (const auto& h : numbered("q", r, "_kg_s")) t.header.push_back(h);
  for (std::size_t k = 0; k < times.size(); ++k) {
    std::vector<std::string> row{format_double(times[k])};
    for (Eigen::Index i = 0; i < r; ++i) row.push_back(format_double(truth[k][i]));
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable diagnostics_table(const std::vector<StepDiagnostics>& steps) {
  CsvTable t;
  const Eigen::Index r = steps.empty() ? 0 : steps.front().mean.size();
  t.header = {"time_s", "ess", "loglik_increment"};
  for (const auto& h : numbered("mean_q", r)) t.header.push_back(h);
  for (const auto& h : numbered("std_q", r)) t.header.push_back(h);
  for (const auto& d : steps) {
    std::vector<std::string> row{format_double(d.time_s), format_double(d.ess), format_double(d.loglik_increment)};
    for (Eigen::Index i = 0; i < r; ++i) row.push_back(format_double(d.mean[i]));
    for (Eigen::Index i = 0; i < r; ++i) row.push_back(format_double(d.std[i]));
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable variances_table(const std::vector<EmStepRecord>& steps, const std::vector<std::string>& labels) {
  CsvTable t;
  t.header = {"time_s", "iterations"};
  for (const auto& l : labels) t.header.push_back("sigma_" + l);
  t.header.emplace_back("converged");
  for (const auto& s : steps) {
    std::vector<std::string> row{format_double(s.time_s), std::to_string(s.iterations)};
    for (Eigen::Index i = 0; i < s.sigma.size(); ++i) row.push_back(format_double(s.sigma[i]));
    row.emplace_back(s.converged ? "1" : "0");
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable optimizer_table(const OptimizerReport& report, const std::vector<std::string>& labels) {
  CsvTable t;
  t.header = {"start_id", "eval_id"};
  for (const auto& l : labels) t.header.push_back("sigma_" + l);
  t.header.emplace_back("cost");
  for (std::size_t k = 0; k < report.starts.size(); ++k) {
    const auto& hist = report.starts[k].history;
    for (std::size_t e = 0; e < hist.size(); ++e) {
      std::vector<std::string> row{std::to_string(k), std::to_string(e)};
      for (Eigen::Index i = 0; i < hist[e].first.size(); ++i) row.push_back(format_double(hist[e].first[i]));
      row.push_back(format_double(hist[e].second));
      t.rows.push_back(std::move(row));
    }
  }
  return t;
}

std::vector<FlowRates> read_series(const CsvTable& t, const std::string& prefix, Eigen::Index count) {
  std::vector<std::size_t> cols;
  for (Eigen::Index k = 1; k <= count; ++k) cols.push_back(t.column(prefix + std::to_string(k)));
  std::vector<FlowRates> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    FlowRates v(count);
    for (Eigen::Index k = 0; k < count; ++k) v[k] = t.number(r, cols[static_cast<std::size_t>(k)]);
    out.push_back(std::move(v));
  }
  return out;
}

void write_run_directory(const fs::path& dir, const RunReport& run, const std::vector<GaugeRecord>& observations,
                         const std::string& config_snapshot, const std::vector<std::string>& labels) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  write_text(dir / "config.snapshot", config_snapshot);
  write_csv(dir / "truth.csv", truth_table(run.times, run.truth));
  write_csv(dir / "observations.csv", gauge_table(observations));
  write_csv(dir / "estimates.csv", diagnostics_table(run.diagnostics));
  if (run.regime == VarianceRegime::lag1_em) write_csv(dir / "variances.csv", variances_table(run.em_steps, labels));
  if (run.optimizer) write_csv(dir / "optimizer_evaluations.csv", optimizer_table(*run.optimizer, labels));

  CsvTable s;
  s.header = {"scenario", "regime", "covariance_scaling", "seed", "steps"};
  for (const auto& l : labels) s.header.push_back("sigma_" + l);
  s.header.emplace_back("time_mean_rmse");
  std::vector<std::string> row{run.scenario_name, to_string(run.regime), format_double(run.covariance_scaling),
                               std::to_string(run.seed), std::to_string(run.times.size())};
  // lag-1 variances change per step and live in variances.csv
  for (std::size_t i = 0; i < labels.size(); ++i)
    row.push_back(run.regime == VarianceRegime::lag1_em ? "" : format_double(run.constant_sigma[static_cast<Eigen::Index>(i)]));
  row.push_back(format_double(run.time_mean_rmse));
  s.rows.push_back(std::move(row));
  write_csv(dir / "summary.csv", s);
}

RunReport load_run_summary(const fs::path& dir) {
  const CsvTable s = read_csv(dir / "summary.csv");
  if (s.rows.size() != 1) throw IoError("'" + (dir / "summary.csv").string() + "' must hold one row");
  RunReport run;
  run.scenario_name = s.rows[0][s.column("scenario")];
  try {
    run.regime = regime_from_string(s.rows[0][s.column("regime")]);
  } catch (const ConfigError& e) {
    throw IoError(e.what());
  }
  run.covariance_scaling = s.number(0, "covariance_scaling");
  run.seed = static_cast<std::uint64_t>(std::stoull(s.rows[0][s.column("seed")]));

  const CsvTable truth = read_csv(dir / "truth.csv");
  const CsvTable est = read_csv(dir / "estimates.csv");
  const auto r = static_cast<Eigen::Index>(truth.header.size()) - 1;
  std::vector<FlowRates> tq;
  for (std::size_t k = 0; k < truth.rows.size(); ++k) {
    FlowRates v(r);
    for (Eigen::Index i = 0; i < r; ++i) v[i] = truth.number(k, "q" + std::to_string(i + 1) + "_kg_s");
    tq.push_back(std::move(v));
  }
  run.truth = std::move(tq);
  run.mean = read_series(est, "mean_q", r);
  for (std::size_t k = 0; k < truth.rows.size(); ++k) run.times.push_back(truth.number(k, "time_s"));
  run.time_mean_rmse = time_mean_rmse(run.mean, run.truth);
  return run;
}

std::string format_table(const ComparisonTable& t, int precision) {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> head{""};
  head.insert(head.end(), t.columns.begin(), t.columns.end());
  cells.push_back(head);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    std::vector<std::string> row{t.rows[i]};
    for (std::size_t j = 0; j < t.columns.size(); ++j) {
      const double v = t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      std::ostringstream os;
      if (std::isnan(v))
        os << "-";
      else
        os << std::fixed << std::setprecision(precision) << v;
      row.push_back(os.str());
    }
    cells.push_back(std::move(row));
  }
  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& r : cells)
    for (std::size_t j = 0; j < r.size(); ++j) width[j] = std::max(width[j], r[j].size());
  std::ostringstream os;
  for (const auto& r : cells) {
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (j == 0)
        os << std::left << std::setw(static_cast<int>(width[j])) << r[j];
      else
        os << "  " << std::right << std::setw(static_cast<int>(width[j])) << r[j];
    }
    os << '\n';
  }
  return os.str();
}

CsvTable comparison_csv(const ComparisonTable& t) {
  CsvTable c;
  c.header = {"row"};
  c.header.insert(c.header.end(), t.columns.begin(), t.columns.end());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    std::vector<std::string> row{t.rows[i]};
    for (std::size_t j = 0; j < t.columns.size(); ++j)
      row.push_back(format_double(t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
    c.rows.push_back(std::move(row));
  }
  return c;
}

}  // namespace wellsense
