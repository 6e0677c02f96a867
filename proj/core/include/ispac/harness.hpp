// SPDX-License-Identifier: Apache-2.0
//
// ispac: near-field sensing, positioning and communication toolkit
// Copyright (C) 2026 The ispac authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ispac/positioning.hpp"
#include "ispac/scenario.hpp"

namespace ispac {

enum class ExperimentKind {
  kPositionDownlink,
  kPositionUplink,
  kCrbSweepDownlink,
  kCrbSweepUplink,
  kConvergence,
};
const char* to_string(ExperimentKind k);

enum class Probing { kIsotropic, kOptimized };
enum class Link { kDownlink, kUplink };

// Raised for malformed or inconsistent configuration. `field` is a dotted path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Estimator search grid as written in the config; angles in degrees.
struct GridConfig {
  double theta_min_deg = 0.0;
  double theta_max_deg = 89.95;
  int theta_points = 1800;
  double r_min_m = 5.0;
  double r_max_m = 50.0;
  int r_points = 901;
  GridSpec to_grid() const;
};

struct ExperimentConfig {
  ScenarioParams scenario;
  std::vector<double> qos_db{10.0};  // one value for all users, or one per user
  std::uint64_t seed = 1;

  ExperimentKind kind = ExperimentKind::kCrbSweepDownlink;
  std::string sweep_variable = "gamma_db";  // snr_db | gamma_db | n_rf
  std::vector<double> sweep_values{10.0};
  int trials = 1;
  std::vector<Variant> variants = all_variants();
  Probing probing = Probing::kIsotropic;
  Link link = Link::kDownlink;  // convergence runs only
  GridConfig grid;
  PddSettings pdd;
  AoSettings ao;

  std::string csv_path = "results.csv";
  std::optional<std::string> svg_path;

  bool is_positioning() const;
  std::vector<double> qos_for(double gamma_db_override = std::numeric_limits<double>::quiet_NaN()) const;
  void validate() const;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
// Canonical JSON with every field materialized.
std::string serialize_config(const ExperimentConfig& cfg);

// One CSV row. Angles are radians in memory and degrees on disk.
struct TrialRecord {
  std::uint64_t seed = 0;
  double sweep = 0.0;
  std::string variant;
  double theta_true = 0.0;
  double r_true = 0.0;
  double theta_hat = 0.0;
  double r_hat = 0.0;
  double rcrb_theta = 0.0;
  double rcrb_r = 0.0;
  double objective = 0.0;
  int iterations = 0;
  double wall_time_s = 0.0;
  bool flagged = false;  // optimizer failure; not written to CSV
  std::string note;
};

// Seed of the random stream owned by one trial; independent of the trial count.
std::uint64_t trial_seed(std::uint64_t seed, int trial);

struct RunOptions {
  int threads = 1;
};

std::vector<TrialRecord> run_positioning_sweep(const ExperimentConfig& cfg, const RunOptions& opt = {});
std::vector<TrialRecord> run_crb_sweep(const ExperimentConfig& cfg, const RunOptions& opt = {});
std::vector<TrialRecord> run_convergence(const ExperimentConfig& cfg, const RunOptions& opt = {});
// Dispatches on cfg.kind.
std::vector<TrialRecord> run_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {});

extern const char* const kCsvHeader;
std::string format_csv(const std::vector<TrialRecord>& records);
std::vector<TrialRecord> parse_csv(const std::string& text);
std::string render_svg(const std::vector<TrialRecord>& records, const ExperimentConfig& cfg);

// Writes the CSV and, when configured, the SVG. Relative paths resolve against out_dir.
struct EmittedFiles {
  std::string csv;
  std::optional<std::string> svg;
};
EmittedFiles emit_outputs(const std::vector<TrialRecord>& records, const ExperimentConfig& cfg,
                          const std::string& out_dir = ".");

}  // namespace ispac
