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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "ispac/harness.hpp"

using namespace ispac;
namespace fs = std::filesystem;

namespace {

std::string crb_config(int trials, const std::string& variants = R"(["had-near", "had-far", "fd-near"])") {
  return R"({"scenario": {"n_mt": 8, "n_at": 4, "n_rf": 2, "k_users": 1, "t_slots": 64, "seed": 5},
             "experiment": {"kind": "crb-sweep-downlink", "sweep": {"variable": "gamma_db", "values": [6]},
                            "trials": )" +
         std::to_string(trials) + R"(, "variants": )" + variants + "}}";
}

std::string position_config(const std::string& kind, int trials) {
  return R"({"scenario": {"n_mt": 16, "n_at": 4, "n_rf": 4, "t_slots": 64, "seed": 9},
             "experiment": {"kind": ")" +
         kind + R"(", "sweep": {"values": [10, 20]}, "trials": )" + std::to_string(trials) + R"(,
                            "grid": {"theta_min_deg": 40, "theta_max_deg": 50, "theta_points": 201,
                                     "r_min_m": 10, "r_max_m": 30, "r_points": 201}}})";
}

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("ispac_unit_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Drops the trailing wall-time column from every line.
std::string strip_wall(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

bool same_records(const TrialRecord& a, const TrialRecord& b) {
  const auto eq = [](double x, double y) { return (std::isnan(x) && std::isnan(y)) || x == y; };
  return a.seed == b.seed && a.sweep == b.sweep && a.variant == b.variant && eq(a.theta_hat, b.theta_hat) &&
         eq(a.r_hat, b.r_hat) && eq(a.rcrb_theta, b.rcrb_theta) && eq(a.rcrb_r, b.rcrb_r) &&
         eq(a.objective, b.objective) && a.iterations == b.iterations;
}

}  // namespace

TEST_CASE("empty scenario block takes the default physical setup") {
  const ExperimentConfig c = parse_config(R"({"scenario": {}, "experiment": {"kind": "crb-sweep-uplink"}})");
  CHECK(c.scenario.carrier_hz == 28e9);
  CHECK(c.scenario.n_mt == 64);
  CHECK(c.scenario.n_at == 16);
  CHECK(c.scenario.n_mt / c.scenario.n_rf == 4);
  CHECK(c.scenario.k_users == 4);
  CHECK(c.scenario.l_paths == 2);
  CHECK(c.scenario.p_bs_dbm == 30.0);
  CHECK(c.scenario.p_user_dbm == 20.0);
  CHECK(c.scenario.noise_dbm == -80.0);
  CHECK(c.scenario.target_theta_deg == 45.0);
  CHECK(c.scenario.target_r_m == 20.0);
  CHECK(c.scenario.user_r_min_m == 20.0);
  CHECK(c.scenario.user_r_max_m == 30.0);
  CHECK(c.variants.size() == 3);
  CHECK_FALSE(c.svg_path.has_value());

  const ExperimentConfig pos = parse_config(R"({"experiment": {"kind": "position-downlink"}})");
  CHECK(pos.sweep_variable == "snr_db");
  CHECK(pos.sweep_values == std::vector<double>{0, 5, 10, 15, 20});
  CHECK(pos.probing == Probing::kIsotropic);
}

TEST_CASE("config errors name the offending field") {
  const auto error_of = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(error_of(R"({"scenario": {"n_mt": 10, "n_rf": 4}, "experiment": {"kind": "crb-sweep-downlink"}})")
            .find("n_mt divisible by n_rf") != std::string::npos);
  CHECK(error_of(R"({"scenario": {"n_mt": "many"}, "experiment": {"kind": "convergence"}})") ==
        "scenario.n_mt: expected an integer");
  CHECK(error_of(R"({"scenario": {"target": {"theta": 3}}, "experiment": {"kind": "convergence"}})") ==
        "scenario.target.theta: unknown field");
  CHECK(error_of(R"({"experiment": {"kind": "crb-sweep-downlink", "trials": 0}})") ==
        "experiment.trials: must be >= 1");
  CHECK(error_of(R"({"experiment": {"kind": "crb-sweep-downlink", "sweep": {"values": []}}})") ==
        "experiment.sweep.values: must not be empty");
  CHECK(error_of(R"({"experiment": {"kind": "crb-sweep-downlink", "variants": ["had-near", 3]}})") ==
        "experiment.variants[1]: expected a string");
  CHECK(error_of(R"({"experiment": {"kind": "bogus"}})") == "experiment.kind: unknown kind 'bogus'");
  CHECK(error_of(R"({"scenario": {}})") == "experiment: required");
  CHECK(error_of(R"({"experiment": {"kind": "crb-sweep-downlink", "sweep": {"variable": "n_rf", "values": [3]}}})")
            .find("n_mt divisible by n_rf") != std::string::npos);
  CHECK(error_of("{not json").find("invalid JSON") != std::string::npos);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("serialization is canonical and idempotent") {
  const std::string text = R"({"scenario": {"n_mt": 32, "n_rf": 8, "qos_db": [4, 8, 12, 6]},
                               "experiment": {"kind": "crb-sweep-uplink", "sweep": {"variable": "n_rf", "values": [4, 8]},
                                              "trials": 3, "variants": ["fd-near"]},
                               "output": {"csv": "a.csv", "svg": "a.svg"}})";
  const std::string once = serialize_config(parse_config(text));
  CHECK(serialize_config(parse_config(once)) == once);
  const ExperimentConfig c = parse_config(once);
  CHECK(c.scenario.n_mt == 32);
  CHECK(c.qos_db.size() == 4);
  CHECK(c.variants == std::vector<Variant>{Variant::kFullyDigital});
  CHECK(c.svg_path == std::optional<std::string>("a.svg"));
}

TEST_CASE("trial seeds do not depend on the trial count") {
  CHECK(trial_seed(1, 0) != trial_seed(1, 1));
  CHECK(trial_seed(1, 0) != trial_seed(2, 0));
  CHECK(trial_seed(7, 3) == trial_seed(7, 3));
}

TEST_CASE("CSV: one record gives header plus one row and round-trips losslessly") {
  TrialRecord r;
  r.seed = 18446744073709551615ull;
  r.sweep = 12.5;
  r.variant = "had-near";
  r.theta_true = 0.78539816339744828;
  r.r_true = 20;
  r.theta_hat = 0.1 + 1e-13;
  r.r_hat = 19.999999999999996;
  r.rcrb_theta = 1.234567890123e-5;
  r.rcrb_r = std::numeric_limits<double>::quiet_NaN();
  r.objective = 3.3e-300;
  r.iterations = 17;
  r.wall_time_s = 0.25;
  const std::string csv = format_csv({r});
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  CHECK(csv.substr(0, csv.find('\n')) ==
        "seed,sweep,variant,theta_true_deg,r_true_m,theta_hat_deg,r_hat_m,rcrb_theta_deg,rcrb_r_m,"
        "objective,iterations,wall_time_s");
  const std::vector<TrialRecord> back = parse_csv(csv);
  REQUIRE(back.size() == 1);
  CHECK(format_csv(back) == csv);
  CHECK(back[0].seed == r.seed);
  CHECK(back[0].r_hat == r.r_hat);
  CHECK(back[0].objective == r.objective);
  CHECK(std::isnan(back[0].rcrb_r));
  CHECK(back[0].theta_hat == doctest::Approx(r.theta_hat).epsilon(1e-15));
}

TEST_CASE("CRB sweep: one value and one trial yields one record per variant") {
  const ExperimentConfig cfg = parse_config(crb_config(1));
  const auto recs = run_crb_sweep(cfg);
  REQUIRE(recs.size() == 3);
  std::set<std::string> names;
  for (const auto& r : recs) {
    names.insert(r.variant);
    CHECK_FALSE(r.flagged);
    CHECK(r.rcrb_theta > 0);
    CHECK(r.rcrb_r > 0);
    CHECK(r.objective == doctest::Approx(r.rcrb_theta * r.rcrb_theta + r.rcrb_r * r.rcrb_r));
  }
  CHECK(names == std::set<std::string>{"had-near", "had-far", "fd-near"});
}

TEST_CASE("adding trials leaves earlier trials untouched; thread count does not matter") {
  const auto two = run_crb_sweep(parse_config(crb_config(2, R"(["had-near"])")), {1});
  const auto three = run_crb_sweep(parse_config(crb_config(3, R"(["had-near"])")), {2});
  REQUIRE(two.size() == 2);
  REQUIRE(three.size() == 3);
  CHECK(same_records(two[0], three[0]));
  CHECK(same_records(two[1], three[1]));

  const ExperimentConfig pos = parse_config(position_config("position-downlink", 3));
  const auto a = run_positioning_sweep(pos, {1});
  const auto b = run_positioning_sweep(pos, {3});
  REQUIRE(a.size() == 6);
  CHECK(strip_wall(format_csv(a)) == strip_wall(format_csv(b)));
}

TEST_CASE("positioning sweeps share one schema and bound RMSE below by grid effects only without noise") {
  for (const char* kind : {"position-downlink", "position-uplink"}) {
    const ExperimentConfig cfg = parse_config(position_config(kind, 2));
    const auto recs = run_positioning_sweep(cfg);
    REQUIRE(recs.size() == 4);
    for (const auto& r : recs) {
      CHECK(r.variant == "isotropic");
      CHECK(std::isfinite(r.theta_hat));
      CHECK(r.rcrb_theta > 0);
    }
    CHECK(format_csv(recs).substr(0, 20) == std::string(kCsvHeader).substr(0, 20));
  }
  // Very high SNR: errors collapse to the grid resolution.
  ExperimentConfig cfg = parse_config(position_config("position-downlink", 3));
  cfg.sweep_values = {200.0};
  const GridSpec g = cfg.grid.to_grid();
  for (const auto& r : run_positioning_sweep(cfg)) {
    CHECK(std::abs(r.theta_hat - r.theta_true) <= g.theta_resolution());
    CHECK(std::abs(r.r_hat - r.r_true) <= g.range_resolution());
  }
}

TEST_CASE("emit_outputs writes the CSV and the SVG only when asked") {
  const fs::path dir = scratch_dir("emit");
  ExperimentConfig cfg = parse_config(position_config("position-uplink", 1));
  cfg.csv_path = "sub/out.csv";
  const auto recs = run_positioning_sweep(cfg);
  const EmittedFiles f1 = emit_outputs(recs, cfg, dir.string());
  CHECK(fs::exists(dir / "sub/out.csv"));
  CHECK_FALSE(f1.svg.has_value());
  CHECK(read_file(dir / "sub/out.csv") == format_csv(recs));

  cfg.svg_path = "plot.svg";
  const EmittedFiles f2 = emit_outputs(recs, cfg, dir.string());
  REQUIRE(f2.svg.has_value());
  const std::string svg = read_file(*f2.svg);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("RCRB theta") != std::string::npos);

  CHECK_THROWS(emit_outputs({}, cfg, dir.string()));
  cfg.csv_path = "/proc/forbidden/out.csv";
  CHECK_THROWS_AS(emit_outputs(recs, cfg, dir.string()), std::runtime_error);
  fs::remove_all(dir);
}
