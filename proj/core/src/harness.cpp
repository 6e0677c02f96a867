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

#include "ispac/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace ispac {

namespace {

using json = nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double deg2rad(double d) { return d * kPi / 180.0; }
double rad2deg(double r) { return r * 180.0 / kPi; }

struct KindName {
  ExperimentKind kind;
  const char* name;
};
constexpr KindName kKinds[] = {
    {ExperimentKind::kPositionDownlink, "position-downlink"},
    {ExperimentKind::kPositionUplink, "position-uplink"},
    {ExperimentKind::kCrbSweepDownlink, "crb-sweep-downlink"},
    {ExperimentKind::kCrbSweepUplink, "crb-sweep-uplink"},
    {ExperimentKind::kConvergence, "convergence"},
};

// Reads fields out of one JSON object and rejects anything it was not asked for.
class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.push_back(key);
    const auto it = obj_.find(key);
    return it == obj_.end() || it->is_null() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(at(key), "expected a number");
      out = v->get<double>();
      if (!std::isfinite(out)) throw ConfigError(at(key), "must be finite");
    }
  }

  void integer(const std::string& key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(at(key), "expected an integer");
      out = v->get<int>();
    }
  }

  void text(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(at(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  void numbers(const std::string& key, std::vector<double>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) throw ConfigError(at(key), "expected an array of numbers");
      out.clear();
      for (size_t i = 0; i < v->size(); ++i) {
        const json& e = (*v)[i];
        if (!e.is_number()) throw ConfigError(at(key) + "[" + std::to_string(i) + "]", "expected a number");
        out.push_back(e.get<double>());
      }
    }
  }

  std::optional<Reader> child(const std::string& key) {
    if (const json* v = find(key)) return Reader(*v, at(key));
    return std::nullopt;
  }

  void finish() const {
    for (const auto& [k, v] : obj_.items()) {
      if (std::find(seen_.begin(), seen_.end(), k) == seen_.end()) {
        throw ConfigError(at(k), "unknown field");
      }
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::vector<std::string> seen_;
};

ExperimentKind parse_kind(const std::string& s, const std::string& path) {
  for (const auto& k : kKinds) {
    if (s == k.name) return k.kind;
  }
  throw ConfigError(path, "unknown kind '" + s + "'");
}

Variant parse_variant(const std::string& s, const std::string& path) {
  for (Variant v : all_variants()) {
    if (s == to_string(v)) return v;
  }
  throw ConfigError(path, "unknown variant '" + s + "'");
}

void read_scenario(Reader r, ExperimentConfig& c) {
  ScenarioParams& p = c.scenario;
  r.number("carrier_hz", p.carrier_hz);
  r.integer("n_mt", p.n_mt);
  r.integer("n_at", p.n_at);
  r.integer("n_rf", p.n_rf);
  r.number("aperture_m", p.aperture_m);
  r.integer("k_users", p.k_users);
  r.integer("l_paths", p.l_paths);
  r.integer("t_slots", p.t_slots);
  r.number("p_bs_dbm", p.p_bs_dbm);
  r.number("p_user_dbm", p.p_user_dbm);
  r.number("noise_dbm", p.noise_dbm);
  r.numbers("qos_db", c.qos_db);
  if (auto t = r.child("target")) {
    t->number("theta_deg", p.target_theta_deg);
    t->number("r_m", p.target_r_m);
    t->finish();
  }
  if (auto u = r.child("users")) {
    u->number("r_min_m", p.user_r_min_m);
    u->number("r_max_m", p.user_r_max_m);
    u->number("theta_min_deg", p.user_theta_min_deg);
    u->number("theta_max_deg", p.user_theta_max_deg);
    u->finish();
  }
  if (const json* s = r.find("seed")) {
    if (!s->is_number_unsigned() && !(s->is_number_integer() && s->get<long long>() >= 0)) {
      throw ConfigError(r.at("seed"), "expected a non-negative integer");
    }
    c.seed = s->get<std::uint64_t>();
  }
  r.finish();
}

void read_experiment(Reader r, ExperimentConfig& c) {
  std::string kind;
  r.text("kind", kind);
  if (kind.empty()) throw ConfigError(r.at("kind"), "required");
  c.kind = parse_kind(kind, r.at("kind"));
  c.sweep_variable = c.is_positioning() ? "snr_db" : "gamma_db";
  c.sweep_values = c.is_positioning() ? std::vector<double>{0, 5, 10, 15, 20}
                                      : std::vector<double>{c.qos_db.empty() ? 10.0 : c.qos_db.front()};
  if (auto s = r.child("sweep")) {
    s->text("variable", c.sweep_variable);
    s->numbers("values", c.sweep_values);
    s->finish();
  }
  r.integer("trials", c.trials);
  if (const json* v = r.find("variants")) {
    if (!v->is_array()) throw ConfigError(r.at("variants"), "expected an array of strings");
    c.variants.clear();
    for (size_t i = 0; i < v->size(); ++i) {
      const std::string path = r.at("variants") + "[" + std::to_string(i) + "]";
      if (!(*v)[i].is_string()) throw ConfigError(path, "expected a string");
      c.variants.push_back(parse_variant((*v)[i].get<std::string>(), path));
    }
  }
  std::string probing = c.probing == Probing::kIsotropic ? "isotropic" : "optimized";
  r.text("probing", probing);
  if (probing == "isotropic") {
    c.probing = Probing::kIsotropic;
  } else if (probing == "optimized") {
    c.probing = Probing::kOptimized;
  } else {
    throw ConfigError(r.at("probing"), "expected 'isotropic' or 'optimized'");
  }
  std::string link = c.link == Link::kDownlink ? "downlink" : "uplink";
  r.text("link", link);
  if (link == "downlink") {
    c.link = Link::kDownlink;
  } else if (link == "uplink") {
    c.link = Link::kUplink;
  } else {
    throw ConfigError(r.at("link"), "expected 'downlink' or 'uplink'");
  }
  if (auto g = r.child("grid")) {
    g->number("theta_min_deg", c.grid.theta_min_deg);
    g->number("theta_max_deg", c.grid.theta_max_deg);
    g->integer("theta_points", c.grid.theta_points);
    g->number("r_min_m", c.grid.r_min_m);
    g->number("r_max_m", c.grid.r_max_m);
    g->integer("r_points", c.grid.r_points);
    g->finish();
  }
  if (auto o = r.child("optimizer")) {
    o->number("rho0", c.pdd.rho0);
    o->number("mu", c.pdd.mu);
    o->number("eps_ao", c.pdd.eps_ao);
    o->number("eps_pdd", c.pdd.eps_pdd);
    o->integer("max_outer", c.pdd.max_outer);
    o->integer("max_inner", c.pdd.max_inner);
    o->integer("n_samples", c.pdd.n_samples);
    o->number("eps_sca", c.ao.eps_sca);
    o->integer("max_sca", c.ao.max_sca);
    o->integer("max_ao", c.ao.max_ao);
    o->finish();
  }
  c.ao.eps_ao = c.pdd.eps_ao;
  c.ao.pdd = c.pdd;
  r.finish();
}

void read_output(Reader r, ExperimentConfig& c) {
  r.text("csv", c.csv_path);
  std::string svg;
  r.text("svg", svg);
  if (!svg.empty()) c.svg_path = svg;
  r.finish();
}

std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  if (s == "nan") return kNaN;
  size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

// Runs job(i) for i in [0, n) on up to `threads` workers.
void parallel_for(int n, int threads, const std::function<void(int)>& job) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (int i = next++; i < n; i = next++) job(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Rng stream(std::uint64_t seed, int trial, int a = 0, int b = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(a),
                    static_cast<std::uint32_t>(b)};
  return Rng(seq);
}

TrialRecord base_record(const ExperimentConfig& cfg, int trial, double sweep, std::string variant) {
  TrialRecord r;
  r.seed = trial_seed(cfg.seed, trial);
  r.sweep = sweep;
  r.variant = std::move(variant);
  r.theta_true = deg2rad(cfg.scenario.target_theta_deg);
  r.r_true = cfg.scenario.target_r_m;
  r.theta_hat = kNaN;
  r.r_hat = kNaN;
  r.rcrb_theta = kNaN;
  r.rcrb_r = kNaN;
  r.objective = kNaN;
  return r;
}

void set_crb(TrialRecord& r, const Crb2& crb) {
  r.rcrb_theta = crb.rcrb_theta();
  r.rcrb_r = crb.rcrb_range();
  r.objective = crb.trace();
}

// Design used while probing in a positioning trial, normalized to unit power.
struct Probe {
  HadPrecoder had;
  DownlinkTx dl;
  CMat r_u;
  int iterations = 0;
  bool flagged = false;
  std::string note;
};

Probe make_probe(const ExperimentConfig& cfg, Link link, Rng& rng) {
  const ScenarioParams& p = cfg.scenario;
  Probe pr;
  if (cfg.probing == Probing::kIsotropic) {
    std::uniform_real_distribution<double> uni(0.0, 2.0 * kPi);
    RVec ph(p.n_mt);
    for (int n = 0; n < p.n_mt; ++n) ph(n) = uni(rng);
    pr.had = HadPrecoder(ph, p.n_rf);
    pr.dl.w_digital = CMat::Zero(p.n_rf, 0);
    pr.dl.r_probe = CMat::Identity(p.n_rf, p.n_rf) / double(p.n_mt);
    pr.r_u = CMat::Identity(p.n_at, p.n_at) / double(p.n_at);
    return pr;
  }
  const ScenarioDraw d = draw_scenario(p, rng);
  if (link == Link::kDownlink) {
    DownlinkScenario sc = make_downlink(p, d, Variant::kHadNear, 0.0);
    sc.gamma = cfg.qos_for();
    const DownlinkSolution s = pdd_downlink(sc, cfg.pdd, rng);
    pr.iterations = s.outer_iterations;
    if (s.status == OptStatus::kInfeasible) {
      pr.flagged = true;
      pr.note = s.message;
      return pr;
    }
    pr.had = s.had;
    pr.dl.w_digital = s.tx.w_digital / std::sqrt(sc.p_d);
    pr.dl.r_probe = s.tx.r_probe / sc.p_d;
  } else {
    UplinkScenario sc = make_uplink(p, d, Variant::kHadNear, 0.0);
    sc.gamma = cfg.qos_for();
    const UplinkSolution s = ao_uplink(sc, cfg.ao, rng);
    pr.iterations = s.ao_iterations;
    if (s.status == OptStatus::kInfeasible) {
      pr.flagged = true;
      pr.note = s.message;
      return pr;
    }
    pr.had = s.had;
    pr.r_u = s.tx.r_probe / sc.p_s;
  }
  return pr;
}

std::vector<TrialRecord> positioning(const ExperimentConfig& cfg, Link link, const RunOptions& opt) {
  const ScenarioParams& p = cfg.scenario;
  const ArrayConfig mt = p.mt_array();
  const ArrayConfig at = p.at_array();
  const PolarPoint target{deg2rad(p.target_theta_deg), p.target_r_m};
  const GMatrixDerivs derivs = g_derivatives(mt, at, target);
  const GridSpec grid = cfg.grid.to_grid();
  const int n_sweep = static_cast<int>(cfg.sweep_values.size());
  const std::string variant = cfg.probing == Probing::kIsotropic ? "isotropic" : "optimized";

  std::vector<std::vector<TrialRecord>> out(cfg.trials);
  parallel_for(cfg.trials, opt.threads, [&](int trial) {
    const auto t_design = std::chrono::steady_clock::now();
    Rng design_rng = stream(cfg.seed, trial, 1);
    const Probe probe = make_probe(cfg, link, design_rng);
    const double design_time = seconds_since(t_design);
    for (int s = 0; s < n_sweep; ++s) {
      const auto t0 = std::chrono::steady_clock::now();
      const double snr_db = cfg.sweep_values[s];
      TrialRecord rec = base_record(cfg, trial, snr_db, variant);
      rec.iterations = probe.iterations;
      if (probe.flagged) {
        rec.flagged = true;
        rec.note = probe.note;
        rec.wall_time_s = design_time;
        out[trial].push_back(rec);
        continue;
      }
      // Same noise stream at every SNR point of one trial.
      Rng rng = stream(cfg.seed, trial, 2);
      std::uniform_real_distribution<double> uni(0.0, 2.0 * kPi);
      const cd beta = std::polar(1.0, uni(rng));
      const double sigma_sq = std::pow(10.0, -snr_db / 10.0);
      const SensingChannel g = make_sensing_channel(mt, at, target, beta);
      PositionEstimate est;
      Crb2 crb;
      if (link == Link::kDownlink) {
        const CMat x = synth_downlink_frames(probe.had, probe.dl, p.t_slots, rng);
        const CMat y = synth_downlink_echo(x, g, sigma_sq, rng);
        est = downlink_two_stage(y, x, mt, at, grid);
        const CMat f = probe.had.F();
        const CMat q = f * probe.dl.r_tilde() * f.adjoint();
        crb = crb_from_fim(fim_downlink(0.5 * (q + q.adjoint()), derivs, beta, p.t_slots, sigma_sq));
      } else {
        const UplinkEcho echo = synth_uplink_echo(probe.had, g, probe.r_u, p.t_slots, sigma_sq, rng);
        est = uplink_two_stage(echo.y, echo.probe, probe.had, mt, at, grid);
        crb = crb_from_fim(fim_uplink(probe.had, derivs, probe.r_u, beta, p.t_slots, sigma_sq));
      }
      rec.theta_hat = est.theta_hat;
      rec.r_hat = est.r_hat;
      set_crb(rec, crb);
      rec.wall_time_s = seconds_since(t0) + (s == 0 ? design_time : 0.0);
      out[trial].push_back(rec);
    }
  });

  std::vector<TrialRecord> records;
  for (int s = 0; s < n_sweep; ++s) {
    for (int t = 0; t < cfg.trials; ++t) records.push_back(out[t][s]);
  }
  return records;
}

ScenarioParams with_sweep(const ExperimentConfig& cfg, double value) {
  ScenarioParams p = cfg.scenario;
  if (cfg.sweep_variable == "n_rf") p.n_rf = static_cast<int>(value);
  return p;
}

std::vector<double> sweep_qos(const ExperimentConfig& cfg, double value) {
  return cfg.sweep_variable == "gamma_db" ? cfg.qos_for(value) : cfg.qos_for();
}

TrialRecord optimize_variant(const ExperimentConfig& cfg, Link link, const ScenarioDraw& d,
                             const ScenarioParams& p, Variant v, const std::vector<double>& qos,
                             int trial, double sweep, Rng& rng) {
  const auto t0 = std::chrono::steady_clock::now();
  TrialRecord rec = base_record(cfg, trial, sweep, to_string(v));
  if (link == Link::kDownlink) {
    DownlinkScenario sc = make_downlink(p, d, v, 0.0);
    sc.gamma = qos;
    const DownlinkSolution s = pdd_downlink(sc, cfg.pdd, rng);
    rec.iterations = s.outer_iterations;
    if (s.status == OptStatus::kInfeasible) {
      rec.flagged = true;
      rec.note = s.message;
    } else {
      set_crb(rec, s.crb);
      if (!audit_downlink(sc, s.had, s.tx).pass()) {
        rec.flagged = true;
        rec.note = "audit failed";
      }
    }
  } else {
    UplinkScenario sc = make_uplink(p, d, v, 0.0);
    sc.gamma = qos;
    const UplinkSolution s = ao_uplink(sc, cfg.ao, rng);
    rec.iterations = s.ao_iterations;
    if (s.status == OptStatus::kInfeasible) {
      rec.flagged = true;
      rec.note = s.message;
    } else {
      set_crb(rec, s.crb);
      if (!audit_uplink(sc, s.had, s.tx).pass()) {
        rec.flagged = true;
        rec.note = "audit failed";
      }
    }
  }
  rec.wall_time_s = seconds_since(t0);
  return rec;
}

std::vector<TrialRecord> crb_sweep(const ExperimentConfig& cfg, Link link, const RunOptions& opt) {
  const int n_sweep = static_cast<int>(cfg.sweep_values.size());
  const int n_var = static_cast<int>(cfg.variants.size());
  const int n_jobs = cfg.trials * n_sweep * n_var;
  std::vector<TrialRecord> out(n_jobs);
  // Job order is (sweep, variant, trial); the realization depends on the trial only.
  parallel_for(n_jobs, opt.threads, [&](int job) {
    const int trial = job % cfg.trials;
    const int v = (job / cfg.trials) % n_var;
    const int s = job / (cfg.trials * n_var);
    const double value = cfg.sweep_values[s];
    const ScenarioParams p = with_sweep(cfg, value);
    Rng draw_rng = stream(cfg.seed, trial, 0);
    const ScenarioDraw d = draw_scenario(p, draw_rng);
    Rng rng = stream(cfg.seed, trial, 3, static_cast<int>(cfg.variants[v]));
    try {
      out[job] = optimize_variant(cfg, link, d, p, cfg.variants[v], sweep_qos(cfg, value), trial,
                                  value, rng);
    } catch (const std::exception& e) {
      out[job] = base_record(cfg, trial, value, to_string(cfg.variants[v]));
      out[job].flagged = true;
      out[job].note = e.what();
    }
  });
  return out;
}

}  // namespace

GridSpec GridConfig::to_grid() const {
  GridSpec g;
  g.theta_min = deg2rad(theta_min_deg);
  g.theta_max = deg2rad(theta_max_deg);
  g.theta_points = theta_points;
  g.r_min = r_min_m;
  g.r_max = r_max_m;
  g.r_points = r_points;
  return g;
}

const char* to_string(ExperimentKind k) {
  for (const auto& e : kKinds) {
    if (e.kind == k) return e.name;
  }
  return "unknown";
}

bool ExperimentConfig::is_positioning() const {
  return kind == ExperimentKind::kPositionDownlink || kind == ExperimentKind::kPositionUplink;
}

std::vector<double> ExperimentConfig::qos_for(double gamma_db_override) const {
  std::vector<double> out(scenario.k_users);
  for (int k = 0; k < scenario.k_users; ++k) {
    const double db = std::isnan(gamma_db_override)
                          ? qos_db[qos_db.size() == 1 ? 0 : static_cast<size_t>(k)]
                          : gamma_db_override;
    out[k] = std::pow(10.0, db / 10.0);
  }
  return out;
}

void ExperimentConfig::validate() const {
  try {
    scenario.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("scenario", e.what());
  }
  if (qos_db.empty()) throw ConfigError("scenario.qos_db", "must not be empty");
  if (qos_db.size() != 1 && qos_db.size() != static_cast<size_t>(scenario.k_users)) {
    throw ConfigError("scenario.qos_db", "needs one value or one per user");
  }
  if (trials < 1) throw ConfigError("experiment.trials", "must be >= 1");
  if (sweep_values.empty()) throw ConfigError("experiment.sweep.values", "must not be empty");
  const bool pos = is_positioning();
  if (pos && sweep_variable != "snr_db") {
    throw ConfigError("experiment.sweep.variable", "positioning sweeps use 'snr_db'");
  }
  if (!pos && sweep_variable != "gamma_db" && sweep_variable != "n_rf") {
    throw ConfigError("experiment.sweep.variable", "expected 'gamma_db' or 'n_rf'");
  }
  if (kind == ExperimentKind::kConvergence && sweep_variable != "gamma_db") {
    throw ConfigError("experiment.sweep.variable", "convergence runs sweep 'gamma_db'");
  }
  if (sweep_variable == "n_rf") {
    for (double v : sweep_values) {
      if (v < 1 || v != std::floor(v) || scenario.n_mt % static_cast<int>(v) != 0) {
        throw ConfigError("experiment.sweep.values", "n_mt divisible by n_rf is required");
      }
    }
  }
  if (!pos && variants.empty()) throw ConfigError("experiment.variants", "must not be empty");
  try {
    grid.to_grid().validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("experiment.grid", e.what());
  }
  if (pdd.max_outer < 1 || pdd.max_inner < 1 || pdd.n_samples < 1) {
    throw ConfigError("experiment.optimizer", "iteration and sample counts must be positive");
  }
  if (!(pdd.mu > 0 && pdd.mu < 1)) throw ConfigError("experiment.optimizer.mu", "must lie in (0, 1)");
  if (!(pdd.rho0 > 0)) throw ConfigError("experiment.optimizer.rho0", "must be positive");
  if (csv_path.empty()) throw ConfigError("output.csv", "must not be empty");
}

ExperimentConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  ExperimentConfig c;
  Reader root(doc, "");
  if (auto s = root.child("scenario")) read_scenario(*s, c);
  auto e = root.child("experiment");
  if (!e) throw ConfigError("experiment", "required");
  read_experiment(*e, c);
  if (auto o = root.child("output")) read_output(*o, c);
  root.finish();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  const ScenarioParams& p = c.scenario;
  json j;
  j["scenario"] = {
      {"carrier_hz", p.carrier_hz},
      {"n_mt", p.n_mt},
      {"n_at", p.n_at},
      {"n_rf", p.n_rf},
      {"aperture_m", p.aperture_m},
      {"k_users", p.k_users},
      {"l_paths", p.l_paths},
      {"t_slots", p.t_slots},
      {"p_bs_dbm", p.p_bs_dbm},
      {"p_user_dbm", p.p_user_dbm},
      {"noise_dbm", p.noise_dbm},
      {"qos_db", c.qos_db},
      {"target", {{"theta_deg", p.target_theta_deg}, {"r_m", p.target_r_m}}},
      {"users",
       {{"r_min_m", p.user_r_min_m},
        {"r_max_m", p.user_r_max_m},
        {"theta_min_deg", p.user_theta_min_deg},
        {"theta_max_deg", p.user_theta_max_deg}}},
      {"seed", c.seed},
  };
  json variants = json::array();
  for (Variant v : c.variants) variants.push_back(to_string(v));
  j["experiment"] = {
      {"kind", to_string(c.kind)},
      {"sweep", {{"variable", c.sweep_variable}, {"values", c.sweep_values}}},
      {"trials", c.trials},
      {"variants", variants},
      {"probing", c.probing == Probing::kIsotropic ? "isotropic" : "optimized"},
      {"link", c.link == Link::kDownlink ? "downlink" : "uplink"},
      {"grid",
       {{"theta_min_deg", c.grid.theta_min_deg},
        {"theta_max_deg", c.grid.theta_max_deg},
        {"theta_points", c.grid.theta_points},
        {"r_min_m", c.grid.r_min_m},
        {"r_max_m", c.grid.r_max_m},
        {"r_points", c.grid.r_points}}},
      {"optimizer",
       {{"rho0", c.pdd.rho0},
        {"mu", c.pdd.mu},
        {"eps_ao", c.pdd.eps_ao},
        {"eps_pdd", c.pdd.eps_pdd},
        {"max_outer", c.pdd.max_outer},
        {"max_inner", c.pdd.max_inner},
        {"n_samples", c.pdd.n_samples},
        {"eps_sca", c.ao.eps_sca},
        {"max_sca", c.ao.max_sca},
        {"max_ao", c.ao.max_ao}}},
  };
  j["output"] = {{"csv", c.csv_path}};
  if (c.svg_path) j["output"]["svg"] = *c.svg_path;
  return j.dump(2) + "\n";
}

std::uint64_t trial_seed(std::uint64_t seed, int trial) {
  Rng r = stream(seed, trial, 0xffff);
  return r();
}

std::vector<TrialRecord> run_positioning_sweep(const ExperimentConfig& cfg, const RunOptions& opt) {
  if (!cfg.is_positioning()) throw std::invalid_argument("not a positioning experiment");
  cfg.validate();
  return positioning(cfg, cfg.kind == ExperimentKind::kPositionDownlink ? Link::kDownlink : Link::kUplink,
                     opt);
}

std::vector<TrialRecord> run_crb_sweep(const ExperimentConfig& cfg, const RunOptions& opt) {
  if (cfg.kind != ExperimentKind::kCrbSweepDownlink && cfg.kind != ExperimentKind::kCrbSweepUplink) {
    throw std::invalid_argument("not a CRB sweep");
  }
  cfg.validate();
  return crb_sweep(cfg, cfg.kind == ExperimentKind::kCrbSweepDownlink ? Link::kDownlink : Link::kUplink,
                   opt);
}

std::vector<TrialRecord> run_convergence(const ExperimentConfig& cfg, const RunOptions& opt) {
  if (cfg.kind != ExperimentKind::kConvergence) throw std::invalid_argument("not a convergence run");
  cfg.validate();
  const int n_sweep = static_cast<int>(cfg.sweep_values.size());
  const int n_jobs = cfg.trials * n_sweep;
  std::vector<std::vector<TrialRecord>> out(n_jobs);
  // One row per outer iteration: sweep holds the iteration index, objective the exact tr(CRB).
  parallel_for(n_jobs, opt.threads, [&](int job) {
    const int trial = job % cfg.trials;
    const double gamma_db = cfg.sweep_values[job / cfg.trials];
    Rng draw_rng = stream(cfg.seed, trial, 0);
    const ScenarioDraw d = draw_scenario(cfg.scenario, draw_rng);
    Rng rng = stream(cfg.seed, trial, 4);
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<double> trace;
    Crb2 crb;
    bool ok = true;
    std::string note;
    if (cfg.link == Link::kDownlink) {
      DownlinkScenario sc = make_downlink(cfg.scenario, d, Variant::kHadNear, gamma_db);
      const DownlinkSolution s = pdd_downlink(sc, cfg.pdd, rng);
      ok = s.status != OptStatus::kInfeasible;
      trace.push_back(s.initial_trace_crb);
      trace.insert(trace.end(), s.crb_trace.begin(), s.crb_trace.end());
      crb = s.crb;
      note = s.message;
    } else {
      UplinkScenario sc = make_uplink(cfg.scenario, d, Variant::kHadNear, gamma_db);
      const UplinkSolution s = ao_uplink(sc, cfg.ao, rng);
      ok = s.status != OptStatus::kInfeasible;
      trace = s.objective_trace;
      crb = s.crb;
      note = s.message;
    }
    const double wall = seconds_since(t0);
    const char* tag = cfg.link == Link::kDownlink ? "had-near-downlink" : "had-near-uplink";
    if (!ok) {
      TrialRecord r = base_record(cfg, trial, 0, tag);
      r.flagged = true;
      r.note = note;
      r.wall_time_s = wall;
      out[job].push_back(r);
      return;
    }
    for (size_t i = 0; i < trace.size(); ++i) {
      TrialRecord r = base_record(cfg, trial, static_cast<double>(i), tag);
      r.objective = trace[i];
      r.iterations = static_cast<int>(i);
      if (i + 1 == trace.size()) {
        r.rcrb_theta = crb.rcrb_theta();
        r.rcrb_r = crb.rcrb_range();
        r.wall_time_s = wall;
      }
      out[job].push_back(r);
    }
  });
  std::vector<TrialRecord> records;
  for (auto& v : out) records.insert(records.end(), v.begin(), v.end());
  return records;
}

std::vector<TrialRecord> run_experiment(const ExperimentConfig& cfg, const RunOptions& opt) {
  switch (cfg.kind) {
    case ExperimentKind::kPositionDownlink:
    case ExperimentKind::kPositionUplink: return run_positioning_sweep(cfg, opt);
    case ExperimentKind::kCrbSweepDownlink:
    case ExperimentKind::kCrbSweepUplink: return run_crb_sweep(cfg, opt);
    case ExperimentKind::kConvergence: return run_convergence(cfg, opt);
  }
  throw std::invalid_argument("unknown experiment kind");
}

const char* const kCsvHeader =
    "seed,sweep,variant,theta_true_deg,r_true_m,theta_hat_deg,r_hat_m,rcrb_theta_deg,rcrb_r_m,"
    "objective,iterations,wall_time_s";

std::string format_csv(const std::vector<TrialRecord>& records) {
  std::string s = kCsvHeader;
  s += '\n';
  for (const TrialRecord& r : records) {
    if (r.variant.find_first_of(",\"\n") != std::string::npos) {
      throw std::invalid_argument("variant names must not contain CSV delimiters");
    }
    s += std::to_string(r.seed) + ',' + fmt17(r.sweep) + ',' + r.variant + ',' +
         fmt17(rad2deg(r.theta_true)) + ',' + fmt17(r.r_true) + ',' + fmt17(rad2deg(r.theta_hat)) +
         ',' + fmt17(r.r_hat) + ',' + fmt17(rad2deg(r.rcrb_theta)) + ',' + fmt17(r.rcrb_r) + ',' +
         fmt17(r.objective) + ',' + std::to_string(r.iterations) + ',' + fmt17(r.wall_time_s) + '\n';
  }
  return s;
}

std::vector<TrialRecord> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw std::invalid_argument("unexpected CSV header");
  std::vector<TrialRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() != 12) throw std::invalid_argument("CSV row with " + std::to_string(f.size()) + " fields");
    TrialRecord r;
    r.seed = std::stoull(f[0]);
    r.sweep = parse_double(f[1]);
    r.variant = f[2];
    r.theta_true = deg2rad(parse_double(f[3]));
    r.r_true = parse_double(f[4]);
    r.theta_hat = deg2rad(parse_double(f[5]));
    r.r_hat = parse_double(f[6]);
    r.rcrb_theta = deg2rad(parse_double(f[7]));
    r.rcrb_r = parse_double(f[8]);
    r.objective = parse_double(f[9]);
    r.iterations = std::stoi(f[10]);
    r.wall_time_s = parse_double(f[11]);
    out.push_back(r);
  }
  return out;
}

std::string render_svg(const std::vector<TrialRecord>& records, const ExperimentConfig& cfg) {
  // Series -> sweep value -> samples (degrees).
  std::map<std::string, std::map<double, std::vector<double>>> series;
  const bool pos = cfg.is_positioning();
  for (const TrialRecord& r : records) {
    if (r.flagged) continue;
    if (pos) {
      if (std::isfinite(r.theta_hat)) {
        series["|theta error|"][r.sweep].push_back(std::abs(rad2deg(r.theta_hat - r.theta_true)));
      }
      if (std::isfinite(r.rcrb_theta)) series["RCRB theta"][r.sweep].push_back(rad2deg(r.rcrb_theta));
    } else if (cfg.kind == ExperimentKind::kConvergence) {
      if (std::isfinite(r.objective)) series["tr(CRB)"][r.sweep].push_back(r.objective);
    } else if (std::isfinite(r.rcrb_theta)) {
      series[r.variant][r.sweep].push_back(rad2deg(r.rcrb_theta));
    }
  }
  const double w = 640, h = 400, ml = 70, mr = 150, mt = 30, mb = 50;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  struct Point {
    double x, mean, lo, hi;
  };
  std::map<std::string, std::vector<Point>> pts;
  for (const auto& [name, by_x] : series) {
    for (const auto& [x, v] : by_x) {
      double mean = 0, var = 0;
      for (double e : v) mean += e;
      mean /= v.size();
      for (double e : v) var += (e - mean) * (e - mean);
      const double sd = v.size() > 1 ? std::sqrt(var / (v.size() - 1)) : 0.0;
      if (!(mean > 0)) continue;
      const double lo = std::max(mean - sd, mean * 1e-3);
      pts[name].push_back({x, mean, lo, mean + sd});
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, lo);
      ymax = std::max(ymax, mean + sd);
    }
  }
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (pts.empty()) {
    s << "<text x=\"20\" y=\"40\">no finite data</text>\n</svg>\n";
    return s.str();
  }
  if (xmax == xmin) {
    xmin -= 1;
    xmax += 1;
  }
  const double ly0 = std::floor(std::log10(ymin)), ly1 = std::max(ly0 + 1, std::ceil(std::log10(ymax)));
  const auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr); };
  const auto py = [&](double y) { return h - mb - (std::log10(y) - ly0) / (ly1 - ly0) * (h - mt - mb); };
  s << "<g stroke=\"black\" fill=\"none\"><rect x=\"" << ml << "\" y=\"" << mt << "\" width=\""
    << w - ml - mr << "\" height=\"" << h - mt - mb << "\"/></g>\n";
  s << "<g font-size=\"11\" font-family=\"sans-serif\">\n";
  for (int e = static_cast<int>(ly0); e <= static_cast<int>(ly1); ++e) {
    s << "<text x=\"" << ml - 8 << "\" y=\"" << py(std::pow(10.0, e)) + 4
      << "\" text-anchor=\"end\">1e" << e << "</text>\n";
  }
  for (const double x : {xmin, xmax}) {
    s << "<text x=\"" << px(x) << "\" y=\"" << h - mb + 16 << "\" text-anchor=\"middle\">" << x
      << "</text>\n";
  }
  s << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 12 << "\" text-anchor=\"middle\">"
    << (cfg.kind == ExperimentKind::kConvergence ? "outer iteration" : cfg.sweep_variable) << "</text>\n";
  s << "</g>\n";
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  int idx = 0;
  for (const auto& [name, v] : pts) {
    const char* col = kColors[idx % 5];
    s << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
    for (const Point& p : v) s << px(p.x) << ',' << py(p.mean) << ' ';
    s << "\"/>\n";
    for (const Point& p : v) {
      s << "<line stroke=\"" << col << "\" x1=\"" << px(p.x) << "\" x2=\"" << px(p.x) << "\" y1=\""
        << py(p.lo) << "\" y2=\"" << py(p.hi) << "\"/>\n";
    }
    s << "<text font-size=\"11\" font-family=\"sans-serif\" fill=\"" << col << "\" x=\"" << w - mr + 10
      << "\" y=\"" << mt + 16 * (idx + 1) << "\">" << name << "</text>\n";
    ++idx;
  }
  s << "</svg>\n";
  return s.str();
}

EmittedFiles emit_outputs(const std::vector<TrialRecord>& records, const ExperimentConfig& cfg,
                          const std::string& out_dir) {
  if (records.empty()) throw std::invalid_argument("no records to emit");
  namespace fs = std::filesystem;
  const auto resolve = [&](const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : fs::path(out_dir) / path;
  };
  const auto write = [](const fs::path& path, const std::string& body) {
    if (path.has_parent_path()) {
      std::error_code ec;
      fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << body;
    if (!f) throw std::runtime_error("cannot write " + path.string());
  };
  EmittedFiles files;
  const fs::path csv = resolve(cfg.csv_path);
  write(csv, format_csv(records));
  files.csv = csv.string();
  if (cfg.svg_path) {
    const fs::path svg = resolve(*cfg.svg_path);
    write(svg, render_svg(records, cfg));
    files.svg = svg.string();
  }
  return files;
}

}  // namespace ispac
