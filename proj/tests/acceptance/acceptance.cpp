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

// Acceptance suite: one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>

#include "ispac/harness.hpp"
#include "support/oracles.hpp"

using namespace ispac;
namespace fs = std::filesystem;

namespace {

constexpr double kDeg = kPi / 180.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool non_increasing(const std::vector<double>& v, double slack) {
  for (size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[i - 1] + slack * std::max(1.0, std::abs(v[i - 1]))) return false;
  }
  return true;
}

// Non-increasing within each outer iteration; the penalty and multiplier change between them.
bool non_increasing_per_outer(const std::vector<double>& v, const std::vector<int>& outer, double slack) {
  for (size_t i = 1; i < v.size(); ++i) {
    if (outer[i] != outer[i - 1]) continue;
    if (v[i] > v[i - 1] + slack * std::max(1.0, std::abs(v[i - 1]))) return false;
  }
  return true;
}

ScenarioParams desk_params(int n_rf) {
  ScenarioParams p;
  p.n_mt = 16;
  p.n_at = 4;
  p.n_rf = n_rf;
  p.k_users = 2;
  return p;
}

constexpr int kDeskSeeds = 20;
constexpr std::uint64_t kDeskSeedBase = 5000;

ScenarioDraw desk_draw(int s) {
  Rng rng(kDeskSeedBase + s);
  return draw_scenario(desk_params(4), rng);
}

struct DeskRun {
  bool feasible = false;
  bool monotone = false;
  bool audit = false;
  bool converged = false;
  double violation = 0.0;
  int outer = 0;
  double trace_crb = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;
};

DeskRun run_downlink(const ScenarioParams& p, const ScenarioDraw& d, Variant v, double gamma_db,
                     std::uint64_t opt_seed) {
  const auto t0 = std::chrono::steady_clock::now();
  const DownlinkScenario sc = make_downlink(p, d, v, gamma_db);
  Rng rng(opt_seed);
  const DownlinkSolution s = pdd_downlink(sc, PddSettings{}, rng);
  DeskRun r;
  r.seconds = seconds_since(t0);
  r.feasible = s.status != OptStatus::kInfeasible;
  if (!r.feasible) return r;
  r.monotone = non_increasing_per_outer(s.objective_trace, s.objective_outer, 1e-6);
  r.audit = audit_downlink(sc, s.had, s.tx).pass();
  r.violation = s.violation_trace.empty() ? 0.0 : s.violation_trace.back();
  r.outer = s.outer_iterations;
  r.converged = s.status == OptStatus::kConverged && r.outer <= 50 && r.violation < 1e-4;
  r.trace_crb = s.crb.trace();
  return r;
}

DeskRun run_uplink(const ScenarioParams& p, const ScenarioDraw& d, Variant v, double gamma_db,
                   std::uint64_t opt_seed) {
  const auto t0 = std::chrono::steady_clock::now();
  const UplinkScenario sc = make_uplink(p, d, v, gamma_db);
  Rng rng(opt_seed);
  const UplinkSolution s = ao_uplink(sc, AoSettings{}, rng);
  DeskRun r;
  r.seconds = seconds_since(t0);
  r.feasible = s.status != OptStatus::kInfeasible;
  if (!r.feasible) return r;
  r.monotone = non_increasing(s.objective_trace, 1e-6);
  for (const auto& t : s.sca_traces) r.monotone = r.monotone && non_increasing(t, 1e-6);
  bool analog_ok = true;
  for (const AnalogUplink& a : s.analog_runs) {
    r.monotone = r.monotone && non_increasing_per_outer(a.al_trace, a.al_outer, 1e-6);
    r.outer = std::max(r.outer, a.outer_iterations);
    analog_ok = analog_ok && a.converged;
    if (a.accepted && !a.violation_trace.empty()) r.violation = a.violation_trace.back();
  }
  r.audit = audit_uplink(sc, s.had, s.tx).pass();
  r.converged = s.status == OptStatus::kConverged && analog_ok && r.outer <= 50 && r.violation < 1e-4;
  r.trace_crb = s.crb.trace();
  return r;
}

struct Context {
  int threads = 1;
  std::string ispac_path;
  // Desk HAD(M = 4) runs at 10 dB, shared by criteria 5 and 6.
  std::vector<DeskRun> dl_m4, ul_m4;
  // Criterion 7 sweeps, reused by criterion 8.
  std::vector<TrialRecord> qos_dl, qos_ul;
};

// ---------------------------------------------------------------------------

Outcome criterion1(Context&) {
  const ArrayConfig mt = make_array_by_aperture(8, 0.5, 28e9);
  const ArrayConfig at = make_half_wavelength_array(4, 28e9);
  std::uniform_real_distribution<double> ang(20 * kDeg, 70 * kDeg), rad(6.0, 30.0), gain(-1.0, 1.0);
  double worst_dl = 0, worst_ul = 0;
  for (int seed = 0; seed < 10; ++seed) {
    Rng rng(100 + seed);
    const Eigen::Vector4d p(ang(rng), rad(rng), gain(rng), gain(rng));
    const int t = 8 + seed;
    const double sigma = 0.05 + 0.05 * seed;
    const GMatrixDerivs d = g_derivatives(mt, at, {p(0), p(1)});
    const cd beta(p(2), p(3));

    const CMat x = complex_gaussian(8, t, rng);
    const auto mu_dl = [&](const Eigen::Vector4d& q) -> CMat { return testing::g_of(mt, at, q).transpose() * x; };
    const Fim4 dl = fim_downlink(x * x.adjoint() / double(t), d, beta, t, sigma);
    worst_dl = std::max(worst_dl, testing::rel_err(dl.assembled(), testing::numeric_fim(mu_dl, p, sigma)));

    const HadPrecoder had(testing::uniform_phases(8, rng), 4);
    const CMat s = complex_gaussian(4, t, rng);
    const CMat f = had.F();
    const auto mu_ul = [&](const Eigen::Vector4d& q) -> CMat { return f.adjoint() * testing::g_of(mt, at, q) * s; };
    const Fim4 ul = fim_uplink(had, d, s * s.adjoint() / double(t), beta, t, sigma);
    worst_ul = std::max(worst_ul, testing::rel_err(ul.assembled(), testing::numeric_fim(mu_ul, p, sigma)));
  }
  return {worst_dl < 1e-3 && worst_ul < 1e-3,
          "max relative Frobenius error downlink " + fmt("%.2e", worst_dl) + ", uplink " +
              fmt("%.2e", worst_ul) + " over 10 seeds (N_a = 8, N_b = 4)"};
}

Outcome criterion2(Context&) {
  Rng rng(200);
  std::normal_distribution<double> n01;
  double worst = 0;
  for (int t = 0; t < 100; ++t) {
    RMat a(4, 4);
    for (int i = 0; i < 16; ++i) a(i) = n01(rng);
    const Eigen::Matrix4d j = a * a.transpose() + 0.1 * Eigen::Matrix4d::Identity();
    const Crb2 c = crb_from_fim(Fim4::from_matrix(j));
    const Eigen::Matrix2d ref = j.inverse().topLeftCorner<2, 2>();
    worst = std::max(worst, (c.matrix - ref).norm() / ref.norm());
  }
  return {worst < 1e-10, "max relative error " + fmt("%.2e", worst) + " over 100 random FIMs"};
}

Outcome criterion3(Context& ctx) {
  ExperimentConfig cfg;
  cfg.scenario.n_mt = 64;
  cfg.scenario.n_rf = 16;
  cfg.scenario.n_at = 16;
  cfg.scenario.t_slots = 256;
  cfg.sweep_variable = "snr_db";
  cfg.sweep_values = {0, 5, 10, 15, 20};
  cfg.trials = 100;
  cfg.probing = Probing::kIsotropic;
  cfg.grid = {40.0, 50.0, 20001, 10.0, 40.0, 15001};
  cfg.seed = 300;
  bool pass = true;
  std::ostringstream det;
  for (const auto kind : {ExperimentKind::kPositionDownlink, ExperimentKind::kPositionUplink}) {
    cfg.kind = kind;
    const auto recs = run_positioning_sweep(cfg, {ctx.threads});
    det << (kind == ExperimentKind::kPositionDownlink ? "DL" : " | UL");
    for (double snr : cfg.sweep_values) {
      double se_t = 0, se_r = 0, crb_t = 0, crb_r = 0;
      int n = 0;
      for (const auto& r : recs) {
        if (r.sweep != snr || r.flagged) continue;
        se_t += std::pow(r.theta_hat - r.theta_true, 2);
        se_r += std::pow(r.r_hat - r.r_true, 2);
        crb_t += r.rcrb_theta * r.rcrb_theta;
        crb_r += r.rcrb_r * r.rcrb_r;
        ++n;
      }
      if (n != cfg.trials) pass = false;
      const double ratio_t = std::sqrt(se_t / crb_t), ratio_r = std::sqrt(se_r / crb_r);
      const bool above = ratio_t >= 1.0 && ratio_r >= 1.0;
      const bool close = snr < 15 || (20 * std::log10(ratio_t) <= 6.0 && 20 * std::log10(ratio_r) <= 6.0);
      pass = pass && above && close;
      det << ' ' << snr << "dB " << fmt("%.2f", ratio_t) << '/' << fmt("%.2f", ratio_r);
    }
  }
  return {pass, "RMSE/RCRB (theta/r): " + det.str()};
}

Outcome criterion4(Context&) {
  const ScenarioParams p;  // N_a = 64, N_b = 16, N_RF = 16
  const ArrayConfig mt = p.mt_array();
  const ArrayConfig at = p.at_array();
  const GridSpec grid;
  const PolarPoint tgt{45 * kDeg, 20.0};
  int exact = 0, total = 0;
  double worst_beta = 0;
  for (int s = 0; s < 5; ++s) {
    Rng rng(400 + s);
    std::uniform_real_distribution<double> u(0.0, 2 * kPi);
    const cd beta = std::polar(0.5 + s * 0.3, u(rng));
    const SensingChannel g = make_sensing_channel(mt, at, tgt, beta);
    const CMat x = complex_gaussian(p.n_mt, p.t_slots, rng);
    const PositionEstimate dl = downlink_two_stage(synth_downlink_echo(x, g, 0.0, rng), x, mt, at, grid);
    const HadPrecoder had(testing::uniform_phases(p.n_mt, rng), p.n_rf);
    const UplinkEcho e = synth_uplink_echo(had, g, CMat::Identity(p.n_at, p.n_at) / double(p.n_at),
                                           p.t_slots, 0.0, rng);
    const PositionEstimate ul = uplink_two_stage(e.y, e.probe, had, mt, at, grid);
    for (const auto* est : {&dl, &ul}) {
      ++total;
      if (std::abs(est->theta_hat - tgt.theta_rad) < 1e-12 && std::abs(est->r_hat - tgt.range_m) < 1e-12) {
        ++exact;
      }
    }
    worst_beta = std::max(worst_beta, std::abs(dl.beta_hat - beta) / std::abs(beta));
  }
  return {exact == total && worst_beta < 1e-6,
          std::to_string(exact) + "/" + std::to_string(total) +
              " estimates exactly (45 deg, 20 m); max beta relative error " + fmt("%.2e", worst_beta)};
}

Outcome criterion5(Context& ctx) {
  const ScenarioParams p = desk_params(4);
  int mono = 0, audit = 0, conv_dl = 0, conv_ul = 0, feas = 0;
  double t_dl = 0, t_ul = 0;
  ctx.dl_m4.assign(kDeskSeeds, {});
  ctx.ul_m4.assign(kDeskSeeds, {});
  for (int s = 0; s < kDeskSeeds; ++s) {
    const ScenarioDraw d = desk_draw(s);
    const DeskRun dl = run_downlink(p, d, Variant::kHadNear, 10.0, 10 * s + 1);
    const DeskRun ul = run_uplink(p, d, Variant::kHadNear, 10.0, 10 * s + 2);
    ctx.dl_m4[s] = dl;
    ctx.ul_m4[s] = ul;
    feas += dl.feasible && ul.feasible;
    mono += dl.monotone && ul.monotone;
    audit += dl.audit && ul.audit;
    conv_dl += dl.converged;
    conv_ul += ul.converged;
    t_dl += dl.seconds;
    t_ul += ul.seconds;
    std::fprintf(stderr, "  [5] seed %2d DL %s outer %2d viol %.1e %.1fs | UL %s outer %2d viol %.1e %.1fs\n", s,
                 dl.converged ? "conv" : "----", dl.outer, dl.violation, dl.seconds,
                 ul.converged ? "conv" : "----", ul.outer, ul.violation, ul.seconds);
  }
  const int need = (9 * kDeskSeeds + 9) / 10;
  const bool pass = feas == kDeskSeeds && mono == kDeskSeeds && audit == kDeskSeeds &&
                    conv_dl >= need && conv_ul >= need;
  std::ostringstream det;
  det << "feasible " << feas << "/20, monotone " << mono << "/20, audits " << audit
      << "/20, converged (violation < 1e-4 within 50 outer) DL " << conv_dl << "/20 UL " << conv_ul
      << "/20; mean time DL " << fmt("%.1f", t_dl / kDeskSeeds) << " s, UL " << fmt("%.1f", t_ul / kDeskSeeds)
      << " s";
  return {pass, det.str()};
}

Outcome criterion6(Context& ctx) {
  if (ctx.dl_m4.size() != kDeskSeeds) {
    Context tmp = ctx;
    criterion5(tmp);
    ctx.dl_m4 = tmp.dl_m4;
    ctx.ul_m4 = tmp.ul_m4;
  }
  const double slack = 1e-6;
  int ok_dl = 0, ok_ul = 0;
  for (int s = 0; s < kDeskSeeds; ++s) {
    const ScenarioDraw d = desk_draw(s);
    const DeskRun fd_dl = run_downlink(desk_params(16), d, Variant::kFullyDigital, 10.0, 10 * s + 3);
    const DeskRun m2_dl = run_downlink(desk_params(8), d, Variant::kHadNear, 10.0, 10 * s + 4);
    const DeskRun fd_ul = run_uplink(desk_params(16), d, Variant::kFullyDigital, 10.0, 10 * s + 5);
    const DeskRun m2_ul = run_uplink(desk_params(8), d, Variant::kHadNear, 10.0, 10 * s + 6);
    const auto ordered = [&](const DeskRun& fd, const DeskRun& m2, const DeskRun& m4) {
      return fd.feasible && m2.feasible && m4.feasible && fd.trace_crb <= m2.trace_crb * (1 + slack) &&
             m2.trace_crb <= m4.trace_crb * (1 + slack);
    };
    const bool dl = ordered(fd_dl, m2_dl, ctx.dl_m4[s]);
    const bool ul = ordered(fd_ul, m2_ul, ctx.ul_m4[s]);
    ok_dl += dl;
    ok_ul += ul;
    std::fprintf(stderr, "  [6] seed %2d DL %.4e <= %.4e <= %.4e %s | UL %.4e <= %.4e <= %.4e %s\n", s,
                 fd_dl.trace_crb, m2_dl.trace_crb, ctx.dl_m4[s].trace_crb, dl ? "ok" : "NO", fd_ul.trace_crb,
                 m2_ul.trace_crb, ctx.ul_m4[s].trace_crb, ul ? "ok" : "NO");
  }
  const int need = (9 * kDeskSeeds + 9) / 10;
  return {ok_dl >= need && ok_ul >= need,
          "FD <= HAD(M=2) <= HAD(M=4) holds in DL " + std::to_string(ok_dl) + "/20, UL " +
              std::to_string(ok_ul) + "/20 (gamma = 10 dB)"};
}

ExperimentConfig qos_config(ExperimentKind kind) {
  ExperimentConfig cfg;
  cfg.scenario = desk_params(4);
  cfg.kind = kind;
  cfg.sweep_variable = "gamma_db";
  cfg.sweep_values = {4, 8, 12};
  cfg.trials = kDeskSeeds;
  cfg.variants = {Variant::kHadNear, Variant::kHadFar};
  cfg.seed = 700;
  return cfg;
}

void ensure_qos_runs(Context& ctx) {
  if (ctx.qos_dl.empty()) ctx.qos_dl = run_crb_sweep(qos_config(ExperimentKind::kCrbSweepDownlink), {ctx.threads});
  if (ctx.qos_ul.empty()) ctx.qos_ul = run_crb_sweep(qos_config(ExperimentKind::kCrbSweepUplink), {ctx.threads});
}

Outcome criterion7(Context& ctx) {
  ensure_qos_runs(ctx);
  bool pass = true;
  std::ostringstream det;
  for (const auto* recs : {&ctx.qos_dl, &ctx.qos_ul}) {
    det << (recs == &ctx.qos_dl ? "DL" : " | UL");
    for (double g : {4.0, 8.0, 12.0}) {
      std::map<std::string, std::array<double, 3>> acc;  // sum theta, sum r, count
      int flagged = 0;
      for (const auto& r : *recs) {
        if (r.sweep != g) continue;
        if (r.flagged) {
          ++flagged;
          continue;
        }
        auto& a = acc[r.variant];
        a[0] += r.rcrb_theta;
        a[1] += r.rcrb_r;
        a[2] += 1;
      }
      const auto& nf = acc["had-near"];
      const auto& ff = acc["had-far"];
      const double nt = nf[0] / nf[2] / kDeg, nr = nf[1] / nf[2];
      const double ft = ff[0] / ff[2] / kDeg, fr = ff[1] / ff[2];
      const bool ok = flagged == 0 && nt <= ft && nr <= fr;
      pass = pass && ok;
      det << ' ' << g << "dB theta " << fmt("%.3g", nt) << '/' << fmt("%.3g", ft) << " deg, r "
          << fmt("%.3g", nr) << '/' << fmt("%.3g", fr) << " m" << (flagged ? " (flagged runs)" : "");
    }
  }
  return {pass, "mean RCRB near/far over 20 seeds: " + det.str()};
}

Outcome criterion8(Context& ctx) {
  ensure_qos_runs(ctx);
  bool pass = true;
  std::ostringstream det;
  for (const auto* recs : {&ctx.qos_dl, &ctx.qos_ul}) {
    std::map<std::uint64_t, std::map<double, double>> by_seed;  // seed -> gamma -> tr(CRB)
    for (const auto& r : *recs) {
      if (r.variant != "had-near") continue;
      by_seed[r.seed][r.sweep] = r.flagged ? std::numeric_limits<double>::quiet_NaN() : r.objective;
    }
    int ok = 0, total = 0;
    for (const auto& [seed, m] : by_seed) {
      for (const auto& [lo, hi] : {std::pair{4.0, 8.0}, std::pair{8.0, 12.0}}) {
        ++total;
        const double a = m.at(lo), b = m.at(hi);
        if (std::isfinite(a) && std::isfinite(b) && b >= a * (1 - 1e-6)) ++ok;
      }
    }
    pass = pass && total > 0 && 10 * ok >= 9 * total;
    det << (recs == &ctx.qos_dl ? "DL " : ", UL ") << ok << '/' << total;
  }
  return {pass, "tr(CRB) non-decreasing in gamma for paired comparisons: " + det.str()};
}

Outcome criterion9(Context&) {
  Rng rng(900);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  double worst_rank1 = 0, worst_pi = 0, worst_split = 0;
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + t % 6;
    const CMat a = complex_gaussian(n, n, rng);
    const CMat w = a * a.adjoint();
    const CVec h = complex_gaussian(n, 1, rng);
    const CVec v = rank_one_downlink_recovery(w, h);
    const double lhs = (h.transpose() * v * v.adjoint() * h.conjugate())(0).real();
    const double rhs = (h.transpose() * w * h.conjugate())(0).real();
    worst_rank1 = std::max(worst_rank1, std::abs(lhs - rhs) / rhs);
  }
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + t % 5;
    const CVec c = complex_gaussian(n, 1, rng);
    const CMat w0 = c * c.adjoint();
    const CMat g = complex_gaussian(n, n, rng);
    const CMat b0 = u(rng) * g * g.adjoint();
    const double alpha = t % 2 ? pi_balance(w0, b0) : u(rng);
    const double exact = pi_exact(w0, b0);
    worst_pi = std::max(worst_pi, std::abs(pi_upper_bound(w0, b0, w0, b0, alpha) - exact) / std::max(1.0, std::abs(exact)));
  }
  const ArrayConfig mt = make_array_by_aperture(64, 0.5, 28e9);
  std::uniform_real_distribution<double> ang(-80 * kDeg, 80 * kDeg), rad(2.0, 60.0);
  for (int t = 0; t < 100; ++t) {
    const PolarPoint p{ang(rng), rad(rng)};
    const PolarPoint back = from_split(mt, to_vartheta(mt, p.theta_rad), to_phi(mt, p.theta_rad, p.range_m));
    worst_split = std::max({worst_split, std::abs(back.theta_rad - p.theta_rad),
                            std::abs(back.range_m - p.range_m) / p.range_m});
  }
  return {worst_rank1 < 1e-10 && worst_pi < 1e-10 && worst_split < 1e-12,
          "rank-one recovery " + fmt("%.1e", worst_rank1) + ", majorizer gap at expansion point " +
              fmt("%.1e", worst_pi) + ", (vartheta, phi) round trip " + fmt("%.1e", worst_split) +
              " (100 cases each)"};
}

std::string strip_wall_time(const std::string& csv) {
  std::istringstream in(csv);
  std::string out, line;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + '\n';
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Outcome criterion10(Context& ctx) {
  const fs::path dir = fs::temp_directory_path() / ("ispac_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const char* configs[] = {
      R"({"scenario": {"n_mt": 16, "n_at": 4, "n_rf": 4, "t_slots": 64, "seed": 42},
          "experiment": {"kind": "position-uplink", "sweep": {"values": [5, 15]}, "trials": 4,
                         "grid": {"theta_min_deg": 40, "theta_max_deg": 50, "theta_points": 201,
                                  "r_min_m": 10, "r_max_m": 30, "r_points": 201}},
          "output": {"csv": "pos.csv"}})",
      R"({"scenario": {"n_mt": 8, "n_at": 4, "n_rf": 2, "k_users": 1, "t_slots": 64, "seed": 43},
          "experiment": {"kind": "crb-sweep-downlink", "sweep": {"values": [6]}, "trials": 2},
          "output": {"csv": "crb.csv"}})",
  };
  bool pass = true;
  std::ostringstream det;
  for (int c = 0; c < 2; ++c) {
    const fs::path cfg_path = dir / ("cfg" + std::to_string(c) + ".json");
    std::ofstream(cfg_path) << configs[c];
    const std::string csv_name = c == 0 ? "pos.csv" : "crb.csv";
    std::vector<std::string> outputs;
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path out = dir / ("run" + std::to_string(c) + "_" + std::to_string(rep));
      if (!ctx.ispac_path.empty()) {
        // First run: one thread through the environment; second run: two threads by flag.
        const std::string cmd = (rep == 0 ? "ISPAC_THREADS=1 " : "") + ctx.ispac_path + " run " +
                                cfg_path.string() + " --out-dir " + out.string() +
                                (rep == 1 ? " --threads 2" : "") + " > /dev/null";
        if (std::system(cmd.c_str()) != 0) {
          pass = false;
          det << "command failed: " << cmd << "; ";
          continue;
        }
      } else {
        const ExperimentConfig cfg = load_config(cfg_path.string());
        emit_outputs(run_experiment(cfg, {rep + 1}), cfg, out.string());
      }
      outputs.push_back(slurp(out / csv_name));
    }
    const bool same = outputs.size() == 2 && !outputs[0].empty() &&
                      strip_wall_time(outputs[0]) == strip_wall_time(outputs[1]);
    pass = pass && same;
    det << csv_name << (same ? " identical" : " DIFFERS") << (c == 0 ? ", " : "");
  }
  fs::remove_all(dir);
  return {pass, det.str() + (ctx.ispac_path.empty() ? " (library runs)" : " (ispac CLI, 1 vs 2 threads)")};
}

struct Entry {
  int id;
  const char* name;
  double limit_s;  // wall-clock budget
  std::function<Outcome(Context&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> only;
  Context ctx;
  app.add_option("--only", only, "criteria to run (default: all)")->delimiter(',');
  app.add_option("--ispac", ctx.ispac_path, "path of the ispac CLI for the determinism check");
  app.add_option("--threads", ctx.threads, "worker threads for sweeps")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  const std::vector<Entry> entries = {
      {1, "FIM matches finite-difference oracles", 60, criterion1},
      {2, "CRB equals the block of the full inverse", 60, criterion2},
      {3, "estimator RMSE vs RCRB", 1800, criterion3},
      {4, "noiseless exactness", 60, criterion4},
      {5, "optimizer monotonicity and feasibility", 7200, criterion5},
      {6, "FD <= HAD(M=2) <= HAD(M=4)", 7200, criterion6},
      {7, "near-field beats far-field design", 10800, criterion7},
      {8, "tr(CRB) non-decreasing in QoS", 10800, criterion8},
      {9, "algebraic identities", 60, criterion9},
      {10, "determinism", 600, criterion10},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failed = 0;
  for (const Entry& e : entries) {
    if (!selected.empty() && !selected.count(e.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = e.run(ctx);
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    const double secs = seconds_since(t0);
    if (secs > e.limit_s) {
      o.pass = false;
      o.detail += "; exceeded runtime budget of " + fmt("%.0f", e.limit_s) + " s";
    }
    failed += !o.pass;
    std::printf("CRITERION %d %s [%.1f s] %s: %s\n", e.id, o.pass ? "PASS" : "FAIL", secs, e.name,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
