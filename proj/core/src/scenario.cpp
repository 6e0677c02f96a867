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

#include "ispac/scenario.hpp"

#include <cmath>
#include <stdexcept>

namespace ispac {

namespace {

double deg(double d) { return d * kPi / 180.0; }

double distance(const PolarPoint& a, const PolarPoint& b) {
  const double dx = a.range_m * std::cos(a.theta_rad) - b.range_m * std::cos(b.theta_rad);
  const double dy = a.range_m * std::sin(a.theta_rad) - b.range_m * std::sin(b.theta_rad);
  return std::hypot(dx, dy);
}

std::vector<double> targets(const ScenarioParams& p, double gamma_db) {
  return std::vector<double>(p.k_users, std::pow(10.0, gamma_db / 10.0));
}

}  // namespace

double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

void ScenarioParams::validate() const {
  if (!(carrier_hz > 0)) throw std::invalid_argument("carrier_hz must be positive");
  if (n_mt < 1 || n_at < 1) throw std::invalid_argument("array sizes must be positive");
  if (n_rf < 1 || n_mt % n_rf != 0) throw std::invalid_argument("n_mt divisible by n_rf is required");
  if (!(aperture_m > 0)) throw std::invalid_argument("aperture_m must be positive");
  if (k_users < 1) throw std::invalid_argument("k_users must be positive");
  if (l_paths < 0) throw std::invalid_argument("l_paths must be non-negative");
  if (t_slots < 1) throw std::invalid_argument("t_slots must be positive");
  if (!(target_r_m > 0)) throw std::invalid_argument("target range must be positive");
  if (!(user_r_min_m > 0) || user_r_max_m < user_r_min_m) {
    throw std::invalid_argument("user range interval is invalid");
  }
  if (user_theta_max_deg < user_theta_min_deg) throw std::invalid_argument("user angle interval is invalid");
}

ArrayConfig ScenarioParams::mt_array() const {
  if (n_mt == 1) return make_half_wavelength_array(1, carrier_hz);
  return make_array_by_aperture(n_mt, aperture_m, carrier_hz);
}

ArrayConfig ScenarioParams::at_array() const { return make_half_wavelength_array(n_at, carrier_hz); }

ScenarioDraw draw_scenario(const ScenarioParams& p, Rng& rng) {
  p.validate();
  ScenarioDraw d;
  d.mt = p.mt_array();
  d.at = p.at_array();
  d.target = PolarPoint{deg(p.target_theta_deg), p.target_r_m};
  std::uniform_real_distribution<double> ang(deg(p.user_theta_min_deg), deg(p.user_theta_max_deg));
  std::uniform_real_distribution<double> rad(p.user_r_min_m, p.user_r_max_m);
  for (int k = 0; k < p.k_users; ++k) {
    PolarPoint u;
    u.theta_rad = ang(rng);
    u.range_m = rad(rng);
    std::vector<ScattererGeometry> sc;
    for (int l = 0; l < p.l_paths; ++l) {
      ScattererGeometry s;
      s.location.theta_rad = ang(rng);
      s.location.range_m = rad(rng);
      s.user_scatter_dist_m = std::max(distance(u, s.location), 1e-3);
      sc.push_back(s);
    }
    // Both models consume the same random phases.
    Rng copy = rng;
    d.h_near.push_back(make_comm_channel(d.mt, u, sc, nyc_los(), nyc_nlos(), rng).h);
    d.h_far.push_back(make_comm_channel(d.mt, u, sc, nyc_los(), nyc_nlos(), copy, true).h);
    d.users.push_back(u);
    d.scatterers.push_back(std::move(sc));
  }
  d.beta = sensing_beta_from_path_loss(nyc_los(), p.target_r_m, rng);
  return d;
}

const char* to_string(Variant v) {
  switch (v) {
    case Variant::kHadNear: return "had-near";
    case Variant::kHadFar: return "had-far";
    case Variant::kFullyDigital: return "fd-near";
  }
  return "unknown";
}

std::vector<Variant> all_variants() {
  return {Variant::kHadNear, Variant::kHadFar, Variant::kFullyDigital};
}

DownlinkScenario make_downlink(const ScenarioParams& p, const ScenarioDraw& d, Variant v,
                               double gamma_db) {
  DownlinkScenario s;
  s.h = v == Variant::kHadFar ? d.h_far : d.h_near;
  s.g = g_derivatives(d.mt, d.at, d.target);
  s.beta = d.beta;
  s.p_d = dbm_to_watt(p.p_bs_dbm);
  s.sigma0_sq = dbm_to_watt(p.noise_dbm);
  s.sigma_d_sq = s.sigma0_sq;
  s.t_slots = p.t_slots;
  s.gamma = targets(p, gamma_db);
  s.n_rf = v == Variant::kFullyDigital ? p.n_mt : p.n_rf;
  return s;
}

UplinkScenario make_uplink(const ScenarioParams& p, const ScenarioDraw& d, Variant v,
                           double gamma_db) {
  UplinkScenario s;
  s.h = v == Variant::kHadFar ? d.h_far : d.h_near;
  s.g = g_derivatives(d.mt, d.at, d.target);
  s.beta = d.beta;
  s.p_u = dbm_to_watt(p.p_user_dbm);
  s.p_s = dbm_to_watt(p.p_bs_dbm);
  s.sigma_u_sq = dbm_to_watt(p.noise_dbm);
  s.t_slots = p.t_slots;
  s.gamma = targets(p, gamma_db);
  s.n_rf = v == Variant::kFullyDigital ? p.n_mt : p.n_rf;
  return s;
}

}  // namespace ispac
