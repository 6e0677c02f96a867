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

#include <vector>

#include "ispac/optimize_downlink.hpp"
#include "ispac/optimize_uplink.hpp"

namespace ispac {

// Physical setup of one experiment; every field has a default so partial configs work.
struct ScenarioParams {
  double carrier_hz = 28e9;
  int n_mt = 64;
  int n_at = 16;
  int n_rf = 16;
  double aperture_m = 0.5;
  int k_users = 4;
  int l_paths = 2;
  int t_slots = 256;
  double p_bs_dbm = 30.0;    // downlink P_d and uplink probing P_s
  double p_user_dbm = 20.0;  // uplink P_u
  double noise_dbm = -80.0;
  double target_theta_deg = 45.0;
  double target_r_m = 20.0;
  double user_r_min_m = 20.0;
  double user_r_max_m = 30.0;
  double user_theta_min_deg = -60.0;
  double user_theta_max_deg = 60.0;

  void validate() const;
  ArrayConfig mt_array() const;
  ArrayConfig at_array() const;
};

double dbm_to_watt(double dbm);

// One channel realization. Near- and far-field user channels share every random gain.
struct ScenarioDraw {
  ArrayConfig mt;
  ArrayConfig at;
  PolarPoint target;
  std::vector<PolarPoint> users;
  std::vector<std::vector<ScattererGeometry>> scatterers;
  std::vector<CVec> h_near;
  std::vector<CVec> h_far;
  cd beta{1.0, 0.0};
};

ScenarioDraw draw_scenario(const ScenarioParams& p, Rng& rng);

enum class Variant { kHadNear, kHadFar, kFullyDigital };
const char* to_string(Variant v);
std::vector<Variant> all_variants();

// Optimizer inputs for one variant. The far-field variant models the users with
// far-field responses; the sensing link is always the near-field one.
DownlinkScenario make_downlink(const ScenarioParams& p, const ScenarioDraw& d, Variant v,
                               double gamma_db);
UplinkScenario make_uplink(const ScenarioParams& p, const ScenarioDraw& d, Variant v,
                           double gamma_db);

}  // namespace ispac
