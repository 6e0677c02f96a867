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

#include "ispac/geometry.hpp"

namespace ispac {

// Partially connected hybrid precoder: RF chain i drives antennas [iM, (i+1)M).
class HadPrecoder {
 public:
  HadPrecoder() = default;
  HadPrecoder(RVec phases, int n_rf);
  static HadPrecoder from_vector(const CVec& f, int n_rf);
  // Fully digital special case (N_RF = N_a, F = I).
  static HadPrecoder identity(int n);

  int n_antennas() const { return static_cast<int>(phases_.size()); }
  int n_rf() const { return n_rf_; }
  int sub_array() const { return n_rf_ > 0 ? n_antennas() / n_rf_ : 0; }
  const RVec& phases() const { return phases_; }

  CVec f() const;       // unit-modulus phase vector
  CMat F() const;       // N_a x N_RF
  CMat F_tilde() const; // diag(f)
  CMat Phi() const;     // selection matrix, F = F_tilde Phi

 private:
  RVec phases_;
  int n_rf_ = 0;
};

CMat make_phi(int n_antennas, int n_rf);

struct DownlinkTx {
  CMat w_digital;  // N_RF x K
  CMat r_probe;    // N_RF x N_RF
  CMat r_tilde() const { return w_digital * w_digital.adjoint() + r_probe; }
};

struct UplinkTx {
  CMat r_probe;                // N_b x N_b
  std::vector<CVec> combiners; // length N_RF each
};

struct ScenarioConfig {
  double p_d = 1.0;
  double p_s = 0.1;
  double p_u = 0.1;
  double sigma0_sq = 1e-11;
  double sigma_d_sq = 1e-11;
  double sigma_u_sq = 1e-11;
  int t_slots = 256;
  int k_users = 4;
  std::vector<double> qos;  // linear SINR targets, one per user
  void validate(int n_b) const;
};

HadPrecoder assemble_analog(const RVec& phases, int n_rf);

double downlink_sinr(const std::vector<CVec>& h, int k, const HadPrecoder& had,
                     const DownlinkTx& tx, double sigma0_sq);

// Interference-plus-noise covariance seen by user k at the MT.
CMat uplink_interference_covariance(const std::vector<CVec>& h, int k, const CMat& g,
                                    const CMat& r_u, double p_u, double sigma_u_sq);

double uplink_sinr(const std::vector<CVec>& h, int k, const HadPrecoder& had,
                   const CVec& combiner, const CMat& r_u, const CMat& g, double p_u,
                   double sigma_u_sq);

// Standard circularly-symmetric complex Gaussian matrix with unit variance entries.
CMat complex_gaussian(int rows, int cols, Rng& rng);
// Columns drawn from CN(0, R); negative eigenvalues down to -1e-10 scale are clipped.
CMat sample_covariance_columns(const CMat& r, int cols, Rng& rng);

CMat synth_downlink_frames(const HadPrecoder& had, const DownlinkTx& tx, int t_slots, Rng& rng);
CMat synth_downlink_echo(const CMat& x, const SensingChannel& g, double sigma_d_sq, Rng& rng);

struct UplinkEcho {
  CMat y;      // N_RF x T
  CMat probe;  // N_b x T, known to the BS
};
UplinkEcho synth_uplink_echo(const HadPrecoder& had, const SensingChannel& g, const CMat& r_u,
                             int t_slots, double sigma_u_sq, Rng& rng);

}  // namespace ispac
