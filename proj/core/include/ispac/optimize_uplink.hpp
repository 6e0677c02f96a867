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

#include <string>
#include <vector>

#include "ispac/optimize_downlink.hpp"

namespace ispac {

struct UplinkScenario {
  std::vector<CVec> h;  // user channels, N_a each
  GMatrixDerivs g;
  cd beta{1.0, 0.0};
  double p_u = 0.1;
  double p_s = 0.1;
  double sigma_u_sq = 1e-11;
  int t_slots = 256;
  std::vector<double> gamma;  // linear SINR targets
  int n_rf = 4;

  int n_antennas() const { return static_cast<int>(g.g_tilde.rows()); }
  int n_at() const { return static_cast<int>(g.g_tilde.cols()); }
  int k_users() const { return static_cast<int>(h.size()); }
  bool fully_digital() const { return n_rf == n_antennas(); }
  CMat g_matrix() const { return beta * g.g_tilde; }
  void validate() const;
};

struct AoSettings {
  double eps_ao = 1e-3;
  int max_ao = 30;
  double eps_sca = 1e-3;
  int max_sca = 30;
  PddSettings pdd;  // analog subproblem; also supplies solver settings and sample count
};

// Expansion point of the SINR majorizer for every user.
struct ScaState {
  std::vector<CMat> w;  // W_k^(n), N_RF x N_RF, unit trace
  CMat r_hat;           // R_u^(n) / P_s
  int iteration = 0;
};

// tr(W B) for Hermitian W and B.
double pi_exact(const CMat& w, const CMat& b);
// Convex upper bound of tr(W B) built at (W0, B0) with balancing weight alpha:
//   1/2 ||a W + B / a||^2 - a^2 Re tr(W0 W) + a^2/2 ||W0||^2 - Re tr(B0 B) / a^2 + ||B0||^2 / (2 a^2).
double pi_upper_bound(const CMat& w, const CMat& b, const CMat& w0, const CMat& b0, double alpha);
// Balancing weight used by the optimizer: sqrt(||B0|| / ||W0||), floored.
double pi_balance(const CMat& w0, const CMat& b0);

// B_k such that SINR_k >= gamma_k  <=>  tr(f f^H B_k) >= sigma_u^2 ||w_k||^2 at fixed w_k and R_u.
CMat uplink_analog_b(const UplinkScenario& sc, int k, const CVec& w_k, const CMat& r_u);

// Unit-norm MMSE combiner of user k for a given analog precoder and probe covariance.
CVec mmse_combiner(const UplinkScenario& sc, int k, const HadPrecoder& had, const CMat& r_u);

struct ScaResult {
  bool ok = false;
  SdpStatus status = SdpStatus::kMaxIter;
  CMat r_u;                     // physical units
  std::vector<CVec> combiners;  // unit norm
  std::vector<double> trace;    // exact tr(CRB) per SCA iterate, starting point first
  int iterations = 0;
  int sdp_solves = 0;
  std::string message;
};

// SCA over {U, R_u, W_k} at fixed F. The starting point must satisfy every SINR target.
ScaResult sca_uplink_digital(const UplinkScenario& sc, const HadPrecoder& had, const CMat& r_u0,
                             const std::vector<CVec>& w0, const AoSettings& settings, Rng& rng);

struct AnalogUplink {
  HadPrecoder had;
  bool converged = false;
  bool flagged = false;  // some analog step kept the incumbent for lack of feasible samples
  bool accepted = false; // set by ao_uplink when the exact CRB did not increase
  std::vector<double> al_trace;
  std::vector<int> al_outer;
  std::vector<double> violation_trace;
  int outer_iterations = 0;
  int sdp_solves = 0;
  std::string message;
};

// PDD over {U, Q, F} at fixed R_u and combiners; returns a unit-modulus precoder that
// keeps every SINR target.
AnalogUplink pdd_uplink_analog(const UplinkScenario& sc, const HadPrecoder& had0, const CMat& r_u,
                               const std::vector<CVec>& combiners, const PddSettings& settings,
                               Rng& rng);

struct UplinkSolution {
  OptStatus status = OptStatus::kConvergenceNotReached;
  HadPrecoder had;
  UplinkTx tx;  // physical units
  RMat u_matrix;
  Crb2 crb;
  double initial_trace_crb = 0.0;
  std::vector<double> objective_trace;  // exact tr(CRB) after every AO iteration, start first
  std::vector<std::vector<double>> sca_traces;
  std::vector<AnalogUplink> analog_runs;
  int ao_iterations = 0;
  int sdp_solves = 0;
  std::string message;
};

UplinkSolution ao_uplink(const UplinkScenario& sc, const AoSettings& settings, Rng& rng);

struct UplinkAudit {
  double min_sinr_margin = 0.0;
  double power_excess = 0.0;  // (tr R_u - P_s) / P_s
  double modulus_error = 0.0;
  double min_eig_ru = 0.0;    // relative to P_s
  bool pass(double tol = 1e-6) const;
};
UplinkAudit audit_uplink(const UplinkScenario& sc, const HadPrecoder& had, const UplinkTx& tx);

}  // namespace ispac
