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

#include <limits>
#include <string>
#include <vector>

#include "ispac/fim.hpp"
#include "ispac/sdp.hpp"
#include "ispac/signal.hpp"

namespace ispac {

// Everything the downlink design needs about one channel realization.
struct DownlinkScenario {
  std::vector<CVec> h;  // user channels, N_a each
  GMatrixDerivs g;      // sensing channel and its derivatives at the target
  cd beta{1.0, 0.0};
  double p_d = 1.0;
  double sigma0_sq = 1e-11;
  double sigma_d_sq = 1e-11;
  int t_slots = 256;
  std::vector<double> gamma;  // linear SINR targets
  int n_rf = 4;

  int n_antennas() const { return static_cast<int>(g.g_tilde.rows()); }
  int k_users() const { return static_cast<int>(h.size()); }
  bool fully_digital() const { return n_rf == n_antennas(); }
  void validate() const;
};

struct PddSettings {
  double rho0 = 1.0;
  double mu = 0.6;
  double eps_ao = 1e-3;
  double eps_pdd = 1e-4;
  int max_outer = 50;
  int max_inner = 10;
  int n_samples = 200;
  int init_attempts = 10;
  SolverSettings solver;
};

struct PddState {
  double rho = 1.0;
  CMat upsilon;  // dual matrix, normalized units
  double eta = std::numeric_limits<double>::infinity();
  double mu = 0.6;
  int outer_iter = 0;
  int inner_iter = 0;
  void validate() const;
  // Dual update when the violation is small enough, penalty shrink otherwise.
  // Returns true when the dual branch was taken.
  bool update(const CMat& residual, double violation);
};

enum class OptStatus { kConverged, kConvergenceNotReached, kInfeasible, kSolverFailure };
const char* to_string(OptStatus s);

// Block {U, Q, R_tilde, W} of the augmented Lagrangian; covariances normalized by P_d.
struct DigitalDownlink {
  SdpStatus status = SdpStatus::kMaxIter;
  bool ok = false;
  RMat u_scaled;   // U' (congruence-scaled U)
  CMat q;          // N_a x N_a
  CMat w;          // N_RF x K, rank-one beams after recovery
  CMat r_d;        // N_RF x N_RF
  double al_objective = 0.0;
  std::string message;
  CMat r_tilde() const { return w * w.adjoint() + r_d; }
};

struct AnalogDownlink {
  HadPrecoder had;
  bool sample_found = false;  // false: incumbent kept (no feasible random sample)
  double sdr_bound = 0.0;     // SDR objective, a lower bound for the randomized one
  double objective = 0.0;     // ||Q - F R F^H - rho Y||^2 at the returned f
  CMat f_sdr;
  SdpStatus status = SdpStatus::kMaxIter;
};

struct DownlinkSolution {
  OptStatus status = OptStatus::kConvergenceNotReached;
  HadPrecoder had;
  DownlinkTx tx;          // physical units
  RMat u_matrix;          // 2x2 (unscaled) bound U with CRB <= U^{-1}
  CMat q_matrix;          // physical units
  Crb2 crb;               // exact CRB of (F, W, R_d)
  double initial_trace_crb = 0.0;
  std::vector<double> objective_trace;  // augmented Lagrangian after each block update
  std::vector<int> objective_outer;     // outer index of each objective_trace entry
  std::vector<double> violation_trace;  // per outer iteration, normalized by P_d
  std::vector<double> crb_trace;        // exact tr(CRB) of the consistent iterate per outer iteration
  int outer_iterations = 0;
  int sdp_solves = 0;
  std::string message;
};

// Internal normalization shared by the blocks below.
struct DownlinkContext {
  const DownlinkScenario* scenario = nullptr;
  FimKernel kernel;  // applies to P_d-normalized Q
  double sigma0_hat = 0.0;
  double crb_c0 = 1.0;
  Eigen::Vector2d crb_d = Eigen::Vector2d::Ones();
  double crb_e = 1.0;
  SolverSettings solver;
};

DownlinkContext make_downlink_context(const DownlinkScenario& sc, const CMat& q_ref_hat,
                                      const SolverSettings& solver = {});

// SDR of the {U, Q, R_tilde, W} subproblem followed by rank-one beam recovery.
// For a fully digital array Q is replaced by R_tilde and the penalty vanishes.
DigitalDownlink solve_digital_downlink(const DownlinkContext& ctx, const HadPrecoder& had,
                                       const PddState& pdd);

// SDR of the analog subproblem over ff^H with Gaussian randomization; the incumbent
// phases are always a candidate, so the returned objective never exceeds the incumbent's.
AnalogDownlink solve_analog_downlink(const DownlinkContext& ctx, const DigitalDownlink& digital,
                                     const HadPrecoder& incumbent, const PddState& pdd,
                                     int n_samples, Rng& rng);

// Terms V_r = diag(sqrt(rho_r) v_r) of the eigen-decomposition of Phi R Phi^H, so that
// F R F^H = sum_r V_r (f f^H) V_r^H.
std::vector<CMat> analog_eigen_terms(const CMat& phi, const CMat& r_tilde);

// Exact augmented Lagrangian value for a digital block and analog precoder.
double downlink_al_value(const DownlinkContext& ctx, const DigitalDownlink& d,
                         const HadPrecoder& had, const PddState& pdd);

DownlinkSolution pdd_downlink(const DownlinkScenario& sc, const PddSettings& settings, Rng& rng);

// Independent audit of a final design: SINR, power, unit modulus and PSD checks.
struct DownlinkAudit {
  double min_sinr_margin = 0.0;  // min_k (SINR_k - gamma_k)
  double power_excess = 0.0;     // tr(W W^H + R_d) - P_d
  double modulus_error = 0.0;    // max | |f_n| - 1 |
  double min_eig_rd = 0.0;       // relative to P_d
  bool pass(double tol = 1e-6) const;
};
DownlinkAudit audit_downlink(const DownlinkScenario& sc, const HadPrecoder& had,
                             const DownlinkTx& tx);

}  // namespace ispac
