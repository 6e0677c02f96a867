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

#include <array>

#include "ispac/geometry.hpp"
#include "ispac/signal.hpp"

namespace ispac {

struct TargetParams {
  double theta_rad = 0.0;
  double range_m = 1.0;
  double beta_re = 1.0;
  double beta_im = 0.0;
};

struct Fim4 {
  Eigen::Matrix2d j11 = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d j12 = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d j22 = Eigen::Matrix2d::Zero();
  Eigen::Matrix4d assembled() const;
  static Fim4 from_matrix(const Eigen::Matrix4d& j);
};

struct Crb2 {
  Eigen::Matrix2d matrix = Eigen::Matrix2d::Zero();
  double trace() const { return matrix.trace(); }
  double rcrb_theta() const { return std::sqrt(matrix(0, 0)); }
  double rcrb_range() const { return std::sqrt(matrix(1, 1)); }
};

struct GMatrixDerivs {
  CMat g_tilde;   // a b^T
  CMat g_dtheta;  // (da/dtheta) b^T + a (db/dtheta)^T
  CMat g_dr;      // (da/dr) b^T
};

GMatrixDerivs g_derivatives(const ArrayConfig& cfg_mt, const ArrayConfig& cfg_at,
                            const PolarPoint& target);
// Far-field model derivatives (no range dependence; g_dr is zero).
GMatrixDerivs g_derivatives_far_field(const ArrayConfig& cfg_mt, const ArrayConfig& cfg_at,
                                      double theta);

// Every FIM entry is linear in one Hermitian design matrix X:
//   J11(l,p) = s11 Re tr(X M[l][p]),  t_l = tr(X N[l]),
//   J12(l,:) = s12 [Re(conj(beta) t_l), -Im(conj(beta) t_l)],  J22 = s12 Re tr(X N0) I.
struct FimKernel {
  std::array<std::array<CMat, 2>, 2> m;
  std::array<CMat, 2> n;
  CMat n0;
  double s11 = 0.0;
  double s12 = 0.0;
  cd beta{1.0, 0.0};

  Fim4 evaluate(const CMat& x) const;
  Eigen::Index dim() const { return n0.rows(); }
};

// Design matrix Q = F R_tilde F^H (N_a x N_a).
FimKernel downlink_kernel(const GMatrixDerivs& d, cd beta, int t_slots, double sigma_sq);
// Design matrix Q = F F^H for fixed probe covariance R_u.
FimKernel uplink_kernel_q(const GMatrixDerivs& d, const CMat& r_u, cd beta, int t_slots,
                          double sigma_sq);
// Design matrix R_u for fixed Q = F F^H.
FimKernel uplink_kernel_r(const GMatrixDerivs& d, const CMat& q, cd beta, int t_slots,
                          double sigma_sq);

Fim4 fim_downlink(const CMat& q, const GMatrixDerivs& d, cd beta, int t_slots, double sigma_d_sq);
Fim4 fim_uplink(const HadPrecoder& had, const GMatrixDerivs& d, const CMat& r_u, cd beta,
                int t_slots, double sigma_u_sq);
// Same FIM with the analog precoder entering only through Q = F F^H.
Fim4 fim_uplink_q(const CMat& q, const GMatrixDerivs& d, const CMat& r_u, cd beta, int t_slots,
                  double sigma_u_sq);

// (J11 - J12 J22^{-1} J12^T)^{-1}; throws std::domain_error when the Schur block is singular.
Crb2 crb_from_fim(const Fim4& fim);

}  // namespace ispac
