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

#include "ispac/fim.hpp"

#include <stdexcept>

namespace ispac {

namespace {
// tr(X M) without forming the product.
cd trace_product(const CMat& x, const CMat& m) { return (x.transpose().cwiseProduct(m)).sum(); }

void check_hermitian(const CMat& x, const char* what) {
  if (x.rows() != x.cols()) throw std::invalid_argument(std::string(what) + " must be square");
  const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
  if ((x - x.adjoint()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw std::invalid_argument(std::string(what) + " must be Hermitian");
  }
}
}  // namespace

Eigen::Matrix4d Fim4::assembled() const {
  Eigen::Matrix4d j;
  j << j11, j12, j12.transpose(), j22;
  return j;
}

Fim4 Fim4::from_matrix(const Eigen::Matrix4d& j) {
  Fim4 f;
  f.j11 = j.topLeftCorner<2, 2>();
  f.j12 = j.topRightCorner<2, 2>();
  f.j22 = j.bottomRightCorner<2, 2>();
  return f;
}

GMatrixDerivs g_derivatives(const ArrayConfig& cfg_mt, const ArrayConfig& cfg_at,
                            const PolarPoint& target) {
  const CVec a = near_field_steering(cfg_mt, target);
  const SteeringDerivatives da = steering_derivatives(cfg_mt, target);
  const CVec b = far_field_steering(cfg_at, target.theta_rad);
  const CVec db = far_field_derivative(cfg_at, target.theta_rad);
  GMatrixDerivs d;
  d.g_tilde = a * b.transpose();
  d.g_dtheta = da.da_dtheta * b.transpose() + a * db.transpose();
  d.g_dr = da.da_dr * b.transpose();
  return d;
}

GMatrixDerivs g_derivatives_far_field(const ArrayConfig& cfg_mt, const ArrayConfig& cfg_at,
                                      double theta) {
  const CVec a = far_field_steering(cfg_mt, theta);
  const CVec da = far_field_derivative(cfg_mt, theta);
  const CVec b = far_field_steering(cfg_at, theta);
  const CVec db = far_field_derivative(cfg_at, theta);
  GMatrixDerivs d;
  d.g_tilde = a * b.transpose();
  d.g_dtheta = da * b.transpose() + a * db.transpose();
  d.g_dr = CMat::Zero(a.size(), b.size());
  return d;
}

Fim4 FimKernel::evaluate(const CMat& x) const {
  Fim4 f;
  for (int l = 0; l < 2; ++l) {
    for (int p = 0; p < 2; ++p) f.j11(l, p) = s11 * trace_product(x, m[l][p]).real();
    const cd t = std::conj(beta) * trace_product(x, n[l]);
    f.j12(l, 0) = s12 * t.real();
    f.j12(l, 1) = -s12 * t.imag();
  }
  f.j22 = s12 * trace_product(x, n0).real() * Eigen::Matrix2d::Identity();
  f.j11 = 0.5 * (f.j11 + f.j11.transpose()).eval();
  return f;
}

FimKernel downlink_kernel(const GMatrixDerivs& d, cd beta, int t_slots, double sigma_sq) {
  const std::array<const CMat*, 2> gd{&d.g_dtheta, &d.g_dr};
  FimKernel k;
  for (int l = 0; l < 2; ++l) {
    for (int p = 0; p < 2; ++p) k.m[l][p] = gd[l]->conjugate() * gd[p]->transpose();
    k.n[l] = gd[l]->conjugate() * d.g_tilde.transpose();
  }
  k.n0 = d.g_tilde.conjugate() * d.g_tilde.transpose();
  k.s11 = 2.0 * std::norm(beta) * t_slots / sigma_sq;
  k.s12 = 2.0 * t_slots / sigma_sq;
  k.beta = beta;
  return k;
}

FimKernel uplink_kernel_q(const GMatrixDerivs& d, const CMat& r_u, cd beta, int t_slots,
                          double sigma_sq) {
  const std::array<const CMat*, 2> gd{&d.g_dtheta, &d.g_dr};
  FimKernel k;
  for (int l = 0; l < 2; ++l) {
    for (int p = 0; p < 2; ++p) k.m[l][p] = *gd[p] * r_u * gd[l]->adjoint();
    k.n[l] = d.g_tilde * r_u * gd[l]->adjoint();
  }
  k.n0 = d.g_tilde * r_u * d.g_tilde.adjoint();
  k.s11 = 2.0 * std::norm(beta) * t_slots / sigma_sq;
  k.s12 = 2.0 * t_slots / sigma_sq;
  k.beta = beta;
  return k;
}

FimKernel uplink_kernel_r(const GMatrixDerivs& d, const CMat& q, cd beta, int t_slots,
                          double sigma_sq) {
  const std::array<const CMat*, 2> gd{&d.g_dtheta, &d.g_dr};
  FimKernel k;
  for (int l = 0; l < 2; ++l) {
    for (int p = 0; p < 2; ++p) k.m[l][p] = gd[l]->adjoint() * q * *gd[p];
    k.n[l] = gd[l]->adjoint() * q * d.g_tilde;
  }
  k.n0 = d.g_tilde.adjoint() * q * d.g_tilde;
  k.s11 = 2.0 * std::norm(beta) * t_slots / sigma_sq;
  k.s12 = 2.0 * t_slots / sigma_sq;
  k.beta = beta;
  return k;
}

Fim4 fim_downlink(const CMat& q, const GMatrixDerivs& d, cd beta, int t_slots, double sigma_d_sq) {
  check_hermitian(q, "Q");
  return downlink_kernel(d, beta, t_slots, sigma_d_sq).evaluate(q);
}

Fim4 fim_uplink(const HadPrecoder& had, const GMatrixDerivs& d, const CMat& r_u, cd beta,
                int t_slots, double sigma_u_sq) {
  check_hermitian(r_u, "R_u");
  const CMat f = had.F();
  return uplink_kernel_r(d, f * f.adjoint(), beta, t_slots, sigma_u_sq).evaluate(r_u);
}

Fim4 fim_uplink_q(const CMat& q, const GMatrixDerivs& d, const CMat& r_u, cd beta, int t_slots,
                  double sigma_u_sq) {
  check_hermitian(q, "Q");
  check_hermitian(r_u, "R_u");
  return uplink_kernel_q(d, r_u, beta, t_slots, sigma_u_sq).evaluate(q);
}

Crb2 crb_from_fim(const Fim4& fim) {
  const Eigen::Matrix2d j22 = 0.5 * (fim.j22 + fim.j22.transpose());
  const double t22 = j22.trace();
  if (!(t22 > 0) || std::abs(j22.determinant()) <= 1e-24 * t22 * t22) {
    throw std::domain_error("FIM nuisance block is singular");
  }
  Eigen::Matrix2d schur = fim.j11 - fim.j12 * j22.inverse() * fim.j12.transpose();
  schur = 0.5 * (schur + schur.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(schur);
  const double tr = std::abs(fim.j11.trace());
  if (!(es.eigenvalues()(0) >= 1e-12 * tr) || !(tr > 0)) {
    throw std::domain_error("FIM Schur complement is singular");
  }
  Crb2 c;
  c.matrix = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
             es.eigenvectors().transpose();
  return c;
}

}  // namespace ispac
