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

// Internal helpers shared by the downlink and uplink optimizers.

#include "ispac/fim.hpp"
#include "ispac/sdp.hpp"

namespace ispac::detail {

// Congruence scaling of the FIM LMI, fixed at a reference design:
//   U = D^{-1} U' D^{-1},  tr(U^{-1}) / c0 = tr(Dn U'^{-1} Dn),  Dn = D / sqrt(c0).
struct CrbScaling {
  Eigen::Vector2d d = Eigen::Vector2d::Ones();
  double e = 1.0;
  double c0 = 1.0;
  static CrbScaling from(const Fim4& j0);
  Eigen::Matrix2d dn() const { return (d / std::sqrt(c0)).asDiagonal(); }
};

struct CrbBlock {
  SymVar u;
  SymVar v;
  LinExpr objective;  // tr(V'), an upper bound of tr(U^{-1}) / c0
};

// Adds [[D J11 D - U', e D J12], [e J12^T D, e^2 J22]] >= 0 and [[V', Dn], [Dn, U']] >= 0,
// with J linear in the Hermitian design block x.
CrbBlock add_crb_epigraph(SdpProblem& p, const FimKernel& k, const HermVar& x,
                          const CrbScaling& sc);

// tr(Dn U'^{-1} Dn); infinity when U' is not positive definite.
double scaled_crb_value(const RMat& u_scaled, const CrbScaling& sc);

// Exact tr(CRB) / c0 of a FIM; infinity when singular.
double normalized_trace_crb(const Fim4& j, const CrbScaling& sc);

// Frobenius norm of a Hermitian matrix expression as a list of real components.
std::vector<LinExpr> hermitian_components(int n, const std::function<CLinExpr(int, int)>& entry);

// c ||v||^2 <= t  as  ||(2 sqrt(c) v, t - 1)|| <= t + 1.
void add_quadratic_epigraph(SdpProblem& p, const std::vector<LinExpr>& v, double c,
                            const LinExpr& t);

// Entry (a, b) of F X F^H for a fixed matrix F and a Hermitian variable X.
CLinExpr congruence_entry(const CMat& f, const HermVar& x, int a, int b);

double max_abs_entry(const CMat& m);

}  // namespace ispac::detail
