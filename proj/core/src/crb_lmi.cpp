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

#include "crb_lmi.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ispac::detail {

CrbScaling CrbScaling::from(const Fim4& j0) {
  CrbScaling sc;
  for (int l = 0; l < 2; ++l) {
    if (!(j0.j11(l, l) > 0)) throw std::domain_error("reference FIM has a zero diagonal entry");
    sc.d(l) = 1.0 / std::sqrt(j0.j11(l, l));
  }
  if (!(j0.j22(0, 0) > 0)) throw std::domain_error("reference FIM has no gain information");
  sc.e = 1.0 / std::sqrt(j0.j22(0, 0));
  sc.c0 = crb_from_fim(j0).trace();
  return sc;
}

CrbBlock add_crb_epigraph(SdpProblem& p, const FimKernel& k, const HermVar& x,
                          const CrbScaling& sc) {
  CrbBlock blk;
  blk.u = p.add_symmetric(2);
  blk.v = p.add_symmetric(2);

  LinExpr j11[2][2];
  for (int l = 0; l < 2; ++l) {
    for (int q = l; q < 2; ++q) {
      j11[l][q] = (k.s11 * sc.d(l) * sc.d(q)) * x.re_trace_with(k.m[l][q]);
      j11[q][l] = j11[l][q];
    }
  }
  LinExpr j12[2][2];
  for (int l = 0; l < 2; ++l) {
    const CLinExpr t = std::conj(k.beta) * x.trace_with(k.n[l]);
    const double w = k.s12 * sc.d(l) * sc.e;
    j12[l][0] = w * t.real();
    j12[l][1] = -w * t.imag();
  }
  const LinExpr j22 = (k.s12 * sc.e * sc.e) * x.re_trace_with(k.n0);

  p.add_psd(4, [&](int a, int b) -> LinExpr {
    if (b < 2) return j11[a][b] - blk.u.entry(a, b);
    if (a < 2) return j12[a][b - 2];
    return a == b ? j22 : LinExpr(0.0);
  });

  const Eigen::Matrix2d dn = sc.dn();
  p.add_psd(4, [&](int a, int b) -> LinExpr {
    if (b < 2) return blk.v.entry(a, b);
    if (a < 2) return LinExpr(dn(a, b - 2));
    return blk.u.entry(a - 2, b - 2);
  });
  blk.objective = blk.v.entry(0, 0) + blk.v.entry(1, 1);
  return blk;
}

double scaled_crb_value(const RMat& u_scaled, const CrbScaling& sc) {
  Eigen::SelfAdjointEigenSolver<RMat> es(0.5 * (u_scaled + u_scaled.transpose()));
  if (!(es.eigenvalues().minCoeff() > 0)) return std::numeric_limits<double>::infinity();
  const Eigen::Matrix2d dn = sc.dn();
  return (dn * u_scaled.inverse() * dn).trace();
}

double normalized_trace_crb(const Fim4& j, const CrbScaling& sc) {
  try {
    return crb_from_fim(j).trace() / sc.c0;
  } catch (const std::domain_error&) {
    return std::numeric_limits<double>::infinity();
  }
}

std::vector<LinExpr> hermitian_components(int n, const std::function<CLinExpr(int, int)>& entry) {
  std::vector<LinExpr> v;
  v.reserve(static_cast<size_t>(n) * n);
  const double r2 = std::sqrt(2.0);
  for (int a = 0; a < n; ++a) v.push_back(entry(a, a).real());
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const CLinExpr e = entry(a, b);
      v.push_back(r2 * e.real());
      v.push_back(r2 * e.imag());
    }
  }
  return v;
}

void add_quadratic_epigraph(SdpProblem& p, const std::vector<LinExpr>& v, double c,
                            const LinExpr& t) {
  if (!(c > 0)) throw std::invalid_argument("quadratic weight must be positive");
  std::vector<LinExpr> w;
  w.reserve(v.size() + 1);
  const double s = 2.0 * std::sqrt(c);
  for (const auto& e : v) w.push_back(s * e);
  w.push_back(t - LinExpr(1.0));
  p.add_soc(t + LinExpr(1.0), w);
}

CLinExpr congruence_entry(const CMat& f, const HermVar& x, int a, int b) {
  CLinExpr out;
  for (int i = 0; i < f.cols(); ++i) {
    if (f(a, i) == cd(0.0, 0.0)) continue;
    for (int j = 0; j < f.cols(); ++j) {
      if (f(b, j) == cd(0.0, 0.0)) continue;
      out += (f(a, i) * std::conj(f(b, j))) * x.entry(i, j);
    }
  }
  return out;
}

double max_abs_entry(const CMat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace ispac::detail
