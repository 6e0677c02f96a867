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

#include "ispac/sdp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "ispac/signal.hpp"

namespace ispac {

LinExpr LinExpr::var(int i, double coef) {
  LinExpr e;
  e.terms.emplace_back(i, coef);
  return e;
}

LinExpr& LinExpr::operator+=(const LinExpr& o) {
  terms.insert(terms.end(), o.terms.begin(), o.terms.end());
  constant += o.constant;
  return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& o) {
  for (const auto& [i, v] : o.terms) terms.emplace_back(i, -v);
  constant -= o.constant;
  return *this;
}

LinExpr& LinExpr::operator*=(double s) {
  for (auto& t : terms) t.second *= s;
  constant *= s;
  return *this;
}

double LinExpr::eval(const RVec& x) const {
  double v = constant;
  for (const auto& [i, c] : terms) v += c * x(i);
  return v;
}

LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
LinExpr operator*(double s, LinExpr a) { return a *= s; }

CLinExpr& CLinExpr::operator+=(const CLinExpr& o) {
  terms.insert(terms.end(), o.terms.begin(), o.terms.end());
  constant += o.constant;
  return *this;
}

CLinExpr& CLinExpr::operator-=(const CLinExpr& o) {
  for (const auto& [i, v] : o.terms) terms.emplace_back(i, -v);
  constant -= o.constant;
  return *this;
}

CLinExpr& CLinExpr::operator*=(cd s) {
  for (auto& t : terms) t.second *= s;
  constant *= s;
  return *this;
}

CLinExpr CLinExpr::conj() const {
  CLinExpr e;
  e.terms.reserve(terms.size());
  for (const auto& [i, v] : terms) e.terms.emplace_back(i, std::conj(v));
  e.constant = std::conj(constant);
  return e;
}

LinExpr CLinExpr::real() const {
  LinExpr e;
  for (const auto& [i, v] : terms) {
    if (v.real() != 0.0) e.terms.emplace_back(i, v.real());
  }
  e.constant = constant.real();
  return e;
}

LinExpr CLinExpr::imag() const {
  LinExpr e;
  for (const auto& [i, v] : terms) {
    if (v.imag() != 0.0) e.terms.emplace_back(i, v.imag());
  }
  e.constant = constant.imag();
  return e;
}

cd CLinExpr::eval(const RVec& x) const {
  cd v = constant;
  for (const auto& [i, c] : terms) v += c * x(i);
  return v;
}

CLinExpr operator+(CLinExpr a, const CLinExpr& b) { return a += b; }
CLinExpr operator-(CLinExpr a, const CLinExpr& b) { return a -= b; }
CLinExpr operator*(cd s, CLinExpr a) { return a *= s; }

int HermVar::re_index(int a, int b) const {
  const int p = a * n - a * (a + 1) / 2 + (b - a - 1);
  return offset + n + 2 * p;
}

CLinExpr HermVar::entry(int a, int b) const {
  CLinExpr e;
  if (a == b) {
    e.terms.emplace_back(offset + a, cd(1.0, 0.0));
  } else if (a < b) {
    const int k = re_index(a, b);
    e.terms.emplace_back(k, cd(1.0, 0.0));
    e.terms.emplace_back(k + 1, cd(0.0, 1.0));
  } else {
    const int k = re_index(b, a);
    e.terms.emplace_back(k, cd(1.0, 0.0));
    e.terms.emplace_back(k + 1, cd(0.0, -1.0));
  }
  return e;
}

CLinExpr HermVar::trace_with(const CMat& m) const {
  CLinExpr e;
  e.terms.reserve(static_cast<size_t>(n) * n);
  for (int a = 0; a < n; ++a) e.terms.emplace_back(offset + a, m(a, a));
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const int k = re_index(a, b);
      e.terms.emplace_back(k, m(a, b) + m(b, a));
      e.terms.emplace_back(k + 1, cd(0.0, 1.0) * (m(b, a) - m(a, b)));
    }
  }
  return e;
}

LinExpr HermVar::re_trace_with(const CMat& m) const { return trace_with(m).real(); }

LinExpr SymVar::entry(int a, int b) const {
  if (a > b) std::swap(a, b);
  const int p = a * n - a * (a - 1) / 2 + (b - a);
  return LinExpr::var(offset + p);
}

const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::kOptimal: return "OPTIMAL";
    case SdpStatus::kInfeasible: return "INFEASIBLE";
    case SdpStatus::kUnbounded: return "UNBOUNDED";
    case SdpStatus::kMaxIter: return "MAX_ITER";
  }
  return "UNKNOWN";
}

CMat SdpSolution::value(const HermVar& v) const {
  CMat m(v.n, v.n);
  for (int a = 0; a < v.n; ++a) {
    for (int b = 0; b < v.n; ++b) m(a, b) = v.entry(a, b).eval(x);
  }
  return m;
}

RMat SdpSolution::value(const SymVar& v) const {
  RMat m(v.n, v.n);
  for (int a = 0; a < v.n; ++a) {
    for (int b = 0; b < v.n; ++b) m(a, b) = v.entry(a, b).eval(x);
  }
  return m;
}

int SdpProblem::add_scalar() { return nvars_++; }

HermVar SdpProblem::add_hermitian(int n) {
  HermVar v{n, nvars_};
  nvars_ += n * n;
  return v;
}

SymVar SdpProblem::add_symmetric(int n) {
  SymVar v{n, nvars_};
  nvars_ += n * (n + 1) / 2;
  return v;
}

void SdpProblem::add_le(const LinExpr& e) { le_.push_back(e); }
void SdpProblem::add_eq(const LinExpr& e) { eq_.push_back(e); }

void SdpProblem::add_soc(const LinExpr& t, const std::vector<LinExpr>& v) { soc_.push_back({t, v}); }

void SdpProblem::add_psd(int n, const std::function<LinExpr(int, int)>& entry) {
  Psd p{n, std::vector<LinExpr>(static_cast<size_t>(n) * n)};
  for (int b = 0; b < n; ++b) {
    for (int a = 0; a <= b; ++a) {
      LinExpr e = entry(a, b);
      p.entries[a + b * n] = e;
      p.entries[b + a * n] = e;
    }
  }
  psd_.push_back(std::move(p));
}

void SdpProblem::add_hermitian_psd(int n, const std::function<CLinExpr(int, int)>& entry) {
  const int m = 2 * n;
  Psd p{m, std::vector<LinExpr>(static_cast<size_t>(m) * m)};
  for (int b = 0; b < n; ++b) {
    for (int a = 0; a <= b; ++a) {
      const CLinExpr e = entry(a, b);
      const LinExpr re = e.real();
      const LinExpr im = e.imag();
      const LinExpr mim = -1.0 * im;
      // [Re -Im; Im Re] with M_ba = conj(M_ab).
      auto put = [&](int r, int c, const LinExpr& v) {
        p.entries[r + c * m] = v;
        p.entries[c + r * m] = v;
      };
      put(a, b, re);
      put(a + n, b + n, re);
      put(a, b + n, mim);
      put(a + n, b, im);
    }
  }
  psd_.push_back(std::move(p));
}

void SdpProblem::add_hermitian_psd(const HermVar& v) {
  add_hermitian_psd(v.n, [&](int a, int b) { return v.entry(a, b); });
}

double SdpProblem::max_violation(const RVec& x) const {
  double viol = 0.0;
  for (const auto& e : le_) viol = std::max(viol, e.eval(x));
  for (const auto& e : eq_) viol = std::max(viol, std::abs(e.eval(x)));
  for (const auto& s : soc_) {
    double nrm = 0.0;
    for (const auto& e : s.v) nrm += std::pow(e.eval(x), 2);
    viol = std::max(viol, std::sqrt(nrm) - s.t.eval(x));
  }
  for (const auto& p : psd_) {
    RMat m(p.n, p.n);
    for (int i = 0; i < p.n * p.n; ++i) m(i % p.n, i / p.n) = p.entries[i].eval(x);
    Eigen::SelfAdjointEigenSolver<RMat> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
    viol = std::max(viol, -es.eigenvalues()(0));
  }
  return viol;
}

SdpSolution SdpProblem::solve(const SolverSettings& settings) const {
  conic::Problem cp;
  const int n = nvars_;
  cp.c = RVec::Zero(n);
  for (const auto& [i, v] : objective_.terms) cp.c(i) += v;

  cp.dims.l = static_cast<int>(le_.size());
  for (const auto& s : soc_) cp.dims.q.push_back(1 + static_cast<int>(s.v.size()));
  for (const auto& p : psd_) cp.dims.s.push_back(p.n);
  const int m = cp.dims.size();
  cp.G = RMat::Zero(m, n);
  cp.h = RVec::Zero(m);
  int row = 0;
  // Cone rows hold s = expr, i.e. G = -coef and h = constant; LP rows hold s = -expr.
  auto cone_row = [&](const LinExpr& e) {
    for (const auto& [i, v] : e.terms) cp.G(row, i) -= v;
    cp.h(row) = e.constant;
    ++row;
  };
  for (const auto& e : le_) {
    for (const auto& [i, v] : e.terms) cp.G(row, i) += v;
    cp.h(row) = -e.constant;
    ++row;
  }
  for (const auto& s : soc_) {
    cone_row(s.t);
    for (const auto& e : s.v) cone_row(e);
  }
  for (const auto& p : psd_) {
    for (const auto& e : p.entries) cone_row(e);
  }

  const int p = static_cast<int>(eq_.size());
  cp.A = RMat::Zero(p, n);
  cp.b = RVec::Zero(p);
  for (int r = 0; r < p; ++r) {
    for (const auto& [i, v] : eq_[r].terms) cp.A(r, i) += v;
    cp.b(r) = -eq_[r].constant;
  }

  conic::Settings cs;
  cs.tol = settings.tolerance;
  cs.max_iter = settings.max_iterations;
  cs.verbose = settings.verbose;
  const conic::Result r = conic::solve(cp, cs);

  SdpSolution sol;
  switch (r.status) {
    case conic::Status::kOptimal: sol.status = SdpStatus::kOptimal; break;
    case conic::Status::kInfeasible: sol.status = SdpStatus::kInfeasible; break;
    case conic::Status::kUnbounded: sol.status = SdpStatus::kUnbounded; break;
    case conic::Status::kMaxIter: sol.status = SdpStatus::kMaxIter; break;
  }
  sol.near_optimal = r.near_optimal;
  sol.iterations = r.iterations;
  sol.message = r.message;
  if (r.x.size() == n) {
    sol.x = r.x;
    sol.objective = objective_.eval(sol.x);
    sol.max_violation = max_violation(sol.x);
  }
  return sol;
}

CVec canonical_unit_modulus(const CVec& v) {
  CVec f(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v(i));
    f(i) = a > 0 ? v(i) / a : cd(1.0, 0.0);
  }
  if (f.size() > 0) f *= std::conj(f(0));
  return f;
}

CVec rank_one_downlink_recovery(const CMat& w_sdr, const CVec& h_tilde) {
  const CVec wh = w_sdr * h_tilde.conjugate();
  const double denom = (h_tilde.transpose() * wh)(0).real();
  const double scale = std::max(1.0, w_sdr.cwiseAbs().maxCoeff()) * h_tilde.squaredNorm();
  if (!(denom > 1e-14 * scale)) throw std::domain_error("degenerate beam: h^T W h* is ~0");
  CVec w = wh / std::sqrt(denom);
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (std::abs(w(i)) > 0) {
      w *= std::polar(1.0, -std::arg(w(i)));
      break;
    }
  }
  return w;
}

RandomizationResult gaussian_randomization(const CMat& x_sdr, const CandidateEvaluator& evaluate,
                                           int n_samples, Rng& rng,
                                           const std::vector<CVec>& extra_candidates) {
  RandomizationResult out;
  out.objective = std::numeric_limits<double>::infinity();
  auto consider = [&](const CVec& cand) {
    const std::optional<double> v = evaluate(cand);
    if (!v) return;
    ++out.feasible_samples;
    if (*v < out.objective) {
      out.objective = *v;
      out.candidate = cand;
      out.status = RandomizationStatus::kOk;
    }
  };
  for (const auto& c : extra_candidates) consider(canonical_unit_modulus(c));
  const int n = static_cast<int>(x_sdr.rows());
  const CMat herm = 0.5 * (x_sdr + x_sdr.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(herm);
  const CMat factor = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  for (int i = 0; i < n_samples; ++i) {
    const CVec xi = factor * complex_gaussian(n, 1, rng);
    consider(canonical_unit_modulus(xi));
  }
  return out;
}

}  // namespace ispac
