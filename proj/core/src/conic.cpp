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

#include "ispac/conic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include <Eigen/SparseCore>

namespace ispac::conic {

int ConeDims::size() const {
  int m = l;
  for (int k : q) m += k;
  for (int k : s) m += k * k;
  return m;
}

int ConeDims::degree() const {
  int d = l + static_cast<int>(q.size());
  for (int k : s) d += k;
  return d;
}

const char* to_string(Status s) {
  switch (s) {
    case Status::kOptimal: return "OPTIMAL";
    case Status::kInfeasible: return "INFEASIBLE";
    case Status::kUnbounded: return "UNBOUNDED";
    case Status::kMaxIter: return "MAX_ITER";
  }
  return "UNKNOWN";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// A best iterate within this factor of the tolerance counts as near optimal.
constexpr double kNearFactor = 1e3;
constexpr int kStallIters = 5;

struct Layout {
  ConeDims dims;
  std::vector<int> q_off;
  std::vector<int> s_off;
  int m = 0;

  explicit Layout(const ConeDims& d) : dims(d) {
    int off = d.l;
    for (int k : d.q) {
      if (k < 1) throw std::invalid_argument("second-order cone dimension must be >= 1");
      q_off.push_back(off);
      off += k;
    }
    for (int k : d.s) {
      if (k < 1) throw std::invalid_argument("PSD cone order must be >= 1");
      s_off.push_back(off);
      off += k * k;
    }
    m = off;
  }
};

using MapM = Eigen::Map<RMat>;
using CMapM = Eigen::Map<const RMat>;

double jdot(const RVec& x, const RVec& y) {
  return x(0) * y(0) - x.tail(x.size() - 1).dot(y.tail(y.size() - 1));
}

RVec jmul(const RVec& x) {
  RVec y = -x;
  y(0) = x(0);
  return y;
}

// Nesterov-Todd scaling of one PSD pair: R^T Z R = Lambda = R^{-1} S R^{-T}.
bool psd_nt(const RMat& s, const RMat& z, RMat& r, RMat& rinv, RVec& lam) {
  Eigen::LLT<RMat> ls(0.5 * (s + s.transpose()));
  Eigen::LLT<RMat> lz(0.5 * (z + z.transpose()));
  if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) return false;
  const RMat l_s = ls.matrixL();
  const RMat l_z = lz.matrixL();
  Eigen::JacobiSVD<RMat> svd(l_z.transpose() * l_s, Eigen::ComputeFullU | Eigen::ComputeFullV);
  lam = svd.singularValues();
  if (!(lam.minCoeff() > 0)) return false;
  const RVec isq = lam.cwiseSqrt().cwiseInverse();
  r = l_s * svd.matrixV() * isq.asDiagonal();
  rinv = isq.asDiagonal() * svd.matrixU().transpose() * l_z.transpose();
  return true;
}

SocScaling soc_scaling(const RVec& s, const RVec& z, double aa, double bb) {
  const RVec sb = s / aa;
  const RVec zb = z / bb;
  const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
  RVec wb = (sb + jmul(zb)) / (2.0 * gamma);
  SocScaling out;
  out.beta = std::sqrt(aa / bb);
  out.v = wb;
  out.v(0) += 1.0;
  out.v /= std::sqrt(2.0 * (wb(0) + 1.0));
  const int n = static_cast<int>(s.size());
  RVec lb(n);
  lb(0) = gamma;
  if (n > 1) {
    lb.tail(n - 1) = ((gamma + zb(0)) * sb.tail(n - 1) + (gamma + sb(0)) * zb.tail(n - 1)) /
                     (sb(0) + zb(0) + 2.0 * gamma);
  }
  out.lambda = std::sqrt(aa * bb) * lb;
  return out;
}

struct Scaling {
  const Layout* lay = nullptr;
  RVec d;
  std::vector<double> beta;
  std::vector<RVec> v;
  std::vector<RMat> r, rinv;
  std::vector<RVec> lam_s;
  RVec lambda;

  void set_identity(const Layout& layout) {
    lay = &layout;
    d = RVec::Ones(layout.dims.l);
    beta.assign(layout.dims.q.size(), 1.0);
    v.clear();
    for (int k : layout.dims.q) {
      RVec e = RVec::Zero(k);
      e(0) = 1.0;
      v.push_back(e);
    }
    r.clear();
    rinv.clear();
    lam_s.clear();
    for (int k : layout.dims.s) {
      r.push_back(RMat::Identity(k, k));
      rinv.push_back(RMat::Identity(k, k));
      lam_s.push_back(RVec::Ones(k));
    }
  }

  // op: 0 = W, 1 = W^T, 2 = W^{-1}, 3 = W^{-T}.
  RVec apply(const RVec& x, int op) const {
    RVec y(x.size());
    const auto& dm = lay->dims;
    for (int i = 0; i < dm.l; ++i) y(i) = op < 2 ? d(i) * x(i) : x(i) / d(i);
    for (size_t k = 0; k < dm.q.size(); ++k) {
      const int off = lay->q_off[k];
      const int n = dm.q[k];
      const RVec xs = x.segment(off, n);
      if (op < 2) {
        y.segment(off, n) = beta[k] * (2.0 * v[k] * v[k].dot(xs) - jmul(xs));
      } else {
        const RVec u = jmul(v[k]);
        y.segment(off, n) = (2.0 * u * u.dot(xs) - jmul(xs)) / beta[k];
      }
    }
    for (size_t k = 0; k < dm.s.size(); ++k) {
      const int off = lay->s_off[k];
      const int n = dm.s[k];
      CMapM xm(x.data() + off, n, n);
      MapM ym(y.data() + off, n, n);
      switch (op) {
        case 0: ym = r[k].transpose() * xm * r[k]; break;
        case 1: ym = r[k] * xm * r[k].transpose(); break;
        case 2: ym = rinv[k].transpose() * xm * rinv[k]; break;
        default: ym = rinv[k] * xm * rinv[k].transpose(); break;
      }
    }
    return y;
  }

  RVec H(const RVec& x) const { return apply(apply(x, 3), 2); }
};

RVec identity_element(const Layout& lay) {
  RVec e = RVec::Zero(lay.m);
  e.head(lay.dims.l).setOnes();
  for (size_t k = 0; k < lay.dims.q.size(); ++k) e(lay.q_off[k]) = 1.0;
  for (size_t k = 0; k < lay.dims.s.size(); ++k) {
    const int n = lay.dims.s[k];
    MapM(e.data() + lay.s_off[k], n, n).setIdentity();
  }
  return e;
}

RVec jordan(const Layout& lay, const RVec& x, const RVec& y) {
  RVec out(lay.m);
  const auto& dm = lay.dims;
  out.head(dm.l) = x.head(dm.l).cwiseProduct(y.head(dm.l));
  for (size_t k = 0; k < dm.q.size(); ++k) {
    const int off = lay.q_off[k];
    const int n = dm.q[k];
    out(off) = x.segment(off, n).dot(y.segment(off, n));
    if (n > 1) {
      out.segment(off + 1, n - 1) =
          x(off) * y.segment(off + 1, n - 1) + y(off) * x.segment(off + 1, n - 1);
    }
  }
  for (size_t k = 0; k < dm.s.size(); ++k) {
    const int off = lay.s_off[k];
    const int n = dm.s[k];
    CMapM xm(x.data() + off, n, n);
    CMapM ym(y.data() + off, n, n);
    MapM(out.data() + off, n, n) = 0.5 * (xm * ym + ym * xm);
  }
  return out;
}

// Solves lambda o u = y for u, with lambda the scaled point (diagonal on PSD blocks).
RVec jordan_div(const Layout& lay, const Scaling& w, const RVec& y) {
  RVec u(lay.m);
  const auto& dm = lay.dims;
  const RVec& lam = w.lambda;
  u.head(dm.l) = y.head(dm.l).cwiseQuotient(lam.head(dm.l));
  for (size_t k = 0; k < dm.q.size(); ++k) {
    const int off = lay.q_off[k];
    const int n = dm.q[k];
    const double l0 = lam(off);
    const RVec l1 = lam.segment(off + 1, n - 1);
    const RVec y1 = y.segment(off + 1, n - 1);
    const double den = l0 * l0 - l1.squaredNorm();
    const double u0 = (l0 * y(off) - l1.dot(y1)) / den;
    u(off) = u0;
    if (n > 1) u.segment(off + 1, n - 1) = (y1 - u0 * l1) / l0;
  }
  for (size_t k = 0; k < dm.s.size(); ++k) {
    const int off = lay.s_off[k];
    const int n = dm.s[k];
    const RVec& ls = w.lam_s[k];
    CMapM ym(y.data() + off, n, n);
    MapM um(u.data() + off, n, n);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) um(i, j) = 2.0 * ym(i, j) / (ls(i) + ls(j));
    }
  }
  return u;
}

// Largest alpha with lambda + alpha * dir in the cone (lambda interior, diagonal PSD blocks).
double max_step(const Layout& lay, const Scaling& w, const RVec& dir) {
  double alpha = kInf;
  const auto& dm = lay.dims;
  const RVec& lam = w.lambda;
  for (int i = 0; i < dm.l; ++i) {
    if (dir(i) < 0) alpha = std::min(alpha, -lam(i) / dir(i));
  }
  for (size_t k = 0; k < dm.q.size(); ++k) {
    const int off = lay.q_off[k];
    const int n = dm.q[k];
    const RVec l = lam.segment(off, n);
    const RVec dd = dir.segment(off, n);
    const double a = jdot(dd, dd);
    const double b = jdot(l, dd);
    const double c = jdot(l, l);
    // Smallest positive root of a t^2 + 2 b t + c.
    double root = kInf;
    if (std::abs(a) <= 1e-14 * (std::abs(b) + c)) {
      if (b < 0) root = -c / (2.0 * b);
    } else {
      const double disc = b * b - a * c;
      if (disc >= 0) {
        const double sq = std::sqrt(disc);
        const double qv = -(b + (b >= 0 ? sq : -sq));
        for (double t : {qv / a, qv != 0 ? c / qv : kInf}) {
          if (t > 0) root = std::min(root, t);
        }
      }
    }
    // The first coordinate must remain positive as well.
    if (dd(0) < 0) root = std::min(root, -l(0) / dd(0));
    alpha = std::min(alpha, root);
  }
  for (size_t k = 0; k < dm.s.size(); ++k) {
    const int off = lay.s_off[k];
    const int n = dm.s[k];
    const RVec isq = w.lam_s[k].cwiseSqrt().cwiseInverse();
    CMapM dm_(dir.data() + off, n, n);
    RMat t = isq.asDiagonal() * (0.5 * (dm_ + dm_.transpose())) * isq.asDiagonal();
    Eigen::SelfAdjointEigenSolver<RMat> es(t, Eigen::EigenvaluesOnly);
    const double mn = es.eigenvalues()(0);
    if (mn < 0) alpha = std::min(alpha, -1.0 / mn);
  }
  return alpha;
}

// Most negative "eigenvalue" of x across all cones.
double cone_min(const Layout& lay, const RVec& x) {
  double mn = kInf;
  const auto& dm = lay.dims;
  if (dm.l > 0) mn = std::min(mn, x.head(dm.l).minCoeff());
  for (size_t k = 0; k < dm.q.size(); ++k) {
    const int off = lay.q_off[k];
    const int n = dm.q[k];
    mn = std::min(mn, x(off) - x.segment(off + 1, n - 1).norm());
  }
  for (size_t k = 0; k < dm.s.size(); ++k) {
    const int n = dm.s[k];
    CMapM xm(x.data() + lay.s_off[k], n, n);
    Eigen::SelfAdjointEigenSolver<RMat> es(0.5 * (xm + xm.transpose()), Eigen::EigenvaluesOnly);
    mn = std::min(mn, es.eigenvalues()(0));
  }
  return mn;
}

struct PsdColumns {
  struct Entry {
    int a;
    int b;
    double val;
  };
  std::vector<int> active;
  std::vector<std::vector<Entry>> entries;  // indexed parallel to active
};

class KktSolver {
 public:
  KktSolver(const Problem& p, const Layout& lay) : p_(p), lay_(lay) {
    n_ = static_cast<int>(p.c.size());
    np_ = static_cast<int>(p.A.rows());
    // Most rows touch only a few variables, so products with G go through a sparse copy.
    gs_ = p.G.sparseView();
    for (size_t k = 0; k < lay.dims.q.size(); ++k) {
      const auto gq = p.G.middleRows(lay.q_off[k], lay.dims.q[k]);
      gtg_q_.push_back(gq.transpose() * gq);
    }
    for (size_t k = 0; k < lay.dims.s.size(); ++k) {
      const int off = lay.s_off[k];
      const int n = lay.dims.s[k];
      PsdColumns pc;
      for (int j = 0; j < n_; ++j) {
        std::vector<PsdColumns::Entry> e;
        for (int b = 0; b < n; ++b) {
          for (int a = 0; a < n; ++a) {
            const double g = p.G(off + a + b * n, j);
            if (g != 0.0) e.push_back({a, b, g});
          }
        }
        if (!e.empty()) {
          pc.active.push_back(j);
          pc.entries.push_back(std::move(e));
        }
      }
      psd_cols_.push_back(std::move(pc));
    }
  }

  bool factor(const Scaling& w) {
    w_ = &w;
    RMat h = RMat::Zero(n_, n_);
    const auto& dm = lay_.dims;
    if (dm.l > 0) {
      const auto gl = p_.G.topRows(dm.l);
      const RVec wt = w.d.cwiseProduct(w.d).cwiseInverse();
      h.noalias() += gl.transpose() * wt.asDiagonal() * gl;
    }
    for (size_t k = 0; k < dm.q.size(); ++k) {
      const auto gq = p_.G.middleRows(lay_.q_off[k], dm.q[k]);
      const RVec u = jmul(w.v[k]);
      const RVec g = gq.transpose() * u;
      const RVec gj = gq.transpose() * w.v[k];
      const double b2 = w.beta[k] * w.beta[k];
      h += (gtg_q_[k] + 4.0 * u.squaredNorm() * g * g.transpose() - 2.0 * (g * gj.transpose()) -
            2.0 * (gj * g.transpose())) /
           b2;
    }
    for (size_t k = 0; k < dm.s.size(); ++k) {
      const int n = dm.s[k];
      const RMat s = w.rinv[k].transpose() * w.rinv[k];
      const auto& pc = psd_cols_[k];
      const int na = static_cast<int>(pc.active.size());
      RMat t(n, n);
      for (int jj = 0; jj < na; ++jj) {
        const auto& ej = pc.entries[jj];
        if (static_cast<int>(ej.size()) <= n) {
          t.setZero();
          for (const auto& e : ej) t.noalias() += e.val * s.col(e.a) * s.row(e.b);
        } else {
          RMat gj = RMat::Zero(n, n);
          for (const auto& e : ej) gj(e.a, e.b) = e.val;
          t.noalias() = s * gj * s;
        }
        const int j = pc.active[jj];
        for (int ii = 0; ii <= jj; ++ii) {
          double acc = 0.0;
          for (const auto& e : pc.entries[ii]) acc += e.val * t(e.a, e.b);
          const int i = pc.active[ii];
          h(i, j) += acc;
          if (i != j) h(j, i) += acc;
        }
      }
    }
    h_ = h;
    RMat hr = h;
    if (np_ > 0) hr.noalias() += p_.A.transpose() * p_.A;
    const double scale = std::max(1.0, hr.diagonal().cwiseAbs().maxCoeff());
    double reg = 0.0;
    for (int attempt = 0; attempt < 6; ++attempt) {
      RMat trial = hr;
      if (reg > 0) trial.diagonal().array() += reg;
      llt_.compute(trial);
      if (llt_.info() == Eigen::Success) break;
      reg = reg == 0.0 ? 1e-14 * scale : reg * 100.0;
    }
    if (llt_.info() != Eigen::Success) return false;
    if (np_ > 0) {
      hinv_at_ = llt_.solve(p_.A.transpose());
      schur_.compute(p_.A * hinv_at_);
      if (schur_.info() != Eigen::Success) return false;
    }
    return true;
  }

  // Solves [0 A^T G^T; A 0 0; G 0 -W^T W] (x, y, z) = (bx, by, bz).
  void solve(const RVec& bx, const RVec& by, const RVec& bz, RVec& x, RVec& y, RVec& z) const {
    raw_solve(bx, by, bz, x, y, z);
    for (int it = 0; it < 2; ++it) {
      RVec rx = bx - gs_.transpose() * z;
      if (np_ > 0) rx -= p_.A.transpose() * y;
      RVec ry = np_ > 0 ? RVec(by - p_.A * x) : RVec(0);
      RVec rz = bz - (gs_ * x - w_->apply(w_->apply(z, 0), 1));
      RVec dx, dy, dz;
      raw_solve(rx, ry, rz, dx, dy, dz);
      x += dx;
      if (np_ > 0) y += dy;
      z += dz;
    }
  }

  const Eigen::SparseMatrix<double>& g_sparse() const { return gs_; }

 private:
  void raw_solve(const RVec& bx, const RVec& by, const RVec& bz, RVec& x, RVec& y, RVec& z) const {
    RVec rhs = bx + gs_.transpose() * w_->H(bz);
    if (np_ > 0) {
      rhs += p_.A.transpose() * by;
      const RVec w1 = llt_.solve(rhs);
      y = schur_.solve(p_.A * w1 - by);
      x = w1 - hinv_at_ * y;
    } else {
      x = llt_.solve(rhs);
      y = RVec(0);
    }
    z = w_->H(gs_ * x - bz);
  }

  const Problem& p_;
  const Layout& lay_;
  Eigen::SparseMatrix<double> gs_;
  int n_ = 0;
  int np_ = 0;
  std::vector<RMat> gtg_q_;
  std::vector<PsdColumns> psd_cols_;
  const Scaling* w_ = nullptr;
  RMat h_;
  Eigen::LLT<RMat> llt_;
  RMat hinv_at_;
  Eigen::LLT<RMat> schur_;
};

bool scaling_from_points(const Layout& lay, const RVec& s, const RVec& z, Scaling& w) {
  w.lay = &lay;
  const auto& dm = lay.dims;
  w.lambda = RVec::Zero(lay.m);
  w.d = (s.head(dm.l).cwiseQuotient(z.head(dm.l))).cwiseSqrt();
  w.lambda.head(dm.l) = s.head(dm.l).cwiseProduct(z.head(dm.l)).cwiseSqrt();
  w.beta.resize(dm.q.size());
  w.v.resize(dm.q.size());
  for (size_t k = 0; k < dm.q.size(); ++k) {
    const int off = lay.q_off[k];
    const int n = dm.q[k];
    const RVec sk = s.segment(off, n);
    const RVec zk = z.segment(off, n);
    const double js = jdot(sk, sk);
    const double jz = jdot(zk, zk);
    if (!(js > 0 && jz > 0 && sk(0) > 0 && zk(0) > 0)) return false;
    const SocScaling sc = soc_scaling(sk, zk, std::sqrt(js), std::sqrt(jz));
    w.beta[k] = sc.beta;
    w.v[k] = sc.v;
    w.lambda.segment(off, n) = sc.lambda;
  }
  w.r.resize(dm.s.size());
  w.rinv.resize(dm.s.size());
  w.lam_s.resize(dm.s.size());
  for (size_t k = 0; k < dm.s.size(); ++k) {
    const int off = lay.s_off[k];
    const int n = dm.s[k];
    if (!psd_nt(CMapM(s.data() + off, n, n), CMapM(z.data() + off, n, n), w.r[k], w.rinv[k],
                w.lam_s[k])) {
      return false;
    }
    MapM(w.lambda.data() + off, n, n) = w.lam_s[k].asDiagonal();
  }
  return true;
}

// Refreshes the scaling after a step; st, zt are the new points in the old scaled coordinates.
bool update_scaling(const Layout& lay, const RVec& s, const RVec& z, const RVec& st,
                    const RVec& zt, Scaling& w) {
  const auto& dm = lay.dims;
  RVec lambda = RVec::Zero(lay.m);
  if (!(s.head(dm.l).minCoeff() > 0 && z.head(dm.l).minCoeff() > 0) && dm.l > 0) return false;
  w.d = (s.head(dm.l).cwiseQuotient(z.head(dm.l))).cwiseSqrt();
  lambda.head(dm.l) = s.head(dm.l).cwiseProduct(z.head(dm.l)).cwiseSqrt();
  for (size_t k = 0; k < dm.q.size(); ++k) {
    const int off = lay.q_off[k];
    const int n = dm.q[k];
    const double b = w.beta[k];
    const double js = b * b * jdot(st.segment(off, n), st.segment(off, n));
    const double jz = jdot(zt.segment(off, n), zt.segment(off, n)) / (b * b);
    if (!(js > 0 && jz > 0)) return false;
    const SocScaling sc =
        soc_scaling(s.segment(off, n), z.segment(off, n), std::sqrt(js), std::sqrt(jz));
    w.beta[k] = sc.beta;
    w.v[k] = sc.v;
    lambda.segment(off, n) = sc.lambda;
  }
  for (size_t k = 0; k < dm.s.size(); ++k) {
    const int off = lay.s_off[k];
    const int n = dm.s[k];
    RMat rt, rtinv;
    RVec lam;
    if (!psd_nt(CMapM(st.data() + off, n, n), CMapM(zt.data() + off, n, n), rt, rtinv, lam)) {
      return false;
    }
    w.r[k] = w.r[k] * rt;
    w.rinv[k] = rtinv * w.rinv[k];
    w.lam_s[k] = lam;
    MapM(lambda.data() + off, n, n) = lam.asDiagonal();
  }
  w.lambda = lambda;
  return true;
}

double safe_norm_ratio(double num, double den) { return num / std::max(1.0, den); }

}  // namespace

SocScaling soc_nt_scaling(const RVec& s, const RVec& z) {
  return soc_scaling(s, z, std::sqrt(jdot(s, s)), std::sqrt(jdot(z, z)));
}

Result solve(const Problem& prob, const Settings& st) {
  if (!(st.tol > 0)) throw std::invalid_argument("tolerance must be > 0");
  const Layout lay(prob.dims);
  const int n = static_cast<int>(prob.c.size());
  const int np = static_cast<int>(prob.A.rows());
  if (prob.G.rows() != lay.m || prob.G.cols() != n || prob.h.size() != lay.m) {
    throw std::invalid_argument("G/h dimensions do not match the cone");
  }
  if (np > 0 && (prob.A.cols() != n || prob.b.size() != np)) {
    throw std::invalid_argument("A/b dimensions are inconsistent");
  }
  const RVec b = np > 0 ? prob.b : RVec(0);
  const RMat& A = prob.A;
  const RVec& c = prob.c;
  const RVec& h = prob.h;
  const RVec e = identity_element(lay);
  const double nu = lay.dims.degree();
  const double resx0 = std::max(1.0, c.norm());
  const double resy0 = std::max(1.0, b.size() ? b.norm() : 0.0);
  const double resz0 = std::max(1.0, h.norm());

  Result res;
  KktSolver kkt(prob, lay);
  const Eigen::SparseMatrix<double>& G = kkt.g_sparse();
  Scaling w;
  w.set_identity(lay);
  w.lambda = e;
  if (!kkt.factor(w)) {
    res.message = "initial KKT factorization failed";
    return res;
  }

  RVec x, y, s, z, tmp;
  kkt.solve(RVec::Zero(n), b, h, x, y, tmp);
  s = -tmp;
  RVec x2, z0;
  kkt.solve(-c, RVec::Zero(np), RVec::Zero(lay.m), x2, y, z0);
  z = z0;
  {
    const double ts = -cone_min(lay, s);
    if (ts >= -1e-8 * std::max(1.0, s.norm())) s += (1.0 + ts) * e;
    const double tz = -cone_min(lay, z);
    if (tz >= -1e-8 * std::max(1.0, z.norm())) z += (1.0 + tz) * e;
  }
  double tau = 1.0;
  double kappa = 1.0;

  if (!scaling_from_points(lay, s, z, w)) {
    res.message = "initial scaling failed";
    return res;
  }

  auto finish = [&](Status status) {
    res.status = status;
    if (status == Status::kOptimal || status == Status::kMaxIter) {
      res.x = x / tau;
      res.y = y / tau;
      res.s = s / tau;
      res.z = z / tau;
    }
    return res;
  };

  double best_score = kInf;
  int best_it = 0;
  RVec bx, by, bs, bz;
  double btau = 1.0;
  for (int it = 0; it <= st.max_iter; ++it) {
    res.iterations = it;
    RVec rx = G.transpose() * z + c * tau;
    if (np > 0) rx += A.transpose() * y;
    const RVec ry = np > 0 ? RVec(A * x - b * tau) : RVec(0);
    const RVec rz = s + G * x - h * tau;
    const double cx = c.dot(x);
    const double by_ = np > 0 ? b.dot(y) : 0.0;
    const double hz = h.dot(z);
    const double rt = kappa + cx + by_ + hz;
    const double gap = s.dot(z);

    const double pres = std::max(np > 0 ? ry.norm() / resy0 : 0.0, rz.norm() / resz0) / tau;
    const double dres = rx.norm() / resx0 / tau;
    const double pcost = cx / tau;
    const double dcost = -(by_ + hz) / tau;
    const double gap_t = gap / (tau * tau);
    double relgap = kInf;
    if (pcost < 0) relgap = gap_t / -pcost;
    else if (dcost > 0) relgap = gap_t / dcost;

    res.primal_objective = pcost;
    res.dual_objective = dcost;
    res.primal_residual = pres;
    res.dual_residual = dres;
    res.gap = gap_t;

    if (st.verbose) {
      std::fprintf(stderr, "%3d pcost % .8e dcost % .8e gap %.2e pres %.2e dres %.2e k/t %.2e\n",
                   it, pcost, dcost, gap_t, pres, dres, kappa / tau);
    }

    const double score = std::max({pres, dres, std::min(gap_t, relgap)});
    if (score < best_score) {
      best_score = score;
      best_it = it;
      bx = x;
      by = y;
      bs = s;
      bz = z;
      btau = tau;
    }

    if (pres <= st.tol && dres <= st.tol && (gap_t <= st.tol || relgap <= st.tol)) {
      return finish(Status::kOptimal);
    }
    // Near the optimum, rounding can stall the residuals or make them grow again;
    // stop early and fall back to the best iterate.
    if (best_score <= kNearFactor * st.tol &&
        (it - best_it >= kStallIters || score > 1e3 * best_score)) {
      res.message = "progress stalled near the optimum";
      break;
    }
    if (by_ + hz < 0) {
      RVec aty = G.transpose() * z;
      if (np > 0) aty += A.transpose() * y;
      const double pinf = safe_norm_ratio(aty.norm(), c.norm()) / -(by_ + hz);
      if (pinf <= st.tol) {
        const double sc = -(by_ + hz);
        res.y = y / sc;
        res.z = z / sc;
        res.message = "primal infeasibility certificate";
        return finish(Status::kInfeasible);
      }
    }
    if (cx < 0) {
      const double ax = np > 0 ? (A * x).norm() / resy0 : 0.0;
      const double dinf = std::max(ax, (G * x + s).norm() / resz0) / -cx;
      if (dinf <= st.tol) {
        res.x = x / -cx;
        res.s = s / -cx;
        res.message = "dual infeasibility certificate";
        return finish(Status::kUnbounded);
      }
    }
    if (it == st.max_iter) break;

    if (!kkt.factor(w)) {
      res.message = "KKT factorization failed";
      break;
    }
    const double mu = (gap + tau * kappa) / (nu + 1.0);
    RVec vx, vy, vz;
    kkt.solve(-c, b, h, vx, vy, vz);
    const double vden = c.dot(vx) + (np > 0 ? b.dot(vy) : 0.0) + h.dot(vz) - kappa / tau;

    const RVec lam = w.lambda;
    const RVec lam2 = jordan(lay, lam, lam);

    struct Dir {
      RVec dx, dy, dz, ds, dzt, dst;
      double dtau, dkappa;
    };
    auto direction = [&](double sigma, const RVec* corr_s, double corr_k) {
      Dir d;
      RVec rhs_s = -lam2 + sigma * mu * e;
      if (corr_s) rhs_s -= *corr_s;
      const double rhs_k = -tau * kappa + sigma * mu - corr_k;
      const RVec ldiv = jordan_div(lay, w, rhs_s);
      const double eta = 1.0 - sigma;
      const RVec r1 = -eta * rx;
      const RVec r2 = np > 0 ? RVec(-eta * ry) : RVec(0);
      const RVec r3 = -eta * rz - w.apply(ldiv, 1);
      const double r4 = -eta * rt;
      RVec ux, uy, uz;
      kkt.solve(r1, r2, r3, ux, uy, uz);
      const double unum =
          r4 - rhs_k / tau - c.dot(ux) - (np > 0 ? b.dot(uy) : 0.0) - h.dot(uz);
      d.dtau = unum / vden;
      d.dx = ux + d.dtau * vx;
      d.dy = np > 0 ? RVec(uy + d.dtau * vy) : RVec(0);
      d.dz = uz + d.dtau * vz;
      d.dzt = w.apply(d.dz, 0);
      d.dst = ldiv - d.dzt;
      d.ds = w.apply(d.dst, 1);
      d.dkappa = (rhs_k - kappa * d.dtau) / tau;
      return d;
    };
    auto step_bound = [&](const Dir& d) {
      double a = std::min(max_step(lay, w, d.dst), max_step(lay, w, d.dzt));
      if (d.dtau < 0) a = std::min(a, -tau / d.dtau);
      if (d.dkappa < 0) a = std::min(a, -kappa / d.dkappa);
      return a;
    };

    const Dir aff = direction(0.0, nullptr, 0.0);
    const double alpha_aff = std::min(1.0, step_bound(aff));
    const double sigma = std::pow(1.0 - alpha_aff, 3);
    const RVec corr = jordan(lay, aff.dst, aff.dzt);
    const Dir d = direction(sigma, &corr, aff.dtau * aff.dkappa);
    const double alpha = std::min(1.0, 0.99 * step_bound(d));
    if (!(alpha > 1e-12)) {
      res.message = "step length collapsed";
      break;
    }

    x += alpha * d.dx;
    if (np > 0) y += alpha * d.dy;
    s += alpha * d.ds;
    z += alpha * d.dz;
    tau += alpha * d.dtau;
    kappa += alpha * d.dkappa;
    const RVec st_ = lam + alpha * d.dst;
    const RVec zt_ = lam + alpha * d.dzt;
    if (!update_scaling(lay, s, z, st_, zt_, w)) {
      if (!scaling_from_points(lay, s, z, w)) {
        res.message = "scaling update failed";
        break;
      }
    }
  }

  // No certificate or optimality: report the best iterate seen.
  if (bx.size() == n) {
    x = bx;
    y = by;
    s = bs;
    z = bz;
    tau = btau;
  }
  res.near_optimal = best_score <= kNearFactor * st.tol;
  if (res.message.empty()) res.message = "iteration limit reached";
  return finish(Status::kMaxIter);
}

}  // namespace ispac::conic
