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

#include "ispac/optimize_downlink.hpp"

#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "crb_lmi.hpp"

namespace ispac {

using detail::CrbScaling;

namespace {

// SDP targets are tightened slightly so solver tolerance never shows up as an SINR deficit.
constexpr double kDesignMargin = 1e-6;

double design_gamma(const DownlinkScenario& sc, int k) { return sc.gamma[k] * (1.0 + kDesignMargin); }

CrbScaling scaling_of(const DownlinkContext& ctx) {
  CrbScaling sc;
  sc.d = ctx.crb_d;
  sc.e = ctx.crb_e;
  sc.c0 = ctx.crb_c0;
  return sc;
}

CMat psd_clip(const CMat& m) {
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (m + m.adjoint()));
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() *
         es.eigenvectors().adjoint();
}

DownlinkTx to_tx(const DigitalDownlink& d) { return DownlinkTx{d.w, d.r_d}; }

bool sinr_ok(const DownlinkScenario& sc, const HadPrecoder& had, const DownlinkTx& tx_hat,
             double sigma_hat) {
  for (int k = 0; k < sc.k_users(); ++k) {
    const double s = downlink_sinr(sc.h, k, had, tx_hat, sigma_hat);
    if (s < sc.gamma[k]) return false;
  }
  return true;
}

// U' = D (J11 - J12 J22^{-1} J12^T) D at an exact design.
RMat exact_u_scaled(const Fim4& j, const CrbScaling& sc) {
  const Eigen::Matrix2d schur = j.j11 - j.j12 * j.j22.inverse() * j.j12.transpose();
  const Eigen::Matrix2d d = sc.d.asDiagonal();
  return d * schur * d;
}

// Beams meeting every SINR target with the remaining power spread isotropically.
std::optional<DigitalDownlink> initial_beams(const DownlinkScenario& sc, const HadPrecoder& had,
                                             double sigma_hat, const SolverSettings& solver,
                                             std::string* why) {
  const int nrf = sc.n_rf;
  const int k_users = sc.k_users();
  const CMat f = had.F();
  SdpProblem p;
  std::vector<HermVar> w(k_users);
  LinExpr total;
  for (int k = 0; k < k_users; ++k) {
    w[k] = p.add_hermitian(nrf);
    p.add_hermitian_psd(w[k]);
    total += w[k].re_trace_with(CMat::Identity(nrf, nrf));
  }
  p.add_le(total - LinExpr(1.0));
  for (int k = 0; k < k_users; ++k) {
    const CVec ht = f.transpose() * sc.h[k];
    const CMat m = ht.conjugate() * ht.transpose();
    const double s = 1.0 / ht.squaredNorm();
    LinExpr slack = (1.0 / design_gamma(sc, k)) * w[k].re_trace_with(m);
    for (int i = 0; i < k_users; ++i) {
      if (i != k) slack -= w[i].re_trace_with(m);
    }
    // Isotropic remainder: (1 - sum tr W) / N_RF * ||h~||^2.
    const double iso = ht.squaredNorm() / nrf;
    slack -= iso * (LinExpr(1.0) - total);
    slack -= LinExpr(sigma_hat);
    p.add_le(-s * slack);
  }
  p.minimize(total);
  const SdpSolution sol = p.solve(solver);
  if (!sol.usable()) {
    if (why) *why = std::string("beam feasibility SDP: ") + to_string(sol.status);
    return std::nullopt;
  }
  double used = 0.0;
  CMat r_tilde = CMat::Zero(nrf, nrf);
  std::vector<CMat> wk(k_users);
  for (int k = 0; k < k_users; ++k) {
    wk[k] = sol.value(w[k]);
    used += wk[k].trace().real();
    r_tilde += wk[k];
  }
  r_tilde += std::max(0.0, 1.0 - used) / nrf * CMat::Identity(nrf, nrf);

  DigitalDownlink out;
  out.status = sol.status;
  out.w = CMat(nrf, k_users);
  for (int k = 0; k < k_users; ++k) {
    out.w.col(k) = rank_one_downlink_recovery(wk[k], f.transpose() * sc.h[k]);
  }
  out.r_d = psd_clip(r_tilde - out.w * out.w.adjoint());
  out.ok = true;
  return out;
}

}  // namespace

void DownlinkScenario::validate() const {
  if (h.empty()) throw std::invalid_argument("at least one user is required");
  const int na = n_antennas();
  for (const auto& hk : h) {
    if (hk.size() != na) throw std::invalid_argument("user channel length differs from N_a");
  }
  if (static_cast<int>(gamma.size()) != k_users()) throw std::invalid_argument("one SINR target per user");
  for (double g : gamma) {
    if (!(g > 0)) throw std::invalid_argument("SINR targets must be positive");
  }
  if (n_rf < 1 || na % n_rf != 0) throw std::invalid_argument("n_mt divisible by n_rf is required");
  if (!(p_d > 0) || !(sigma0_sq > 0) || !(sigma_d_sq > 0) || t_slots < 1) {
    throw std::invalid_argument("powers, noise and slot count must be positive");
  }
}

void PddState::validate() const {
  if (!(rho > 0)) throw std::invalid_argument("rho must be positive");
  if (!(mu > 0 && mu < 1)) throw std::invalid_argument("mu must lie in (0, 1)");
  if (!(eta >= 0)) throw std::invalid_argument("eta must be non-negative");
}

bool PddState::update(const CMat& residual, double violation) {
  // With the penalty (1/2rho)||h - rho Y||^2 the multiplier estimate is -Y, so dual
  // ascent moves Y against the residual.
  const bool dual = violation <= eta;
  if (dual) {
    upsilon -= residual / rho;
  } else {
    rho *= mu;
  }
  eta = 0.9 * violation;
  ++outer_iter;
  return dual;
}

const char* to_string(OptStatus s) {
  switch (s) {
    case OptStatus::kConverged: return "CONVERGED";
    case OptStatus::kConvergenceNotReached: return "CONVERGENCE_NOT_REACHED";
    case OptStatus::kInfeasible: return "INFEASIBLE";
    case OptStatus::kSolverFailure: return "SOLVER_FAILURE";
  }
  return "UNKNOWN";
}

DownlinkContext make_downlink_context(const DownlinkScenario& sc, const CMat& q_ref_hat,
                                      const SolverSettings& solver) {
  DownlinkContext ctx;
  ctx.scenario = &sc;
  ctx.kernel = downlink_kernel(sc.g, sc.beta, sc.t_slots, sc.sigma_d_sq);
  ctx.kernel.s11 *= sc.p_d;
  ctx.kernel.s12 *= sc.p_d;
  ctx.sigma0_hat = sc.sigma0_sq / sc.p_d;
  ctx.solver = solver;
  const CrbScaling s = CrbScaling::from(ctx.kernel.evaluate(q_ref_hat));
  ctx.crb_c0 = s.c0;
  ctx.crb_d = s.d;
  ctx.crb_e = s.e;
  return ctx;
}

std::vector<CMat> analog_eigen_terms(const CMat& phi, const CMat& r_tilde) {
  const CMat a = phi * r_tilde * phi.adjoint();
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (a + a.adjoint()));
  std::vector<CMat> out;
  for (int r = 0; r < es.eigenvalues().size(); ++r) {
    const double lam = es.eigenvalues()(r);
    if (lam <= 0) continue;
    const CVec v = std::sqrt(lam) * es.eigenvectors().col(r);
    out.push_back(v.asDiagonal());
  }
  return out;
}

double downlink_al_value(const DownlinkContext& ctx, const DigitalDownlink& d,
                         const HadPrecoder& had, const PddState& pdd) {
  const double crb = detail::scaled_crb_value(d.u_scaled, scaling_of(ctx));
  if (ctx.scenario->fully_digital()) return crb;
  const CMat f = had.F();
  const CMat e = d.q - f * d.r_tilde() * f.adjoint() - pdd.rho * pdd.upsilon;
  return crb + e.squaredNorm() / (2.0 * pdd.rho);
}

DigitalDownlink solve_digital_downlink(const DownlinkContext& ctx, const HadPrecoder& had,
                                       const PddState& pdd) {
  const DownlinkScenario& sc = *ctx.scenario;
  const int nrf = sc.n_rf;
  const int na = sc.n_antennas();
  const int k_users = sc.k_users();
  const bool fd = sc.fully_digital();
  const CMat f = had.F();

  SdpProblem p;
  const HermVar r = p.add_hermitian(nrf);
  std::vector<HermVar> w(k_users);
  for (auto& wk : w) wk = p.add_hermitian(nrf);
  const HermVar q = fd ? r : p.add_hermitian(na);
  const detail::CrbBlock crb = detail::add_crb_epigraph(p, ctx.kernel, q, scaling_of(ctx));
  LinExpr objective = crb.objective;

  p.add_le(r.re_trace_with(CMat::Identity(nrf, nrf)) - LinExpr(1.0));
  p.add_hermitian_psd(nrf, [&](int a, int b) {
    CLinExpr e = r.entry(a, b);
    for (const auto& wk : w) e -= wk.entry(a, b);
    return e;
  });
  for (const auto& wk : w) p.add_hermitian_psd(wk);

  std::vector<CVec> h_tilde(k_users);
  for (int k = 0; k < k_users; ++k) {
    h_tilde[k] = f.transpose() * sc.h[k];
    const CMat m = h_tilde[k].conjugate() * h_tilde[k].transpose();
    const double s = 1.0 / h_tilde[k].squaredNorm();
    LinExpr slack = (1.0 + 1.0 / design_gamma(sc, k)) * w[k].re_trace_with(m) - r.re_trace_with(m) -
                    LinExpr(ctx.sigma0_hat);
    p.add_le(-s * slack);
  }

  if (!fd) {
    p.add_hermitian_psd(q);
    const int t = p.add_scalar();
    const auto comps = detail::hermitian_components(na, [&](int a, int b) {
      return q.entry(a, b) - detail::congruence_entry(f, r, a, b) -
             CLinExpr(pdd.rho * pdd.upsilon(a, b));
    });
    detail::add_quadratic_epigraph(p, comps, 1.0 / (2.0 * pdd.rho), LinExpr::var(t));
    objective += LinExpr::var(t);
  }
  p.minimize(objective);
  const SdpSolution sol = p.solve(ctx.solver);

  DigitalDownlink out;
  out.status = sol.status;
  out.message = sol.message;
  if (!sol.usable()) return out;

  const CMat r_tilde = sol.value(r);
  out.w = CMat(nrf, k_users);
  for (int k = 0; k < k_users; ++k) {
    const CMat wk = sol.value(w[k]);
    if (!((h_tilde[k].transpose() * wk * h_tilde[k].conjugate())(0).real() > 0)) {
      out.message = "degenerate beam after relaxation";
      return out;
    }
    out.w.col(k) = rank_one_downlink_recovery(wk, h_tilde[k]);
  }
  out.r_d = psd_clip(r_tilde - out.w * out.w.adjoint());
  out.u_scaled = sol.value(crb.u);
  out.q = fd ? out.r_tilde() : sol.value(q);
  out.ok = true;
  out.al_objective = downlink_al_value(ctx, out, had, pdd);
  return out;
}

AnalogDownlink solve_analog_downlink(const DownlinkContext& ctx, const DigitalDownlink& digital,
                                     const HadPrecoder& incumbent, const PddState& pdd,
                                     int n_samples, Rng& rng) {
  const DownlinkScenario& sc = *ctx.scenario;
  const int na = sc.n_antennas();
  const int nrf = sc.n_rf;
  const CMat phi = make_phi(na, nrf);
  const CMat a = phi * digital.r_tilde() * phi.adjoint();
  const CMat c = digital.q - pdd.rho * pdd.upsilon;
  const DownlinkTx tx_hat = to_tx(digital);

  auto exact = [&](const HadPrecoder& had) {
    const CMat f = had.F();
    return (c - f * digital.r_tilde() * f.adjoint()).squaredNorm();
  };

  AnalogDownlink out;
  out.had = incumbent;
  out.objective = exact(incumbent);

  SdpProblem p;
  const HermVar fd = p.add_hermitian(na);
  p.add_hermitian_psd(fd);
  for (int n = 0; n < na; ++n) p.add_eq(fd.entry(n, n).real() - LinExpr(1.0));
  // F R F^H = sum_r V_r Fdot V_r^H = (Phi R Phi^H) o Fdot.
  const auto comps = detail::hermitian_components(na, [&](int i, int j) {
    return CLinExpr(c(i, j)) - a(i, j) * fd.entry(i, j);
  });
  const int t = p.add_scalar();
  detail::add_quadratic_epigraph(p, comps, 1.0, LinExpr::var(t));

  for (int k = 0; k < sc.k_users(); ++k) {
    const CVec& hk = sc.h[k];
    const double s = 1.0 / hk.squaredNorm();
    LinExpr slack = LinExpr(-ctx.sigma0_hat);
    for (int i = 0; i < sc.k_users(); ++i) {
      const CVec cbar = (hk.asDiagonal() * (phi * digital.w.col(i))).conjugate();
      const CMat hki = cbar * cbar.adjoint();
      const double wt = i == k ? 1.0 / design_gamma(sc, k) : -1.0;
      slack += wt * fd.re_trace_with(hki);
    }
    const CMat psi = (hk.asDiagonal() * phi * digital.r_d * phi.adjoint() *
                      hk.conjugate().asDiagonal()).conjugate();
    slack -= fd.re_trace_with(psi);
    p.add_le(-s * slack);
  }
  p.minimize(LinExpr::var(t));
  const SdpSolution sol = p.solve(ctx.solver);
  out.status = sol.status;
  if (!sol.usable()) return out;
  out.f_sdr = sol.value(fd);
  out.sdr_bound = sol.value(LinExpr::var(t));

  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (out.f_sdr + out.f_sdr.adjoint()));
  const std::vector<CVec> extra{es.eigenvectors().col(na - 1)};
  const auto evaluate = [&](const CVec& cand) -> std::optional<double> {
    const HadPrecoder had = HadPrecoder::from_vector(cand, nrf);
    if (!sinr_ok(sc, had, tx_hat, ctx.sigma0_hat)) return std::nullopt;
    return exact(had);
  };
  const RandomizationResult rr = gaussian_randomization(out.f_sdr, evaluate, n_samples, rng, extra);
  out.sample_found = rr.status == RandomizationStatus::kOk;
  if (out.sample_found && rr.objective < out.objective) {
    out.had = HadPrecoder::from_vector(rr.candidate, nrf);
    out.objective = rr.objective;
  }
  return out;
}

bool DownlinkAudit::pass(double tol) const {
  return min_sinr_margin >= -tol && power_excess <= tol && modulus_error <= 1e-12 &&
         min_eig_rd >= -1e-8;
}

DownlinkAudit audit_downlink(const DownlinkScenario& sc, const HadPrecoder& had,
                             const DownlinkTx& tx) {
  DownlinkAudit a;
  a.min_sinr_margin = std::numeric_limits<double>::infinity();
  for (int k = 0; k < sc.k_users(); ++k) {
    a.min_sinr_margin =
        std::min(a.min_sinr_margin, downlink_sinr(sc.h, k, had, tx, sc.sigma0_sq) - sc.gamma[k]);
  }
  const CMat f = had.F();
  const double power = (f * tx.r_tilde() * f.adjoint()).trace().real();
  a.power_excess = (power - sc.p_d) / sc.p_d;
  const CVec fv = had.f();
  a.modulus_error = (fv.cwiseAbs().array() - 1.0).abs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (tx.r_probe + tx.r_probe.adjoint()));
  a.min_eig_rd = es.eigenvalues().size() ? es.eigenvalues()(0) / sc.p_d : 0.0;
  return a;
}

DownlinkSolution pdd_downlink(const DownlinkScenario& sc, const PddSettings& settings, Rng& rng) {
  sc.validate();
  const int na = sc.n_antennas();
  const bool fd = sc.fully_digital();
  const double sigma_hat = sc.sigma0_sq / sc.p_d;
  DownlinkSolution sol;

  // Feasible start: random phases and beams meeting every SINR target.
  HadPrecoder had;
  std::optional<DigitalDownlink> init;
  std::string why;
  std::uniform_real_distribution<double> uni(0.0, 2.0 * kPi);
  for (int attempt = 0; attempt < settings.init_attempts && !init; ++attempt) {
    if (fd) {
      had = HadPrecoder::identity(na);
    } else {
      RVec ph(na);
      for (int n = 0; n < na; ++n) ph(n) = uni(rng);
      had = HadPrecoder(ph, sc.n_rf);
    }
    ++sol.sdp_solves;
    init = initial_beams(sc, had, sigma_hat, settings.solver, &why);
    if (fd) break;
  }
  if (!init) {
    std::ostringstream msg;
    msg << "no feasible start: SINR targets";
    for (double g : sc.gamma) msg << ' ' << 10.0 * std::log10(g) << " dB";
    msg << " not met with P_d = " << sc.p_d << " W (" << why << ")";
    sol.status = OptStatus::kInfeasible;
    sol.message = msg.str();
    return sol;
  }

  const CMat f0 = had.F();
  init->q = f0 * init->r_tilde() * f0.adjoint();
  const DownlinkContext ctx = make_downlink_context(sc, init->q, settings.solver);
  const CrbScaling scal = scaling_of(ctx);
  init->u_scaled = exact_u_scaled(ctx.kernel.evaluate(init->q), scal);
  sol.initial_trace_crb = ctx.crb_c0;

  struct Best {
    HadPrecoder had;
    DigitalDownlink d;
    double crb = 0.0;
  } best{had, *init, 1.0};

  auto consider = [&](const HadPrecoder& h, const DigitalDownlink& d) {
    const CMat f = h.F();
    const double val = detail::normalized_trace_crb(ctx.kernel.evaluate(f * d.r_tilde() * f.adjoint()), scal);
    const DownlinkTx tx{std::sqrt(sc.p_d) * d.w, sc.p_d * d.r_d};
    if (val < best.crb && audit_downlink(sc, h, tx).pass()) best = Best{h, d, val};
    return val;
  };

  PddState st;
  st.rho = settings.rho0;
  st.mu = settings.mu;
  st.upsilon = CMat::Zero(na, na);
  st.validate();

  DigitalDownlink cur = *init;
  double al = downlink_al_value(ctx, cur, had, st);
  sol.objective_trace.push_back(al);
  sol.objective_outer.push_back(0);

  bool failed = false;
  if (fd) {
    const DigitalDownlink d = solve_digital_downlink(ctx, had, st);
    ++sol.sdp_solves;
    if (d.ok && d.al_objective <= al + 1e-9 * std::max(1.0, std::abs(al))) {
      cur = d;
      sol.objective_trace.push_back(d.al_objective);
      sol.objective_outer.push_back(0);
    } else if (!d.ok) {
      failed = true;
      sol.message = "digital SDP: " + std::string(to_string(d.status));
    }
    sol.crb_trace.push_back(consider(had, cur) * ctx.crb_c0);
    sol.violation_trace.push_back(0.0);
    sol.outer_iterations = 1;
    sol.status = failed ? OptStatus::kSolverFailure : OptStatus::kConverged;
  } else {
    sol.status = OptStatus::kConvergenceNotReached;
    for (int outer = 0; outer < settings.max_outer; ++outer) {
      st.inner_iter = 0;
      for (int inner = 0; inner < settings.max_inner; ++inner) {
        const double start = al;
        DigitalDownlink d = solve_digital_downlink(ctx, had, st);
        ++sol.sdp_solves;
        if (!d.ok) {
          failed = true;
          sol.message = "digital SDP: " + std::string(to_string(d.status));
          break;
        }
        if (d.al_objective > al + 1e-9 * std::max(1.0, std::abs(al))) break;  // no progress
        cur = std::move(d);
        al = cur.al_objective;
        sol.objective_trace.push_back(al);
        sol.objective_outer.push_back(outer);

        const AnalogDownlink an = solve_analog_downlink(ctx, cur, had, st, settings.n_samples, rng);
        ++sol.sdp_solves;
        had = an.had;
        al = downlink_al_value(ctx, cur, had, st);
        sol.objective_trace.push_back(al);
        sol.objective_outer.push_back(outer);
        ++st.inner_iter;
        if (start - al <= settings.eps_ao * std::abs(start)) break;
      }
      const CMat f = had.F();
      const CMat residual = cur.q - f * cur.r_tilde() * f.adjoint();
      const double viol = detail::max_abs_entry(residual);
      sol.violation_trace.push_back(viol);
      sol.crb_trace.push_back(consider(had, cur) * ctx.crb_c0);
      sol.outer_iterations = outer + 1;
      if (viol < settings.eps_pdd) {
        sol.status = OptStatus::kConverged;
        break;
      }
      if (failed) break;
      st.update(residual, viol);
      al = downlink_al_value(ctx, cur, had, st);
      sol.objective_trace.push_back(al);
      sol.objective_outer.push_back(outer + 1);
    }
    if (failed && sol.status != OptStatus::kConverged) sol.status = OptStatus::kSolverFailure;
  }

  // Return the best audited iterate (never worse than the feasible start).
  const CMat fb = best.had.F();
  sol.had = best.had;
  sol.tx = DownlinkTx{std::sqrt(sc.p_d) * best.d.w, sc.p_d * best.d.r_d};
  sol.q_matrix = sc.p_d * fb * best.d.r_tilde() * fb.adjoint();
  const Fim4 j = fim_downlink(sol.q_matrix, sc.g, sc.beta, sc.t_slots, sc.sigma_d_sq);
  sol.crb = crb_from_fim(j);
  sol.u_matrix = j.j11 - j.j12 * j.j22.inverse() * j.j12.transpose();
  return sol;
}

}  // namespace ispac
