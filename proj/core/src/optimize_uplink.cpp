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

#include "ispac/optimize_uplink.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "crb_lmi.hpp"

namespace ispac {

using detail::CrbScaling;

namespace {

constexpr double kDesignMargin = 1e-6;

double design_gamma(const UplinkScenario& sc, int k) { return sc.gamma[k] * (1.0 + kDesignMargin); }

CMat psd_clip(const CMat& m) {
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (m + m.adjoint()));
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() *
         es.eigenvectors().adjoint();
}

double exact_trace_crb(const UplinkScenario& sc, const HadPrecoder& had, const CMat& r_u) {
  try {
    return crb_from_fim(fim_uplink(had, sc.g, r_u, sc.beta, sc.t_slots, sc.sigma_u_sq)).trace();
  } catch (const std::domain_error&) {
    return std::numeric_limits<double>::infinity();
  }
}

bool sinr_ok(const UplinkScenario& sc, const HadPrecoder& had, const std::vector<CVec>& w,
             const CMat& r_u, bool with_margin) {
  const CMat g = sc.g_matrix();
  for (int k = 0; k < sc.k_users(); ++k) {
    const double target = with_margin ? design_gamma(sc, k) : sc.gamma[k];
    if (uplink_sinr(sc.h, k, had, w[k], r_u, g, sc.p_u, sc.sigma_u_sq) < target) return false;
  }
  return true;
}

CMat analog_b(const UplinkScenario& sc, int k, const CVec& w_k, const CMat& r_u, double gamma) {
  const CMat phi = make_phi(sc.n_antennas(), sc.n_rf);
  const CVec pw = phi * w_k;
  const auto cvec = [&](int i) -> CVec { return pw.conjugate().asDiagonal() * sc.h[i]; };
  CMat b = (sc.p_u / gamma) * cvec(k) * cvec(k).adjoint();
  for (int i = 0; i < sc.k_users(); ++i) {
    if (i != k) b -= sc.p_u * cvec(i) * cvec(i).adjoint();
  }
  const CMat dg = pw.conjugate().asDiagonal() * sc.g_matrix();
  b -= dg * r_u * dg.adjoint();
  return b;
}

RMat exact_u_scaled(const Fim4& j, const CrbScaling& sc) {
  const Eigen::Matrix2d schur = j.j11 - j.j12 * j.j22.inverse() * j.j12.transpose();
  const Eigen::Matrix2d d = sc.d.asDiagonal();
  return d * schur * d;
}

}  // namespace

void UplinkScenario::validate() const {
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
  if (!(p_u > 0) || !(p_s > 0) || !(sigma_u_sq > 0) || t_slots < 1) {
    throw std::invalid_argument("powers, noise and slot count must be positive");
  }
}

double pi_exact(const CMat& w, const CMat& b) { return (w * b).trace().real(); }

double pi_upper_bound(const CMat& w, const CMat& b, const CMat& w0, const CMat& b0, double alpha) {
  const double a2 = alpha * alpha;
  return 0.5 * (alpha * w + b / alpha).squaredNorm() - a2 * (w0 * w).trace().real() +
         0.5 * a2 * w0.squaredNorm() - (b0 * b).trace().real() / a2 + 0.5 * b0.squaredNorm() / a2;
}

double pi_balance(const CMat& w0, const CMat& b0) {
  const double nw = w0.norm();
  const double nb = b0.norm();
  if (!(nw > 0) || !(nb > 0)) return 1.0;
  return std::sqrt(std::max(nb / nw, 1e-10));
}

CMat uplink_analog_b(const UplinkScenario& sc, int k, const CVec& w_k, const CMat& r_u) {
  return analog_b(sc, k, w_k, r_u, sc.gamma[k]);
}

CVec mmse_combiner(const UplinkScenario& sc, int k, const HadPrecoder& had, const CMat& r_u) {
  const CMat f = had.F();
  const CMat c = f.adjoint() *
                 uplink_interference_covariance(sc.h, k, sc.g_matrix(), r_u, sc.p_u, sc.sigma_u_sq) * f;
  const CVec w = c.ldlt().solve(f.adjoint() * sc.h[k]);
  return w / w.norm();
}

ScaResult sca_uplink_digital(const UplinkScenario& sc, const HadPrecoder& had, const CMat& r_u0,
                             const std::vector<CVec>& w0, const AoSettings& settings, Rng& rng) {
  const int nrf = sc.n_rf;
  const int nb = sc.n_at();
  const int k_users = sc.k_users();
  const CMat f = had.F();
  const CMat gbar = f.adjoint() * sc.g_matrix();
  FimKernel kernel = uplink_kernel_r(sc.g, f * f.adjoint(), sc.beta, sc.t_slots, sc.sigma_u_sq);
  kernel.s11 *= sc.p_s;
  kernel.s12 *= sc.p_s;

  std::vector<CVec> hbar(k_users);
  for (int k = 0; k < k_users; ++k) hbar[k] = f.adjoint() * sc.h[k];

  ScaResult out;
  out.ok = true;
  out.r_u = r_u0;
  out.combiners = w0;
  for (auto& w : out.combiners) w /= w.norm();
  double cur = exact_trace_crb(sc, had, out.r_u);
  out.trace.push_back(cur);

  for (int it = 0; it < settings.max_sca; ++it) {
    const CMat r_hat0 = out.r_u / sc.p_s;
    const CrbScaling scal = CrbScaling::from(kernel.evaluate(r_hat0));

    SdpProblem p;
    const HermVar r = p.add_hermitian(nb);
    const detail::CrbBlock crb = detail::add_crb_epigraph(p, kernel, r, scal);
    p.add_hermitian_psd(r);
    p.add_le(r.re_trace_with(CMat::Identity(nb, nb)) - LinExpr(1.0));
    std::vector<HermVar> w(k_users);
    for (int k = 0; k < k_users; ++k) {
      w[k] = p.add_hermitian(nrf);
      p.add_hermitian_psd(w[k]);
      p.add_eq(w[k].re_trace_with(CMat::Identity(nrf, nrf)) - LinExpr(1.0));

      const double g = design_gamma(sc, k);
      const double s = 1.0 / (sc.p_u * hbar[k].squaredNorm());
      CMat a = g * sc.sigma_u_sq * CMat::Identity(nrf, nrf) - sc.p_u * hbar[k] * hbar[k].adjoint();
      for (int i = 0; i < k_users; ++i) {
        if (i != k) a += g * sc.p_u * hbar[i] * hbar[i].adjoint();
      }
      // tr(W B') with B' = kappa Gbar R Gbar^H is replaced by its convex majorizer.
      const double kappa = g * s * sc.p_s;
      const CMat wk0 = out.combiners[k] * out.combiners[k].adjoint();
      const CMat bk0 = kappa * gbar * r_hat0 * gbar.adjoint();
      const double alpha = pi_balance(wk0, bk0);
      const double a2 = alpha * alpha;
      const int tau = p.add_scalar();
      const auto comps = detail::hermitian_components(nrf, [&](int i, int j) {
        return alpha * w[k].entry(i, j) + (kappa / alpha) * detail::congruence_entry(gbar, r, i, j);
      });
      detail::add_quadratic_epigraph(p, comps, 0.5, LinExpr::var(tau));
      LinExpr row = s * w[k].re_trace_with(a) + LinExpr::var(tau) - a2 * w[k].re_trace_with(wk0) +
                    LinExpr(0.5 * a2 * wk0.squaredNorm()) -
                    (kappa / a2) * r.re_trace_with(gbar.adjoint() * bk0 * gbar) +
                    LinExpr(0.5 * bk0.squaredNorm() / a2);
      p.add_le(row);
    }
    p.minimize(crb.objective);
    const SdpSolution sol = p.solve(settings.pdd.solver);
    ++out.sdp_solves;
    out.status = sol.status;
    if (!sol.usable()) {
      out.message = std::string("SCA SDP: ") + to_string(sol.status);
      break;
    }
    const CMat r_new = sc.p_s * psd_clip(sol.value(r));
    const HadPrecoder& hp = had;
    std::vector<CVec> w_new(k_users);
    bool recovered = true;
    for (int k = 0; k < k_users && recovered; ++k) {
      const CVec mmse = mmse_combiner(sc, k, hp, r_new);
      const CMat g_phys = sc.g_matrix();
      const auto evaluate = [&](const CVec& cand) -> std::optional<double> {
        const double v = uplink_sinr(sc.h, k, hp, cand, r_new, g_phys, sc.p_u, sc.sigma_u_sq);
        if (v < sc.gamma[k]) return std::nullopt;
        return -v;
      };
      const RandomizationResult rr = gaussian_randomization(sol.value(w[k]), evaluate,
                                                            settings.pdd.n_samples, rng, {mmse});
      if (rr.status != RandomizationStatus::kOk) {
        recovered = false;
        break;
      }
      w_new[k] = rr.candidate / rr.candidate.norm();
    }
    if (!recovered) {
      out.message = "no combiner meets the SINR target";
      break;
    }
    const double val = exact_trace_crb(sc, had, r_new);
    if (!(val <= cur * (1.0 + 1e-9))) break;
    out.r_u = r_new;
    out.combiners = std::move(w_new);
    out.trace.push_back(val);
    out.iterations = it + 1;
    const double prev = cur;
    cur = val;
    if (prev - cur <= settings.eps_sca * prev) break;
  }
  return out;
}

AnalogUplink pdd_uplink_analog(const UplinkScenario& sc, const HadPrecoder& had0, const CMat& r_u,
                               const std::vector<CVec>& combiners, const PddSettings& settings,
                               Rng& rng) {
  const int na = sc.n_antennas();
  const int nrf = sc.n_rf;
  const CMat phi = make_phi(na, nrf);
  const CMat pp = phi * phi.adjoint();
  const FimKernel kernel = uplink_kernel_q(sc.g, r_u, sc.beta, sc.t_slots, sc.sigma_u_sq);

  AnalogUplink out;
  out.had = had0;
  CMat fft = had0.F() * had0.F().adjoint();
  const CrbScaling scal = CrbScaling::from(kernel.evaluate(fft));

  std::vector<CMat> b(sc.k_users());
  std::vector<double> noise(sc.k_users());
  for (int k = 0; k < sc.k_users(); ++k) {
    b[k] = analog_b(sc, k, combiners[k], r_u, design_gamma(sc, k));
    noise[k] = sc.sigma_u_sq * combiners[k].squaredNorm();
  }

  PddState st;
  st.rho = settings.rho0;
  st.mu = settings.mu;
  st.upsilon = CMat::Zero(na, na);
  st.validate();

  CMat q = fft;
  RMat u_scaled = exact_u_scaled(kernel.evaluate(q), scal);
  const auto al_value = [&]() {
    return detail::scaled_crb_value(u_scaled, scal) +
           (q - fft - st.rho * st.upsilon).squaredNorm() / (2.0 * st.rho);
  };
  double al = al_value();
  out.al_trace.push_back(al);
  out.al_outer.push_back(0);

  bool failed = false;
  for (int outer = 0; outer < settings.max_outer && !failed; ++outer) {
    for (int inner = 0; inner < settings.max_inner; ++inner) {
      const double start = al;
      // {U, Q} block.
      {
        SdpProblem p;
        const HermVar qv = p.add_hermitian(na);
        const detail::CrbBlock crb = detail::add_crb_epigraph(p, kernel, qv, scal);
        p.add_hermitian_psd(qv);
        const int t = p.add_scalar();
        const CMat c = fft + st.rho * st.upsilon;
        const auto comps = detail::hermitian_components(
            na, [&](int i, int j) { return qv.entry(i, j) - CLinExpr(c(i, j)); });
        detail::add_quadratic_epigraph(p, comps, 1.0 / (2.0 * st.rho), LinExpr::var(t));
        p.minimize(crb.objective + LinExpr::var(t));
        const SdpSolution sol = p.solve(settings.solver);
        ++out.sdp_solves;
        if (!sol.usable()) {
          failed = true;
          out.message = std::string("coupled SDP: ") + to_string(sol.status);
          break;
        }
        const CMat q_prev = q;
        const RMat u_prev = u_scaled;
        q = sol.value(qv);
        u_scaled = sol.value(crb.u);
        const double cand = al_value();
        if (cand > al + 1e-9 * std::max(1.0, std::abs(al))) {
          q = q_prev;
          u_scaled = u_prev;
          break;
        }
        al = cand;
        out.al_trace.push_back(al);
        out.al_outer.push_back(outer);
      }
      // Analog block.
      {
        const CMat c = q - st.rho * st.upsilon;
        SdpProblem p;
        const HermVar fh = p.add_hermitian(na);
        p.add_hermitian_psd(fh);
        for (int n = 0; n < na; ++n) p.add_eq(fh.entry(n, n).real() - LinExpr(1.0));
        const auto comps = detail::hermitian_components(
            na, [&](int i, int j) { return CLinExpr(c(i, j)) - pp(i, j) * fh.entry(i, j); });
        const int t = p.add_scalar();
        detail::add_quadratic_epigraph(p, comps, 1.0, LinExpr::var(t));
        for (int k = 0; k < sc.k_users(); ++k) {
          const double s = 1.0 / std::max(noise[k], b[k].norm());
          p.add_le(-s * (fh.re_trace_with(b[k]) - LinExpr(noise[k])));
        }
        p.minimize(LinExpr::var(t));
        const SdpSolution sol = p.solve(settings.solver);
        ++out.sdp_solves;
        if (!sol.usable()) {
          failed = true;
          out.message = std::string("analog SDP: ") + to_string(sol.status);
          break;
        }
        const CMat f_sdr = sol.value(fh);
        Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (f_sdr + f_sdr.adjoint()));
        const auto exact = [&](const HadPrecoder& h) {
          const CMat f = h.F();
          return (c - f * f.adjoint()).squaredNorm();
        };
        const auto evaluate = [&](const CVec& cand) -> std::optional<double> {
          const HadPrecoder h = HadPrecoder::from_vector(cand, nrf);
          if (!sinr_ok(sc, h, combiners, r_u, false)) return std::nullopt;
          return exact(h);
        };
        const RandomizationResult rr = gaussian_randomization(
            f_sdr, evaluate, settings.n_samples, rng, {es.eigenvectors().col(na - 1)});
        if (rr.status != RandomizationStatus::kOk) out.flagged = true;
        if (rr.status == RandomizationStatus::kOk && rr.objective < exact(out.had)) {
          out.had = HadPrecoder::from_vector(rr.candidate, nrf);
          fft = out.had.F() * out.had.F().adjoint();
        }
        al = al_value();
        out.al_trace.push_back(al);
        out.al_outer.push_back(outer);
      }
      ++st.inner_iter;
      if (start - al <= settings.eps_ao * std::abs(start)) break;
    }
    const CMat residual = q - fft;
    const double viol = detail::max_abs_entry(residual);
    out.violation_trace.push_back(viol);
    out.outer_iterations = outer + 1;
    if (viol < settings.eps_pdd) {
      out.converged = true;
      break;
    }
    if (failed) break;
    st.update(residual, viol);
    al = al_value();
    out.al_trace.push_back(al);
    out.al_outer.push_back(outer + 1);
  }
  return out;
}

UplinkSolution ao_uplink(const UplinkScenario& sc, const AoSettings& settings, Rng& rng) {
  sc.validate();
  const int na = sc.n_antennas();
  const int nb = sc.n_at();
  const bool fd = sc.fully_digital();
  UplinkSolution sol;

  // Feasible start: random phases, isotropic probing backed off until MMSE combiners meet
  // every SINR target.
  HadPrecoder had;
  CMat r_u;
  std::vector<CVec> w(sc.k_users());
  bool found = false;
  std::uniform_real_distribution<double> uni(0.0, 2.0 * kPi);
  for (int attempt = 0; attempt < settings.pdd.init_attempts && !found; ++attempt) {
    if (fd) {
      had = HadPrecoder::identity(na);
    } else {
      RVec ph(na);
      for (int n = 0; n < na; ++n) ph(n) = uni(rng);
      had = HadPrecoder(ph, sc.n_rf);
    }
    for (double scale = 1.0; scale >= 1e-3 && !found; scale *= 0.5) {
      r_u = (scale * sc.p_s / nb) * CMat::Identity(nb, nb);
      for (int k = 0; k < sc.k_users(); ++k) w[k] = mmse_combiner(sc, k, had, r_u);
      found = sinr_ok(sc, had, w, r_u, true);
    }
    if (fd) break;
  }
  if (!found) {
    std::ostringstream msg;
    msg << "no feasible start: SINR targets";
    for (double g : sc.gamma) msg << ' ' << 10.0 * std::log10(g) << " dB";
    msg << " not met with P_u = " << sc.p_u << " W even with probing power reduced to "
        << 1e-3 * sc.p_s << " W";
    sol.status = OptStatus::kInfeasible;
    sol.message = msg.str();
    return sol;
  }

  double cur = exact_trace_crb(sc, had, r_u);
  sol.initial_trace_crb = cur;
  sol.objective_trace.push_back(cur);
  sol.status = OptStatus::kConvergenceNotReached;

  for (int ao = 0; ao < settings.max_ao; ++ao) {
    const double start = cur;
    const ScaResult s = sca_uplink_digital(sc, had, r_u, w, settings, rng);
    sol.sdp_solves += s.sdp_solves;
    sol.sca_traces.push_back(s.trace);
    r_u = s.r_u;
    w = s.combiners;
    cur = s.trace.back();
    if (!s.message.empty()) sol.message = s.message;

    if (!fd) {
      AnalogUplink an = pdd_uplink_analog(sc, had, r_u, w, settings.pdd, rng);
      sol.sdp_solves += an.sdp_solves;
      const double val = exact_trace_crb(sc, an.had, r_u);
      const bool accept = val <= cur * (1.0 + 1e-9);
      if (accept) {
        had = an.had;
        cur = val;
      }
      an.accepted = accept;
      sol.analog_runs.push_back(std::move(an));
    }
    sol.objective_trace.push_back(cur);
    sol.ao_iterations = ao + 1;
    if (fd || start - cur <= settings.eps_ao * start) {
      sol.status = OptStatus::kConverged;
      break;
    }
  }

  sol.had = had;
  sol.tx.r_probe = r_u;
  sol.tx.combiners = w;
  const Fim4 j = fim_uplink(had, sc.g, r_u, sc.beta, sc.t_slots, sc.sigma_u_sq);
  sol.crb = crb_from_fim(j);
  sol.u_matrix = j.j11 - j.j12 * j.j22.inverse() * j.j12.transpose();
  return sol;
}

bool UplinkAudit::pass(double tol) const {
  return min_sinr_margin >= -tol && power_excess <= tol && modulus_error <= 1e-12 &&
         min_eig_ru >= -1e-8;
}

UplinkAudit audit_uplink(const UplinkScenario& sc, const HadPrecoder& had, const UplinkTx& tx) {
  UplinkAudit a;
  a.min_sinr_margin = std::numeric_limits<double>::infinity();
  const CMat g = sc.g_matrix();
  for (int k = 0; k < sc.k_users(); ++k) {
    const double s = uplink_sinr(sc.h, k, had, tx.combiners[k], tx.r_probe, g, sc.p_u, sc.sigma_u_sq);
    a.min_sinr_margin = std::min(a.min_sinr_margin, s - sc.gamma[k]);
  }
  a.power_excess = (tx.r_probe.trace().real() - sc.p_s) / sc.p_s;
  a.modulus_error = (had.f().cwiseAbs().array() - 1.0).abs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (tx.r_probe + tx.r_probe.adjoint()));
  a.min_eig_ru = es.eigenvalues()(0) / sc.p_s;
  return a;
}

}  // namespace ispac
