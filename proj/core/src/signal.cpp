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

#include "ispac/signal.hpp"

#include <cmath>
#include <stdexcept>

namespace ispac {

HadPrecoder::HadPrecoder(RVec phases, int n_rf) : phases_(std::move(phases)), n_rf_(n_rf) {
  if (n_rf_ < 1 || phases_.size() == 0 || phases_.size() % n_rf_ != 0) {
    throw std::invalid_argument("number of phases must be a positive multiple of n_rf");
  }
}

HadPrecoder HadPrecoder::from_vector(const CVec& f, int n_rf) {
  RVec ph(f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) ph(i) = std::arg(f(i));
  return HadPrecoder(ph, n_rf);
}

HadPrecoder HadPrecoder::identity(int n) { return HadPrecoder(RVec::Zero(n), n); }

CVec HadPrecoder::f() const {
  CVec v(phases_.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = std::polar(1.0, phases_(i));
  return v;
}

CMat make_phi(int n_antennas, int n_rf) {
  if (n_rf < 1 || n_antennas % n_rf != 0) {
    throw std::invalid_argument("n_antennas must be divisible by n_rf");
  }
  const int m = n_antennas / n_rf;
  CMat phi = CMat::Zero(n_antennas, n_rf);
  const double s = 1.0 / std::sqrt(double(m));
  for (int i = 0; i < n_rf; ++i) phi.block(i * m, i, m, 1).setConstant(s);
  return phi;
}

CMat HadPrecoder::Phi() const { return make_phi(n_antennas(), n_rf_); }

CMat HadPrecoder::F_tilde() const { return f().asDiagonal(); }

CMat HadPrecoder::F() const {
  const CVec fv = f();
  CMat out = make_phi(n_antennas(), n_rf_);
  for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) *= fv(i);
  return out;
}

HadPrecoder assemble_analog(const RVec& phases, int n_rf) { return HadPrecoder(phases, n_rf); }

void ScenarioConfig::validate(int n_b) const {
  if (!(p_d > 0 && p_s > 0 && p_u > 0)) throw std::invalid_argument("powers must be > 0");
  if (!(sigma0_sq > 0 && sigma_d_sq > 0 && sigma_u_sq > 0)) {
    throw std::invalid_argument("noise powers must be > 0");
  }
  if (t_slots < n_b) throw std::invalid_argument("t_slots must be >= n_b");
  if (k_users < 0) throw std::invalid_argument("k_users must be >= 0");
}

double downlink_sinr(const std::vector<CVec>& h, int k, const HadPrecoder& had,
                     const DownlinkTx& tx, double sigma0_sq) {
  const CMat f = had.F();
  const Eigen::RowVectorXcd hf = h.at(k).transpose() * f;
  double signal = 0.0;
  double interference = 0.0;
  for (Eigen::Index i = 0; i < tx.w_digital.cols(); ++i) {
    const double p = std::norm((hf * tx.w_digital.col(i))(0));
    (i == k ? signal : interference) += p;
  }
  double probe = 0.0;
  if (tx.r_probe.size() > 0) probe = (hf * tx.r_probe * hf.adjoint())(0).real();
  return signal / (interference + probe + sigma0_sq);
}

CMat uplink_interference_covariance(const std::vector<CVec>& h, int k, const CMat& g,
                                    const CMat& r_u, double p_u, double sigma_u_sq) {
  const Eigen::Index n = h.at(k).size();
  CMat r = sigma_u_sq * CMat::Identity(n, n);
  for (size_t i = 0; i < h.size(); ++i) {
    if (static_cast<int>(i) != k) r += p_u * h[i] * h[i].adjoint();
  }
  if (r_u.size() > 0) r += g * r_u * g.adjoint();
  return r;
}

double uplink_sinr(const std::vector<CVec>& h, int k, const HadPrecoder& had,
                   const CVec& combiner, const CMat& r_u, const CMat& g, double p_u,
                   double sigma_u_sq) {
  const CMat f = had.F();
  const CVec fw = f * combiner;
  const double signal = p_u * std::norm(fw.dot(h.at(k)));
  const CMat r = uplink_interference_covariance(h, k, g, r_u, p_u, sigma_u_sq);
  return signal / fw.dot(r * fw).real();
}

CMat complex_gaussian(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
  CMat out(rows, cols);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) {
      const double re = nd(rng);
      const double im = nd(rng);
      out(r, c) = cd(re, im);
    }
  }
  return out;
}

CMat sample_covariance_columns(const CMat& r, int cols, Rng& rng) {
  const Eigen::Index n = r.rows();
  if (n == 0) return CMat(0, cols);
  const CMat herm = 0.5 * (r + r.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(herm);
  RVec ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev.minCoeff() < -1e-10 * scale) throw std::invalid_argument("covariance is not PSD");
  ev = ev.cwiseMax(0.0);
  const CMat factor = es.eigenvectors() * ev.cwiseSqrt().asDiagonal();
  return factor * complex_gaussian(static_cast<int>(n), cols, rng);
}

CMat synth_downlink_frames(const HadPrecoder& had, const DownlinkTx& tx, int t_slots, Rng& rng) {
  if (t_slots < 1) throw std::invalid_argument("t_slots must be >= 1");
  const int n_rf = had.n_rf();
  CMat baseband = CMat::Zero(n_rf, t_slots);
  if (tx.w_digital.cols() > 0) {
    baseband += tx.w_digital * complex_gaussian(static_cast<int>(tx.w_digital.cols()), t_slots, rng);
  }
  if (tx.r_probe.size() > 0) baseband += sample_covariance_columns(tx.r_probe, t_slots, rng);
  return had.F() * baseband;
}

CMat synth_downlink_echo(const CMat& x, const SensingChannel& g, double sigma_d_sq, Rng& rng) {
  CMat y = g.g_matrix.transpose() * x;
  if (sigma_d_sq > 0) {
    y += std::sqrt(sigma_d_sq) *
         complex_gaussian(static_cast<int>(y.rows()), static_cast<int>(y.cols()), rng);
  }
  return y;
}

UplinkEcho synth_uplink_echo(const HadPrecoder& had, const SensingChannel& g, const CMat& r_u,
                             int t_slots, double sigma_u_sq, Rng& rng) {
  if (t_slots < 1) throw std::invalid_argument("t_slots must be >= 1");
  UplinkEcho out;
  out.probe = sample_covariance_columns(r_u, t_slots, rng);
  out.y = had.F().adjoint() * g.g_matrix * out.probe;
  if (sigma_u_sq > 0) out.y += std::sqrt(sigma_u_sq) * complex_gaussian(had.n_rf(), t_slots, rng);
  return out;
}

}  // namespace ispac
