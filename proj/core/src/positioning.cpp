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

#include "ispac/positioning.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ispac {

namespace {
double linspace_at(double lo, double hi, int n, int i) {
  return (lo * (n - 1 - i) + hi * i) / (n - 1);
}

// Eigen-decomposition of (1/T) Y Y^H, ascending eigenvalues.
Eigen::SelfAdjointEigenSolver<CMat> sample_eig(const CMat& y) {
  const CMat r = (y * y.adjoint()) / static_cast<double>(y.cols());
  return Eigen::SelfAdjointEigenSolver<CMat>(0.5 * (r + r.adjoint()));
}

constexpr double kRidge = 1e-10;

// (Gamma + ridge)^{-1} e1; the ridge is applied only when Gamma is numerically singular.
CVec gamma_inverse_e1(const CMat& gamma, bool* ridged) {
  const Eigen::Index n = gamma.rows();
  CVec e1 = CVec::Zero(n);
  e1(0) = 1.0;
  const CMat herm = 0.5 * (gamma + gamma.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(herm);
  const double tr = std::max(herm.trace().real(), std::numeric_limits<double>::min());
  const double floor = kRidge * tr / static_cast<double>(n);
  const bool used = es.eigenvalues()(0) < floor;
  RVec ev = es.eigenvalues();
  if (used) ev.array() += floor;
  if (ridged) *ridged = used;
  return es.eigenvectors() * ev.cwiseInverse().asDiagonal() * (es.eigenvectors().adjoint() * e1);
}

// Orthonormal complement of the dominant column direction of M.
CMat noise_basis(const CMat& m) {
  Eigen::SelfAdjointEigenSolver<CMat> es(m * m.adjoint());
  return es.eigenvectors().leftCols(m.rows() - 1);
}
}  // namespace

double GridSpec::theta_at(int i) const { return linspace_at(theta_min, theta_max, theta_points, i); }
double GridSpec::range_at(int i) const { return linspace_at(r_min, r_max, r_points, i); }

void GridSpec::validate() const {
  if (!(theta_min < theta_max) || theta_points < 2) throw std::invalid_argument("bad angle grid");
  if (!(r_min < r_max) || r_points < 2 || !(r_min > 0)) throw std::invalid_argument("bad range grid");
  if (!(theta_min > -kPi / 2 && theta_max < kPi / 2)) {
    throw std::invalid_argument("angle grid must stay inside (-90, 90) degrees");
  }
}

CMat noise_subspace(const CMat& y, int signal_dim) {
  const Eigen::Index n = y.rows();
  if (signal_dim < 0 || signal_dim >= n) throw std::invalid_argument("bad signal dimension");
  if (y.cols() < n) throw std::invalid_argument("too few snapshots for covariance rank");
  const auto es = sample_eig(y);
  return es.eigenvectors().leftCols(n - signal_dim);
}

AngleEstimate downlink_angle_music(const CMat& u_n, const ArrayConfig& cfg_at, const GridSpec& grid) {
  grid.validate();
  AngleEstimate out;
  out.spectrum.resize(grid.theta_points);
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid.theta_points; ++i) {
    const double th = grid.theta_at(i);
    const double v = (u_n.adjoint() * far_field_steering(cfg_at, th)).squaredNorm();
    out.spectrum[i] = v;
    ++out.evaluations;
    if (v < best) {
      best = v;
      out.theta_hat = th;
    }
  }
  return out;
}

RangeEstimate downlink_distance_mle(const CMat& y, const CMat& x, double theta_hat,
                                    const ArrayConfig& cfg_mt, const ArrayConfig& cfg_at,
                                    const GridSpec& grid) {
  grid.validate();
  if (x.cwiseAbs().maxCoeff() == 0.0) throw std::invalid_argument("transmit frames are all zero");
  const CVec b = far_field_steering(cfg_at, theta_hat);
  // delta^H y = conj(a^T X z^H) with z = b^H Y; ||delta||^2 = ||b||^2 a^T X X^H a*.
  const Eigen::RowVectorXcd z = b.adjoint() * y;
  const CVec v = x * z.adjoint();
  const CMat xx = x * x.adjoint();
  const double nb = b.squaredNorm();

  RangeEstimate out;
  out.spectrum.resize(grid.r_points);
  double best = -1.0;
  for (int i = 0; i < grid.r_points; ++i) {
    const double r = grid.range_at(i);
    const CVec a = near_field_steering(cfg_mt, {theta_hat, r});
    const cd corr = std::conj(cd((a.transpose() * v)(0)));
    const double energy = nb * (a.transpose() * xx * a.conjugate())(0).real();
    const double val = std::norm(corr) / energy;
    out.spectrum[i] = val;
    ++out.evaluations;
    if (val > best) {
      best = val;
      out.r_hat = r;
      out.beta_hat = corr / energy;
    }
  }
  return out;
}

PositionEstimate downlink_two_stage(const CMat& y, const CMat& x, const ArrayConfig& cfg_mt,
                                    const ArrayConfig& cfg_at, const GridSpec& grid) {
  PositionEstimate est;
  AngleEstimate ang = downlink_angle_music(noise_subspace(y, 1), cfg_at, grid);
  RangeEstimate rng = downlink_distance_mle(y, x, ang.theta_hat, cfg_mt, cfg_at, grid);
  est.theta_hat = ang.theta_hat;
  est.r_hat = rng.r_hat;
  est.beta_hat = rng.beta_hat;
  est.angle_spectrum = std::move(ang.spectrum);
  est.range_spectrum = std::move(rng.spectrum);
  est.evaluations = ang.evaluations + rng.evaluations;
  return est;
}

CVec split_c(int n, double vartheta) {
  CVec c(n);
  for (int i = 0; i < n; ++i) c(i) = std::polar(1.0, vartheta * i);
  return c;
}

CVec split_d(int n, double phi) {
  CVec d(n);
  for (int i = 0; i < n; ++i) d(i) = std::polar(1.0, -phi * double(i) * double(i));
  return d;
}

double to_vartheta(const ArrayConfig& cfg, double theta) {
  return cfg.wavenumber() * cfg.spacing_m * std::sin(theta);
}

double to_phi(const ArrayConfig& cfg, double theta, double range) {
  const double c = std::cos(theta);
  return cfg.wavenumber() * cfg.spacing_m * cfg.spacing_m * c * c / (2.0 * range);
}

PolarPoint from_split(const ArrayConfig& cfg, double vartheta, double phi) {
  const double s = vartheta / (cfg.wavenumber() * cfg.spacing_m);
  if (!(std::abs(s) < 1.0)) throw std::domain_error("vartheta outside the arcsin domain");
  if (!(phi > 0)) throw std::domain_error("phi must be positive");
  PolarPoint p;
  p.theta_rad = std::asin(s);
  const double c = std::cos(p.theta_rad);
  p.range_m = cfg.wavenumber() * cfg.spacing_m * cfg.spacing_m * c * c / (2.0 * phi);
  return p;
}

SplitSpectrum uplink_split_spectrum(const CMat& u_n, const HadPrecoder& had, double vartheta) {
  const int n = had.n_antennas();
  const CVec c = split_c(n, vartheta);
  const CMat fu = c.conjugate().asDiagonal() * (had.F() * u_n);
  SplitSpectrum out;
  out.gamma = fu * fu.adjoint();
  out.objective = gamma_inverse_e1(out.gamma, &out.ridged)(0).real();
  return out;
}

CVec kkt_d_opt(const CMat& gamma, bool* ridged) {
  const CVec g = gamma_inverse_e1(gamma, ridged);
  return g / g(0);
}

PositionEstimate uplink_two_stage(const CMat& y, const CMat& probe, const HadPrecoder& had,
                                  const ArrayConfig& cfg_mt, const ArrayConfig& cfg_at,
                                  const GridSpec& grid) {
  grid.validate();
  if (probe.cols() != y.cols()) throw std::invalid_argument("probe and echo frame counts differ");
  PositionEstimate est;

  // Angle: rows of the LS estimate are proportional to b(theta)^T.
  const CMat sst = probe * probe.adjoint();
  const CMat h_ls = (sst.transpose().ldlt().solve((y * probe.adjoint()).transpose())).transpose();
  const CMat ht = h_ls.transpose();
  AngleEstimate ang = downlink_angle_music(noise_basis(ht), cfg_at, grid);
  est.theta_hat = ang.theta_hat;
  est.angle_spectrum = std::move(ang.spectrum);
  est.evaluations = ang.evaluations;

  // Range: phi search on the image of the range grid.
  const int n = had.n_antennas();
  const CMat u_n = noise_subspace(y, 1);
  const double vt = to_vartheta(cfg_mt, est.theta_hat);
  const CVec c = split_c(n, vt);
  const CMat proj = (c.conjugate().asDiagonal() * (had.F() * u_n)).adjoint();  // (N_RF-1) x N_a
  est.range_spectrum.resize(grid.r_points);
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid.r_points; ++i) {
    const double r = grid.range_at(i);
    const double val = (proj * split_d(n, to_phi(cfg_mt, est.theta_hat, r))).squaredNorm();
    est.range_spectrum[i] = val;
    ++est.evaluations;
    if (val < best) {
      best = val;
      est.r_hat = r;
    }
  }
  return est;
}

}  // namespace ispac
