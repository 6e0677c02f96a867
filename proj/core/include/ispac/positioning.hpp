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

#include <vector>

#include "ispac/geometry.hpp"
#include "ispac/signal.hpp"

namespace ispac {

struct GridSpec {
  double theta_min = 0.0;
  double theta_max = 89.95 * kPi / 180.0;
  int theta_points = 1800;
  double r_min = 5.0;
  double r_max = 50.0;
  int r_points = 901;

  double theta_at(int i) const;
  double range_at(int i) const;
  double theta_resolution() const { return (theta_max - theta_min) / (theta_points - 1); }
  double range_resolution() const { return (r_max - r_min) / (r_points - 1); }
  void validate() const;
};

struct PositionEstimate {
  double theta_hat = 0.0;
  double r_hat = 0.0;
  cd beta_hat{0.0, 0.0};
  std::vector<double> angle_spectrum;
  std::vector<double> range_spectrum;
  long evaluations = 0;
};

// Eigenvectors of (1/T) Y Y^H for the rows(Y) - signal_dim smallest eigenvalues.
CMat noise_subspace(const CMat& y, int signal_dim = 1);

struct AngleEstimate {
  double theta_hat = 0.0;
  std::vector<double> spectrum;
  long evaluations = 0;
};

// argmin over the grid of ||U_n^H b(theta)||^2.
AngleEstimate downlink_angle_music(const CMat& u_n, const ArrayConfig& cfg_at, const GridSpec& grid);

struct RangeEstimate {
  double r_hat = 0.0;
  cd beta_hat{0.0, 0.0};
  std::vector<double> spectrum;
  long evaluations = 0;
};

// argmax_r |delta^H y|^2 / ||delta||^2 with delta = vec(b a^T X); y = vec(Y).
RangeEstimate downlink_distance_mle(const CMat& y, const CMat& x, double theta_hat,
                                    const ArrayConfig& cfg_mt, const ArrayConfig& cfg_at,
                                    const GridSpec& grid);

PositionEstimate downlink_two_stage(const CMat& y, const CMat& x, const ArrayConfig& cfg_mt,
                                    const ArrayConfig& cfg_at, const GridSpec& grid);

// Split a(theta, r) = diag(c(vartheta)) d(phi).
CVec split_c(int n, double vartheta);
CVec split_d(int n, double phi);
double to_vartheta(const ArrayConfig& cfg, double theta);
double to_phi(const ArrayConfig& cfg, double theta, double range);
// Inverse map (vartheta, phi) -> (theta, r); throws when vartheta is outside the arcsin domain.
PolarPoint from_split(const ArrayConfig& cfg, double vartheta, double phi);

struct SplitSpectrum {
  CMat gamma;
  double objective = 0.0;  // e1^H Gamma^{-1} e1
  bool ridged = false;
};

SplitSpectrum uplink_split_spectrum(const CMat& u_n, const HadPrecoder& had, double vartheta);

// Gamma^{-1} e1 / (e1^H Gamma^{-1} e1), ridged like the spectrum when needed.
CVec kkt_d_opt(const CMat& gamma, bool* ridged = nullptr);

// Angle from the AT side of the LS channel estimate Y S^H (S S^H)^{-1};
// range from the phi search d(phi)^H Gamma(vartheta_hat) d(phi) on the MT side.
PositionEstimate uplink_two_stage(const CMat& y, const CMat& probe, const HadPrecoder& had,
                                  const ArrayConfig& cfg_mt, const ArrayConfig& cfg_at,
                                  const GridSpec& grid);

}  // namespace ispac
