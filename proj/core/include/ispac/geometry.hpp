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

#include <complex>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ispac {

using cd = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;
using Rng = std::mt19937_64;

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kPi = 3.14159265358979323846;

// Uniform linear array.
struct ArrayConfig {
  int n_antennas = 1;
  double spacing_m = 0.0;
  double carrier_hz = 28e9;

  double wavelength() const { return kSpeedOfLight / carrier_hz; }
  double wavenumber() const { return 2.0 * kPi / wavelength(); }
  double aperture() const { return (n_antennas - 1) * spacing_m; }
  double rayleigh_distance() const {
    const double a = aperture();
    return 2.0 * a * a / wavelength();
  }
  void validate() const;
};

// Array with given aperture (spacing = aperture / (n-1)); n = 1 falls back to half wavelength.
ArrayConfig make_array_by_aperture(int n, double aperture_m, double carrier_hz);
// Half-wavelength array.
ArrayConfig make_half_wavelength_array(int n, double carrier_hz);

struct PolarPoint {
  double theta_rad = 0.0;
  double range_m = 1.0;
  void validate() const;
};

struct Scatterer {
  PolarPoint location;
  cd alpha{0.0, 0.0};
  double user_scatter_dist_m = 1.0;
};

struct CommChannel {
  CVec h;
  cd los_gain{0.0, 0.0};
  std::vector<Scatterer> scatterers;
};

struct SensingChannel {
  cd beta{1.0, 0.0};
  CVec a_vec;
  CVec b_vec;
  CMat g_matrix;
};

enum class LinkKind { kLoS, kNLoS };

struct PathLossModel {
  double a1_db = 61.4;
  double a2 = 2.0;
  LinkKind variant = LinkKind::kLoS;
};

inline PathLossModel nyc_los() { return {61.4, 2.0, LinkKind::kLoS}; }
inline PathLossModel nyc_nlos() { return {72.0, 2.92, LinkKind::kNLoS}; }

CVec far_field_steering(const ArrayConfig& cfg, double theta);
CVec near_field_steering(const ArrayConfig& cfg, const PolarPoint& p);

struct SteeringDerivatives {
  CVec da_dtheta;
  CVec da_dr;
};
SteeringDerivatives steering_derivatives(const ArrayConfig& cfg, const PolarPoint& p);

// d b / d theta for the far-field steering vector.
CVec far_field_derivative(const ArrayConfig& cfg, double theta);

double path_loss_db(const PathLossModel& model, double range_m);
inline double db_to_amplitude(double loss_db) { return std::pow(10.0, -loss_db / 20.0); }

// Per-user scatterer description before gains are drawn.
struct ScattererGeometry {
  PolarPoint location;
  double user_scatter_dist_m = 1.0;
};

// Builds h = alpha_k e(theta_k, r_k) + sum_l alpha_l e(theta_l, r_l) / sqrt(L).
// When far_field is set, every steering vector is replaced by its far-field counterpart.
CommChannel make_comm_channel(const ArrayConfig& cfg, const PolarPoint& user,
                              const std::vector<ScattererGeometry>& scatterers,
                              const PathLossModel& los, const PathLossModel& nlos, Rng& rng,
                              bool far_field = false);

// G = beta a(theta, r) b(theta)^T. Region violations only produce a warning through `warning`.
SensingChannel make_sensing_channel(const ArrayConfig& cfg_mt, const ArrayConfig& cfg_at,
                                    const PolarPoint& target, cd beta,
                                    std::string* warning = nullptr);

// Far-field model of the same link (baseline beamsteering design).
SensingChannel make_far_field_sensing_channel(const ArrayConfig& cfg_mt,
                                              const ArrayConfig& cfg_at,
                                              const PolarPoint& target, cd beta);

// Round-trip reflection gain from two LoS hops of length r with a uniform random phase.
cd sensing_beta_from_path_loss(const PathLossModel& los, double range_m, Rng& rng);

}  // namespace ispac
