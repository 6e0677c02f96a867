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

#include "ispac/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ispac {

namespace {
constexpr cd kJ{0.0, 1.0};

void check_theta(double theta) {
  if (!(theta > -kPi / 2 && theta < kPi / 2)) {
    throw std::invalid_argument("theta must lie in the open interval (-pi/2, pi/2)");
  }
}
}  // namespace

void ArrayConfig::validate() const {
  if (n_antennas < 1) throw std::invalid_argument("n_antennas must be >= 1");
  if (!(spacing_m > 0)) throw std::invalid_argument("spacing_m must be > 0");
  if (!(carrier_hz > 0)) throw std::invalid_argument("carrier_hz must be > 0");
}

ArrayConfig make_array_by_aperture(int n, double aperture_m, double carrier_hz) {
  ArrayConfig cfg;
  cfg.n_antennas = n;
  cfg.carrier_hz = carrier_hz;
  cfg.spacing_m = n > 1 ? aperture_m / (n - 1) : cfg.wavelength() / 2;
  cfg.validate();
  return cfg;
}

ArrayConfig make_half_wavelength_array(int n, double carrier_hz) {
  ArrayConfig cfg;
  cfg.n_antennas = n;
  cfg.carrier_hz = carrier_hz;
  cfg.spacing_m = cfg.wavelength() / 2;
  cfg.validate();
  return cfg;
}

void PolarPoint::validate() const {
  check_theta(theta_rad);
  if (!(range_m > 0)) throw std::invalid_argument("range_m must be > 0");
}

CVec far_field_steering(const ArrayConfig& cfg, double theta) {
  cfg.validate();
  check_theta(theta);
  const double step = cfg.wavenumber() * cfg.spacing_m * std::sin(theta);
  CVec v(cfg.n_antennas);
  for (int n = 0; n < cfg.n_antennas; ++n) v(n) = std::polar(1.0, step * n);
  return v;
}

CVec near_field_steering(const ArrayConfig& cfg, const PolarPoint& p) {
  cfg.validate();
  p.validate();
  const double k = cfg.wavenumber();
  const double d = cfg.spacing_m;
  const double s = std::sin(p.theta_rad);
  const double c2 = std::cos(p.theta_rad) * std::cos(p.theta_rad);
  CVec v(cfg.n_antennas);
  for (int n = 0; n < cfg.n_antennas; ++n) {
    const double nd = n * d;
    v(n) = std::polar(1.0, k * (nd * s - nd * nd * c2 / (2.0 * p.range_m)));
  }
  return v;
}

SteeringDerivatives steering_derivatives(const ArrayConfig& cfg, const PolarPoint& p) {
  const CVec a = near_field_steering(cfg, p);
  const double k = cfg.wavenumber();
  const double d = cfg.spacing_m;
  const double s = std::sin(p.theta_rad);
  const double c = std::cos(p.theta_rad);
  const double r = p.range_m;
  SteeringDerivatives out{CVec(cfg.n_antennas), CVec(cfg.n_antennas)};
  for (int n = 0; n < cfg.n_antennas; ++n) {
    const double nd = n * d;
    out.da_dtheta(n) = a(n) * kJ * k * (nd * c + nd * nd * c * s / r);
    out.da_dr(n) = a(n) * kJ * k * nd * nd * c * c / (2.0 * r * r);
  }
  return out;
}

CVec far_field_derivative(const ArrayConfig& cfg, double theta) {
  const CVec b = far_field_steering(cfg, theta);
  const double f = cfg.wavenumber() * cfg.spacing_m * std::cos(theta);
  CVec db(cfg.n_antennas);
  for (int m = 0; m < cfg.n_antennas; ++m) db(m) = b(m) * kJ * f * static_cast<double>(m);
  return db;
}

double path_loss_db(const PathLossModel& model, double range_m) {
  if (!(range_m > 0)) throw std::invalid_argument("range must be > 0");
  if (!(model.a2 > 0)) throw std::invalid_argument("path-loss exponent must be > 0");
  return model.a1_db + model.a2 * 10.0 * std::log10(range_m);
}

CommChannel make_comm_channel(const ArrayConfig& cfg, const PolarPoint& user,
                              const std::vector<ScattererGeometry>& scatterers,
                              const PathLossModel& los, const PathLossModel& nlos, Rng& rng,
                              bool far_field) {
  auto steer = [&](const PolarPoint& p) {
    return far_field ? far_field_steering(cfg, p.theta_rad) : near_field_steering(cfg, p);
  };
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  const double k = cfg.wavenumber();

  CommChannel ch;
  ch.los_gain = std::polar(db_to_amplitude(path_loss_db(los, user.range_m)), -k * user.range_m);
  ch.h = ch.los_gain * steer(user);
  const double norm = scatterers.empty() ? 1.0 : 1.0 / std::sqrt(double(scatterers.size()));
  for (const auto& sg : scatterers) {
    if (!(sg.user_scatter_dist_m > 0)) throw std::invalid_argument("user-scatterer distance must be > 0");
    Scatterer s;
    s.location = sg.location;
    s.user_scatter_dist_m = sg.user_scatter_dist_m;
    const double total = sg.location.range_m + sg.user_scatter_dist_m;
    s.alpha = std::polar(db_to_amplitude(path_loss_db(nlos, total)), -k * total + phase(rng));
    ch.h += norm * s.alpha * steer(sg.location);
    ch.scatterers.push_back(s);
  }
  return ch;
}

SensingChannel make_sensing_channel(const ArrayConfig& cfg_mt, const ArrayConfig& cfg_at,
                                    const PolarPoint& target, cd beta, std::string* warning) {
  SensingChannel g;
  g.beta = beta;
  g.a_vec = near_field_steering(cfg_mt, target);
  g.b_vec = far_field_steering(cfg_at, target.theta_rad);
  g.g_matrix = beta * g.a_vec * g.b_vec.transpose();
  if (warning) {
    warning->clear();
    if (target.range_m >= cfg_mt.rayleigh_distance()) *warning += "target outside MT near field; ";
    if (target.range_m <= cfg_at.rayleigh_distance()) *warning += "target inside AT near field; ";
  }
  return g;
}

SensingChannel make_far_field_sensing_channel(const ArrayConfig& cfg_mt,
                                              const ArrayConfig& cfg_at,
                                              const PolarPoint& target, cd beta) {
  SensingChannel g;
  g.beta = beta;
  g.a_vec = far_field_steering(cfg_mt, target.theta_rad);
  g.b_vec = far_field_steering(cfg_at, target.theta_rad);
  g.g_matrix = beta * g.a_vec * g.b_vec.transpose();
  return g;
}

cd sensing_beta_from_path_loss(const PathLossModel& los, double range_m, Rng& rng) {
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  const double amp = db_to_amplitude(2.0 * path_loss_db(los, range_m));
  return std::polar(amp, phase(rng));
}

}  // namespace ispac
