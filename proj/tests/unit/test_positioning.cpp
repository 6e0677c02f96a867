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

#include <doctest.h>

#include "ispac/positioning.hpp"

using namespace ispac;

namespace {
constexpr double kDeg = kPi / 180.0;

GridSpec small_grid() {
  GridSpec g;
  g.theta_min = 30 * kDeg;
  g.theta_max = 60 * kDeg;
  g.theta_points = 301;  // 0.1 degree
  g.r_min = 10.0;
  g.r_max = 30.0;
  g.r_points = 201;  // 0.1 m
  return g;
}
}  // namespace

TEST_CASE("grid points follow the linspace formula") {
  GridSpec g = small_grid();
  CHECK(g.theta_at(0) == g.theta_min);
  CHECK(g.theta_at(g.theta_points - 1) == g.theta_max);
  CHECK(g.range_at(100) == doctest::Approx(20.0).epsilon(1e-14));
  g.r_min = -1.0;
  CHECK_THROWS(g.validate());
}

TEST_CASE("noise subspace is orthogonal to a rank-one signal") {
  Rng rng(3);
  const CVec b = complex_gaussian(4, 1, rng);
  const CMat y = b * complex_gaussian(1, 50, rng);
  const CMat u = noise_subspace(y, 1);
  CHECK(u.cols() == 3);
  CHECK((u.adjoint() * b).norm() < 1e-10 * b.norm());
  CHECK((u.adjoint() * u - CMat::Identity(3, 3)).norm() < 1e-10);
  CHECK_THROWS(noise_subspace(CMat::Zero(4, 2), 1));
}

TEST_CASE("downlink two-stage estimator is exact without noise") {
  Rng rng(9);
  const ArrayConfig mt = make_array_by_aperture(16, 0.5, 28e9);
  const ArrayConfig at = make_half_wavelength_array(4, 28e9);
  const GridSpec grid = small_grid();
  const PolarPoint tgt{grid.theta_at(150), grid.range_at(80)};
  const SensingChannel g = make_sensing_channel(mt, at, tgt, cd(0.4, -0.3));
  const CMat x = complex_gaussian(16, 64, rng);
  const CMat y = synth_downlink_echo(x, g, 0.0, rng);
  const PositionEstimate est = downlink_two_stage(y, x, mt, at, grid);
  CHECK(est.theta_hat == doctest::Approx(tgt.theta_rad).epsilon(1e-12));
  CHECK(est.r_hat == doctest::Approx(tgt.range_m).epsilon(1e-12));
  CHECK(std::abs(est.beta_hat - cd(0.4, -0.3)) < 1e-8);
  CHECK(est.angle_spectrum.size() == size_t(grid.theta_points));
  CHECK(est.range_spectrum.size() == size_t(grid.r_points));
}

TEST_CASE("fast range statistic equals the brute-force matched filter") {
  Rng rng(10);
  const ArrayConfig mt = make_array_by_aperture(8, 0.5, 28e9);
  const ArrayConfig at = make_half_wavelength_array(4, 28e9);
  GridSpec grid = small_grid();
  grid.r_points = 21;
  const double theta = 0.7;
  const CMat x = complex_gaussian(8, 10, rng);
  const CMat y = complex_gaussian(4, 10, rng);
  const RangeEstimate est = downlink_distance_mle(y, x, theta, mt, at, grid);
  const CVec b = far_field_steering(at, theta);
  const Eigen::Map<const CVec> yv(y.data(), y.size());
  for (int i = 0; i < grid.r_points; ++i) {
    const CVec a = near_field_steering(mt, {theta, grid.range_at(i)});
    const CMat delta = b * (a.transpose() * x);
    const Eigen::Map<const CVec> dv(delta.data(), delta.size());
    const double ref = std::norm(dv.dot(yv)) / dv.squaredNorm();
    CHECK(est.spectrum[i] == doctest::Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("split parameterization round-trips") {
  const ArrayConfig mt = make_array_by_aperture(16, 0.5, 28e9);
  const PolarPoint p{35 * kDeg, 17.0};
  const double vt = to_vartheta(mt, p.theta_rad);
  const double ph = to_phi(mt, p.theta_rad, p.range_m);
  const CVec a = split_c(16, vt).cwiseProduct(split_d(16, ph));
  CHECK((a - near_field_steering(mt, p)).norm() < 1e-9);
  const PolarPoint back = from_split(mt, vt, ph);
  CHECK(back.theta_rad == doctest::Approx(p.theta_rad).epsilon(1e-12));
  CHECK(back.range_m == doctest::Approx(p.range_m).epsilon(1e-12));
  CHECK_THROWS(from_split(mt, 10 * mt.wavenumber() * mt.spacing_m, ph));
}

TEST_CASE("KKT optimum minimizes the quadratic under the unit first entry") {
  Rng rng(11);
  const CMat a = complex_gaussian(5, 5, rng);
  const CMat gamma = a * a.adjoint() + 0.1 * CMat::Identity(5, 5);
  const CVec d = kkt_d_opt(gamma);
  CHECK(std::abs(d(0) - cd(1, 0)) < 1e-12);
  const double best = (d.adjoint() * gamma * d)(0).real();
  CHECK(best == doctest::Approx(1.0 / gamma.inverse()(0, 0).real()).epsilon(1e-10));
  for (int trial = 0; trial < 20; ++trial) {
    CVec v = d + 0.1 * complex_gaussian(5, 1, rng);
    v(0) = 1.0;
    CHECK((v.adjoint() * gamma * v)(0).real() >= best - 1e-12);
  }
  bool ridged = false;
  kkt_d_opt(CMat::Zero(3, 3) + CVec::Ones(3) * CVec::Ones(3).adjoint(), &ridged);
  CHECK(ridged);
}

TEST_CASE("uplink two-stage estimator is exact without noise") {
  Rng rng(12);
  const ArrayConfig mt = make_array_by_aperture(16, 0.5, 28e9);
  const ArrayConfig at = make_half_wavelength_array(4, 28e9);
  const GridSpec grid = small_grid();
  std::uniform_real_distribution<double> u(0.0, 2 * kPi);
  RVec ph(16);
  for (int i = 0; i < 16; ++i) ph(i) = u(rng);
  const HadPrecoder had(ph, 4);
  const PolarPoint tgt{grid.theta_at(120), grid.range_at(60)};
  const SensingChannel g = make_sensing_channel(mt, at, tgt, cd(0.2, 0.5));
  const UplinkEcho echo = synth_uplink_echo(had, g, CMat::Identity(4, 4) / 4.0, 64, 0.0, rng);
  const PositionEstimate est = uplink_two_stage(echo.y, echo.probe, had, mt, at, grid);
  CHECK(est.theta_hat == doctest::Approx(tgt.theta_rad).epsilon(1e-12));
  CHECK(est.r_hat == doctest::Approx(tgt.range_m).epsilon(1e-12));
}
