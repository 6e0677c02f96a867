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

#include <benchmark/benchmark.h>

#include <random>

#include "ispac/fim.hpp"
#include "ispac/positioning.hpp"
#include "ispac/scenario.hpp"

using namespace ispac;

namespace {

constexpr double kDeg = kPi / 180.0;

HadPrecoder random_had(int n, int n_rf, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
  RVec t(n);
  for (int i = 0; i < n; ++i) t(i) = u(rng);
  return HadPrecoder(t, n_rf);
}

ScenarioParams desk(int n_mt, int n_rf, int k) {
  ScenarioParams p;
  p.n_mt = n_mt;
  p.n_at = 4;
  p.n_rf = n_rf;
  p.k_users = k;
  return p;
}

void BM_FimDownlink(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const ArrayConfig mt = make_array_by_aperture(n, 0.5, 28e9);
  const ArrayConfig at = make_half_wavelength_array(16, 28e9);
  Rng rng(1);
  const CMat x = complex_gaussian(n, n, rng);
  const CMat q = x * x.adjoint() / double(n);
  for (auto _ : state) {
    const GMatrixDerivs d = g_derivatives(mt, at, {45 * kDeg, 20.0});
    benchmark::DoNotOptimize(crb_from_fim(fim_downlink(q, d, cd(1, 0), 256, 1.0)));
  }
}
BENCHMARK(BM_FimDownlink)->Arg(16)->Arg(64);

void BM_FimUplink(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const ArrayConfig mt = make_array_by_aperture(n, 0.5, 28e9);
  const ArrayConfig at = make_half_wavelength_array(16, 28e9);
  Rng rng(2);
  const HadPrecoder had = random_had(n, n / 4, rng);
  const CMat r_u = CMat::Identity(16, 16) / 16.0;
  const GMatrixDerivs d = g_derivatives(mt, at, {45 * kDeg, 20.0});
  for (auto _ : state) benchmark::DoNotOptimize(fim_uplink(had, d, r_u, cd(1, 0), 256, 1.0));
}
BENCHMARK(BM_FimUplink)->Arg(16)->Arg(64);

void BM_DownlinkTwoStage(benchmark::State& state) {
  const ArrayConfig mt = make_array_by_aperture(64, 0.5, 28e9);
  const ArrayConfig at = make_half_wavelength_array(16, 28e9);
  Rng rng(3);
  const HadPrecoder had = random_had(64, 16, rng);
  DownlinkTx tx;
  tx.w_digital = CMat::Zero(16, 0);
  tx.r_probe = CMat::Identity(16, 16) / 64.0;
  const SensingChannel g = make_sensing_channel(mt, at, {45 * kDeg, 20.0}, cd(1, 0));
  const CMat x = synth_downlink_frames(had, tx, 256, rng);
  const CMat y = synth_downlink_echo(x, g, 0.1, rng);
  const GridSpec grid;
  for (auto _ : state) benchmark::DoNotOptimize(downlink_two_stage(y, x, mt, at, grid));
}
BENCHMARK(BM_DownlinkTwoStage)->Unit(benchmark::kMillisecond);

void BM_UplinkTwoStage(benchmark::State& state) {
  const ArrayConfig mt = make_array_by_aperture(64, 0.5, 28e9);
  const ArrayConfig at = make_half_wavelength_array(16, 28e9);
  Rng rng(4);
  const HadPrecoder had = random_had(64, 16, rng);
  const SensingChannel g = make_sensing_channel(mt, at, {45 * kDeg, 20.0}, cd(1, 0));
  const UplinkEcho e = synth_uplink_echo(had, g, CMat::Identity(16, 16) / 16.0, 256, 0.1, rng);
  const GridSpec grid;
  for (auto _ : state) benchmark::DoNotOptimize(uplink_two_stage(e.y, e.probe, had, mt, at, grid));
}
BENCHMARK(BM_UplinkTwoStage)->Unit(benchmark::kMillisecond);

// One digital SDR block of the downlink optimizer (conic solve plus recovery).
void BM_DigitalDownlinkSdr(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(5);
  const ScenarioParams p = desk(n, n / 4, 2);
  const ScenarioDraw d = draw_scenario(p, rng);
  const DownlinkScenario sc = make_downlink(p, d, Variant::kHadNear, 10.0);
  const HadPrecoder had = random_had(n, n / 4, rng);
  const DownlinkContext ctx = make_downlink_context(sc, had.F() * had.F().adjoint() / double(n / 4));
  PddState st;
  st.upsilon = CMat::Zero(n, n);
  for (auto _ : state) benchmark::DoNotOptimize(solve_digital_downlink(ctx, had, st));
}
BENCHMARK(BM_DigitalDownlinkSdr)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
