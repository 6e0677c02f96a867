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

#include "ispac/conic.hpp"
#include "ispac/sdp.hpp"
#include "ispac/signal.hpp"

using namespace ispac;
namespace cn = ispac::conic;

namespace {

RVec jmul(const RVec& v) {
  RVec r = -v;
  r(0) = v(0);
  return r;
}

// Random problem with a known primal-dual optimal pair built from complementary slack points.
cn::Problem certified_problem(Rng& rng, double* optimum) {
  std::normal_distribution<double> g;
  cn::Problem p;
  p.dims.l = 3;
  p.dims.q = {3};
  p.dims.s = {3};
  const int m = p.dims.size();
  const int n = 6;
  p.G = RMat::NullaryExpr(m, n, [&](auto, auto) { return g(rng); });
  p.A = RMat::NullaryExpr(1, n, [&](auto, auto) { return g(rng); });
  // PSD rows must describe symmetric matrices.
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < i; ++j) p.G.row(6 + 3 * j + i) = p.G.row(6 + 3 * i + j);

  RVec s = RVec::Zero(m), z = RVec::Zero(m);
  s(0) = 1.0; z(1) = 2.0; s(2) = 0.5; z(2) = 0.0;
  // SOC pair on opposite boundary rays.
  s.segment(3, 3) << 1.0, 0.6, 0.8;
  z.segment(3, 3) << 2.0, -1.2, -1.6;
  // PSD pair with orthogonal ranges.
  const RMat q = RMat::NullaryExpr(3, 3, [&](auto, auto) { return g(rng); }).householderQr().householderQ();
  const RMat sm = q.col(0) * q.col(0).transpose() * 2.0;
  const RMat zm = q.col(1) * q.col(1).transpose() + q.col(2) * q.col(2).transpose() * 0.5;
  s.segment(6, 9) = Eigen::Map<const RVec>(sm.data(), 9);
  z.segment(6, 9) = Eigen::Map<const RVec>(zm.data(), 9);

  const RVec x = RVec::NullaryExpr(n, [&](auto) { return g(rng); });
  const RVec y = RVec::NullaryExpr(1, [&](auto) { return g(rng); });
  p.h = p.G * x + s;
  p.b = p.A * x;
  p.c = -p.G.transpose() * z - p.A.transpose() * y;
  *optimum = p.c.dot(x);
  return p;
}

}  // namespace

TEST_CASE("SOC Nesterov-Todd scaling maps both points to lambda") {
  Rng rng(1);
  std::normal_distribution<double> g;
  for (int t = 0; t < 20; ++t) {
    RVec s(4), z(4);
    for (int i = 1; i < 4; ++i) { s(i) = g(rng); z(i) = g(rng); }
    s(0) = s.tail(3).norm() + 0.1 + std::abs(g(rng));
    z(0) = z.tail(3).norm() + 0.1 + std::abs(g(rng));
    const cn::SocScaling w = cn::soc_nt_scaling(s, z);
    const RVec jv = jmul(w.v);
    const RVec wz = w.beta * (2.0 * w.v * w.v.dot(z) - jmul(z));
    const RVec winv_s = (2.0 * jv * jv.dot(s) - jmul(s)) / w.beta;
    CHECK((wz - w.lambda).norm() < 1e-10 * w.lambda.norm());
    CHECK((winv_s - w.lambda).norm() < 1e-10 * w.lambda.norm());
  }
}

TEST_CASE("small LP") {
  // min -x0 - x1  s.t. x0 + 2 x1 <= 4, 3 x0 + x1 <= 6, x >= 0  -> x = (1.6, 1.2).
  cn::Problem p;
  p.dims.l = 4;
  p.c = RVec(2);
  p.c << -1, -1;
  p.G = RMat(4, 2);
  p.G << 1, 2, 3, 1, -1, 0, 0, -1;
  p.h = RVec(4);
  p.h << 4, 6, 0, 0;
  const cn::Result r = cn::solve(p);
  REQUIRE(r.status == cn::Status::kOptimal);
  CHECK(r.x(0) == doctest::Approx(1.6).epsilon(1e-6));
  CHECK(r.x(1) == doctest::Approx(1.2).epsilon(1e-6));
}

TEST_CASE("certified random conic problems reach the constructed optimum") {
  Rng rng(5);
  for (int t = 0; t < 10; ++t) {
    double opt = 0.0;
    const cn::Problem p = certified_problem(rng, &opt);
    const cn::Result r = cn::solve(p);
    REQUIRE(r.status == cn::Status::kOptimal);
    CHECK(std::abs(r.primal_objective - opt) <= 1e-6 * std::max(1.0, std::abs(opt)));
    CHECK(std::abs(r.dual_objective - opt) <= 1e-6 * std::max(1.0, std::abs(opt)));
  }
}

TEST_CASE("infeasible and unbounded problems are certified") {
  cn::Problem inf;
  inf.dims.l = 2;
  inf.c = RVec::Ones(1);
  inf.G = RMat(2, 1);
  inf.G << 1, -1;
  inf.h = RVec(2);
  inf.h << -1, -1;  // x <= -1 and x >= 1
  CHECK(cn::solve(inf).status == cn::Status::kInfeasible);

  cn::Problem unb;
  unb.dims.l = 1;
  unb.c = RVec::Ones(1);
  unb.G = RMat::Ones(1, 1);
  unb.h = RVec::Ones(1);  // x <= 1, minimize x
  CHECK(cn::solve(unb).status == cn::Status::kUnbounded);
}

TEST_CASE("modeling layer: trace minimization above identity") {
  SdpProblem p;
  const SymVar x = p.add_symmetric(2);
  p.minimize(x.entry(0, 0) + x.entry(1, 1));
  p.add_psd(2, [&](int a, int b) { return x.entry(a, b) - LinExpr(a == b ? 1.0 : 0.0); });
  const SdpSolution s = p.solve();
  REQUIRE(s.status == SdpStatus::kOptimal);
  CHECK(s.objective == doctest::Approx(2.0).epsilon(1e-7));
  CHECK(s.max_violation < 1e-7);

  p.add_le(x.entry(0, 0) + x.entry(1, 1) - LinExpr(1.0));
  CHECK(p.solve().status == SdpStatus::kInfeasible);
}

TEST_CASE("modeling layer: Hermitian minimum eigenvalue") {
  Rng rng(7);
  const CMat a = complex_gaussian(4, 4, rng);
  const CMat c = a + a.adjoint();
  SdpProblem p;
  const HermVar x = p.add_hermitian(4);
  p.minimize(x.re_trace_with(c));
  p.add_eq(x.re_trace_with(CMat::Identity(4, 4)) - LinExpr(1.0));
  p.add_hermitian_psd(x);
  const SdpSolution s = p.solve();
  REQUIRE(s.status == SdpStatus::kOptimal);
  Eigen::SelfAdjointEigenSolver<CMat> es(c);
  CHECK(s.objective == doctest::Approx(es.eigenvalues()(0)).epsilon(1e-6));
  const CMat xv = s.value(x);
  CHECK((xv - xv.adjoint()).norm() < 1e-12);
  CHECK(std::abs((xv * c).trace().real() - es.eigenvalues()(0)) < 1e-6);
}

TEST_CASE("modeling layer: second-order cone") {
  SdpProblem p;
  const int x0 = p.add_scalar();
  const int x1 = p.add_scalar();
  p.minimize(LinExpr::var(x0, 3.0) + LinExpr::var(x1, 4.0));
  p.add_soc(LinExpr(1.0), {LinExpr::var(x0), LinExpr::var(x1)});
  const SdpSolution s = p.solve();
  REQUIRE(s.status == SdpStatus::kOptimal);
  CHECK(s.objective == doctest::Approx(-5.0).epsilon(1e-7));
  CHECK(s.x(x0) == doctest::Approx(-0.6).epsilon(1e-6));
}

TEST_CASE("rank-one recovery preserves the quadratic form") {
  Rng rng(13);
  for (int t = 0; t < 100; ++t) {
    const CMat a = complex_gaussian(4, 4, rng);
    const CMat w = a * a.adjoint();
    const CVec h = complex_gaussian(4, 1, rng);
    const CVec v = rank_one_downlink_recovery(w, h);
    const double lhs = (h.transpose() * v * v.adjoint() * h.conjugate())(0).real();
    const double rhs = (h.transpose() * w * h.conjugate())(0).real();
    CHECK(std::abs(lhs - rhs) <= 1e-10 * rhs);
    CHECK(std::abs(v(0).imag()) < 1e-12);
  }
}

TEST_CASE("Gaussian randomization matches exhaustive search on a quantized problem") {
  // Objective depends on phases only through a 4-level quantization, so the
  // optimum over unit-modulus vectors equals the best of 4^N discrete points.
  const int n = 5;
  Rng rng(17);
  const CVec target = complex_gaussian(n, 1, rng);
  const auto quant = [](const CVec& v) {
    CVec q(v.size());
    for (int i = 0; i < v.size(); ++i) {
      const double k = std::round(std::arg(v(i)) / (kPi / 2));
      q(i) = std::polar(1.0, k * kPi / 2);
    }
    return q;
  };
  const auto objective = [&](const CVec& v) -> std::optional<double> {
    return -std::norm(quant(v).dot(target));
  };
  double brute = 0.0;
  CVec point(n);
  for (int code = 0; code < (1 << (2 * n)); ++code) {
    for (int i = 0; i < n; ++i) point(i) = std::polar(1.0, ((code >> (2 * i)) & 3) * kPi / 2);
    brute = std::min(brute, *objective(point));
  }
  const CMat x_sdr = target * target.adjoint() + 0.05 * CMat::Identity(n, n);
  Rng rr(3);
  const RandomizationResult res = gaussian_randomization(x_sdr, objective, 400, rr);
  REQUIRE(res.status == RandomizationStatus::kOk);
  CHECK(res.objective >= brute - 1e-12);
  CHECK(res.objective <= brute * 0.95);
  for (int i = 0; i < n; ++i) CHECK(std::abs(std::abs(res.candidate(i)) - 1.0) < 1e-12);

  const auto never = [](const CVec&) -> std::optional<double> { return std::nullopt; };
  CHECK(gaussian_randomization(x_sdr, never, 10, rr).status == RandomizationStatus::kNoFeasibleSample);
}
