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

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "ispac/conic.hpp"
#include "ispac/geometry.hpp"

namespace ispac {

// Real affine expression sum_i coef_i x_i + constant.
struct LinExpr {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  LinExpr() = default;
  LinExpr(double c) : constant(c) {}  // NOLINT: implicit constant promotion is intended
  static LinExpr var(int i, double coef = 1.0);

  LinExpr& operator+=(const LinExpr& o);
  LinExpr& operator-=(const LinExpr& o);
  LinExpr& operator*=(double s);
  double eval(const RVec& x) const;
};
LinExpr operator+(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a, const LinExpr& b);
LinExpr operator*(double s, LinExpr a);

// Complex affine expression over real variables.
struct CLinExpr {
  std::vector<std::pair<int, cd>> terms;
  cd constant{0.0, 0.0};

  CLinExpr() = default;
  CLinExpr(cd c) : constant(c) {}  // NOLINT
  CLinExpr& operator+=(const CLinExpr& o);
  CLinExpr& operator-=(const CLinExpr& o);
  CLinExpr& operator*=(cd s);
  CLinExpr conj() const;
  LinExpr real() const;
  LinExpr imag() const;
  cd eval(const RVec& x) const;
};
CLinExpr operator+(CLinExpr a, const CLinExpr& b);
CLinExpr operator-(CLinExpr a, const CLinExpr& b);
CLinExpr operator*(cd s, CLinExpr a);

// Hermitian n x n variable block stored as n^2 real unknowns.
struct HermVar {
  int n = 0;
  int offset = 0;
  int re_index(int a, int b) const;  // a < b
  CLinExpr entry(int a, int b) const;
  // Re tr(X M) and tr(X M) as expressions in the block.
  LinExpr re_trace_with(const CMat& m) const;
  CLinExpr trace_with(const CMat& m) const;
  int size() const { return n * n; }
};

// Real symmetric n x n variable block with n(n+1)/2 unknowns.
struct SymVar {
  int n = 0;
  int offset = 0;
  LinExpr entry(int a, int b) const;
};

enum class SdpStatus { kOptimal, kInfeasible, kUnbounded, kMaxIter };
const char* to_string(SdpStatus s);

struct SolverSettings {
  double tolerance = 1e-8;
  int max_iterations = 100;
  bool verbose = false;
};

struct SdpSolution {
  SdpStatus status = SdpStatus::kMaxIter;
  bool near_optimal = false;
  RVec x;
  double objective = 0.0;
  int iterations = 0;
  double max_violation = 0.0;  // independent post-hoc audit of every constraint
  std::string message;

  bool usable() const { return status == SdpStatus::kOptimal || near_optimal; }
  CMat value(const HermVar& v) const;
  RMat value(const SymVar& v) const;
  double value(const LinExpr& e) const { return e.eval(x); }
};

// Modeling layer over the conic solver: linear objective, affine (in)equalities,
// second-order cones and real or Hermitian LMIs.
class SdpProblem {
 public:
  int add_scalar();
  HermVar add_hermitian(int n);
  SymVar add_symmetric(int n);
  int num_vars() const { return nvars_; }

  void minimize(const LinExpr& objective) { objective_ = objective; }
  void add_le(const LinExpr& e);  // e <= 0
  void add_eq(const LinExpr& e);  // e == 0
  void add_soc(const LinExpr& t, const std::vector<LinExpr>& v);  // ||v|| <= t
  void add_psd(int n, const std::function<LinExpr(int, int)>& entry);
  void add_hermitian_psd(int n, const std::function<CLinExpr(int, int)>& entry);
  void add_hermitian_psd(const HermVar& v);

  SdpSolution solve(const SolverSettings& settings = {}) const;
  // Largest violation of any constraint at x (cones measured by their minimum eigenvalue).
  double max_violation(const RVec& x) const;

 private:
  struct Soc {
    LinExpr t;
    std::vector<LinExpr> v;
  };
  struct Psd {
    int n;
    std::vector<LinExpr> entries;  // column-major, full storage
  };
  int nvars_ = 0;
  LinExpr objective_;
  std::vector<LinExpr> le_;
  std::vector<LinExpr> eq_;
  std::vector<Soc> soc_;
  std::vector<Psd> psd_;
};

// Free-function form of SdpProblem::solve.
inline SdpSolution solve_sdp(const SdpProblem& problem, const SolverSettings& settings = {}) {
  return problem.solve(settings);
}

// Builds W* = W h* h^T W / (h^T W h*) and returns its factor w (W* = w w^H),
// canonicalized to a real non-negative first entry.
CVec rank_one_downlink_recovery(const CMat& w_sdr, const CVec& h_tilde);

enum class RandomizationStatus { kOk, kNoFeasibleSample };

struct RandomizationResult {
  RandomizationStatus status = RandomizationStatus::kNoFeasibleSample;
  CVec candidate;
  double objective = 0.0;
  int feasible_samples = 0;
};

// Draws xi ~ CN(0, X), projects to unit modulus and keeps the feasible candidate with the
// smallest objective. `evaluate` returns nullopt for infeasible candidates.
using CandidateEvaluator = std::function<std::optional<double>(const CVec&)>;
RandomizationResult gaussian_randomization(const CMat& x_sdr, const CandidateEvaluator& evaluate,
                                           int n_samples, Rng& rng,
                                           const std::vector<CVec>& extra_candidates = {});

// Unit-modulus projection with the first entry rotated to the positive real axis.
CVec canonical_unit_modulus(const CVec& v);

}  // namespace ispac
