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

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ispac::conic {

using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

// Cone K = R_+^l x Q^{q_1} x ... x S_+^{s_1} x ...; PSD blocks use full column-major storage;
// rows of G and h for entries (i, j) and (j, i) must agree.
struct ConeDims {
  int l = 0;
  std::vector<int> q;
  std::vector<int> s;
  int size() const;
  int degree() const;
};

// minimize c^T x  s.t.  G x + s = h, A x = b, s in K.
struct Problem {
  RVec c;
  RMat G;
  RVec h;
  RMat A;
  RVec b;
  ConeDims dims;
};

enum class Status { kOptimal, kInfeasible, kUnbounded, kMaxIter };
const char* to_string(Status s);

struct Settings {
  double tol = 1e-8;
  int max_iter = 100;
  bool verbose = false;
};

struct Result {
  Status status = Status::kMaxIter;
  RVec x, y, s, z;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  int iterations = 0;
  // Residuals within 1e3 x tolerance when the iteration stalled; only meaningful for kMaxIter.
  bool near_optimal = false;
  std::string message;
};

// Homogeneous self-dual interior-point method with Nesterov-Todd scaling.
Result solve(const Problem& problem, const Settings& settings = {});

// Exposed for tests: Nesterov-Todd scaling of a single second-order cone pair.
struct SocScaling {
  double beta = 1.0;
  RVec v;
  RVec lambda;
};
SocScaling soc_nt_scaling(const RVec& s, const RVec& z);

}  // namespace ispac::conic
