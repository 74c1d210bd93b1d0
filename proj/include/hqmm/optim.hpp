// Copyright 2026 The hqmm-rila Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Row-pair unitary updates of the stacked Kraus matrix and the bounded local
// solvers that pick the update angles.

#pragma once

#include <array>
#include <cstdint>
#include <numbers>
#include <string>

#include "hqmm/model.hpp"

namespace hqmm {

/// Angles of one 2x2 unitary acting on rows (i, j):
///   [ e^{i phi/2} e^{i psi} cos a     e^{i phi/2} e^{i delta} sin a ]
///   [ -e^{i phi/2} e^{-i delta} sin a  e^{i phi/2} e^{-i psi} cos a ]
struct Theta {
  double alpha = 0.0;
  double phi = 0.0;
  double psi = 0.0;
  double delta = 0.0;

  std::array<double, 4> as_array() const { return {alpha, phi, psi, delta}; }
  static Theta from_array(const std::array<double, 4>& a) {
    return {a[0], a[1], a[2], a[3]};
  }
  double l1_norm() const;
};

inline constexpr double kThetaBound = std::numbers::pi;

/// The 2x2 block applied by apply_update (determinant e^{i phi}).
Eigen::Matrix2cd rotation_block(const Theta& theta);

/// Simultaneous two-row rotation: both new rows are built from the old rows
/// i and j (1-based, i < j). All other rows are untouched.
StackedKraus apply_update(const StackedKraus& kappa, const Theta& theta, int i,
                          int j);
/// In-place variant of apply_update.
void apply_update_inplace(StackedKraus& kappa, const Theta& theta, int i, int j);

enum class ObjectiveKind { Regular, L1Penalized };

/// Batch log-likelihood, optionally minus lambda * |theta|_1.
struct Objective {
  ObjectiveKind kind = ObjectiveKind::Regular;
  double lambda = 0.0;
  ObsMatrix data;
  CMatrixXd rho0;

  static Objective regular(const ObsMatrix& data, CMatrixXd rho0);
  static Objective l1(const ObsMatrix& data, CMatrixXd rho0, double lambda);
};

double eval_objective(const Objective& obj, const StackedKraus& kappa,
                      const Theta& theta, int i, int j);

enum class SolverKind { PatternSearch, FdLocal };

struct SolverConfig {
  SolverKind kind = SolverKind::PatternSearch;
  int max_evals = 1000;
  // Pattern search.
  double initial_mesh = 0.25;
  double mesh_tolerance = 1e-4;
  double expansion = 2.0;
  double contraction = 0.5;
  // Finite-difference quasi-Newton.
  double fd_step = 1e-6;
  double gradient_tolerance = 1e-6;
  double step_tolerance = 1e-8;
};

struct SolveResult {
  Theta theta;
  double value = kNegInf;  // objective at theta
  double start_value = kNegInf;  // objective at theta = 0
  int evals = 0;
};

/// Maximizes the objective over theta in [-pi, pi]^4 starting from 0. Never
/// returns a point worse than the start; an exhausted budget returns the
/// best point seen.
SolveResult maximize(const Objective& obj, const StackedKraus& kappa, int i,
                     int j, const SolverConfig& cfg = {});

std::string to_string(SolverKind kind);
SolverKind solver_from_string(const std::string& s);
std::string to_string(ObjectiveKind kind);
ObjectiveKind objective_from_string(const std::string& s);

}  // namespace hqmm
