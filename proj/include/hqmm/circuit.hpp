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

// Circuit simulation of a 2-state, 3-symbol HMM filter step with two
// environment registers, plus an exact HMM -> HQMM Kraus embedding.
//
// Register order is system first, environment second, for every tensor
// product and partial trace in this file.

#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "hqmm/gen.hpp"
#include "hqmm/model.hpp"

namespace hqmm {

struct Prop1Instance {
  double a = 1.0;  // A = [[a, 1-b], [1-a, b]]
  double b = 1.0;
  std::array<double, 3> e{1.0, 0.0, 0.0};  // emission column of state 0
  std::array<double, 3> f{1.0, 0.0, 0.0};  // emission column of state 1
  double r = 1.0;                          // rho_prev = [[r, c], [c*, s]]
  double s = 0.0;
  cd c{0.0, 0.0};
  int y = 0;  // 0-based symbol in {0, 1, 2}
};

/// Throws ValidationError for out-of-range probabilities or coherence.
void validate_instance(const Prop1Instance& inst);

/// Uniformly random instance; |c| is drawn up to sqrt(r s).
Prop1Instance random_instance(std::uint64_t seed, std::uint64_t stream);

/// 4x4 transition unitary acting on system (x) environment.
CMatrixXd build_u1(double a, double b);

/// 3x3 real orthogonal matrix whose first column is sqrt(col); the remaining
/// columns are a Gram-Schmidt completion from the canonical basis.
CMatrixXd emission_block(const std::array<double, 3>& col);

/// 6x6 unitary V0 (+) V1.
CMatrixXd build_u2(const std::array<double, 3>& e, const std::array<double, 3>& f);

struct CircuitOutput {
  CMatrixXd rho;                 // normalized output state (2x2)
  std::array<double, 2> diag{};  // its diagonal
  double norm = 0.0;             // trace before normalization
  bool zero_probability = false;
};

/// Runs the full two-register circuit (tensor, U1, partial trace, tensor,
/// U2, projector, partial trace, normalize).
CircuitOutput circuit_posterior(const Prop1Instance& inst);

struct ClassicalPosterior {
  std::array<double, 2> posterior{};
  double denominator = 0.0;
  bool zero_probability = false;
};

/// x_t(j | y) for the same HMM, from the closed-form filter update.
ClassicalPosterior classical_posterior(const Prop1Instance& inst);

struct Prop1Report {
  int trials = 0;
  double max_diag_deviation = 0.0;
  double max_norm_deviation = 0.0;
  int zero_probability_instances = 0;
};

/// Random-instance sweep comparing the circuit with the classical posterior.
Prop1Report prop1_sweep(int trials, std::uint64_t seed);

/// Kraus embedding with one operator sqrt(T_y(w, j)) |w><j| per (w, j, y); the
/// per-output operators are ordered j-major (q = j*n + w + 1). Diagonal
/// initial state diag(x0).
HqmmModel hmm_to_hqmm(const HmmSpec& spec);

}  // namespace hqmm
