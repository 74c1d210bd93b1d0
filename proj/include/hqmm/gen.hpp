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

// Data generation: HQMM and classical HMM samplers, adversarial corruption and
// the hard-coded benchmark models.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "hqmm/model.hpp"

namespace hqmm {

/// Classical HMM with column-stochastic A (n x n) and C (m x n).
struct HmmSpec {
  std::string name;
  Eigen::MatrixXd A;
  Eigen::MatrixXd C;
  Eigen::VectorXd x0;

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(C.rows()); }
};

/// Throws ValidationError on shape, sign or stochasticity violations.
void validate_hmm(const HmmSpec& spec, double tol = 1e-12);

/// Observation-specific transition operator diag(C(y,:)) * A, y 1-based.
Eigen::MatrixXd transfer_operator(const HmmSpec& spec, int y);

using ModelSpec = std::variant<HqmmModel, HmmSpec>;

/// Samples N independent rows of length T; each row restarts from rho0 and
/// uses its own RNG stream (stream id = row index).
ObsMatrix generate_hqmm(const HqmmModel& model, Eigen::Index n_rows,
                        Eigen::Index length, std::uint64_t seed);

/// Ancestral sampling: s_0 ~ x0, then per step s_t ~ A(:, s_{t-1}) and
/// y_t ~ C(:, s_t). This is the ordering behind P(y) = 1^T T_yT ... T_y1 x0.
ObsMatrix generate_hmm(const HmmSpec& spec, Eigen::Index n_rows,
                       Eigen::Index length, std::uint64_t seed);

ObsMatrix generate(const ModelSpec& model, Eigen::Index n_rows,
                   Eigen::Index length, std::uint64_t seed);

/// Rewrites the rows listed in `rows` of `out`; `clean` is the uncorrupted
/// matrix (full knowledge adversary).
using AdversaryHook = std::function<void(
    const ObsMatrix& clean, std::span<const std::size_t> rows, ObsMatrix& out)>;

struct CorruptionPolicy {
  double gamma = 0.0;
  int constant_symbol = 0;  // used when hook is empty
  AdversaryHook hook;
  std::uint64_t seed = 0;

  static CorruptionPolicy constant(double gamma, int symbol,
                                   std::uint64_t seed) {
    CorruptionPolicy p;
    p.gamma = gamma;
    p.constant_symbol = symbol;
    p.seed = seed;
    return p;
  }
};

struct CorruptionResult {
  ObsMatrix data;
  std::vector<std::size_t> rows;  // sorted, 0-based
};

/// Number of corrupted rows, floor(N * gamma).
std::size_t corrupted_count(Eigen::Index n_rows, double gamma);

/// Replaces floor(N*gamma) distinct seeded rows. `alphabet` > 0 additionally
/// checks the constant symbol against 1..alphabet.
CorruptionResult corrupt(const ObsMatrix& y, const CorruptionPolicy& policy,
                         int alphabet = 0);

/// Benchmark names: "m2010_24", "s2018_26", "hmm_88".
ModelSpec benchmark(const std::string& name);
std::vector<std::string> benchmark_names();

HqmmModel benchmark_hqmm(const std::string& name);
HmmSpec benchmark_hmm(const std::string& name);

/// Quantum learner starting state for any benchmark: rho0 for quantum models,
/// |e1><e1| style diag(x0) for the classical one.
CMatrixXd benchmark_rho0(const ModelSpec& model);
int alphabet_size(const ModelSpec& model);
int hidden_dim(const ModelSpec& model);

}  // namespace hqmm
