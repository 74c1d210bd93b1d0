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

// Trainers: the iterative row-rotation learner (ILA), its robust variant with
// filtering, multi-proposal search and likelihood-weighted resampling (RILA),
// and a classical Baum-Welch baseline.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hqmm/filter.hpp"
#include "hqmm/gen.hpp"
#include "hqmm/optim.hpp"

namespace hqmm {

enum class ResampleScheme { Softmax, Literal };

std::string to_string(ResampleScheme s);
ResampleScheme resample_from_string(const std::string& s);

/// Normalized resampling weights. -inf entries are floored to
/// min(finite) - 50; when every entry is -inf the weights are uniform.
///   Softmax:      w_p ~ exp(L_p - max L)
///   Literal:      w_p ~ exp(-L_p - min(-L))  (favours the lowest L)
std::vector<double> resample_weights(std::span<const double> ll,
                                     ResampleScheme scheme);

/// Events reported to TrainConfig::observer.
enum class TrainEvent { Update, Resample, BatchEnd };

struct TrainConfig {
  int batch_size = 5;
  int batches = 4;
  int iterations = 6;   // per batch (ILA: rotations per batch)
  int proposals = 10;   // RILA only
  long long filter_count = 0;  // RILA only; rows removed before training
  FilterOptions filter;
  ObjectiveKind objective = ObjectiveKind::Regular;
  double lambda = 0.01;
  SolverConfig solver;
  ResampleScheme resample = ResampleScheme::Softmax;
  /// Each proposal starts from the previous proposal's output instead of the
  /// iteration's incoming stack.
  bool chain_proposals = false;
  int threads = 1;
  std::uint64_t seed = 0;
  std::function<void(const StackedKraus&, TrainEvent)> observer;
};

struct IterationRecord {
  int batch = 0;      // 1-based
  int iteration = 0;  // 1-based
  double objective = kNegInf;  // accepted objective value of the carried stack
  double batch_ll = kNegInf;   // plain log-likelihood on the batch
};

struct ResampleStep {
  int batch = 0;
  int iteration = 0;
  std::vector<double> ll;       // L_1..L_P
  std::vector<double> weights;  // w_1..w_P
  std::vector<int> rows_i, rows_j;
  int chosen = 0;               // p*, 1-based
};

using ResampleTrace = std::vector<ResampleStep>;

struct RunRecord {
  std::string trainer;
  std::vector<IterationRecord> iterations;
  std::vector<double> validation_ll;  // one per batch
  double initial_train_ll = kNegInf;
  double initial_validation_ll = kNegInf;
  double best_validation_ll = kNegInf;
  double train_ll_final = kNegInf;  // best model on the training data given
  std::optional<StackedKraus> kappa_best;
  std::optional<HmmSpec> hmm_best;  // EM only
  std::vector<double> em_trace;     // EM only: LL per EM iteration (best restart)
  Eigen::Index train_sequences = 0, train_observations = 0;
  Eigen::Index validation_sequences = 0, validation_observations = 0;
  double wall_time = 0.0;  // seconds
};

/// Complex Gaussian (n*m*w) x n matrix orthonormalized by QR, so the result
/// satisfies the completeness relation.
StackedKraus random_kraus(int n, int m, int w, std::uint64_t seed);

RunRecord train_ila(const ObsMatrix& y, const ObsMatrix& y_val,
                    const StackedKraus& kappa_init, const CMatrixXd& rho0,
                    const TrainConfig& cfg);

struct RilaResult {
  RunRecord record;
  FilterStats filter;
  ResampleTrace trace;
};

RilaResult train_rila(const ObsMatrix& y, const ObsMatrix& y_val,
                      const StackedKraus& kappa_init, const CMatrixXd& rho0,
                      const TrainConfig& cfg);

struct EmConfig {
  int restarts = 5;
  int max_iterations = 500;
  double tolerance = 1e-6;
  std::uint64_t seed = 0;
};

/// Log-likelihood of one sequence under P(y) = 1^T T_yT ... T_y1 x0.
double hmm_loglik(const HmmSpec& spec, std::span<const int> ys);
double hmm_batch_loglik(const HmmSpec& spec, const ObsMatrix& y);

/// One Baum-Welch iteration (E-step at `spec`, closed-form M-step).
/// Returns the updated model; `ll_out` receives the LL at the input model.
HmmSpec em_step(const HmmSpec& spec, const ObsMatrix& y, double* ll_out);

/// Multi-restart Baum-Welch with an unobserved initial state s_0 ~ x0.
/// `alphabet` defaults to the largest symbol in y.
RunRecord train_em(const ObsMatrix& y, const ObsMatrix& y_val, int n_states,
                   const EmConfig& cfg, int alphabet = 0);

}  // namespace hqmm
