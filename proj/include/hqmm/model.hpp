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

// HQMM state representation: density matrices, the stacked Kraus matrix,
// one-step Bayesian update and the sequence log-likelihood.

#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hqmm/cxmat.hpp"

namespace hqmm {

/// N x T matrix of 1-based symbols, one sequence per row.
using ObsMatrix =
    Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Contiguous view of row `i` of an observation matrix.
inline std::span<const int> row_span(const ObsMatrix& y, Eigen::Index i) {
  return {y.data() + i * y.cols(), static_cast<std::size_t>(y.cols())};
}

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct StateReport {
  double hermitian_deviation = 0.0;
  double trace_deviation = 0.0;
  double min_eigenvalue = 0.0;
  bool valid = false;
};

/// Hermitian, unit-trace and PSD checks, all against `tol`.
StateReport check_state(const CMatrixXd& rho, double tol = tol::kValidity);

/// A validated n x n density matrix.
class DensityMatrix {
 public:
  /// Throws ValidationError unless `mat` passes check_state.
  explicit DensityMatrix(CMatrixXd mat, double tol = tol::kValidity);

  /// |k><k| in dimension n (0-based k).
  static DensityMatrix basis(Eigen::Index n, Eigen::Index k);
  static DensityMatrix diagonal(const Eigen::VectorXd& probs);

  const CMatrixXd& mat() const { return mat_; }
  Eigen::Index dim() const { return mat_.rows(); }

 private:
  CMatrixXd mat_;
};

/// The (n*m*w) x n matrix of vertically stacked Kraus operators. Block (y, q)
/// (1-based) occupies rows [((y-1)*w + (q-1))*n, +n).
class StackedKraus {
 public:
  StackedKraus(int n, int m, int w, CMatrixXd mat);

  /// Builds the stack from m*w blocks ordered (y=1,q=1), (y=1,q=2), ...
  static StackedKraus from_blocks(int n, int m, int w,
                                  const std::vector<CMatrixXd>& blocks);

  int n() const { return n_; }
  int m() const { return m_; }
  int w() const { return w_; }
  Eigen::Index rows() const { return mat_.rows(); }

  const CMatrixXd& mat() const { return mat_; }
  CMatrixXd& mat() { return mat_; }

  auto kraus(int y, int q) const {
    return mat_.middleRows(block_row(y, q), n_);
  }
  Eigen::Index block_row(int y, int q) const {
    return (static_cast<Eigen::Index>(y - 1) * w_ + (q - 1)) * n_;
  }

 private:
  int n_;
  int m_;
  int w_;
  CMatrixXd mat_;
};

struct ValidityReport {
  double deviation = 0.0;  // max |(k^H k - I)_ij|
  bool valid = false;
};

/// Completeness check sum_{y,q} K^H K = I.
ValidityReport validate(const StackedKraus& kappa, double tol = tol::kValidity);

struct StepResult {
  double prob = 0.0;
  CMatrixXd state;  // meaningful only when !zero_probability
  bool zero_probability = false;
};

/// One forward update on symbol y (1-based).
StepResult step(const CMatrixXd& rho, int y, const StackedKraus& kappa);

/// Reusable forward-pass evaluator bound to one Kraus set. Holds the
/// per-symbol operator blocks and scratch buffers so repeated likelihood
/// calls do not allocate.
class LoglikEvaluator {
 public:
  explicit LoglikEvaluator(const StackedKraus& kappa);

  /// Re-reads the operator blocks from a stack of the same (n, m, w).
  void reset(const StackedKraus& kappa);

  /// Sum of per-step log probabilities, with per-step renormalization.
  /// Returns -inf as soon as a step probability drops below the floor.
  double sequence(const CMatrixXd& rho0, std::span<const int> ys);
  double batch(const CMatrixXd& rho0, const ObsMatrix& y);

 private:
  template <int N>
  struct FixedOps {
    using Mat = Eigen::Matrix<cd, N, N>;
    std::vector<Mat, Eigen::aligned_allocator<Mat>> ops, adj;
  };

  double sequence_dyn(const CMatrixXd& rho0, std::span<const int> ys);
  /// rho = V V^H propagated as V <- K V; valid while each symbol has a single
  /// operator.
  double sequence_factored(std::span<const int> ys);
  template <int N>
  double sequence_factored_fixed(const FixedOps<N>& f, std::span<const int> ys) const;
  /// Square-root factor of rho0 with the zero eigenvalues dropped (cached).
  const CMatrixXd& factor_of(const CMatrixXd& rho0);
  template <int N>
  double sequence_fixed(const FixedOps<N>& f, const CMatrixXd& rho0,
                        std::span<const int> ys) const;
  template <int N>
  void load_fixed(FixedOps<N>& f);

  int n_, m_, w_;
  std::vector<CMatrixXd> ops_, ops_adj_;  // index (y-1)*w + (q-1)
  // Fixed-size copies for the common small dimensions.
  FixedOps<2> f2_;
  FixedOps<4> f4_;
  FixedOps<8> f8_;
  std::vector<std::vector<int>> active_;  // nonzero operators per symbol
  bool single_op_ = false;                // every symbol has <= 1 operator
  CMatrixXd rho_, acc_, tmp_;
  CMatrixXd factor_rho0_, factor_, v_, kv_;
};

double seq_loglik(const StackedKraus& kappa, const CMatrixXd& rho0,
                  std::span<const int> ys);
double batch_loglik(const StackedKraus& kappa, const CMatrixXd& rho0,
                    const ObsMatrix& y);

/// Kraus set plus initial state.
struct HqmmModel {
  std::string name;
  StackedKraus kraus;
  CMatrixXd rho0;
};

}  // namespace hqmm
