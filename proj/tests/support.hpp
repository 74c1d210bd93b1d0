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

// Shared helpers for the unit tests.

#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "hqmm/gen.hpp"
#include "hqmm/model.hpp"
#include "hqmm/random.hpp"

namespace hqmm::testing {

inline CMatrixXd random_cmatrix(Eigen::Index r, Eigen::Index c, CounterRng& rng) {
  CMatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = cd(rng.normal(), rng.normal());
  return m;
}

/// Random full-rank density matrix G G^H / tr.
inline CMatrixXd random_density(Eigen::Index n, CounterRng& rng) {
  const CMatrixXd g = random_cmatrix(n, n, rng);
  CMatrixXd rho = g * g.adjoint();
  return rho / rho.trace().real();
}

/// Literal nested-trace likelihood: unnormalized propagation, one log at
/// the end.
inline double nested_trace_loglik(const StackedKraus& k, const CMatrixXd& rho0,
                                  std::span<const int> ys) {
  CMatrixXd rho = rho0;
  for (int y : ys) {
    CMatrixXd next = CMatrixXd::Zero(rho.rows(), rho.cols());
    for (int q = 1; q <= k.w(); ++q) {
      const CMatrixXd kq = k.kraus(y, q);
      next += kq * rho * kq.adjoint();
    }
    rho = next;
  }
  return std::log(rho.trace().real());
}

/// Visits every sequence over {1..m} of length t.
inline void for_each_sequence(int m, int t, const std::function<void(std::span<const int>)>& f) {
  std::vector<int> ys(static_cast<std::size_t>(t), 1);
  while (true) {
    f(ys);
    int k = t - 1;
    while (k >= 0 && ys[static_cast<std::size_t>(k)] == m) ys[static_cast<std::size_t>(k--)] = 1;
    if (k < 0) return;
    ++ys[static_cast<std::size_t>(k)];
  }
}

/// Classical forward probability 1^T T_yT ... T_y1 x0, unscaled.
inline double classical_probability(const HmmSpec& s, std::span<const int> ys) {
  Eigen::VectorXd x = s.x0;
  for (int y : ys) x = transfer_operator(s, y) * x;
  return x.sum();
}

}  // namespace hqmm::testing
