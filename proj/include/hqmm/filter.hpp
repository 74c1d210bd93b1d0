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

// Entropy-based removal of corrupted rows. Each sequence is scored by
//   S = -Z_E - Z_U + 0.5 Z_M + 0.5 Z_V
// where E is the Shannon entropy (bits) of its symbol histogram, U the number
// of distinct symbols, M the mean and V the unbiased variance. Z_E and Z_U
// are signed z-scores; Z_M and Z_V use absolute deviation from the mean.
// High S marks an anomalous row.

#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "hqmm/model.hpp"

namespace hqmm {

struct RowMetrics {
  double entropy = 0.0;  // bits
  double unique = 0.0;
  double mean = 0.0;
  double variance = 0.0;  // divisor T-1; 0 for T = 1
};

RowMetrics row_metrics(std::span<const int> row);

struct FilterStats {
  std::vector<RowMetrics> metrics;
  std::vector<double> z_entropy, z_unique, z_mean, z_variance;
  std::vector<double> score;
  std::vector<std::size_t> kept;  // original 0-based indices, ascending
  /// Set when C is outside (0, N) and the data was returned unchanged.
  bool passthrough = false;
  bool warning = false;  // C < 0 or C >= N
};

struct FilterOptions {
  /// Keep the N-C highest scores instead of the lowest.
  bool keep_high_s = false;
  double weight_mean = 0.5;
  double weight_variance = 0.5;
};

struct FilterResult {
  ObsMatrix data;
  FilterStats stats;
};

/// Fills the z-scores and outlier scores of `stats.metrics`.
void score_rows(FilterStats& stats, const FilterOptions& opts = {});

FilterResult rcr_ef(const ObsMatrix& y, long long drop_count,
                    const FilterOptions& opts = {});

/// CSV with columns index,E,U,M,V,S,kept (1-based index).
void write_filter_csv(std::ostream& os, const FilterStats& stats);

}  // namespace hqmm
