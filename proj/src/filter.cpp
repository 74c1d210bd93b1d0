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

#include "hqmm/filter.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>

namespace hqmm {

RowMetrics row_metrics(std::span<const int> row) {
  RowMetrics r;
  if (row.empty()) return r;
  std::map<int, std::size_t> counts;
  double sum = 0.0;
  for (int v : row) {
    ++counts[v];
    sum += v;
  }
  const double t = static_cast<double>(row.size());
  for (const auto& [symbol, c] : counts) {
    const double p = static_cast<double>(c) / t;
    r.entropy -= p * std::log2(p);
  }
  r.unique = static_cast<double>(counts.size());
  r.mean = sum / t;
  if (row.size() > 1) {
    double ss = 0.0;
    for (int v : row) ss += (v - r.mean) * (v - r.mean);
    r.variance = ss / (t - 1.0);
  }
  return r;
}

namespace {

// Sample standard deviation (divisor N-1), matching the usual std() default.
struct Moments {
  double mean = 0.0;
  double sd = 0.0;
};

Moments moments(const std::vector<double>& x) {
  Moments m;
  const double n = static_cast<double>(x.size());
  m.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  if (x.size() > 1) {
    double ss = 0.0;
    for (double v : x) ss += (v - m.mean) * (v - m.mean);
    m.sd = std::sqrt(ss / (n - 1.0));
  }
  return m;
}

std::vector<double> zscores(const std::vector<double>& x, bool absolute) {
  const Moments m = moments(x);
  std::vector<double> z(x.size(), 0.0);
  // Degenerate metric (all rows equal): every z-score is 0.
  if (!(m.sd > 0.0)) return z;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - m.mean;
    z[i] = (absolute ? std::abs(d) : d) / m.sd;
  }
  return z;
}

}  // namespace

void score_rows(FilterStats& st, const FilterOptions& opts) {
  std::vector<double> e, u, mu, v;
  for (const auto& m : st.metrics) {
    e.push_back(m.entropy);
    u.push_back(m.unique);
    mu.push_back(m.mean);
    v.push_back(m.variance);
  }
  st.z_entropy = zscores(e, false);
  st.z_unique = zscores(u, false);
  st.z_mean = zscores(mu, true);
  st.z_variance = zscores(v, true);

  st.score.resize(st.metrics.size());
  for (std::size_t i = 0; i < st.score.size(); ++i) {
    st.score[i] = -st.z_entropy[i] - st.z_unique[i] +
                  opts.weight_mean * st.z_mean[i] +
                  opts.weight_variance * st.z_variance[i];
  }
}

FilterResult rcr_ef(const ObsMatrix& y, long long drop_count,
                    const FilterOptions& opts) {
  FilterResult res;
  FilterStats& st = res.stats;
  const auto n = static_cast<long long>(y.rows());

  st.metrics.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < y.rows(); ++i)
    st.metrics.push_back(row_metrics(row_span(y, i)));

  if (!(drop_count > 0 && drop_count < n)) {
    st.passthrough = true;
    st.warning = drop_count != 0;
    st.kept.resize(static_cast<std::size_t>(n));
    std::iota(st.kept.begin(), st.kept.end(), std::size_t{0});
    res.data = y;
    return res;
  }

  score_rows(st, opts);

  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return opts.keep_high_s ? st.score[a] > st.score[b]
                            : st.score[a] < st.score[b];
  });
  order.resize(static_cast<std::size_t>(n - drop_count));
  std::sort(order.begin(), order.end());
  st.kept = order;

  res.data.resize(static_cast<Eigen::Index>(st.kept.size()), y.cols());
  for (std::size_t k = 0; k < st.kept.size(); ++k)
    res.data.row(static_cast<Eigen::Index>(k)) =
        y.row(static_cast<Eigen::Index>(st.kept[k]));
  return res;
}

void write_filter_csv(std::ostream& os, const FilterStats& stats) {
  std::vector<bool> kept(stats.metrics.size(), false);
  for (std::size_t k : stats.kept) kept[k] = true;
  os << "index,E,U,M,V,S,kept\n";
  const auto old_prec = os.precision(17);
  for (std::size_t i = 0; i < stats.metrics.size(); ++i) {
    const auto& m = stats.metrics[i];
    const double s = stats.score.empty() ? 0.0 : stats.score[i];
    os << (i + 1) << ',' << m.entropy << ',' << m.unique << ',' << m.mean << ','
       << m.variance << ',' << s << ',' << (kept[i] ? 1 : 0) << '\n';
  }
  os.precision(old_prec);
}

}  // namespace hqmm
