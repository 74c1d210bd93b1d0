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


#include <algorithm>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "hqmm/filter.hpp"
#include "hqmm/gen.hpp"
#include "support.hpp"

using namespace hqmm;

namespace {

ObsMatrix rows_of(std::initializer_list<std::vector<int>> rows) {
  ObsMatrix y(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    for (std::size_t t = 0; t < r.size(); ++t) y(i, static_cast<Eigen::Index>(t)) = r[t];
    ++i;
  }
  return y;
}

}  // namespace

TEST_CASE("row metrics") {
  const std::vector<int> c4{4, 4, 4, 4}, alt{1, 2, 1, 2}, all{1, 2, 3, 4};
  RowMetrics m = row_metrics(c4);
  CHECK(m.entropy == 0.0);
  CHECK(m.unique == 1.0);
  CHECK(m.mean == 4.0);
  CHECK(m.variance == 0.0);

  m = row_metrics(alt);
  CHECK(m.entropy == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(m.unique == 2.0);
  CHECK(m.mean == 1.5);
  CHECK(m.variance == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  m = row_metrics(all);
  CHECK(m.entropy == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(m.unique == 4.0);

  const std::vector<int> single{3};
  CHECK(row_metrics(single).variance == 0.0);
}

TEST_CASE("hand-computed z-scores") {
  FilterStats st;
  st.metrics = {{2.0, 4.0, 2.5, 1.0}, {2.0, 4.0, 2.5, 1.0}, {0.0, 1.0, 2.5, 1.0}};
  score_rows(st);
  const double z = 2.0 / std::sqrt(3.0);  // 1.1547
  CHECK(st.z_entropy[0] == doctest::Approx(0.5 / std::sqrt(0.75)).epsilon(1e-12));
  CHECK(st.z_entropy[2] == doctest::Approx(-z).epsilon(1e-12));
  CHECK(st.z_mean[0] == 0.0);
  CHECK(st.z_variance[2] == 0.0);
  CHECK(st.score[0] == doctest::Approx(-z).epsilon(1e-12));
  CHECK(st.score[1] == doctest::Approx(-z).epsilon(1e-12));
  CHECK(st.score[2] == doctest::Approx(2.0 * z).epsilon(1e-12));

  const ObsMatrix y = rows_of({{1, 2, 3, 4}, {4, 3, 2, 1}, {4, 4, 4, 4}});
  const FilterResult r = rcr_ef(y, 1);
  CHECK(r.stats.kept == std::vector<std::size_t>{0, 1});
  CHECK(r.data == y.topRows(2));
}

TEST_CASE("constant corrupted rows are removed exactly") {
  const ObsMatrix clean = generate_hqmm(benchmark_hqmm("m2010_24"), 30, 100, 11);
  const CorruptionResult c = corrupt(clean, CorruptionPolicy::constant(1.0 / 3.0, 4, 2));
  const FilterResult r = rcr_ef(c.data, 10);
  CHECK(r.data.rows() == 20);
  CHECK(r.stats.kept.size() == 20);
  for (std::size_t k : r.stats.kept) CHECK(!std::ranges::binary_search(c.rows, k));
  CHECK(std::ranges::is_sorted(r.stats.kept));
  for (std::size_t k = 0; k < r.stats.kept.size(); ++k)
    CHECK(r.data.row(static_cast<Eigen::Index>(k)) == c.data.row(static_cast<Eigen::Index>(r.stats.kept[k])));

  // The literal pseudocode direction keeps the anomalous rows instead.
  FilterOptions high;
  high.keep_high_s = true;
  const FilterResult h = rcr_ef(c.data, 20, high);
  CHECK(h.stats.kept == c.rows);
}

TEST_CASE("counts outside (0, N) pass through") {
  const ObsMatrix y = rows_of({{1, 2}, {2, 2}, {3, 1}});
  const FilterResult zero = rcr_ef(y, 0);
  CHECK(zero.data == y);
  CHECK(zero.stats.passthrough);
  CHECK_FALSE(zero.stats.warning);
  for (long long c : {-1LL, 3LL, 7LL}) {
    const FilterResult r = rcr_ef(y, c);
    CHECK(r.data == y);
    CHECK(r.stats.passthrough);
    CHECK(r.stats.warning);
  }
}

TEST_CASE("identical rows keep the first N-C") {
  const ObsMatrix y = ObsMatrix::Constant(6, 5, 2);
  const FilterResult r = rcr_ef(y, 2);
  CHECK(r.stats.kept == std::vector<std::size_t>{0, 1, 2, 3});
  for (double z : r.stats.z_entropy) CHECK(z == 0.0);
  for (double s : r.stats.score) CHECK(s == 0.0);
}

TEST_CASE("filtering is permutation-equivariant") {
  CounterRng rng(5, 1);
  for (int trial = 0; trial < 20; ++trial) {
    ObsMatrix y(12, 9);
    for (Eigen::Index i = 0; i < y.rows(); ++i)
      for (Eigen::Index t = 0; t < y.cols(); ++t) y(i, t) = 1 + static_cast<int>(rng.index(5));
    // Random distinct rows make ties in S unlikely; skip the trial if any occur.
    const FilterResult base = rcr_ef(y, 4);
    std::vector<double> s = base.stats.score;
    std::ranges::sort(s);
    if (std::adjacent_find(s.begin(), s.end()) != s.end()) continue;

    std::vector<std::size_t> perm(12);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t k = perm.size() - 1; k > 0; --k) std::swap(perm[k], perm[rng.index(k + 1)]);
    ObsMatrix yp(12, 9);
    for (std::size_t k = 0; k < 12; ++k)
      yp.row(static_cast<Eigen::Index>(k)) = y.row(static_cast<Eigen::Index>(perm[k]));
    const FilterResult p = rcr_ef(yp, 4);
    std::vector<std::size_t> mapped;
    for (std::size_t k : p.stats.kept) mapped.push_back(perm[k]);
    std::ranges::sort(mapped);
    CHECK(mapped == base.stats.kept);
  }
}

TEST_CASE("filter CSV export") {
  const ObsMatrix y = rows_of({{1, 2}, {2, 2}, {3, 1}});
  const FilterResult r = rcr_ef(y, 1);
  std::ostringstream os;
  write_filter_csv(os, r.stats);
  const std::string out = os.str();
  CHECK(out.rfind("index,E,U,M,V,S,kept\n", 0) == 0);
  CHECK(std::ranges::count(out, '\n') == 4);
}
