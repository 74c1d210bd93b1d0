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


#include <cmath>
#include <map>

#include "doctest.h"
#include "hqmm/gen.hpp"
#include "hqmm/learn.hpp"
#include "support.hpp"

using namespace hqmm;

namespace {

struct Fixture {
  HqmmModel model = benchmark_hqmm("m2010_24");
  ObsMatrix train = generate_hqmm(model, 30, 40, 101);
  ObsMatrix val = generate_hqmm(model, 5, 40, 102);
  StackedKraus init = random_kraus(2, 4, 1, 103);
};

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.batches = 2;
  cfg.iterations = 3;
  cfg.proposals = 4;
  cfg.solver.max_evals = 150;
  cfg.seed = 77;
  return cfg;
}

void check_same_record(const RunRecord& a, const RunRecord& b) {
  REQUIRE(a.iterations.size() == b.iterations.size());
  for (std::size_t k = 0; k < a.iterations.size(); ++k) {
    CHECK(a.iterations[k].objective == b.iterations[k].objective);
    CHECK(a.iterations[k].batch_ll == b.iterations[k].batch_ll);
  }
  CHECK(a.validation_ll == b.validation_ll);
  CHECK(a.kappa_best->mat() == b.kappa_best->mat());
}

}  // namespace

TEST_CASE("resampling weights") {
  const std::vector<double> flat{-10, -10, -10}, l{-1, -2, -3};
  for (ResampleScheme s : {ResampleScheme::Softmax, ResampleScheme::Literal})
    for (double w : resample_weights(flat, s)) CHECK(w == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  const auto soft = resample_weights(l, ResampleScheme::Softmax);
  CHECK(std::abs(soft[0] - 0.66524) < 5e-6);
  CHECK(std::abs(soft[1] - 0.24473) < 5e-6);
  CHECK(std::abs(soft[2] - 0.09003) < 5e-6);
  const auto lit = resample_weights(l, ResampleScheme::Literal);
  CHECK(std::abs(lit[0] - 0.09003) < 5e-6);
  CHECK(std::abs(lit[2] - 0.66524) < 5e-6);

  const std::vector<double> with_inf{-5.0, kNegInf, -6.0};
  const auto w = resample_weights(with_inf, ResampleScheme::Softmax);
  CHECK(w[1] > 0.0);
  CHECK(w[1] < 1e-20);
  const std::vector<double> all_inf{kNegInf, kNegInf};
  CHECK(resample_weights(all_inf, ResampleScheme::Softmax) == std::vector<double>{0.5, 0.5});

  CHECK(resample_from_string("literal") == ResampleScheme::Literal);
  CHECK_THROWS_AS(resample_from_string("greedy"), ConfigError);
}

TEST_CASE("resampling weights are a probability vector with argmax preserved") {
  CounterRng rng(13, 0);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> l(1 + rng.index(12));
    for (double& v : l) v = -2000.0 * rng.uniform();
    for (ResampleScheme s : {ResampleScheme::Softmax, ResampleScheme::Literal}) {
      const auto w = resample_weights(l, s);
      double total = 0.0;
      for (double v : w) {
        CHECK(v >= 0.0);
        total += v;
      }
      CHECK(std::abs(total - 1.0) < 1e-12);
      if (s == ResampleScheme::Softmax)
        CHECK(std::max_element(w.begin(), w.end()) - w.begin() ==
              std::max_element(l.begin(), l.end()) - l.begin());
    }
  }
}

TEST_CASE("random Kraus initialisation is valid") {
  for (std::uint64_t s = 0; s < 20; ++s) CHECK(validate(random_kraus(3, 5, 2, s), 1e-12).valid);
  CHECK(random_kraus(2, 4, 1, 5).mat() == random_kraus(2, 4, 1, 5).mat());
  CHECK_THROWS_AS(random_kraus(3, 1, 0, 1), ShapeError);
}

TEST_CASE("ILA with zero iterations keeps the initial stack") {
  Fixture f;
  TrainConfig cfg = small_config();
  cfg.iterations = 0;
  const RunRecord r = train_ila(f.train, f.val, f.init, f.model.rho0, cfg);
  CHECK(r.iterations.empty());
  CHECK(r.kappa_best->mat() == f.init.mat());
  CHECK(r.best_validation_ll == r.initial_validation_ll);
}

TEST_CASE("ILA is monotone within a batch, valid throughout and deterministic") {
  Fixture f;
  TrainConfig cfg = small_config();
  cfg.batches = 3;
  cfg.iterations = 5;
  double worst = 0.0;
  int events = 0;
  cfg.observer = [&](const StackedKraus& k, TrainEvent) {
    worst = std::max(worst, validate(k).deviation);
    ++events;
  };
  const RunRecord r = train_ila(f.train, f.val, f.init, f.model.rho0, cfg);
  CHECK(worst <= 1e-9);
  CHECK(events == 3 * 5 + 3);
  REQUIRE(r.iterations.size() == 15);
  for (std::size_t k = 1; k < r.iterations.size(); ++k)
    if (r.iterations[k].batch == r.iterations[k - 1].batch)
      CHECK(r.iterations[k].batch_ll >= r.iterations[k - 1].batch_ll - 1e-9);
  CHECK(r.validation_ll.size() == 3);
  CHECK(r.best_validation_ll == *std::max_element(r.validation_ll.begin(), r.validation_ll.end()));
  CHECK(validate(*r.kappa_best).valid);

  cfg.observer = nullptr;
  check_same_record(r, train_ila(f.train, f.val, f.init, f.model.rho0, cfg));
  cfg.seed += 1;
  CHECK(train_ila(f.train, f.val, f.init, f.model.rho0, cfg).kappa_best->mat() != r.kappa_best->mat());
}

TEST_CASE("trainers reject bad inputs") {
  Fixture f;
  TrainConfig cfg = small_config();
  StackedKraus bad = f.init;
  bad.mat() *= 1.1;
  CHECK_THROWS_AS(train_ila(f.train, f.val, bad, f.model.rho0, cfg), ValidationError);
  CHECK_THROWS_AS(train_rila(f.train, f.val, bad, f.model.rho0, cfg), ValidationError);
  cfg.batch_size = 31;
  CHECK_THROWS_AS(train_ila(f.train, f.val, f.init, f.model.rho0, cfg), ConfigError);
  cfg = small_config();
  cfg.proposals = 0;
  CHECK_THROWS_AS(train_rila(f.train, f.val, f.init, f.model.rho0, cfg), ConfigError);
  cfg = small_config();
  cfg.filter_count = 30;
  CHECK_THROWS_AS(train_rila(f.train, f.val, f.init, f.model.rho0, cfg), ConfigError);
  const ObsMatrix wide = ObsMatrix::Constant(6, 4, 5);
  CHECK_THROWS_AS(train_ila(wide, f.val, f.init, f.model.rho0, small_config()), ConfigError);
}

TEST_CASE("RILA with one proposal reduces to ILA") {
  Fixture f;
  TrainConfig cfg = small_config();
  cfg.proposals = 1;
  const RilaResult r = train_rila(f.train, f.val, f.init, f.model.rho0, cfg);
  check_same_record(r.record, train_ila(f.train, f.val, f.init, f.model.rho0, cfg));
  for (const ResampleStep& s : r.trace) {
    CHECK(s.weights == std::vector<double>{1.0});
    CHECK(s.chosen == 1);
  }
}

TEST_CASE("RILA trace invariants and thread-count independence") {
  Fixture f;
  TrainConfig cfg = small_config();
  double worst = 0.0;
  cfg.observer = [&](const StackedKraus& k, TrainEvent) { worst = std::max(worst, validate(k).deviation); };
  const RilaResult r = train_rila(f.train, f.val, f.init, f.model.rho0, cfg);
  CHECK(worst <= 1e-9);
  REQUIRE(r.trace.size() == 6);
  for (std::size_t k = 0; k < r.trace.size(); ++k) {
    const ResampleStep& s = r.trace[k];
    CHECK(s.ll.size() == 4);
    double total = 0.0;
    for (double w : s.weights) total += w;
    CHECK(std::abs(total - 1.0) < 1e-12);
    CHECK(s.chosen >= 1);
    CHECK(s.chosen <= 4);
    for (std::size_t p = 0; p < 4; ++p) CHECK(s.rows_i[p] < s.rows_j[p]);
    // Every proposal starts from the carried stack, so none falls below it.
    if (k > 0 && r.record.iterations[k].batch == r.record.iterations[k - 1].batch)
      for (double l : s.ll) CHECK(l >= r.record.iterations[k - 1].batch_ll - 1e-9);
  }

  cfg.observer = nullptr;
  cfg.threads = 3;
  const RilaResult threaded = train_rila(f.train, f.val, f.init, f.model.rho0, cfg);
  check_same_record(r.record, threaded.record);
  CHECK(r.trace.back().ll == threaded.trace.back().ll);

  cfg.threads = 1;
  cfg.chain_proposals = true;
  const RilaResult chained = train_rila(f.train, f.val, f.init, f.model.rho0, cfg);
  for (const ResampleStep& s : chained.trace)
    for (std::size_t p = 1; p < s.ll.size(); ++p) CHECK(s.ll[p] >= s.ll[p - 1] - 1e-9);
  check_same_record(chained.record, train_rila(f.train, f.val, f.init, f.model.rho0, cfg).record);
}

TEST_CASE("RILA never trains on the filtered rows") {
  Fixture f;
  const CorruptionResult c = corrupt(f.train, CorruptionPolicy::constant(1.0 / 3.0, 4, 5), 4);
  TrainConfig cfg = small_config();
  cfg.filter_count = 10;
  const RilaResult r = train_rila(c.data, f.val, f.init, f.model.rho0, cfg);
  for (std::size_t k : r.filter.kept) CHECK(!std::ranges::binary_search(c.rows, k));

  // Training on the surviving rows directly gives the identical run.
  ObsMatrix kept(20, f.train.cols());
  for (std::size_t k = 0; k < r.filter.kept.size(); ++k)
    kept.row(static_cast<Eigen::Index>(k)) = c.data.row(static_cast<Eigen::Index>(r.filter.kept[k]));
  cfg.filter_count = 0;
  const RilaResult direct = train_rila(kept, f.val, f.init, f.model.rho0, cfg);
  for (std::size_t k = 0; k < r.record.iterations.size(); ++k)
    CHECK(r.record.iterations[k].batch_ll == direct.record.iterations[k].batch_ll);
  CHECK(r.record.kappa_best->mat() == direct.record.kappa_best->mat());
}

TEST_CASE("one-state EM is the empirical frequency model") {
  ObsMatrix y(2, 5);
  y << 1, 2, 2, 3, 1, 2, 2, 2, 1, 3;
  EmConfig cfg;
  cfg.restarts = 2;
  const RunRecord r = train_em(y, y, 1, cfg);
  const std::map<int, double> counts{{1, 3}, {2, 5}, {3, 2}};
  double expected = 0.0;
  for (auto [sym, c] : counts) expected += c * std::log(c / 10.0);
  CHECK(r.train_ll_final == doctest::Approx(expected).epsilon(1e-9));
  CHECK(r.hmm_best->C(1, 0) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("EM matches a brute-force grid maximum on a toy sequence") {
  ObsMatrix y(1, 3);
  y << 1, 1, 2;
  double grid_best = kNegInf;
  const int steps = 20;
  HmmSpec s;
  s.A.resize(2, 2);
  s.C.resize(2, 2);
  s.x0.resize(2);
  for (int a = 0; a <= steps; ++a)
    for (int b = 0; b <= steps; ++b)
      for (int c = 0; c <= steps; ++c)
        for (int d = 0; d <= steps; ++d)
          for (int x = 0; x <= steps; ++x) {
            const double pa = a / double(steps), pb = b / double(steps);
            const double pc = c / double(steps), pd = d / double(steps);
            const double px = x / double(steps);
            s.A << pa, pb, 1 - pa, 1 - pb;
            s.C << pc, pd, 1 - pc, 1 - pd;
            s.x0 << px, 1 - px;
            grid_best = std::max(grid_best, hmm_loglik(s, row_span(y, 0)));
          }
  EmConfig cfg;
  cfg.restarts = 10;
  cfg.seed = 3;
  const RunRecord r = train_em(y, y, 2, cfg);
  CHECK(r.train_ll_final >= grid_best - 1e-6);
  CHECK(r.train_ll_final <= grid_best + 0.05);
}

TEST_CASE("EM iterations are monotone and stay stochastic") {
  const HmmSpec truth = benchmark_hmm("hmm_88");
  const ObsMatrix y = generate_hmm(truth, 20, 60, 8);
  EmConfig cfg;
  cfg.restarts = 2;
  cfg.max_iterations = 60;
  cfg.seed = 2;
  const RunRecord r = train_em(y, y, 3, cfg, 8);
  for (std::size_t k = 1; k < r.em_trace.size(); ++k) CHECK(r.em_trace[k] >= r.em_trace[k - 1] - 1e-8);

  HmmSpec model = *r.hmm_best;
  for (int k = 0; k < 3; ++k) {
    model = em_step(model, y, nullptr);
    CHECK((model.A.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK((model.C.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK(std::abs(model.x0.sum() - 1.0) < 1e-12);
    CHECK(model.A.minCoeff() >= 0.0);
  }
  const RunRecord again = train_em(y, y, 3, cfg, 8);
  CHECK(again.em_trace == r.em_trace);
  CHECK(again.hmm_best->A == r.hmm_best->A);
}

TEST_CASE("classical forward likelihood matches the unscaled product") {
  const HmmSpec h = benchmark_hmm("hmm_88");
  const std::vector<int> ys{1, 5, 8, 2, 2, 7};
  CHECK(hmm_loglik(h, ys) ==
        doctest::Approx(std::log(hqmm::testing::classical_probability(h, ys))).epsilon(1e-12));
}
