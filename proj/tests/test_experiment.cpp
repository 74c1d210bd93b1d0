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


#include <filesystem>

#include "doctest.h"
#include "hqmm/experiment.hpp"
#include "hqmm/io.hpp"

using namespace hqmm;
namespace fs = std::filesystem;

TEST_CASE("defaults follow the reference protocol") {
  const ExperimentConfig cfg;
  CHECK(cfg.train_rows == 30);
  CHECK(cfg.validation_rows == 5);
  CHECK(cfg.length == 100);
  CHECK(cfg.train.batch_size == 5);
  CHECK(cfg.train.batches == 4);
  CHECK(cfg.train.iterations == 6);
  CHECK(cfg.train.proposals == 10);
  CHECK(cfg.train.solver.kind == SolverKind::PatternSearch);
  CHECK(cfg.train.resample == ResampleScheme::Softmax);
}

TEST_CASE("config text parsing and overrides") {
  const auto kv = parse_config_text(
      "# comment\n"
      "model = s2018_26\n"
      "  train.batches=8   # trailing comment\n"
      "\n"
      "train.objective = l1\n"
      "train.lambda = 0.5\n"
      "solver.kind = fd\n"
      "filter.keep_high_s = true\n"
      "seed = 12\n");
  ExperimentConfig cfg;
  apply_config(cfg, kv);
  CHECK(cfg.model == "s2018_26");
  CHECK(cfg.train.batches == 8);
  CHECK(cfg.train.objective == ObjectiveKind::L1Penalized);
  CHECK(cfg.train.lambda == 0.5);
  CHECK(cfg.train.solver.kind == SolverKind::FdLocal);
  CHECK(cfg.train.filter.keep_high_s);
  CHECK(cfg.seed == 12);

  // Later settings override earlier ones key by key.
  apply_setting(cfg, "train.batches", "4");
  CHECK(cfg.train.batches == 4);
  CHECK(cfg.train.lambda == 0.5);

  CHECK_THROWS_AS(parse_config_text("no equals sign\n"), ConfigError);
  CHECK_THROWS_AS(apply_setting(cfg, "train.unknown", "1"), ConfigError);
  CHECK_THROWS_AS(apply_setting(cfg, "train.batches", "four"), ConfigError);
  CHECK_THROWS_AS(apply_setting(cfg, "train.lambda", "-1"), ConfigError);
  CHECK_THROWS_AS(apply_setting(cfg, "trainer", "adam"), ConfigError);
  for (const std::string& key : config_keys()) CHECK(key.find(' ') == std::string::npos);
}

TEST_CASE("presets") {
  const auto names = preset_names();
  CHECK(std::ranges::find(names, "m2010-clean-rila-b4") != names.end());
  CHECK(std::ranges::find(names, "hmm88-corrupt-em-b8") != names.end());
  CHECK(std::ranges::find(names, "s2018-corrupt-ila-b8-l1") != names.end());
  for (const std::string& n : names) CHECK_NOTHROW(preset(n));

  const ExperimentConfig c = preset("m2010-corrupt-rila-b8");
  CHECK(c.model == "m2010_24");
  CHECK(c.train.batches == 8);
  CHECK(c.gamma == doctest::Approx(1.0 / 3.0));
  CHECK(c.corrupt_symbol == 4);
  CHECK(c.seed == 1);
  const ExperimentConfig p = preset("s2018-clean-ila-b4-l1");
  CHECK(p.train.objective == ObjectiveKind::L1Penalized);
  CHECK(p.trainer == "ila");

  CHECK_THROWS_AS(preset("m2010-clean-rila"), ConfigError);
  CHECK_THROWS_AS(preset("m2010-dirty-rila-b4"), ConfigError);
  CHECK_THROWS_AS(preset("m2010-clean-em-b4-l1"), ConfigError);
}

TEST_CASE("seed derivation separates the parts of a run") {
  CHECK(derive_seed(1, SeedPart::Train) != derive_seed(1, SeedPart::Validation));
  CHECK(derive_seed(1, SeedPart::Train) != derive_seed(2, SeedPart::Train));
  CHECK(derive_seed(5, SeedPart::Em) == derive_seed(5, SeedPart::Em));
}

TEST_CASE("datasets") {
  ExperimentConfig cfg;
  cfg.train_rows = 12;
  cfg.length = 20;
  cfg.gamma = 0.25;
  const ModelSpec model = load_model("m2010_24");
  const Dataset d = make_dataset(model, cfg);
  CHECK(d.train.rows() == 12);
  CHECK(d.validation.rows() == 5);
  CHECK(d.corrupted_rows.size() == 3);
  for (std::size_t r : d.corrupted_rows) CHECK((d.train.row(static_cast<Eigen::Index>(r)).array() == 4).all());
  CHECK(make_dataset(model, cfg).train == d.train);
  CHECK_THROWS_AS(load_model("no_such_model_file.json"), ConfigError);
}

TEST_CASE("result bundle is reproducible byte for byte") {
  const fs::path root = fs::temp_directory_path() / "hqmm_experiment_test";
  fs::remove_all(root);
  ExperimentConfig cfg = preset("m2010-corrupt-rila-b4");
  cfg.train_rows = 15;
  cfg.length = 30;
  cfg.train.batches = 2;
  cfg.train.iterations = 2;
  cfg.train.proposals = 3;
  cfg.train.solver.max_evals = 100;

  cfg.out = root / "a";
  const ExperimentResult a = run_experiment(cfg);
  cfg.out = root / "b";
  cfg.train.threads = 3;
  const ExperimentResult b = run_experiment(cfg);

  REQUIRE(a.filter.has_value());
  CHECK(a.filter->kept.size() == 10);
  CHECK(a.record.iterations.size() == 4);
  CHECK(a.files == b.files);
  for (const std::string& f : a.files) {
    CAPTURE(f);
    CHECK(fs::exists(root / "a" / f));
    if (f == "timing.json") continue;
    CHECK(io::read_file(root / "a" / f) == io::read_file(root / "b" / f));
  }
  const std::string iters = io::read_file(root / "a" / "iterations.csv");
  CHECK(std::ranges::count(iters, '\n') == 5);
  fs::remove_all(root);
}
