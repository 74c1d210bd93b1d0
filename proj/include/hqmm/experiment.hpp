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

// Experiment configuration, named presets and the generate/corrupt/train
// pipeline behind the command-line tool.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hqmm/learn.hpp"

namespace hqmm {

struct ExperimentConfig {
  std::string model = "m2010_24";  // benchmark name or model file
  Eigen::Index train_rows = 30;
  Eigen::Index validation_rows = 5;
  Eigen::Index length = 100;
  std::uint64_t seed = 1;
  double gamma = 0.0;        // corruption fraction
  int corrupt_symbol = 4;
  std::string trainer = "rila";  // ila | rila | em
  TrainConfig train;
  /// Rows removed by the filter; -1 means floor(N * gamma).
  long long filter_count = -1;
  int learn_states = 0;  // 0: hidden dimension of the generating model
  int learn_w = 1;
  EmConfig em;
  std::string train_file;       // optional: train on existing data
  std::string validation_file;
  std::filesystem::path out = "out";
};

/// Flat "key = value" document; '#' starts a comment. Unknown keys and
/// malformed values throw ConfigError.
std::map<std::string, std::string> parse_config_text(const std::string& text);
void apply_setting(ExperimentConfig& cfg, const std::string& key,
                   const std::string& value);
void apply_config(ExperimentConfig& cfg,
                  const std::map<std::string, std::string>& settings);
std::vector<std::string> config_keys();

/// "<bench>-<clean|corrupt>-<ila|rila|em>-<b4|b8>[-l1]" with bench in
/// {m2010, s2018, hmm88}; EM has no penalized variant.
ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

/// Seeds for the independent parts of a run, derived from the master seed.
enum class SeedPart : std::uint64_t { Train = 1, Validation, Corrupt, KappaInit, Learner, Em };
std::uint64_t derive_seed(std::uint64_t seed, SeedPart part);

struct Dataset {
  ObsMatrix train;
  ObsMatrix validation;
  std::vector<std::size_t> corrupted_rows;
};

ModelSpec load_model(const std::string& name_or_file);
Dataset make_dataset(const ModelSpec& model, const ExperimentConfig& cfg);

struct ExperimentResult {
  RunRecord record;
  std::optional<FilterStats> filter;
  ResampleTrace trace;
  double reference_validation_ll = kNegInf;  // generating model on Y_val
  std::vector<std::string> files;            // written, relative to out
};

/// Generates (or loads) data, trains and writes the result bundle to cfg.out.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

}  // namespace hqmm
