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

// hqmm: data generation, corruption, filtering, training, evaluation and the
// circuit check from the command line.
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration error,
// 3 validation error, 4 I/O error, 5 acceptance threshold missed.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "hqmm/circuit.hpp"
#include "hqmm/experiment.hpp"
#include "hqmm/io.hpp"

namespace {

using namespace hqmm;
namespace fs = std::filesystem;

enum ExitCode : int {
  kOk = 0,
  kUnexpected = 1,
  kConfig = 2,
  kValidation = 3,
  kIo = 4,
  kThreshold = 5,
};

/// Flags that map onto config keys; applied after the config file.
struct Overrides {
  std::vector<std::pair<CLI::Option*, std::string>> keyed;
  std::map<std::string, std::string> values;

  void add(CLI::App* app, const std::string& flag, const std::string& key,
           const std::string& help) {
    keyed.emplace_back(app->add_option(flag, values[key], help), key);
  }
  void add_flag(CLI::App* app, const std::string& flag, const std::string& key,
                const std::string& help) {
    CLI::Option* opt = app->add_flag_callback(flag, [this, key] { values[key] = "true"; }, help);
    keyed.emplace_back(opt, key);
  }
  void apply(ExperimentConfig& cfg) const {
    for (const auto& [opt, key] : keyed)
      if (opt->count() > 0) apply_setting(cfg, key, values.at(key));
  }
};

struct Common {
  std::string config_file;
  Overrides flags;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_file, "Flat key = value configuration file");
  c.flags.add(app, "--seed", "seed", "Master seed");
  c.flags.add(app, "--threads", "train.threads", "Worker threads");
  c.flags.add(app, "--out", "out", "Output directory");
}

void add_training_flags(CLI::App* app, Common& c) {
  auto& f = c.flags;
  f.add(app, "--model", "model", "Benchmark name or model file");
  f.add(app, "--trainer", "trainer", "ila, rila or em");
  f.add(app, "--n", "data.train_rows", "Training sequences to generate");
  f.add(app, "--t", "data.length", "Sequence length");
  f.add(app, "--validation-rows", "data.validation_rows", "Validation sequences to generate");
  f.add(app, "--train", "data.train_file", "Existing training CSV");
  f.add(app, "--validation", "data.validation_file", "Existing validation CSV");
  f.add(app, "--gamma", "corrupt.gamma", "Corrupted fraction of training rows");
  f.add(app, "--symbol", "corrupt.symbol", "Constant corruption symbol");
  f.add(app, "--batch-size", "train.batch_size", "Sequences per batch (b)");
  f.add(app, "--batches", "train.batches", "Batch count (B)");
  f.add(app, "--iterations", "train.iterations", "Iterations per batch (I)");
  f.add(app, "--proposals", "train.proposals", "Proposals per iteration (P)");
  f.add(app, "--filter-count", "train.filter_count", "Rows removed by the filter (C)");
  f.add(app, "--objective", "train.objective", "regular or l1");
  f.add(app, "--lambda", "train.lambda", "L1 penalty weight");
  f.add(app, "--solver", "solver.kind", "pattern or fd");
  f.add(app, "--max-evals", "solver.max_evals", "Objective evaluations per solve");
  f.add(app, "--resample", "train.resample", "softmax or literal");
  f.add_flag(app, "--keep-high-s", "filter.keep_high_s", "Keep the highest filter scores");
  f.add_flag(app, "--chain-proposals", "train.chain_proposals",
             "Start each proposal from the previous one");
  f.add(app, "--states", "learn.states", "Learner hidden dimension");
  f.add(app, "--w", "learn.w", "Kraus operators per symbol");
  f.add(app, "--restarts", "em.restarts", "EM restarts");
}

ExperimentConfig resolve(ExperimentConfig base, const Common& c) {
  if (!c.config_file.empty())
    apply_config(base, parse_config_text(io::read_file(c.config_file)));
  c.flags.apply(base);
  return base;
}

std::string fmt(double v) {
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

void print_run(const ExperimentResult& r, const ExperimentConfig& cfg) {
  const auto& rec = r.record;
  auto mean = [](double s, Eigen::Index k) { return k > 0 ? s / static_cast<double>(k) : 0.0; };
  std::cout << "trainer " << rec.trainer << "  model " << cfg.model << "  seed " << cfg.seed << "\n"
            << "train LL       " << fmt(rec.train_ll_final) << "  (per observation "
            << fmt(mean(rec.train_ll_final, rec.train_observations)) << ")\n"
            << "validation LL  " << fmt(rec.best_validation_ll) << "  (per observation "
            << fmt(mean(rec.best_validation_ll, rec.validation_observations)) << ")\n"
            << "reference LL   " << fmt(r.reference_validation_ll) << "\n";
  if (r.filter)
    std::cout << "filter kept " << r.filter->kept.size() << " of " << r.filter->metrics.size()
              << " rows\n";
  std::cout << "wrote " << r.files.size() << " files to " << cfg.out.string() << "\n";
}

int run(int argc, char** argv) {
  CLI::App app{"Hidden quantum Markov model generation, learning and verification"};
  app.require_subcommand(1);
  int code = kOk;

  // generate
  Common gen_c;
  auto* gen = app.add_subcommand("generate", "Sample training and validation data from a model");
  add_common(gen, gen_c);
  gen_c.flags.add(gen, "--model", "model", "Benchmark name or model file");
  gen_c.flags.add(gen, "--n", "data.train_rows", "Training sequences");
  gen_c.flags.add(gen, "--t", "data.length", "Sequence length");
  gen_c.flags.add(gen, "--validation-rows", "data.validation_rows", "Validation sequences");
  gen->callback([&] {
    const ExperimentConfig cfg = resolve(ExperimentConfig{}, gen_c);
    const ModelSpec model = load_model(cfg.model);
    ExperimentConfig clean = cfg;
    clean.gamma = 0.0;
    const Dataset d = make_dataset(model, clean);
    io::write_file(cfg.out / "train.csv", io::obs_to_csv(d.train));
    io::write_file(cfg.out / "validation.csv", io::obs_to_csv(d.validation));
    io::write_file(cfg.out / "model.json", io::spec_to_string(model));
    std::cout << "train " << d.train.rows() << "x" << d.train.cols() << ", validation "
              << d.validation.rows() << "x" << d.validation.cols() << " -> "
              << cfg.out.string() << "\n";
  });

  // corrupt
  Common cor_c;
  std::string cor_data;
  double cor_gamma = 0.0;
  int cor_symbol = 4;
  int cor_alphabet = 0;
  auto* cor = app.add_subcommand("corrupt", "Replace floor(N*gamma) rows with a constant symbol");
  add_common(cor, cor_c);
  cor->add_option("--data", cor_data, "Observation CSV")->required();
  cor->add_option("--gamma", cor_gamma, "Corrupted fraction in [0, 1)")->required();
  cor->add_option("--symbol", cor_symbol, "Replacement symbol")->capture_default_str();
  cor->add_option("--alphabet", cor_alphabet, "Alphabet size for the symbol check");
  cor->callback([&] {
    const ExperimentConfig cfg = resolve(ExperimentConfig{}, cor_c);
    const ObsMatrix y = io::parse_obs_csv(io::read_file(cor_data));
    const CorruptionResult r =
        corrupt(y, CorruptionPolicy::constant(cor_gamma, cor_symbol,
                                              derive_seed(cfg.seed, SeedPart::Corrupt)),
                cor_alphabet);
    std::string rows;
    for (std::size_t i : r.rows) rows += std::to_string(i + 1) + "\n";
    io::write_file(cfg.out / "corrupted.csv", io::obs_to_csv(r.data));
    io::write_file(cfg.out / "corrupted_rows.csv", rows);
    std::cout << "corrupted " << r.rows.size() << " of " << y.rows() << " rows -> "
              << cfg.out.string() << "\n";
  });

  // filter
  Common fil_c;
  std::string fil_data;
  long long fil_count = 0;
  auto* fil = app.add_subcommand("filter", "Drop the C most anomalous rows by entropy filtering");
  add_common(fil, fil_c);
  fil->add_option("--data", fil_data, "Observation CSV")->required();
  fil->add_option("--count", fil_count, "Rows to remove (C)")->required();
  fil_c.flags.add_flag(fil, "--keep-high-s", "filter.keep_high_s", "Keep the highest scores");
  fil->callback([&] {
    const ExperimentConfig cfg = resolve(ExperimentConfig{}, fil_c);
    const ObsMatrix y = io::parse_obs_csv(io::read_file(fil_data));
    const FilterResult r = rcr_ef(y, fil_count, cfg.train.filter);
    std::ostringstream report;
    write_filter_csv(report, r.stats);
    io::write_file(cfg.out / "filtered.csv", io::obs_to_csv(r.data));
    io::write_file(cfg.out / "filter_report.csv", report.str());
    if (r.stats.warning)
      std::cerr << "warning: C = " << fil_count << " is outside [0, N); rows passed through\n";
    std::cout << "kept " << r.stats.kept.size() << " of " << y.rows() << " rows -> "
              << cfg.out.string() << "\n";
  });

  // train
  Common tr_c;
  auto* tr = app.add_subcommand("train", "Train ILA, RILA or EM and write a result bundle");
  add_common(tr, tr_c);
  add_training_flags(tr, tr_c);
  tr->callback([&] {
    const ExperimentConfig cfg = resolve(ExperimentConfig{}, tr_c);
    print_run(run_experiment(cfg), cfg);
  });

  // preset
  Common pre_c;
  std::string pre_name;
  auto* pre = app.add_subcommand("preset", "Run a named experiment ('preset list' to enumerate)");
  add_common(pre, pre_c);
  add_training_flags(pre, pre_c);
  pre->add_option("name", pre_name, "Preset name or 'list'")->required();
  pre->callback([&] {
    if (pre_name == "list") {
      for (const auto& n : preset_names()) std::cout << n << "\n";
      return;
    }
    const ExperimentConfig cfg = resolve(preset(pre_name), pre_c);
    print_run(run_experiment(cfg), cfg);
  });

  // eval
  std::string ev_model, ev_data;
  auto* ev = app.add_subcommand("eval", "Log-likelihood of a data file under a model");
  ev->add_option("--model", ev_model, "Benchmark name or model file")->required();
  ev->add_option("--data", ev_data, "Observation CSV")->required();
  ev->callback([&] {
    const ModelSpec model = load_model(ev_model);
    const ObsMatrix y = io::parse_obs_csv(io::read_file(ev_data));
    if (y.size() > 0 && y.maxCoeff() > alphabet_size(model))
      throw ConfigError("data uses symbol " + std::to_string(y.maxCoeff()) +
                        " but the model has " + std::to_string(alphabet_size(model)));
    double ll = 0.0;
    if (const auto* hmm = std::get_if<HmmSpec>(&model))
      ll = hmm_batch_loglik(*hmm, y);
    else
      ll = batch_loglik(std::get<HqmmModel>(model).kraus, std::get<HqmmModel>(model).rho0, y);
    const double per_obs = y.size() > 0 ? ll / static_cast<double>(y.size()) : 0.0;
    std::cout << "sequences " << y.rows() << "  observations " << y.size() << "\n"
              << "ll_sum " << fmt(ll) << "\nll_per_observation " << fmt(per_obs) << "\n";
    if (std::isinf(ll)) std::cout << "flag zero_probability_sequence\n";
  });

  // prop1
  int p1_trials = 1000;
  std::uint64_t p1_seed = 1;
  double p1_tol = 1e-10;
  auto* p1 = app.add_subcommand("prop1", "Compare the two-register circuit with the classical filter");
  p1->add_option("--trials", p1_trials, "Random instances")->capture_default_str();
  p1->add_option("--seed", p1_seed, "Seed")->capture_default_str();
  p1->add_option("--tolerance", p1_tol, "Pass threshold on the diagonal deviation")
      ->capture_default_str();
  p1->callback([&] {
    const Prop1Report r = prop1_sweep(p1_trials, p1_seed);
    std::cout << "trials " << r.trials << "\n"
              << "max_diag_deviation " << fmt(r.max_diag_deviation) << "\n"
              << "max_norm_deviation " << fmt(r.max_norm_deviation) << "\n"
              << "zero_probability_instances " << r.zero_probability_instances << "\n";
    code = r.max_diag_deviation < p1_tol ? kOk : kThreshold;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const hqmm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const hqmm::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const hqmm::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const hqmm::ShapeError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const hqmm::IndexError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUnexpected;
  }
}
