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

#include "hqmm/experiment.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>

#include "hqmm/io.hpp"
#include "hqmm/random.hpp"
#include "json.hpp"

namespace hqmm {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto res = std::from_chars(value.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end)
    throw ConfigError("config key '" + key + "': cannot parse '" + value + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + value + "'");
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

template <class T, class M>
Setter number_field(M member) {
  return [member](ExperimentConfig& c, const std::string& k, const std::string& v) {
    std::invoke(member, c) = parse_number<T>(k, v);
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"model", [](auto& c, auto&, auto& v) { c.model = v; }},
      {"seed", number_field<std::uint64_t>([](ExperimentConfig& c) -> auto& { return c.seed; })},
      {"out", [](auto& c, auto&, auto& v) { c.out = v; }},
      {"trainer",
       [](auto& c, auto& k, auto& v) {
         if (v != "ila" && v != "rila" && v != "em")
           throw ConfigError("config key '" + k + "': expected ila, rila or em");
         c.trainer = v;
       }},
      {"data.train_rows", number_field<Eigen::Index>([](ExperimentConfig& c) -> auto& { return c.train_rows; })},
      {"data.validation_rows", number_field<Eigen::Index>([](ExperimentConfig& c) -> auto& { return c.validation_rows; })},
      {"data.length", number_field<Eigen::Index>([](ExperimentConfig& c) -> auto& { return c.length; })},
      {"data.train_file", [](auto& c, auto&, auto& v) { c.train_file = v; }},
      {"data.validation_file", [](auto& c, auto&, auto& v) { c.validation_file = v; }},
      {"corrupt.gamma", number_field<double>([](ExperimentConfig& c) -> auto& { return c.gamma; })},
      {"corrupt.symbol", number_field<int>([](ExperimentConfig& c) -> auto& { return c.corrupt_symbol; })},
      {"train.batch_size", number_field<int>([](ExperimentConfig& c) -> auto& { return c.train.batch_size; })},
      {"train.batches", number_field<int>([](ExperimentConfig& c) -> auto& { return c.train.batches; })},
      {"train.iterations", number_field<int>([](ExperimentConfig& c) -> auto& { return c.train.iterations; })},
      {"train.proposals", number_field<int>([](ExperimentConfig& c) -> auto& { return c.train.proposals; })},
      {"train.filter_count", number_field<long long>([](ExperimentConfig& c) -> auto& { return c.filter_count; })},
      {"train.threads", number_field<int>([](ExperimentConfig& c) -> auto& { return c.train.threads; })},
      {"train.chain_proposals",
       [](auto& c, auto& k, auto& v) { c.train.chain_proposals = parse_bool(k, v); }},
      {"train.objective",
       [](auto& c, auto&, auto& v) { c.train.objective = objective_from_string(v); }},
      {"train.lambda",
       [](auto& c, auto& k, auto& v) {
         const double l = parse_number<double>(k, v);
         if (!(l >= 0.0)) throw ConfigError("config key '" + k + "': must be >= 0");
         c.train.lambda = l;
       }},
      {"train.resample",
       [](auto& c, auto&, auto& v) { c.train.resample = resample_from_string(v); }},
      {"filter.keep_high_s",
       [](auto& c, auto& k, auto& v) { c.train.filter.keep_high_s = parse_bool(k, v); }},
      {"filter.weight_mean", number_field<double>([](ExperimentConfig& c) -> auto& { return c.train.filter.weight_mean; })},
      {"filter.weight_variance", number_field<double>([](ExperimentConfig& c) -> auto& { return c.train.filter.weight_variance; })},
      {"solver.kind",
       [](auto& c, auto&, auto& v) { c.train.solver.kind = solver_from_string(v); }},
      {"solver.max_evals", number_field<int>([](ExperimentConfig& c) -> auto& { return c.train.solver.max_evals; })},
      {"solver.initial_mesh", number_field<double>([](ExperimentConfig& c) -> auto& { return c.train.solver.initial_mesh; })},
      {"solver.mesh_tolerance", number_field<double>([](ExperimentConfig& c) -> auto& { return c.train.solver.mesh_tolerance; })},
      {"solver.expansion", number_field<double>([](ExperimentConfig& c) -> auto& { return c.train.solver.expansion; })},
      {"solver.contraction", number_field<double>([](ExperimentConfig& c) -> auto& { return c.train.solver.contraction; })},
      {"solver.fd_step", number_field<double>([](ExperimentConfig& c) -> auto& { return c.train.solver.fd_step; })},
      {"solver.gradient_tolerance", number_field<double>([](ExperimentConfig& c) -> auto& { return c.train.solver.gradient_tolerance; })},
      {"solver.step_tolerance", number_field<double>([](ExperimentConfig& c) -> auto& { return c.train.solver.step_tolerance; })},
      {"learn.states", number_field<int>([](ExperimentConfig& c) -> auto& { return c.learn_states; })},
      {"learn.w", number_field<int>([](ExperimentConfig& c) -> auto& { return c.learn_w; })},
      {"em.restarts", number_field<int>([](ExperimentConfig& c) -> auto& { return c.em.restarts; })},
      {"em.max_iterations", number_field<int>([](ExperimentConfig& c) -> auto& { return c.em.max_iterations; })},
      {"em.tolerance", number_field<double>([](ExperimentConfig& c) -> auto& { return c.em.tolerance; })},
  };
  return table;
}

const std::map<std::string, std::string>& bench_tokens() {
  static const std::map<std::string, std::string> t = {
      {"m2010", "m2010_24"}, {"s2018", "s2018_26"}, {"hmm88", "hmm_88"}};
  return t;
}

void check_config(const ExperimentConfig& cfg) {
  if (cfg.train_rows < 1 || cfg.validation_rows < 0 || cfg.length < 0)
    throw ConfigError("need data.train_rows >= 1, data.validation_rows >= 0, data.length >= 0");
  if (cfg.learn_w < 1) throw ConfigError("learn.w must be >= 1");
  if (cfg.learn_states < 0) throw ConfigError("learn.states must be >= 0");
  if (cfg.train.threads < 1) throw ConfigError("train.threads must be >= 1");
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    if (!setters().contains(key))
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    out[key] = value;
  }
  return out;
}

void apply_setting(ExperimentConfig& cfg, const std::string& key,
                   const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError("unknown config key '" + key + "'");
  it->second(cfg, key, value);
}

void apply_config(ExperimentConfig& cfg,
                  const std::map<std::string, std::string>& settings) {
  for (const auto& [k, v] : settings) apply_setting(cfg, k, v);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : setters()) keys.push_back(k);
  return keys;
}

ExperimentConfig preset(const std::string& name) {
  std::vector<std::string> parts;
  std::stringstream ss(name);
  for (std::string tok; std::getline(ss, tok, '-');) parts.push_back(tok);
  auto fail = [&] {
    return ConfigError("unknown preset '" + name +
                       "' (expected <m2010|s2018|hmm88>-<clean|corrupt>-<ila|rila|em>-<b4|b8>[-l1])");
  };
  if (parts.size() < 4 || parts.size() > 5) throw fail();
  const auto bench = bench_tokens().find(parts[0]);
  if (bench == bench_tokens().end()) throw fail();
  if (parts[1] != "clean" && parts[1] != "corrupt") throw fail();
  if (parts[2] != "ila" && parts[2] != "rila" && parts[2] != "em") throw fail();
  if (parts[3] != "b4" && parts[3] != "b8") throw fail();
  const bool penalized = parts.size() == 5;
  if (penalized && (parts[4] != "l1" || parts[2] == "em")) throw fail();

  ExperimentConfig cfg;
  cfg.model = bench->second;
  cfg.seed = 1;
  cfg.trainer = parts[2];
  cfg.train.batches = parts[3] == "b4" ? 4 : 8;
  if (parts[1] == "corrupt") {
    cfg.gamma = 1.0 / 3.0;
    cfg.corrupt_symbol = 4;
  }
  cfg.filter_count = -1;
  if (penalized) cfg.train.objective = ObjectiveKind::L1Penalized;
  cfg.out = std::filesystem::path("out") / name;
  return cfg;
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const char* bench : {"m2010", "s2018", "hmm88"})
    for (const char* data : {"clean", "corrupt"})
      for (const char* trainer : {"ila", "rila", "em"})
        for (const char* b : {"b4", "b8"}) {
          const std::string base = std::string(bench) + "-" + data + "-" + trainer + "-" + b;
          names.push_back(base);
          if (std::string(trainer) != "em") names.push_back(base + "-l1");
        }
  return names;
}

std::uint64_t derive_seed(std::uint64_t seed, SeedPart part) {
  CounterRng rng(seed, static_cast<std::uint64_t>(part));
  return rng();
}

ModelSpec load_model(const std::string& name_or_file) {
  const auto names = benchmark_names();
  if (std::find(names.begin(), names.end(), name_or_file) != names.end())
    return benchmark(name_or_file);
  if (!std::filesystem::exists(name_or_file))
    throw ConfigError("'" + name_or_file + "' is neither a benchmark name nor a file");
  return io::parse_spec(io::read_file(name_or_file));
}

Dataset make_dataset(const ModelSpec& model, const ExperimentConfig& cfg) {
  Dataset d;
  if (!cfg.train_file.empty()) {
    d.train = io::parse_obs_csv(io::read_file(cfg.train_file));
    if (cfg.validation_file.empty())
      throw ConfigError("data.train_file needs data.validation_file");
    d.validation = io::parse_obs_csv(io::read_file(cfg.validation_file));
    return d;
  }
  d.train = generate(model, cfg.train_rows, cfg.length, derive_seed(cfg.seed, SeedPart::Train));
  d.validation = generate(model, cfg.validation_rows, cfg.length,
                          derive_seed(cfg.seed, SeedPart::Validation));
  if (cfg.gamma > 0.0) {
    const auto res = corrupt(d.train,
                             CorruptionPolicy::constant(cfg.gamma, cfg.corrupt_symbol,
                                                        derive_seed(cfg.seed, SeedPart::Corrupt)),
                             alphabet_size(model));
    d.train = res.data;
    d.corrupted_rows = res.rows;
  }
  return d;
}

namespace {

double reference_ll(const ModelSpec& model, const ObsMatrix& y) {
  if (const auto* hmm = std::get_if<HmmSpec>(&model)) return hmm_batch_loglik(*hmm, y);
  const auto& q = std::get<HqmmModel>(model);
  return batch_loglik(q.kraus, q.rho0, y);
}

void check_alphabet(const ObsMatrix& y, int m, const char* what) {
  if (y.size() > 0 && y.maxCoeff() > m) {
    throw ConfigError(std::string(what) + " uses symbol " + std::to_string(y.maxCoeff()) +
                      " but the model alphabet has " + std::to_string(m) + " symbols");
  }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  check_config(cfg);
  const ModelSpec model = load_model(cfg.model);
  const Dataset data = make_dataset(model, cfg);
  const int m = alphabet_size(model);
  check_alphabet(data.train, m, "training data");
  check_alphabet(data.validation, m, "validation data");
  const int n = cfg.learn_states > 0 ? cfg.learn_states : hidden_dim(model);

  ExperimentResult result;
  result.reference_validation_ll = reference_ll(model, data.validation);
  auto emit = [&](const std::string& file, const std::string& contents) {
    io::write_file(cfg.out / file, contents);
    result.files.push_back(file);
  };
  emit("train.csv", io::obs_to_csv(data.train));
  emit("validation.csv", io::obs_to_csv(data.validation));
  emit("model.json", io::spec_to_string(model));
  if (!data.corrupted_rows.empty()) {
    std::string rows;
    for (std::size_t r : data.corrupted_rows) rows += std::to_string(r + 1) + "\n";
    emit("corrupted_rows.csv", rows);
  }

  TrainConfig tc = cfg.train;
  tc.seed = derive_seed(cfg.seed, SeedPart::Learner);
  tc.filter_count = cfg.filter_count >= 0
                        ? cfg.filter_count
                        : static_cast<long long>(corrupted_count(data.train.rows(), cfg.gamma));

  if (cfg.trainer == "em") {
    EmConfig em = cfg.em;
    em.seed = derive_seed(cfg.seed, SeedPart::Em);
    result.record = train_em(data.train, data.validation, n, em, m);
    emit("em_trace.csv", io::em_trace_to_csv(result.record));
    emit("hmm_best.json", io::hmm_to_string(*result.record.hmm_best));
  } else {
    CMatrixXd rho0 = CMatrixXd::Zero(n, n);
    if (n == hidden_dim(model))
      rho0 = benchmark_rho0(model);
    else
      rho0(0, 0) = 1.0;
    const StackedKraus kappa0 =
        random_kraus(n, m, cfg.learn_w, derive_seed(cfg.seed, SeedPart::KappaInit));
    if (cfg.trainer == "ila") {
      result.record = train_ila(data.train, data.validation, kappa0, rho0, tc);
    } else {
      RilaResult r = train_rila(data.train, data.validation, kappa0, rho0, tc);
      result.record = std::move(r.record);
      result.filter = std::move(r.filter);
      result.trace = std::move(r.trace);
      std::ostringstream fr;
      write_filter_csv(fr, *result.filter);
      emit("filter_report.csv", fr.str());
      emit("resample_trace.csv", io::resample_trace_to_csv(result.trace));
    }
    emit("iterations.csv", io::iterations_to_csv(result.record));
    emit("kappa_best.json", io::model_to_string(*result.record.kappa_best, rho0,
                                                cfg.trainer + "_best"));
  }

  nlohmann::json summary = nlohmann::json::parse(io::summary_json(result.record, cfg.seed));
  summary["model"] = cfg.model;
  const double ref = result.reference_validation_ll;
  summary["reference"] = {
      {"validation_ll_sum", std::isfinite(ref) ? nlohmann::json(ref) : nlohmann::json(nullptr)},
      {"validation_ll_per_observation",
       std::isfinite(ref) && data.validation.size() > 0
           ? nlohmann::json(ref / static_cast<double>(data.validation.size()))
           : nlohmann::json(nullptr)},
  };
  summary["corrupted_rows"] = data.corrupted_rows.size();
  emit("summary.json", summary.dump(2) + "\n");
  nlohmann::json timing = {{"wall_time_seconds", result.record.wall_time}};
  emit("timing.json", timing.dump(2) + "\n");
  return result;
}

}  // namespace hqmm
