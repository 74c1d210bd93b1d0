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

#include "hqmm/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace hqmm::io {

using nlohmann::json;

namespace {

json complex_matrix(const CMatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      row.push_back(json::array({m(r, c).real(), m(r, c).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

json real_matrix(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

CMatrixXd read_complex_matrix(const json& j, int n, const char* what) {
  if (!j.is_array() || static_cast<int>(j.size()) != n)
    throw IoError(std::string(what) + ": expected " + std::to_string(n) + " rows");
  CMatrixXd m(n, n);
  for (int r = 0; r < n; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<int>(row.size()) != n)
      throw IoError(std::string(what) + ": row " + std::to_string(r) + " has wrong length");
    for (int c = 0; c < n; ++c) {
      const json& z = row[static_cast<std::size_t>(c)];
      if (!z.is_array() || z.size() != 2 || !z[0].is_number() || !z[1].is_number())
        throw IoError(std::string(what) + ": entries must be [re, im] pairs");
      m(r, c) = cd(z[0].get<double>(), z[1].get<double>());
    }
  }
  return m;
}

Eigen::MatrixXd read_real_matrix(const json& j, const char* what) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw IoError(std::string(what) + ": expected a nested array");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw IoError(std::string(what) + ": ragged rows");
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!row[static_cast<std::size_t>(c)].is_number())
        throw IoError(std::string(what) + ": non-numeric entry");
      m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
  }
  return m;
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed model document: ") + e.what());
  }
}

int read_dim(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_number_integer() || doc[key].get<int>() < 1)
    throw IoError(std::string("model document needs a positive integer '") + key + "'");
  return doc[key].get<int>();
}

HqmmModel model_from_json(const json& doc) {
  const int n = read_dim(doc, "n");
  const int m = read_dim(doc, "m");
  const int w = read_dim(doc, "w");
  if (!doc.contains("rho0") || !doc.contains("kraus") || !doc["kraus"].is_array())
    throw IoError("model document needs 'rho0' and 'kraus'");
  const json& kraus = doc["kraus"];
  if (static_cast<long long>(kraus.size()) != static_cast<long long>(m) * w)
    throw IoError("model document lists " + std::to_string(kraus.size()) +
                  " Kraus blocks, expected m*w = " + std::to_string(m * w));
  std::vector<CMatrixXd> blocks;
  blocks.reserve(kraus.size());
  for (const json& b : kraus) blocks.push_back(read_complex_matrix(b, n, "kraus block"));
  HqmmModel model{doc.value("name", std::string()),
                  StackedKraus::from_blocks(n, m, w, blocks),
                  read_complex_matrix(doc["rho0"], n, "rho0")};
  (void)DensityMatrix{model.rho0};
  const ValidityReport v = validate(model.kraus);
  if (!v.valid) {
    throw ValidationError("model Kraus stack violates completeness by " +
                          std::to_string(v.deviation));
  }
  return model;
}

HmmSpec hmm_from_json(const json& doc) {
  if (!doc.contains("C") || !doc.contains("x0") || !doc["x0"].is_array())
    throw IoError("HMM document needs 'A', 'C' and 'x0'");
  HmmSpec spec;
  spec.name = doc.value("name", std::string());
  spec.A = read_real_matrix(doc["A"], "A");
  spec.C = read_real_matrix(doc["C"], "C");
  spec.x0.resize(static_cast<Eigen::Index>(doc["x0"].size()));
  for (std::size_t k = 0; k < doc["x0"].size(); ++k) {
    if (!doc["x0"][k].is_number()) throw IoError("x0: non-numeric entry");
    spec.x0(static_cast<Eigen::Index>(k)) = doc["x0"][k].get<double>();
  }
  validate_hmm(spec, 1e-9);
  return spec;
}

std::string number(double v) {
  // Shortest round-trip text; infinities spelled out for CSV readers.
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

json ll_value(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string model_to_string(const StackedKraus& kraus, const CMatrixXd& rho0,
                            const std::string& name) {
  json doc;
  doc["name"] = name;
  doc["n"] = kraus.n();
  doc["m"] = kraus.m();
  doc["w"] = kraus.w();
  doc["rho0"] = complex_matrix(rho0);
  json blocks = json::array();
  for (int y = 1; y <= kraus.m(); ++y)
    for (int q = 1; q <= kraus.w(); ++q) blocks.push_back(complex_matrix(kraus.kraus(y, q)));
  doc["kraus"] = std::move(blocks);
  return doc.dump(1) + "\n";
}

std::string model_to_string(const HqmmModel& model) {
  return model_to_string(model.kraus, model.rho0, model.name);
}

std::string hmm_to_string(const HmmSpec& spec) {
  json doc;
  doc["name"] = spec.name;
  doc["A"] = real_matrix(spec.A);
  doc["C"] = real_matrix(spec.C);
  doc["x0"] = json::array();
  for (Eigen::Index k = 0; k < spec.x0.size(); ++k) doc["x0"].push_back(spec.x0(k));
  return doc.dump(1) + "\n";
}

std::string spec_to_string(const ModelSpec& spec) {
  return std::visit([](const auto& s) {
    if constexpr (std::is_same_v<std::decay_t<decltype(s)>, HqmmModel>)
      return model_to_string(s);
    else
      return hmm_to_string(s);
  }, spec);
}

ModelSpec parse_spec(const std::string& text) {
  const json doc = parse_json(text);
  if (!doc.is_object()) throw IoError("model document must be a JSON object");
  if (doc.contains("kraus")) return model_from_json(doc);
  if (doc.contains("A")) return hmm_from_json(doc);
  throw IoError("model document has neither 'kraus' nor 'A'");
}

HqmmModel parse_model(const std::string& text) {
  const json doc = parse_json(text);
  if (!doc.is_object() || !doc.contains("kraus"))
    throw IoError("expected a quantum model document");
  return model_from_json(doc);
}

std::string obs_to_csv(const ObsMatrix& y) {
  std::string out;
  out.reserve(static_cast<std::size_t>(y.size()) * 2 + static_cast<std::size_t>(y.rows()));
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    for (Eigen::Index t = 0; t < y.cols(); ++t) {
      if (t > 0) out += ',';
      out += std::to_string(y(i, t));
    }
    out += '\n';
  }
  return out;
}

ObsMatrix parse_obs_csv(const std::string& text) {
  std::vector<std::vector<int>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<int> row;
    const char* p = line.data();
    const char* end = p + line.size();
    while (p < end) {
      while (p < end && *p == ' ') ++p;
      int v = 0;
      const auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc())
        throw IoError("observation CSV line " + std::to_string(line_no) + ": bad integer");
      row.push_back(v);
      p = res.ptr;
      while (p < end && *p == ' ') ++p;
      if (p < end) {
        if (*p != ',')
          throw IoError("observation CSV line " + std::to_string(line_no) + ": expected ','");
        ++p;
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ValidationError("observation CSV is not rectangular (line " +
                            std::to_string(line_no) + ")");
    rows.push_back(std::move(row));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto t = n == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(rows.front().size());
  ObsMatrix y(n, t);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < t; ++k)
      y(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  if (y.size() > 0 && y.minCoeff() < 1)
    throw ValidationError("observation symbols must be >= 1");
  return y;
}

std::string iterations_to_csv(const RunRecord& rec) {
  std::string out = "batch,iteration,objective,batch_ll\n";
  for (const auto& it : rec.iterations) {
    out += std::to_string(it.batch) + ',' + std::to_string(it.iteration) + ',' +
           number(it.objective) + ',' + number(it.batch_ll) + '\n';
  }
  return out;
}

std::string resample_trace_to_csv(const ResampleTrace& trace) {
  const std::size_t p = trace.empty() ? 0 : trace.front().ll.size();
  std::string out = "batch,iteration,chosen";
  for (std::size_t k = 1; k <= p; ++k) out += ",ll_" + std::to_string(k);
  for (std::size_t k = 1; k <= p; ++k) out += ",w_" + std::to_string(k);
  for (std::size_t k = 1; k <= p; ++k)
    out += ",i_" + std::to_string(k) + ",j_" + std::to_string(k);
  out += '\n';
  for (const auto& s : trace) {
    out += std::to_string(s.batch) + ',' + std::to_string(s.iteration) + ',' +
           std::to_string(s.chosen);
    for (double v : s.ll) out += ',' + number(v);
    for (double v : s.weights) out += ',' + number(v);
    for (std::size_t k = 0; k < s.rows_i.size(); ++k)
      out += ',' + std::to_string(s.rows_i[k]) + ',' + std::to_string(s.rows_j[k]);
    out += '\n';
  }
  return out;
}

std::string em_trace_to_csv(const RunRecord& rec) {
  std::string out = "iteration,ll\n";
  for (std::size_t k = 0; k < rec.em_trace.size(); ++k)
    out += std::to_string(k + 1) + ',' + number(rec.em_trace[k]) + '\n';
  return out;
}

std::string summary_json(const RunRecord& rec, std::uint64_t seed) {
  auto mean = [](double sum, Eigen::Index count) {
    return count > 0 ? sum / static_cast<double>(count) : 0.0;
  };
  json doc;
  doc["trainer"] = rec.trainer;
  doc["seed"] = seed;
  doc["train"] = {
      {"sequences", rec.train_sequences},
      {"observations", rec.train_observations},
      {"initial_ll_sum", ll_value(rec.initial_train_ll)},
      {"ll_sum", ll_value(rec.train_ll_final)},
      {"ll_per_observation", ll_value(mean(rec.train_ll_final, rec.train_observations))},
  };
  json per_batch = json::array();
  for (double v : rec.validation_ll) per_batch.push_back(ll_value(v));
  doc["validation"] = {
      {"sequences", rec.validation_sequences},
      {"observations", rec.validation_observations},
      {"initial_ll_sum", ll_value(rec.initial_validation_ll)},
      {"ll_sum", ll_value(rec.best_validation_ll)},
      {"ll_per_observation",
       ll_value(mean(rec.best_validation_ll, rec.validation_observations))},
      {"per_batch", per_batch},
  };
  return doc.dump(2) + "\n";
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path.string());
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << contents;
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace hqmm::io
