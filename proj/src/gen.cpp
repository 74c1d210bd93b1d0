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

#include "hqmm/gen.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hqmm/random.hpp"

namespace hqmm {

namespace {

void check_columns(const Eigen::MatrixXd& m, const char* what, double tol) {
  if ((m.array() < 0.0).any() || !m.allFinite()) {
    throw ValidationError(std::string(what) + " has negative or non-finite entries");
  }
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (std::abs(m.col(j).sum() - 1.0) > tol) {
      throw ValidationError(std::string(what) + " column " + std::to_string(j + 1) +
                            " sums to " + std::to_string(m.col(j).sum()));
    }
  }
}

void check_sizes(Eigen::Index n_rows, Eigen::Index length) {
  if (n_rows < 0 || length < 0) throw ConfigError("negative matrix size");
}

std::size_t draw(CounterRng& rng, const Eigen::VectorXd& probs) {
  std::vector<double> w(probs.data(), probs.data() + probs.size());
  return rng.categorical(w);
}

}  // namespace

void validate_hmm(const HmmSpec& spec, double tol) {
  const auto n = spec.A.rows();
  if (n < 1 || spec.A.cols() != n || spec.C.cols() != n || spec.C.rows() < 1 ||
      spec.x0.size() != n) {
    throw ValidationError("HMM shapes inconsistent: A " +
                          detail::shape_str(spec.A.rows(), spec.A.cols()) +
                          ", C " + detail::shape_str(spec.C.rows(), spec.C.cols()) +
                          ", x0 " + std::to_string(spec.x0.size()));
  }
  check_columns(spec.A, "A", tol);
  check_columns(spec.C, "C", tol);
  Eigen::MatrixXd x0 = spec.x0;
  check_columns(x0, "x0", tol);
}

Eigen::MatrixXd transfer_operator(const HmmSpec& spec, int y) {
  if (y < 1 || y > spec.m()) throw IndexError("transfer_operator: bad symbol");
  return spec.C.row(y - 1).transpose().asDiagonal() * spec.A;
}

ObsMatrix generate_hqmm(const HqmmModel& model, Eigen::Index n_rows,
                        Eigen::Index length, std::uint64_t seed) {
  check_sizes(n_rows, length);
  const StackedKraus& kappa = model.kraus;
  const ValidityReport v = validate(kappa, tol::kValidity);
  if (!v.valid) {
    throw ValidationError("generate_hqmm: Kraus set violates completeness by " +
                          std::to_string(v.deviation));
  }
  DensityMatrix(model.rho0);  // throws on an invalid initial state
  if (model.rho0.rows() != kappa.n()) throw ShapeError("generate_hqmm: rho0 size");

  const int n = kappa.n();
  const int m = kappa.m();
  ObsMatrix out(n_rows, length);
  std::vector<CMatrixXd> acc(m, CMatrixXd(n, n));
  std::vector<double> probs(m);
  for (Eigen::Index row = 0; row < n_rows; ++row) {
    CounterRng rng(seed, static_cast<std::uint64_t>(row));
    CMatrixXd rho = model.rho0;
    for (Eigen::Index t = 0; t < length; ++t) {
      for (int y = 1; y <= m; ++y) {
        acc[y - 1].setZero();
        for (int q = 1; q <= kappa.w(); ++q) {
          const auto k = kappa.kraus(y, q);
          acc[y - 1].noalias() += k * rho * k.adjoint();
        }
        probs[y - 1] = std::max(0.0, acc[y - 1].trace().real());
      }
      const std::size_t s = rng.categorical(probs);
      out(row, t) = static_cast<int>(s) + 1;
      rho = acc[s] / probs[s];
    }
  }
  return out;
}

ObsMatrix generate_hmm(const HmmSpec& spec, Eigen::Index n_rows,
                       Eigen::Index length, std::uint64_t seed) {
  check_sizes(n_rows, length);
  validate_hmm(spec, 1e-9);
  ObsMatrix out(n_rows, length);
  for (Eigen::Index row = 0; row < n_rows; ++row) {
    CounterRng rng(seed, static_cast<std::uint64_t>(row));
    std::size_t state = draw(rng, spec.x0);
    for (Eigen::Index t = 0; t < length; ++t) {
      state = draw(rng, spec.A.col(static_cast<Eigen::Index>(state)));
      out(row, t) =
          static_cast<int>(draw(rng, spec.C.col(static_cast<Eigen::Index>(state)))) + 1;
    }
  }
  return out;
}

ObsMatrix generate(const ModelSpec& model, Eigen::Index n_rows,
                   Eigen::Index length, std::uint64_t seed) {
  return std::visit(
      [&](const auto& m) -> ObsMatrix {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, HqmmModel>)
          return generate_hqmm(m, n_rows, length, seed);
        else
          return generate_hmm(m, n_rows, length, seed);
      },
      model);
}

std::size_t corrupted_count(Eigen::Index n_rows, double gamma) {
  if (!(gamma >= 0.0) || !(gamma < 1.0)) {
    throw ConfigError("corruption fraction must lie in [0, 1), got " +
                      std::to_string(gamma));
  }
  // The epsilon keeps exact fractions such as 30 * (1/3) from rounding down.
  return static_cast<std::size_t>(
      std::floor(static_cast<double>(n_rows) * gamma + 1e-9));
}

CorruptionResult corrupt(const ObsMatrix& y, const CorruptionPolicy& policy,
                         int alphabet) {
  const std::size_t count = corrupted_count(y.rows(), policy.gamma);
  if (!policy.hook) {
    if (policy.constant_symbol < 1 ||
        (alphabet > 0 && policy.constant_symbol > alphabet)) {
      throw ConfigError("constant corruption symbol " +
                        std::to_string(policy.constant_symbol) +
                        " outside the alphabet");
    }
  }
  CorruptionResult res{y, {}};
  if (count == 0) return res;
  CounterRng rng(policy.seed, 0);
  res.rows = rng.sample_without_replacement(static_cast<std::size_t>(y.rows()), count);
  std::sort(res.rows.begin(), res.rows.end());
  if (policy.hook) {
    policy.hook(y, res.rows, res.data);
  } else {
    for (std::size_t r : res.rows)
      res.data.row(static_cast<Eigen::Index>(r)).setConstant(policy.constant_symbol);
  }
  return res;
}

namespace {

HqmmModel make_m2010_24() {
  const double a = 1.0 / std::sqrt(2.0);
  const double b = 1.0 / (2.0 * std::sqrt(2.0));
  std::vector<CMatrixXd> blocks(4, CMatrixXd::Zero(2, 2));
  blocks[0](0, 0) = a;
  blocks[1](1, 1) = a;
  blocks[2] << b, b, b, b;
  blocks[3] << b, -b, -b, b;
  HqmmModel m{"m2010_24", StackedKraus::from_blocks(2, 4, 1, blocks),
              DensityMatrix::basis(2, 0).mat()};
  return m;
}

HqmmModel make_s2018_26() {
  const double a = 1.0 / std::sqrt(3.0);
  const double b = 1.0 / (2.0 * std::sqrt(3.0));
  const cd ib(0.0, b);
  std::vector<CMatrixXd> blocks(6, CMatrixXd::Zero(2, 2));
  blocks[0](0, 0) = a;
  blocks[1](1, 1) = a;
  blocks[2] << b, b, b, b;
  blocks[3] << b, -b, -b, b;
  blocks[4] << b, -ib, ib, b;
  blocks[5] << b, ib, -ib, b;
  HqmmModel m{"s2018_26", StackedKraus::from_blocks(2, 6, 1, blocks),
              DensityMatrix::basis(2, 0).mat()};
  return m;
}

HmmSpec make_hmm_88() {
  HmmSpec s;
  s.name = "hmm_88";
  s.A.resize(8, 8);
  s.A << 0.1039, 0.1020, 0.2531, 0.2001, 0.2169, 0.1346, 0.1579, 0.0115,
         0.1410, 0.1366, 0.2584, 0.1114, 0.1641, 0.0608, 0.0404, 0.1236,
         0.1097, 0.0343, 0.0246, 0.1445, 0.0615, 0.0091, 0.1621, 0.1531,
         0.1794, 0.0484, 0.0113, 0.0659, 0.1731, 0.3175, 0.1925, 0.1187,
         0.0535, 0.1958, 0.0490, 0.1434, 0.0226, 0.0990, 0.0282, 0.2178,
         0.2298, 0.2368, 0.2536, 0.1743, 0.0982, 0.1242, 0.1139, 0.1353,
         0.0072, 0.0766, 0.0284, 0.0038, 0.1992, 0.2299, 0.1910, 0.2083,
         0.1755, 0.1693, 0.1216, 0.1567, 0.0644, 0.0250, 0.1139, 0.0317;
  s.C.resize(8, 8);
  s.C << 0.0327, 0.1710, 0.1649, 0.2154, 0.2030, 0.1879, 0.0064, 0.0348,
         0.1894, 0.1207, 0.1545, 0.1368, 0.1393, 0.1404, 0.0084, 0.0782,
         0.0933, 0.1454, 0.0285, 0.0007, 0.0035, 0.0133, 0.0091, 0.1640,
         0.0388, 0.0675, 0.2360, 0.1471, 0.2077, 0.1522, 0.0791, 0.2714,
         0.2176, 0.0523, 0.1118, 0.0779, 0.1544, 0.1519, 0.2762, 0.1571,
         0.0816, 0.1734, 0.1438, 0.1257, 0.2229, 0.1860, 0.1730, 0.0052,
         0.1762, 0.0829, 0.1015, 0.2112, 0.0385, 0.1433, 0.1775, 0.2241,
         0.1704, 0.1868, 0.0589, 0.0852, 0.0306, 0.0250, 0.2704, 0.0652;
  // The published entries are rounded to four decimals, so some columns sum
  // to 1 +- 1e-4. Renormalize so the model is exactly stochastic.
  for (Eigen::Index j = 0; j < 8; ++j) {
    s.A.col(j) /= s.A.col(j).sum();
    s.C.col(j) /= s.C.col(j).sum();
  }
  s.x0 = Eigen::VectorXd::Zero(8);
  s.x0(0) = 1.0;
  return s;
}

}  // namespace

std::vector<std::string> benchmark_names() {
  return {"m2010_24", "s2018_26", "hmm_88"};
}

ModelSpec benchmark(const std::string& name) {
  if (name == "m2010_24") return make_m2010_24();
  if (name == "s2018_26") return make_s2018_26();
  if (name == "hmm_88") return make_hmm_88();
  throw ConfigError("unknown benchmark '" + name + "'");
}

HqmmModel benchmark_hqmm(const std::string& name) {
  ModelSpec m = benchmark(name);
  if (auto* q = std::get_if<HqmmModel>(&m)) return *q;
  throw ConfigError("benchmark '" + name + "' is not a quantum model");
}

HmmSpec benchmark_hmm(const std::string& name) {
  ModelSpec m = benchmark(name);
  if (auto* h = std::get_if<HmmSpec>(&m)) return *h;
  throw ConfigError("benchmark '" + name + "' is not a classical model");
}

CMatrixXd benchmark_rho0(const ModelSpec& model) {
  if (auto* q = std::get_if<HqmmModel>(&model)) return q->rho0;
  const auto& h = std::get<HmmSpec>(model);
  return DensityMatrix::diagonal(h.x0).mat();
}

int alphabet_size(const ModelSpec& model) {
  if (auto* q = std::get_if<HqmmModel>(&model)) return q->kraus.m();
  return std::get<HmmSpec>(model).m();
}

int hidden_dim(const ModelSpec& model) {
  if (auto* q = std::get_if<HqmmModel>(&model)) return q->kraus.n();
  return std::get<HmmSpec>(model).n();
}

}  // namespace hqmm
