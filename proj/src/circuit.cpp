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

#include "hqmm/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hqmm/random.hpp"

namespace hqmm {

namespace {

constexpr double kSimplexTol = 1e-12;

void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ValidationError(std::string(what) + " = " + std::to_string(p) +
                          " outside [0, 1]");
  }
}

void check_simplex(const std::array<double, 3>& col, const char* what) {
  for (double v : col) check_probability(v, what);
  if (std::abs(col[0] + col[1] + col[2] - 1.0) > kSimplexTol) {
    throw ValidationError(std::string(what) + " does not sum to 1");
  }
}

CMatrixXd ket0_projector(Eigen::Index dim) {
  CMatrixXd p = CMatrixXd::Zero(dim, dim);
  p(0, 0) = 1.0;
  return p;
}

}  // namespace

void validate_instance(const Prop1Instance& inst) {
  check_probability(inst.a, "a");
  check_probability(inst.b, "b");
  check_probability(inst.r, "r");
  check_probability(inst.s, "s");
  check_simplex(inst.e, "emission column e");
  check_simplex(inst.f, "emission column f");
  if (std::abs(inst.r + inst.s - 1.0) > kSimplexTol)
    throw ValidationError("r + s must equal 1");
  if (std::abs(inst.c) > std::sqrt(inst.r * inst.s) + kSimplexTol)
    throw ValidationError("|c| exceeds sqrt(r s)");
  if (inst.y < 0 || inst.y > 2) throw ValidationError("symbol must be 0, 1 or 2");
}

Prop1Instance random_instance(std::uint64_t seed, std::uint64_t stream) {
  CounterRng rng(seed, stream);
  auto simplex = [&] {
    std::array<double, 3> x{};
    double total = 0.0;
    for (double& v : x) {
      double u = rng.uniform();
      while (u <= 0.0) u = rng.uniform();
      v = -std::log(u);
      total += v;
    }
    for (double& v : x) v /= total;
    return x;
  };
  Prop1Instance inst;
  inst.a = rng.uniform();
  inst.b = rng.uniform();
  inst.e = simplex();
  inst.f = simplex();
  inst.r = rng.uniform();
  inst.s = 1.0 - inst.r;
  // Every tenth instance sits on the coherence boundary |c| = sqrt(r s).
  const double scale = stream % 10 == 0 ? 1.0 : rng.uniform();
  const double phase = 2.0 * std::numbers::pi * rng.uniform();
  inst.c = std::polar(scale * std::sqrt(inst.r * inst.s), phase);
  inst.y = static_cast<int>(rng.index(3));
  return inst;
}

CMatrixXd build_u1(double a, double b) {
  check_probability(a, "a");
  check_probability(b, "b");
  const double sa = std::sqrt(a), ca = std::sqrt(1.0 - a);
  const double sb = std::sqrt(b), cb = std::sqrt(1.0 - b);
  CMatrixXd u = CMatrixXd::Zero(4, 4);
  u(0, 0) = sa;  u(0, 1) = ca;
  u(1, 0) = ca;  u(1, 1) = -sa;
  u(2, 2) = cb;  u(2, 3) = sb;
  u(3, 2) = sb;  u(3, 3) = -cb;
  return u;
}

CMatrixXd emission_block(const std::array<double, 3>& col) {
  check_simplex(col, "emission column");
  Eigen::Matrix3d v = Eigen::Matrix3d::Zero();
  for (int k = 0; k < 3; ++k) v(k, 0) = std::sqrt(col[k]);
  v.col(0).normalize();
  std::array<bool, 3> used{false, false, false};
  for (int c = 1; c < 3; ++c) {
    // Take the canonical vector with the largest residual; two orthogonalization
    // passes keep the columns orthonormal to rounding.
    int best = -1;
    double best_norm = -1.0;
    Eigen::Vector3d best_res;
    for (int k = 0; k < 3; ++k) {
      if (used[k]) continue;
      Eigen::Vector3d res = Eigen::Vector3d::Unit(k);
      for (int pass = 0; pass < 2; ++pass)
        for (int p = 0; p < c; ++p) res -= v.col(p).dot(res) * v.col(p);
      if (res.norm() > best_norm + 1e-12) {
        best = k;
        best_norm = res.norm();
        best_res = res;
      }
    }
    used[best] = true;
    v.col(c) = best_res / best_norm;
  }
  return v.cast<cd>();
}

CMatrixXd build_u2(const std::array<double, 3>& e, const std::array<double, 3>& f) {
  CMatrixXd u = CMatrixXd::Zero(6, 6);
  u.block(0, 0, 3, 3) = emission_block(e);
  u.block(3, 3, 3, 3) = emission_block(f);
  return u;
}

CircuitOutput circuit_posterior(const Prop1Instance& inst) {
  validate_instance(inst);
  CMatrixXd rho_prev(2, 2);
  rho_prev << inst.r, inst.c, std::conj(inst.c), inst.s;

  const CMatrixXd u1 = build_u1(inst.a, inst.b);
  const CMatrixXd joint1 = tensor(rho_prev, ket0_projector(2));
  const CMatrixXd evolved1 = matmul(matmul(u1, joint1), adjoint(u1));
  const CMatrixXd rho_mid = partial_trace(evolved1, 2, 2, Subsystem::A);

  const CMatrixXd u2 = build_u2(inst.e, inst.f);
  const CMatrixXd joint2 = tensor(rho_mid, ket0_projector(3));
  const CMatrixXd evolved2 = matmul(matmul(u2, joint2), adjoint(u2));
  CMatrixXd ket_y = CMatrixXd::Zero(3, 3);
  ket_y(inst.y, inst.y) = 1.0;
  const CMatrixXd proj = tensor(CMatrixXd::Identity(2, 2), ket_y);
  const CMatrixXd measured = partial_trace(project(proj, evolved2), 2, 3, Subsystem::B);

  CircuitOutput out;
  out.norm = trace(measured).real();
  if (!(out.norm > tol::kProbFloor)) {
    out.zero_probability = true;
    return out;
  }
  out.rho = measured / out.norm;
  out.diag = {out.rho(0, 0).real(), out.rho(1, 1).real()};
  return out;
}

ClassicalPosterior classical_posterior(const Prop1Instance& inst) {
  validate_instance(inst);
  const double ey = inst.e[static_cast<std::size_t>(inst.y)];
  const double fy = inst.f[static_cast<std::size_t>(inst.y)];
  const double u0 = ey * (inst.a * inst.r + (1.0 - inst.b) * inst.s);
  const double u1 = fy * ((1.0 - inst.a) * inst.r + inst.b * inst.s);
  ClassicalPosterior out;
  out.denominator = u0 + u1;
  if (!(out.denominator > tol::kProbFloor)) {
    out.zero_probability = true;
    return out;
  }
  out.posterior = {u0 / out.denominator, u1 / out.denominator};
  return out;
}

Prop1Report prop1_sweep(int trials, std::uint64_t seed) {
  if (trials < 1) throw ConfigError("prop1 sweep needs at least one trial");
  Prop1Report rep;
  rep.trials = trials;
  for (int t = 0; t < trials; ++t) {
    const Prop1Instance inst = random_instance(seed, static_cast<std::uint64_t>(t));
    const CircuitOutput q = circuit_posterior(inst);
    const ClassicalPosterior c = classical_posterior(inst);
    if (q.zero_probability || c.zero_probability) {
      ++rep.zero_probability_instances;
      if (q.zero_probability != c.zero_probability) {
        rep.max_diag_deviation = std::numeric_limits<double>::infinity();
      }
      continue;
    }
    for (int k = 0; k < 2; ++k)
      rep.max_diag_deviation = std::max(rep.max_diag_deviation,
                                        std::abs(q.diag[k] - c.posterior[k]));
    rep.max_norm_deviation =
        std::max(rep.max_norm_deviation, std::abs(q.norm - c.denominator));
  }
  return rep;
}

HqmmModel hmm_to_hqmm(const HmmSpec& spec) {
  validate_hmm(spec, 1e-9);
  const int n = spec.n();
  const int m = spec.m();
  const int w = n * n;
  std::vector<CMatrixXd> blocks;
  blocks.reserve(static_cast<std::size_t>(m) * w);
  for (int y = 1; y <= m; ++y) {
    const Eigen::MatrixXd t = transfer_operator(spec, y);
    for (int j = 0; j < n; ++j) {
      for (int target = 0; target < n; ++target) {
        CMatrixXd k = CMatrixXd::Zero(n, n);
        k(target, j) = std::sqrt(t(target, j));
        blocks.push_back(std::move(k));
      }
    }
  }
  HqmmModel model{spec.name + "_embedded", StackedKraus::from_blocks(n, m, w, blocks),
                  DensityMatrix::diagonal(spec.x0).mat()};
  return model;
}

}  // namespace hqmm
