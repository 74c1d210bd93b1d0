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

#include "doctest.h"
#include "hqmm/circuit.hpp"
#include "hqmm/gen.hpp"
#include "hqmm/learn.hpp"
#include "support.hpp"

using namespace hqmm;

namespace {

double unitarity_error(const CMatrixXd& u) {
  return (u.adjoint() * u - CMatrixXd::Identity(u.cols(), u.cols())).cwiseAbs().maxCoeff();
}

/// T_y x / 1^T T_y x for the 2-state, 3-symbol model of an instance.
std::array<double, 2> direct_filter(const Prop1Instance& inst) {
  Eigen::Matrix2d a;
  a << inst.a, 1.0 - inst.b, 1.0 - inst.a, inst.b;
  const Eigen::Vector2d x(inst.r, inst.s);
  const Eigen::Vector2d em(inst.e[static_cast<std::size_t>(inst.y)], inst.f[static_cast<std::size_t>(inst.y)]);
  const Eigen::Vector2d u = em.cwiseProduct(a * x);
  return {u(0) / u.sum(), u(1) / u.sum()};
}

}  // namespace

TEST_CASE("transition unitary") {
  const CMatrixXd u = build_u1(1.0, 1.0);
  CHECK(u(0, 0) == cd(1.0));
  CHECK(u(1, 1) == cd(-1.0));
  CHECK(u(1, 0) == cd(0.0));
  // |0>|0_E> stays on |0>|0_E>.
  CHECK(u.col(0) == CMatrixXd::Identity(4, 4).col(0));

  const CMatrixXd h = build_u1(0.5, 0.3);
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(h(0, 0) - r) < 1e-15);
  CHECK(std::abs(h(0, 1) - r) < 1e-15);
  CHECK(std::abs(h(1, 0) - r) < 1e-15);
  CHECK(std::abs(h(1, 1) + r) < 1e-15);

  CounterRng rng(1, 0);
  for (int t = 0; t < 200; ++t) CHECK(unitarity_error(build_u1(rng.uniform(), rng.uniform())) < 1e-12);
  CHECK_THROWS_AS(build_u1(1.2, 0.5), ValidationError);
  CHECK_THROWS_AS(build_u1(0.5, -0.1), ValidationError);
}

TEST_CASE("emission unitary") {
  CHECK(max_abs_diff(emission_block({1.0, 0.0, 0.0}), CMatrixXd::Identity(3, 3)) < 1e-15);
  const CMatrixXd v = emission_block({0.25, 0.25, 0.5});
  CHECK(std::abs(v(0, 0) - 0.5) < 1e-15);
  CHECK(std::abs(v(1, 0) - 0.5) < 1e-15);
  CHECK(std::abs(v(2, 0) - 1.0 / std::sqrt(2.0)) < 1e-15);
  CHECK(unitarity_error(v) < 1e-12);
  CHECK(v.imag().cwiseAbs().maxCoeff() == 0.0);

  for (std::uint64_t s = 0; s < 300; ++s) {
    const Prop1Instance inst = random_instance(9, s);
    const CMatrixXd u2 = build_u2(inst.e, inst.f);
    CHECK(unitarity_error(u2) < 1e-12);
    CHECK(std::abs(u2(1, 0).real() - std::sqrt(inst.e[1])) < 1e-15);
    CHECK(std::abs(u2(5, 3).real() - std::sqrt(inst.f[2])) < 1e-15);
  }
  // Boundary columns with zero entries stay well-conditioned.
  CHECK(unitarity_error(emission_block({0.0, 0.0, 1.0})) < 1e-15);
  CHECK(unitarity_error(emission_block({0.0, 0.5, 0.5})) < 1e-15);
  CHECK_THROWS_AS(emission_block({0.5, 0.6, 0.0}), ValidationError);
}

TEST_CASE("circuit worked cases") {
  Prop1Instance det;
  det.a = det.b = 1.0;
  det.r = 1.0;
  det.s = 0.0;
  det.e = {1.0, 0.0, 0.0};
  det.f = {0.0, 1.0, 0.0};
  det.y = 0;
  const CircuitOutput out = circuit_posterior(det);
  CHECK(std::abs(out.diag[0] - 1.0) < 1e-15);
  CHECK(std::abs(out.diag[1]) < 1e-15);
  const ClassicalPosterior cls = classical_posterior(det);
  CHECK(cls.posterior[0] == 1.0);
  CHECK(cls.posterior[1] == 0.0);

  Prop1Instance sym;
  sym.a = sym.b = 0.5;
  sym.r = sym.s = 0.5;
  sym.e = sym.f = {0.2, 0.3, 0.5};
  sym.y = 1;
  const CircuitOutput s = circuit_posterior(sym);
  CHECK(std::abs(s.diag[0] - 0.5) < 1e-15);
  CHECK(std::abs(s.diag[1] - 0.5) < 1e-15);

  // Equal emissions leave the transition marginal A (r, s).
  Prop1Instance eq = random_instance(4, 3);
  eq.f = eq.e;
  const ClassicalPosterior m = classical_posterior(eq);
  CHECK(std::abs(m.posterior[0] - (eq.a * eq.r + (1 - eq.b) * eq.s)) < 1e-15);

  // Symbol 2 has zero probability when neither state emits it.
  det.y = 2;
  CHECK(circuit_posterior(det).zero_probability);
  CHECK(classical_posterior(det).zero_probability);
}

TEST_CASE("circuit agrees with the classical filter on random instances") {
  double diag_dev = 0.0, norm_dev = 0.0, direct_dev = 0.0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const Prop1Instance inst = random_instance(2026, s);
    const CircuitOutput q = circuit_posterior(inst);
    const ClassicalPosterior c = classical_posterior(inst);
    REQUIRE_FALSE(q.zero_probability);
    const auto d = direct_filter(inst);
    for (int k = 0; k < 2; ++k) {
      diag_dev = std::max(diag_dev, std::abs(q.diag[k] - c.posterior[k]));
      direct_dev = std::max(direct_dev, std::abs(c.posterior[k] - d[k]));
    }
    norm_dev = std::max(norm_dev, std::abs(q.norm - c.denominator));
    CHECK(check_state(q.rho).valid);
  }
  CHECK(diag_dev < 1e-12);
  CHECK(norm_dev < 1e-12);
  CHECK(direct_dev < 1e-12);

  const Prop1Report rep = prop1_sweep(1000, 1);
  CHECK(rep.trials == 1000);
  CHECK(rep.max_diag_deviation < 1e-10);
  CHECK(rep.max_norm_deviation < 1e-12);
  CHECK_THROWS_AS(prop1_sweep(0, 1), ConfigError);
}

TEST_CASE("instance validation") {
  Prop1Instance inst = random_instance(3, 10);
  CHECK(std::abs(std::abs(inst.c) - std::sqrt(inst.r * inst.s)) < 1e-15);
  CHECK_NOTHROW(validate_instance(inst));
  inst.c *= 1.01;
  CHECK_THROWS_AS(validate_instance(inst), ValidationError);
  inst = random_instance(3, 11);
  inst.s += 0.01;
  CHECK_THROWS_AS(validate_instance(inst), ValidationError);
  inst = random_instance(3, 11);
  inst.y = 3;
  CHECK_THROWS_AS(circuit_posterior(inst), ValidationError);
}

TEST_CASE("HMM embedding") {
  HmmSpec one{"one", Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd(3, 1), Eigen::VectorXd::Ones(1)};
  one.C << 0.2, 0.3, 0.5;
  const HqmmModel q1 = hmm_to_hqmm(one);
  CHECK(q1.kraus.w() == 1);
  for (int y = 1; y <= 3; ++y) {
    CHECK(std::abs(q1.kraus.kraus(y, 1)(0, 0).real() - std::sqrt(one.C(y - 1, 0))) < 1e-15);
    CHECK(std::abs(step(q1.rho0, y, q1.kraus).prob - one.C(y - 1, 0)) < 1e-15);
  }

  HmmSpec ident{"ident", Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd(2, 2), Eigen::VectorXd(2)};
  ident.C << 0.9, 0.4, 0.1, 0.6;
  ident.x0 << 0.3, 0.7;
  const HqmmModel qi = hmm_to_hqmm(ident);
  CHECK(std::abs(step(qi.rho0, 1, qi.kraus).prob - (0.9 * 0.3 + 0.4 * 0.7)) < 1e-15);
}

TEST_CASE("embedded (8,8) model matches the classical forward algorithm") {
  const HmmSpec h = benchmark_hmm("hmm_88");
  const HqmmModel q = hmm_to_hqmm(h);
  CHECK(q.name == "hmm_88_embedded");
  CHECK(q.kraus.w() == 64);
  CHECK(validate(q.kraus, 1e-12).valid);

  CounterRng rng(88, 0);
  for (int t = 0; t < 40; ++t) {
    std::vector<int> ys(1 + rng.index(20));
    for (int& y : ys) y = 1 + static_cast<int>(rng.index(8));
    CHECK(std::abs(seq_loglik(q.kraus, q.rho0, ys) - hmm_loglik(h, ys)) < 1e-8);
    // Diagonal states stay diagonal.
    CMatrixXd rho = q.rho0;
    for (int y : ys) {
      const StepResult s = step(rho, y, q.kraus);
      CMatrixXd off = s.state;
      off.diagonal().setZero();
      CHECK(off.cwiseAbs().maxCoeff() < 1e-12);
      rho = s.state;
    }
  }
}

TEST_CASE("embedding is complete for random HMMs") {
  CounterRng rng(17, 1);
  for (int t = 0; t < 30; ++t) {
    const int n = 1 + static_cast<int>(rng.index(4)), m = 1 + static_cast<int>(rng.index(5));
    HmmSpec s{"r", Eigen::MatrixXd(n, n), Eigen::MatrixXd(m, n), Eigen::VectorXd(n)};
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) s.A(i, j) = rng.uniform();
      for (int i = 0; i < m; ++i) s.C(i, j) = rng.uniform();
      s.A.col(j) /= s.A.col(j).sum();
      s.C.col(j) /= s.C.col(j).sum();
      s.x0(j) = 1.0 / n;
    }
    CHECK(validate(hmm_to_hqmm(s).kraus, 1e-12).valid);
  }
}
