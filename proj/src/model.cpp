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

#include "hqmm/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

namespace hqmm {

StateReport check_state(const CMatrixXd& rho, double tol) {
  StateReport r;
  if (rho.rows() != rho.cols() || rho.rows() == 0 || !all_finite(rho)) {
    r.hermitian_deviation = std::numeric_limits<double>::infinity();
    return r;
  }
  r.hermitian_deviation = max_abs_diff(rho, rho.adjoint());
  r.trace_deviation = std::abs(rho.trace() - cd(1.0, 0.0));
  const CMatrixXd herm = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm,
                                                     Eigen::EigenvaluesOnly);
  r.min_eigenvalue = es.eigenvalues().minCoeff();
  r.valid = r.hermitian_deviation <= tol && r.trace_deviation <= tol &&
            r.min_eigenvalue >= -tol;
  return r;
}

DensityMatrix::DensityMatrix(CMatrixXd mat, double tol) : mat_(std::move(mat)) {
  const StateReport r = check_state(mat_, tol);
  if (!r.valid) {
    throw ValidationError(
        "not a density matrix: hermitian dev " +
        std::to_string(r.hermitian_deviation) + ", trace dev " +
        std::to_string(r.trace_deviation) + ", min eigenvalue " +
        std::to_string(r.min_eigenvalue));
  }
}

DensityMatrix DensityMatrix::basis(Eigen::Index n, Eigen::Index k) {
  if (k < 0 || k >= n) throw IndexError("basis state index out of range");
  CMatrixXd m = CMatrixXd::Zero(n, n);
  m(k, k) = 1.0;
  return DensityMatrix(std::move(m));
}

DensityMatrix DensityMatrix::diagonal(const Eigen::VectorXd& probs) {
  CMatrixXd m = CMatrixXd::Zero(probs.size(), probs.size());
  for (Eigen::Index i = 0; i < probs.size(); ++i) m(i, i) = probs(i);
  return DensityMatrix(std::move(m));
}

StackedKraus::StackedKraus(int n, int m, int w, CMatrixXd mat)
    : n_(n), m_(m), w_(w), mat_(std::move(mat)) {
  if (n < 1 || m < 1 || w < 1) {
    throw ShapeError("StackedKraus: n, m, w must be positive");
  }
  if (mat_.rows() != static_cast<Eigen::Index>(n) * m * w ||
      mat_.cols() != n) {
    throw ShapeError("StackedKraus: expected " +
                     detail::shape_str(static_cast<Eigen::Index>(n) * m * w, n) +
                     ", got " + detail::shape_str(mat_.rows(), mat_.cols()));
  }
  if (!all_finite(mat_)) throw ValidationError("StackedKraus: non-finite entry");
}

StackedKraus StackedKraus::from_blocks(int n, int m, int w,
                                       const std::vector<CMatrixXd>& blocks) {
  if (blocks.size() != static_cast<std::size_t>(m) * w) {
    throw ShapeError("StackedKraus::from_blocks: expected " +
                     std::to_string(m * w) + " blocks");
  }
  CMatrixXd mat(static_cast<Eigen::Index>(n) * m * w, n);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b].rows() != n || blocks[b].cols() != n) {
      throw ShapeError("StackedKraus::from_blocks: block " + std::to_string(b) +
                       " is not " + detail::shape_str(n, n));
    }
    mat.middleRows(static_cast<Eigen::Index>(b) * n, n) = blocks[b];
  }
  return StackedKraus(n, m, w, std::move(mat));
}

ValidityReport validate(const StackedKraus& kappa, double tol) {
  ValidityReport r;
  const CMatrixXd gram = kappa.mat().adjoint() * kappa.mat();
  r.deviation = max_abs_diff(gram, CMatrixXd::Identity(kappa.n(), kappa.n()));
  r.valid = r.deviation <= tol;
  return r;
}

StepResult step(const CMatrixXd& rho, int y, const StackedKraus& kappa) {
  if (y < 1 || y > kappa.m()) {
    throw IndexError("step: symbol " + std::to_string(y) + " outside 1.." +
                     std::to_string(kappa.m()));
  }
  if (rho.rows() != kappa.n() || rho.cols() != kappa.n()) {
    throw ShapeError("step: state is " + detail::shape_str(rho.rows(), rho.cols()));
  }
  CMatrixXd acc = CMatrixXd::Zero(kappa.n(), kappa.n());
  for (int q = 1; q <= kappa.w(); ++q) {
    const auto k = kappa.kraus(y, q);
    acc.noalias() += k * rho * k.adjoint();
  }
  StepResult out;
  out.prob = acc.trace().real();
  if (!(out.prob >= tol::kProbFloor)) {
    out.prob = 0.0;
    out.zero_probability = true;
    return out;
  }
  out.state = acc / out.prob;
  return out;
}

LoglikEvaluator::LoglikEvaluator(const StackedKraus& kappa)
    : n_(kappa.n()), m_(kappa.m()), w_(kappa.w()) {
  const auto blocks = static_cast<std::size_t>(m_) * static_cast<std::size_t>(w_);
  ops_.assign(blocks, CMatrixXd(n_, n_));
  ops_adj_.assign(blocks, CMatrixXd(n_, n_));
  active_.resize(static_cast<std::size_t>(m_));
  rho_.resize(n_, n_);
  acc_.resize(n_, n_);
  tmp_.resize(n_, n_);
  reset(kappa);
}

void LoglikEvaluator::reset(const StackedKraus& kappa) {
  if (kappa.n() != n_ || kappa.m() != m_ || kappa.w() != w_)
    throw ShapeError("loglik: evaluator reset with a differently shaped stack");
  for (int y = 1; y <= m_; ++y) {
    auto& act = active_[static_cast<std::size_t>(y - 1)];
    act.clear();
    for (int q = 1; q <= w_; ++q) {
      const auto idx = static_cast<std::size_t>((y - 1) * w_ + (q - 1));
      ops_[idx] = kappa.kraus(y, q);
      ops_adj_[idx] = ops_[idx].adjoint();
      // Exactly-zero operators contribute nothing.
      if (ops_[idx].cwiseAbs().maxCoeff() != 0.0) act.push_back(static_cast<int>(idx));
    }
  }
  single_op_ = std::all_of(active_.begin(), active_.end(),
                           [](const std::vector<int>& a) { return a.size() <= 1; });
  switch (n_) {
    case 2: load_fixed(f2_); break;
    case 4: load_fixed(f4_); break;
    case 8: load_fixed(f8_); break;
    default: break;
  }
}

template <int N>
void LoglikEvaluator::load_fixed(FixedOps<N>& f) {
  f.ops.assign(ops_.begin(), ops_.end());
  f.adj.assign(ops_adj_.begin(), ops_adj_.end());
}

double LoglikEvaluator::sequence(const CMatrixXd& rho0, std::span<const int> ys) {
  if (rho0.rows() != n_ || rho0.cols() != n_) {
    throw ShapeError("loglik: initial state is " +
                     detail::shape_str(rho0.rows(), rho0.cols()));
  }
  for (int y : ys) {
    if (y < 1 || y > m_) {
      throw IndexError("loglik: symbol " + std::to_string(y) + " outside 1.." +
                       std::to_string(m_));
    }
  }
  if (single_op_ && factor_of(rho0).cols() < n_) return sequence_factored(ys);
  switch (n_) {
    case 2: return sequence_fixed(f2_, rho0, ys);
    case 4: return sequence_fixed(f4_, rho0, ys);
    case 8: return sequence_fixed(f8_, rho0, ys);
    default: return sequence_dyn(rho0, ys);
  }
}

double LoglikEvaluator::sequence_dyn(const CMatrixXd& rho0, std::span<const int> ys) {
  rho_ = rho0;
  double ll = 0.0;
  for (int y : ys) {
    const auto& act = active_[static_cast<std::size_t>(y - 1)];
    for (std::size_t k = 0; k < act.size(); ++k) {
      const auto idx = static_cast<std::size_t>(act[k]);
      tmp_.noalias() = ops_[idx] * rho_;
      if (k == 0)
        acc_.noalias() = tmp_ * ops_adj_[idx];
      else
        acc_.noalias() += tmp_ * ops_adj_[idx];
    }
    if (act.empty()) return kNegInf;
    const double p = acc_.trace().real();
    if (!(p >= tol::kProbFloor)) return kNegInf;
    ll += std::log(p);
    rho_ = acc_ / p;
  }
  return ll;
}

const CMatrixXd& LoglikEvaluator::factor_of(const CMatrixXd& rho0) {
  if (factor_rho0_.size() == rho0.size() && factor_rho0_ == rho0) return factor_;
  Eigen::SelfAdjointEigenSolver<CMatrixXd> es(rho0);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double cut = 1e-15 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < ev.size(); ++k)
    if (ev(k) > cut) keep.push_back(k);
  factor_.resize(n_, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    const auto k = keep[c];
    factor_.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(k) * std::sqrt(ev(k));
  }
  factor_rho0_ = rho0;
  return factor_;
}

template <int N>
double LoglikEvaluator::sequence_factored_fixed(const FixedOps<N>& f,
                                                std::span<const int> ys) const {
  Eigen::Matrix<cd, N, Eigen::Dynamic> v = factor_;
  Eigen::Matrix<cd, N, Eigen::Dynamic> kv(N, v.cols());
  double ll = 0.0;
  for (int y : ys) {
    const auto& act = active_[static_cast<std::size_t>(y - 1)];
    if (act.empty()) return kNegInf;
    kv.noalias() = f.ops[static_cast<std::size_t>(act.front())] * v;
    const double p = kv.squaredNorm();
    if (!(p >= tol::kProbFloor)) return kNegInf;
    ll += std::log(p);
    v = kv / std::sqrt(p);
  }
  return ll;
}

double LoglikEvaluator::sequence_factored(std::span<const int> ys) {
  switch (n_) {
    case 2: return sequence_factored_fixed(f2_, ys);
    case 4: return sequence_factored_fixed(f4_, ys);
    case 8: return sequence_factored_fixed(f8_, ys);
    default: break;
  }
  v_ = factor_;
  double ll = 0.0;
  for (int y : ys) {
    const auto& act = active_[static_cast<std::size_t>(y - 1)];
    if (act.empty()) return kNegInf;
    kv_.noalias() = ops_[static_cast<std::size_t>(act.front())] * v_;
    const double p = kv_.squaredNorm();
    if (!(p >= tol::kProbFloor)) return kNegInf;
    ll += std::log(p);
    v_ = kv_ / std::sqrt(p);
  }
  return ll;
}

template <int N>
double LoglikEvaluator::sequence_fixed(const FixedOps<N>& f, const CMatrixXd& rho0,
                                       std::span<const int> ys) const {
  using Mat = typename FixedOps<N>::Mat;
  Mat rho = rho0;
  Mat acc, tmp;
  double ll = 0.0;
  for (int y : ys) {
    acc.setZero();
    for (int idx : active_[static_cast<std::size_t>(y - 1)]) {
      tmp.noalias() = f.ops[static_cast<std::size_t>(idx)] * rho;
      acc.noalias() += tmp * f.adj[static_cast<std::size_t>(idx)];
    }
    const double p = acc.trace().real();
    if (!(p >= tol::kProbFloor)) return kNegInf;
    ll += std::log(p);
    rho = acc / p;
  }
  return ll;
}

double LoglikEvaluator::batch(const CMatrixXd& rho0, const ObsMatrix& y) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    const double ll = sequence(rho0, row_span(y, i));
    if (ll == kNegInf) return kNegInf;
    total += ll;
  }
  return total;
}

double seq_loglik(const StackedKraus& kappa, const CMatrixXd& rho0,
                  std::span<const int> ys) {
  LoglikEvaluator ev(kappa);
  return ev.sequence(rho0, ys);
}

double batch_loglik(const StackedKraus& kappa, const CMatrixXd& rho0,
                    const ObsMatrix& y) {
  LoglikEvaluator ev(kappa);
  return ev.batch(rho0, y);
}

}  // namespace hqmm
