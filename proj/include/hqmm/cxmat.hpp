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

// Dense complex-matrix kernel shared by every other module. Everything here is
// a thin free-function layer over Eigen so callers can pass expressions.

#pragma once

#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Core>

#include "hqmm/errors.hpp"

namespace hqmm {

/// Tolerances used throughout the library.
namespace tol {
inline constexpr double kValidity = 1e-9;   // state / Kraus validity checks
inline constexpr double kAlgebraic = 1e-12; // exact algebraic identities
inline constexpr double kProbFloor = 1e-300;
}  // namespace tol

template <typename Scalar>
using CMatrix = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic,
                              Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using CVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

using CMatrixXd = CMatrix<double>;
using CVectorXd = CVector<double>;
using cd = std::complex<double>;

enum class Subsystem { A, B };

namespace detail {
inline std::string shape_str(Eigen::Index r, Eigen::Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}
}  // namespace detail

/// Checked matrix product.
template <typename DerivedA, typename DerivedB>
auto matmul(const Eigen::MatrixBase<DerivedA>& a,
            const Eigen::MatrixBase<DerivedB>& b)
    -> CMatrix<typename Eigen::NumTraits<typename DerivedA::Scalar>::Real> {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + detail::shape_str(a.rows(), a.cols()) +
                     " times " + detail::shape_str(b.rows(), b.cols()));
  }
  return a * b;
}

template <typename Derived>
auto adjoint(const Eigen::MatrixBase<Derived>& a)
    -> CMatrix<typename Eigen::NumTraits<typename Derived::Scalar>::Real> {
  return a.adjoint();
}

template <typename Derived>
auto trace(const Eigen::MatrixBase<Derived>& a) {
  if (a.rows() != a.cols()) {
    throw ShapeError("trace of non-square " +
                     detail::shape_str(a.rows(), a.cols()));
  }
  return a.trace();
}

/// Kronecker product; the left factor owns the slow index.
template <typename DerivedA, typename DerivedB>
auto tensor(const Eigen::MatrixBase<DerivedA>& a,
            const Eigen::MatrixBase<DerivedB>& b)
    -> CMatrix<typename Eigen::NumTraits<typename DerivedA::Scalar>::Real> {
  using Real = typename Eigen::NumTraits<typename DerivedA::Scalar>::Real;
  CMatrix<Real> out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) =
          std::complex<Real>(a(i, j)) * b.template cast<std::complex<Real>>();
    }
  }
  return out;
}

/// Reduces a (dim_a*dim_b)-square operator on A (x) B by tracing out `over`.
template <typename Derived>
auto partial_trace(const Eigen::MatrixBase<Derived>& joint, Eigen::Index dim_a,
                   Eigen::Index dim_b, Subsystem over)
    -> CMatrix<typename Eigen::NumTraits<typename Derived::Scalar>::Real> {
  using Real = typename Eigen::NumTraits<typename Derived::Scalar>::Real;
  const Eigen::Index d = dim_a * dim_b;
  if (dim_a < 1 || dim_b < 1 || joint.rows() != d || joint.cols() != d) {
    throw ShapeError("partial_trace: " +
                     detail::shape_str(joint.rows(), joint.cols()) +
                     " is not (" + std::to_string(dim_a) + "*" +
                     std::to_string(dim_b) + ")-square");
  }
  if (over == Subsystem::B) {
    CMatrix<Real> out = CMatrix<Real>::Zero(dim_a, dim_a);
    for (Eigen::Index i = 0; i < dim_a; ++i)
      for (Eigen::Index j = 0; j < dim_a; ++j)
        for (Eigen::Index k = 0; k < dim_b; ++k)
          out(i, j) += joint(i * dim_b + k, j * dim_b + k);
    return out;
  }
  CMatrix<Real> out = CMatrix<Real>::Zero(dim_b, dim_b);
  for (Eigen::Index i = 0; i < dim_b; ++i)
    for (Eigen::Index j = 0; j < dim_b; ++j)
      for (Eigen::Index k = 0; k < dim_a; ++k)
        out(i, j) += joint(k * dim_b + i, k * dim_b + j);
  return out;
}

/// P X P for a projector P (no idempotence check).
template <typename DerivedP, typename DerivedX>
auto project(const Eigen::MatrixBase<DerivedP>& projector,
             const Eigen::MatrixBase<DerivedX>& x)
    -> CMatrix<typename Eigen::NumTraits<typename DerivedX::Scalar>::Real> {
  return matmul(matmul(projector, x), projector);
}

/// |v><v| for a column vector.
template <typename Derived>
auto outer(const Eigen::MatrixBase<Derived>& v)
    -> CMatrix<typename Eigen::NumTraits<typename Derived::Scalar>::Real> {
  return v * v.adjoint();
}

/// Largest elementwise modulus of a - b.
template <typename DerivedA, typename DerivedB>
double max_abs_diff(const Eigen::MatrixBase<DerivedA>& a,
                    const Eigen::MatrixBase<DerivedB>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("max_abs_diff: " + detail::shape_str(a.rows(), a.cols()) +
                     " vs " + detail::shape_str(b.rows(), b.cols()));
  }
  if (a.size() == 0) return 0.0;
  return static_cast<double>((a - b).cwiseAbs().maxCoeff());
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& a) {
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const auto z = a(i, j);
      if (!std::isfinite(std::real(z)) || !std::isfinite(std::imag(z)))
        return false;
    }
  return true;
}

}  // namespace hqmm
