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

#include "hqmm/optim.hpp"

#include <algorithm>
#include <cmath>

namespace hqmm {

double Theta::l1_norm() const {
  return std::abs(alpha) + std::abs(phi) + std::abs(psi) + std::abs(delta);
}

Eigen::Matrix2cd rotation_block(const Theta& t) {
  const cd half_phase = std::polar(1.0, t.phi / 2.0);
  const double c = std::cos(t.alpha);
  const double s = std::sin(t.alpha);
  Eigen::Matrix2cd u;
  u(0, 0) = half_phase * std::polar(1.0, t.psi) * c;
  u(0, 1) = half_phase * std::polar(1.0, t.delta) * s;
  u(1, 0) = -half_phase * std::polar(1.0, -t.delta) * s;
  u(1, 1) = half_phase * std::polar(1.0, -t.psi) * c;
  return u;
}

namespace {

void check_rows(const StackedKraus& kappa, int i, int j) {
  if (i < 1 || j <= i || j > kappa.rows()) {
    throw IndexError("row pair (" + std::to_string(i) + ", " + std::to_string(j) +
                     ") invalid for a stack with " + std::to_string(kappa.rows()) +
                     " rows; need 1 <= i < j");
  }
}

}  // namespace

void apply_update_inplace(StackedKraus& kappa, const Theta& theta, int i, int j) {
  check_rows(kappa, i, j);
  const Eigen::Matrix2cd u = rotation_block(theta);
  auto& k = kappa.mat();
  const Eigen::RowVectorXcd ri = k.row(i - 1);
  const Eigen::RowVectorXcd rj = k.row(j - 1);
  k.row(i - 1) = u(0, 0) * ri + u(0, 1) * rj;
  k.row(j - 1) = u(1, 0) * ri + u(1, 1) * rj;
}

StackedKraus apply_update(const StackedKraus& kappa, const Theta& theta, int i,
                          int j) {
  StackedKraus out = kappa;
  apply_update_inplace(out, theta, i, j);
  return out;
}

Objective Objective::regular(const ObsMatrix& data, CMatrixXd rho0) {
  Objective o;
  o.data = data;
  o.rho0 = std::move(rho0);
  return o;
}

Objective Objective::l1(const ObsMatrix& data, CMatrixXd rho0, double lambda) {
  if (!(lambda >= 0.0)) throw ConfigError("penalty weight must be >= 0");
  Objective o = regular(data, std::move(rho0));
  o.kind = ObjectiveKind::L1Penalized;
  o.lambda = lambda;
  return o;
}

namespace {

double penalized(const Objective& obj, double ll, const Theta& theta) {
  if (obj.kind == ObjectiveKind::Regular) return ll;
  return ll - obj.lambda * theta.l1_norm();
}

/// Evaluates the objective on a private copy of kappa, rotating only rows i
/// and j and restoring them afterwards.
class ThetaFunction {
 public:
  ThetaFunction(const Objective& obj, const StackedKraus& kappa, int i, int j)
      : obj_(obj), work_((check_rows(kappa, i, j), kappa)), eval_(kappa), i_(i), j_(j),
        row_i_(kappa.mat().row(i - 1)), row_j_(kappa.mat().row(j - 1)) {}

  double operator()(const Theta& theta) {
    ++evals_;
    apply_update_inplace(work_, theta, i_, j_);
    eval_.reset(work_);
    const double ll = eval_.batch(obj_.rho0, obj_.data);
    work_.mat().row(i_ - 1) = row_i_;
    work_.mat().row(j_ - 1) = row_j_;
    return penalized(obj_, ll, theta);
  }

  int evals() const { return evals_; }

 private:
  const Objective& obj_;
  StackedKraus work_;
  LoglikEvaluator eval_;
  int i_, j_;
  Eigen::RowVectorXcd row_i_, row_j_;
  int evals_ = 0;
};

/// Gains below this relative size are rounding noise (a flat objective can
/// otherwise drift away from the origin).
bool improves(double candidate, double current) {
  return candidate > current + 1e-12 * std::max(1.0, std::abs(current));
}

bool in_box(const std::array<double, 4>& x) {
  return std::all_of(x.begin(), x.end(), [](double v) {
    return v >= -kThetaBound && v <= kThetaBound;
  });
}

SolveResult pattern_search(ThetaFunction& f, const SolverConfig& cfg) {
  SolveResult res;
  std::array<double, 4> x{0, 0, 0, 0};
  double fx = f(Theta{});
  res.start_value = fx;
  double mesh = cfg.initial_mesh;
  while (mesh >= cfg.mesh_tolerance && f.evals() < cfg.max_evals) {
    bool improved = false;
    for (int axis = 0; axis < 4 && !improved; ++axis) {
      for (double sign : {1.0, -1.0}) {
        if (f.evals() >= cfg.max_evals) break;
        std::array<double, 4> trial = x;
        trial[axis] += sign * mesh;
        if (!in_box(trial)) continue;
        const double ft = f(Theta::from_array(trial));
        if (improves(ft, fx)) {
          x = trial;
          fx = ft;
          improved = true;
          break;
        }
      }
    }
    mesh = improved ? std::min(mesh * cfg.expansion, 2.0 * kThetaBound)
                    : mesh * cfg.contraction;
  }
  res.theta = Theta::from_array(x);
  res.value = fx;
  res.evals = f.evals();
  return res;
}

using Vec4 = Eigen::Vector4d;

Vec4 clamp_box(const Vec4& x) {
  return x.cwiseMax(-kThetaBound).cwiseMin(kThetaBound);
}

Theta to_theta(const Vec4& x) { return {x(0), x(1), x(2), x(3)}; }

/// Central-difference gradient; false when a probe hits -inf.
bool fd_gradient(ThetaFunction& f, const Vec4& x, double h, Vec4& g) {
  for (int k = 0; k < 4; ++k) {
    Vec4 xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    const double fp = f(to_theta(xp));
    const double fm = f(to_theta(xm));
    if (!std::isfinite(fp) || !std::isfinite(fm)) return false;
    g(k) = (fp - fm) / (2.0 * h);
  }
  return true;
}

SolveResult fd_local(ThetaFunction& f, const SolverConfig& cfg) {
  SolveResult res;
  Vec4 x = Vec4::Zero();
  double fx = f(Theta{});
  res.start_value = fx;
  Vec4 g;
  Eigen::Matrix4d h_inv = Eigen::Matrix4d::Identity();
  bool have_grad = std::isfinite(fx) && fd_gradient(f, x, cfg.fd_step, g);
  while (have_grad && f.evals() + 8 < cfg.max_evals) {
    // Zero components that push against an active bound.
    Vec4 pg = g;
    for (int k = 0; k < 4; ++k) {
      if ((x(k) >= kThetaBound && pg(k) > 0) || (x(k) <= -kThetaBound && pg(k) < 0))
        pg(k) = 0.0;
    }
    if (pg.lpNorm<Eigen::Infinity>() < cfg.gradient_tolerance) break;
    Vec4 d = h_inv * pg;
    if (d.dot(pg) <= 0.0) {
      h_inv.setIdentity();
      d = pg;
    }
    double t = std::min(1.0, 0.5 / d.lpNorm<Eigen::Infinity>());
    bool accepted = false;
    Vec4 x_new;
    double f_new = kNegInf;
    while (t * d.lpNorm<Eigen::Infinity>() > cfg.step_tolerance &&
           f.evals() < cfg.max_evals) {
      x_new = clamp_box(x + t * d);
      f_new = f(to_theta(x_new));
      if (f_new > fx + 1e-4 * pg.dot(x_new - x)) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
    Vec4 g_new;
    const Vec4 s = x_new - x;
    x = x_new;
    fx = f_new;
    if (!fd_gradient(f, x, cfg.fd_step, g_new)) break;
    // BFGS on -f: curvature pair (s, -(g_new - g)).
    const Vec4 yk = g - g_new;
    const double sy = s.dot(yk);
    if (sy > 1e-12) {
      const double rho = 1.0 / sy;
      const Eigen::Matrix4d eye = Eigen::Matrix4d::Identity();
      h_inv = (eye - rho * s * yk.transpose()) * h_inv *
                  (eye - rho * yk * s.transpose()) +
              rho * s * s.transpose();
    }
    g = g_new;
  }
  res.theta = to_theta(x);
  res.value = fx;
  res.evals = f.evals();
  return res;
}

}  // namespace

double eval_objective(const Objective& obj, const StackedKraus& kappa,
                      const Theta& theta, int i, int j) {
  const StackedKraus updated = apply_update(kappa, theta, i, j);
  return penalized(obj, batch_loglik(updated, obj.rho0, obj.data), theta);
}

SolveResult maximize(const Objective& obj, const StackedKraus& kappa, int i,
                     int j, const SolverConfig& cfg) {
  if (cfg.max_evals < 1) throw ConfigError("solver needs max_evals >= 1");
  ThetaFunction f(obj, kappa, i, j);
  SolveResult res = cfg.kind == SolverKind::PatternSearch ? pattern_search(f, cfg)
                                                          : fd_local(f, cfg);
  if (!improves(res.value, res.start_value)) {
    res.theta = Theta{};
    res.value = res.start_value;
  }
  return res;
}

std::string to_string(SolverKind kind) {
  return kind == SolverKind::PatternSearch ? "pattern" : "fd";
}

SolverKind solver_from_string(const std::string& s) {
  if (s == "pattern" || s == "pattern_search") return SolverKind::PatternSearch;
  if (s == "fd" || s == "fd_local") return SolverKind::FdLocal;
  throw ConfigError("unknown solver '" + s + "' (expected pattern or fd)");
}

std::string to_string(ObjectiveKind kind) {
  return kind == ObjectiveKind::Regular ? "regular" : "l1";
}

ObjectiveKind objective_from_string(const std::string& s) {
  if (s == "regular") return ObjectiveKind::Regular;
  if (s == "l1" || s == "l1_penalized") return ObjectiveKind::L1Penalized;
  throw ConfigError("unknown objective '" + s + "' (expected regular or l1)");
}

}  // namespace hqmm
