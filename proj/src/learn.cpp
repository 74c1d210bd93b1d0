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

#include "hqmm/learn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include <Eigen/QR>

#include "hqmm/random.hpp"

namespace hqmm {

namespace {

// RNG stream layout (see CounterRng).
constexpr std::uint64_t kBatchStream = 1ULL << 40;
constexpr std::uint64_t kProposalStream = 2ULL << 40;
constexpr std::uint64_t kResampleStream = 3ULL << 40;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::pair<int, int> draw_row_pair(CounterRng& rng, Eigen::Index rows) {
  const auto r = static_cast<std::uint64_t>(rows);
  int a = static_cast<int>(rng.index(r));
  int b = static_cast<int>(rng.index(r - 1));
  if (b >= a) ++b;
  return {std::min(a, b) + 1, std::max(a, b) + 1};
}

ObsMatrix take_rows(const ObsMatrix& y, const std::vector<std::size_t>& rows) {
  ObsMatrix out(static_cast<Eigen::Index>(rows.size()), y.cols());
  for (std::size_t k = 0; k < rows.size(); ++k)
    out.row(static_cast<Eigen::Index>(k)) = y.row(static_cast<Eigen::Index>(rows[k]));
  return out;
}

ObsMatrix sample_batch(const ObsMatrix& y, int batch, const TrainConfig& cfg) {
  if (cfg.batch_size < 1 || cfg.batch_size > y.rows()) {
    throw ConfigError("batch size " + std::to_string(cfg.batch_size) +
                      " exceeds the " + std::to_string(y.rows()) +
                      " available training rows");
  }
  CounterRng rng(cfg.seed, kBatchStream + static_cast<std::uint64_t>(batch));
  auto rows = rng.sample_without_replacement(static_cast<std::size_t>(y.rows()),
                                             static_cast<std::size_t>(cfg.batch_size));
  return take_rows(y, rows);
}

Objective make_objective(const TrainConfig& cfg, const ObsMatrix& batch,
                         const CMatrixXd& rho0) {
  if (cfg.objective == ObjectiveKind::L1Penalized)
    return Objective::l1(batch, rho0, cfg.lambda);
  return Objective::regular(batch, rho0);
}

void check_inputs(const ObsMatrix& y, const ObsMatrix& y_val,
                  const StackedKraus& kappa, const CMatrixXd& rho0,
                  const TrainConfig& cfg) {
  const ValidityReport v = validate(kappa);
  if (!v.valid) {
    throw ValidationError("initial Kraus stack violates completeness by " +
                          std::to_string(v.deviation));
  }
  (void)DensityMatrix{rho0};
  if (rho0.rows() != kappa.n()) throw ShapeError("rho0 does not match the stack");
  auto check_alphabet = [&](const ObsMatrix& m, const char* what) {
    if (m.size() > 0 && (m.minCoeff() < 1 || m.maxCoeff() > kappa.m())) {
      throw ConfigError(std::string(what) + " uses symbols outside 1.." +
                        std::to_string(kappa.m()));
    }
  };
  check_alphabet(y, "training data");
  check_alphabet(y_val, "validation data");
  if (cfg.batches < 0 || cfg.iterations < 0 || cfg.proposals < 1) {
    throw ConfigError("need batches >= 0, iterations >= 0, proposals >= 1");
  }
}

void notify(const TrainConfig& cfg, const StackedKraus& k, TrainEvent e) {
  if (cfg.observer) cfg.observer(k, e);
}

void finish_record(RunRecord& rec, const ObsMatrix& y, const ObsMatrix& y_val,
                   const CMatrixXd& rho0) {
  rec.train_sequences = y.rows();
  rec.train_observations = y.size();
  rec.validation_sequences = y_val.rows();
  rec.validation_observations = y_val.size();
  rec.train_ll_final = batch_loglik(*rec.kappa_best, rho0, y);
}

/// Validation bookkeeping shared by both rotation learners.
void track_validation(RunRecord& rec, const StackedKraus& kappa,
                      const ObsMatrix& y_val, const CMatrixXd& rho0) {
  const double h = batch_loglik(kappa, rho0, y_val);
  rec.validation_ll.push_back(h);
  if (h > rec.best_validation_ll) {
    rec.best_validation_ll = h;
    rec.kappa_best = kappa;
  }
}

struct Proposal {
  StackedKraus kappa;
  double value = kNegInf;
  int i = 0, j = 0;
};

Proposal run_proposal(const StackedKraus& base, const ObsMatrix& batch,
                      const CMatrixXd& rho0, const TrainConfig& cfg,
                      std::uint64_t stream) {
  CounterRng rng(cfg.seed, stream);
  auto [i, j] = draw_row_pair(rng, base.rows());
  const Objective obj = make_objective(cfg, batch, rho0);
  const double start = batch_loglik(base, rho0, batch);
  const SolveResult sol = maximize(obj, base, i, j, cfg.solver);
  Proposal p{base, start, i, j};
  if (sol.value > start) {
    apply_update_inplace(p.kappa, sol.theta, i, j);
    p.value = sol.value;
  }
  return p;
}

}  // namespace

std::string to_string(ResampleScheme s) {
  return s == ResampleScheme::Softmax ? "softmax" : "literal";
}

ResampleScheme resample_from_string(const std::string& s) {
  if (s == "softmax") return ResampleScheme::Softmax;
  if (s == "literal") return ResampleScheme::Literal;
  throw ConfigError("unknown resampling scheme '" + s + "'");
}

std::vector<double> resample_weights(std::span<const double> ll,
                                     ResampleScheme scheme) {
  const std::size_t p = ll.size();
  std::vector<double> w(p, 0.0);
  if (p == 0) return w;
  double min_finite = std::numeric_limits<double>::infinity();
  for (double v : ll)
    if (std::isfinite(v)) min_finite = std::min(min_finite, v);
  if (!std::isfinite(min_finite)) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(p));
    return w;
  }
  std::vector<double> x(ll.begin(), ll.end());
  for (double& v : x)
    if (!std::isfinite(v)) v = min_finite - 50.0;
  // Both schemes are a softmax; the literal one over -L. Shifting by the
  // largest exponent keeps every term in (0, 1].
  if (scheme == ResampleScheme::Literal)
    for (double& v : x) v = -v;
  const double top = *std::max_element(x.begin(), x.end());
  double total = 0.0;
  for (std::size_t k = 0; k < p; ++k) {
    w[k] = std::exp(x[k] - top);
    total += w[k];
  }
  for (double& v : w) v /= total;
  return w;
}

StackedKraus random_kraus(int n, int m, int w, std::uint64_t seed) {
  const Eigen::Index rows = static_cast<Eigen::Index>(n) * m * w;
  if (rows < n) throw ShapeError("random_kraus: need n*m*w >= n");
  CounterRng rng(seed, 0);
  Eigen::MatrixXcd g(rows, n);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < n; ++c) g(r, c) = cd(rng.normal(), rng.normal());
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
  Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(rows, n);
  return StackedKraus(n, m, w, CMatrixXd(q));
}

RunRecord train_ila(const ObsMatrix& y, const ObsMatrix& y_val,
                    const StackedKraus& kappa_init, const CMatrixXd& rho0,
                    const TrainConfig& cfg) {
  check_inputs(y, y_val, kappa_init, rho0, cfg);
  const auto t0 = Clock::now();
  RunRecord rec;
  rec.trainer = "ila";
  rec.kappa_best = kappa_init;
  rec.initial_train_ll = batch_loglik(kappa_init, rho0, y);
  rec.initial_validation_ll = batch_loglik(kappa_init, rho0, y_val);

  StackedKraus kappa = kappa_init;
  std::uint64_t counter = 0;
  for (int b = 1; b <= cfg.batches; ++b) {
    const ObsMatrix batch = sample_batch(y, b, cfg);
    const Objective obj = make_objective(cfg, batch, rho0);
    for (int l = 1; l <= cfg.iterations; ++l) {
      CounterRng rng(cfg.seed, kProposalStream + counter++);
      auto [i, j] = draw_row_pair(rng, kappa.rows());
      const SolveResult sol = maximize(obj, kappa, i, j, cfg.solver);
      if (sol.value > sol.start_value) apply_update_inplace(kappa, sol.theta, i, j);
      notify(cfg, kappa, TrainEvent::Update);
      rec.iterations.push_back(
          {b, l, std::max(sol.value, sol.start_value), batch_loglik(kappa, rho0, batch)});
    }
    track_validation(rec, kappa, y_val, rho0);
    notify(cfg, kappa, TrainEvent::BatchEnd);
  }
  finish_record(rec, y, y_val, rho0);
  rec.wall_time = seconds_since(t0);
  return rec;
}

RilaResult train_rila(const ObsMatrix& y, const ObsMatrix& y_val,
                      const StackedKraus& kappa_init, const CMatrixXd& rho0,
                      const TrainConfig& cfg) {
  check_inputs(y, y_val, kappa_init, rho0, cfg);
  if (cfg.filter_count >= y.rows() && cfg.filter_count > 0) {
    throw ConfigError("cannot filter " + std::to_string(cfg.filter_count) +
                      " of " + std::to_string(y.rows()) + " rows");
  }
  const auto t0 = Clock::now();
  RilaResult out;
  RunRecord& rec = out.record;
  rec.trainer = "rila";
  rec.kappa_best = kappa_init;
  rec.initial_train_ll = batch_loglik(kappa_init, rho0, y);
  rec.initial_validation_ll = batch_loglik(kappa_init, rho0, y_val);

  FilterResult filtered = rcr_ef(y, cfg.filter_count, cfg.filter);
  out.filter = std::move(filtered.stats);
  const ObsMatrix& clean = filtered.data;

  StackedKraus kappa = kappa_init;
  const int p_count = cfg.proposals;
  const auto stream_of = [&](int b, int it, int p) {
    return kProposalStream +
           ((static_cast<std::uint64_t>(b - 1) * static_cast<std::uint64_t>(cfg.iterations) +
             static_cast<std::uint64_t>(it - 1)) *
                static_cast<std::uint64_t>(p_count) +
            static_cast<std::uint64_t>(p - 1));
  };

  for (int b = 1; b <= cfg.batches; ++b) {
    const ObsMatrix batch = sample_batch(clean, b, cfg);
    for (int it = 1; it <= cfg.iterations; ++it) {
      std::vector<std::optional<Proposal>> props(static_cast<std::size_t>(p_count));
      if (cfg.chain_proposals) {
        StackedKraus base = kappa;
        for (int p = 1; p <= p_count; ++p) {
          props[p - 1] = run_proposal(base, batch, rho0, cfg, stream_of(b, it, p));
          base = props[p - 1]->kappa;
          notify(cfg, base, TrainEvent::Update);
        }
      } else {
        const int workers = std::clamp(cfg.threads, 1, p_count);
        auto work = [&](int first) {
          for (int p = first; p <= p_count; p += workers)
            props[p - 1] = run_proposal(kappa, batch, rho0, cfg, stream_of(b, it, p));
        };
        if (workers == 1) {
          work(1);
        } else {
          std::vector<std::thread> pool;
          for (int wk = 1; wk <= workers; ++wk) pool.emplace_back(work, wk);
          for (auto& th : pool) th.join();
        }
        for (const auto& p : props) notify(cfg, p->kappa, TrainEvent::Update);
      }

      ResampleStep step;
      step.batch = b;
      step.iteration = it;
      for (const auto& p : props) {
        step.ll.push_back(p->value);
        step.rows_i.push_back(p->i);
        step.rows_j.push_back(p->j);
      }
      step.weights = resample_weights(step.ll, cfg.resample);
      CounterRng rng(cfg.seed,
                     kResampleStream + static_cast<std::uint64_t>(b - 1) *
                                           static_cast<std::uint64_t>(cfg.iterations) +
                         static_cast<std::uint64_t>(it - 1));
      const std::size_t chosen = rng.categorical(step.weights);
      step.chosen = static_cast<int>(chosen) + 1;
      kappa = props[chosen]->kappa;
      notify(cfg, kappa, TrainEvent::Resample);
      rec.iterations.push_back(
          {b, it, step.ll[chosen], batch_loglik(kappa, rho0, batch)});
      out.trace.push_back(std::move(step));
    }
    track_validation(rec, kappa, y_val, rho0);
    notify(cfg, kappa, TrainEvent::BatchEnd);
  }
  finish_record(rec, y, y_val, rho0);
  rec.wall_time = seconds_since(t0);
  return out;
}

// ---------------------------------------------------------------------------
// Classical baseline.

namespace {

struct ForwardPass {
  std::vector<Eigen::VectorXd> alpha;  // alpha[0] = x0, normalized per step
  std::vector<double> scale;           // scale[t-1] = P(y_t | y_<t)
  double ll = 0.0;
};

ForwardPass forward(const HmmSpec& s, std::span<const int> ys) {
  ForwardPass f;
  f.alpha.reserve(ys.size() + 1);
  f.alpha.push_back(s.x0);
  for (int y : ys) {
    if (y < 1 || y > s.m()) throw IndexError("symbol outside the HMM alphabet");
    Eigen::VectorXd a = s.C.row(y - 1).transpose().cwiseProduct(s.A * f.alpha.back());
    const double c = a.sum();
    f.scale.push_back(c);
    if (!(c > 0.0)) {
      f.ll = kNegInf;
      return f;
    }
    f.ll += std::log(c);
    f.alpha.push_back(a / c);
  }
  return f;
}

void normalize_columns(Eigen::MatrixXd& m, const Eigen::MatrixXd& fallback) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double s = m.col(j).sum();
    if (s > 0.0)
      m.col(j) /= s;
    else
      m.col(j) = fallback.col(j);
  }
}

HmmSpec random_hmm(int n, int m, CounterRng& rng) {
  auto random_stochastic = [&](int rows, int cols) {
    Eigen::MatrixXd x(rows, cols);
    for (int j = 0; j < cols; ++j) {
      for (int i = 0; i < rows; ++i) x(i, j) = 0.05 + rng.uniform();
      x.col(j) /= x.col(j).sum();
    }
    return x;
  };
  HmmSpec s;
  s.name = "em";
  s.A = random_stochastic(n, n);
  s.C = random_stochastic(m, n);
  s.x0 = random_stochastic(n, 1).col(0);
  return s;
}

}  // namespace

double hmm_loglik(const HmmSpec& spec, std::span<const int> ys) {
  return forward(spec, ys).ll;
}

double hmm_batch_loglik(const HmmSpec& spec, const ObsMatrix& y) {
  double total = 0.0;
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    const double ll = hmm_loglik(spec, row_span(y, r));
    if (ll == kNegInf) return kNegInf;
    total += ll;
  }
  return total;
}

HmmSpec em_step(const HmmSpec& s, const ObsMatrix& y, double* ll_out) {
  const int n = s.n();
  const int m = s.m();
  Eigen::VectorXd x0_acc = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd a_acc = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd c_acc = Eigen::MatrixXd::Zero(m, n);
  double ll = 0.0;
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    const auto ys = row_span(y, r);
    const ForwardPass f = forward(s, ys);
    if (f.ll == kNegInf) {
      ll = kNegInf;
      continue;
    }
    ll += f.ll;
    const std::size_t len = ys.size();
    Eigen::VectorXd beta = Eigen::VectorXd::Ones(n);
    // Walk backwards; beta holds the scaled backward message for time t.
    for (std::size_t t = len; t >= 1; --t) {
      const int yt = ys[t - 1];
      const Eigen::VectorXd gamma = f.alpha[t].cwiseProduct(beta);
      c_acc.row(yt - 1) += gamma.transpose();
      const Eigen::VectorXd eb = s.C.row(yt - 1).transpose().cwiseProduct(beta);
      // xi(i, j) = alpha_{t-1}(j) A(i, j) C(y_t, i) beta_t(i) / c_t
      a_acc += (eb * f.alpha[t - 1].transpose()).cwiseProduct(s.A) / f.scale[t - 1];
      beta = s.A.transpose() * eb / f.scale[t - 1];
    }
    x0_acc += f.alpha[0].cwiseProduct(beta);
  }
  if (ll_out) *ll_out = ll;
  HmmSpec next = s;
  next.A = a_acc;
  next.C = c_acc;
  normalize_columns(next.A, s.A);
  normalize_columns(next.C, s.C);
  const double sx = x0_acc.sum();
  next.x0 = sx > 0.0 ? Eigen::VectorXd(x0_acc / sx) : s.x0;
  return next;
}

RunRecord train_em(const ObsMatrix& y, const ObsMatrix& y_val, int n_states,
                   const EmConfig& cfg, int alphabet) {
  if (n_states < 1) throw ConfigError("EM needs at least one hidden state");
  if (cfg.restarts < 1) throw ConfigError("EM needs at least one restart");
  const auto t0 = Clock::now();
  int m = alphabet;
  if (m <= 0) {
    m = y.size() > 0 ? y.maxCoeff() : 1;
    if (y_val.size() > 0) m = std::max(m, y_val.maxCoeff());
  }
  if (y.size() > 0 && y.minCoeff() < 1) throw ConfigError("symbols must be >= 1");

  RunRecord rec;
  rec.trainer = "em";
  double best_ll = kNegInf;
  for (int r = 0; r < cfg.restarts; ++r) {
    CounterRng rng(cfg.seed, static_cast<std::uint64_t>(r));
    HmmSpec model = random_hmm(n_states, m, rng);
    std::vector<double> trace;
    double prev = kNegInf;
    for (int it = 0; it < cfg.max_iterations; ++it) {
      double ll = 0.0;
      HmmSpec next = em_step(model, y, &ll);
      trace.push_back(ll);
      if (ll == kNegInf) break;
      const bool converged = it > 0 && std::abs(ll - prev) < cfg.tolerance;
      prev = ll;
      if (converged) break;
      model = std::move(next);
    }
    const double final_ll = hmm_batch_loglik(model, y);
    if (rec.hmm_best == std::nullopt || final_ll > best_ll) {
      best_ll = final_ll;
      rec.hmm_best = model;
      rec.em_trace = trace;
    }
  }
  rec.hmm_best->name = "em";
  rec.train_ll_final = best_ll;
  rec.initial_train_ll = rec.em_trace.empty() ? kNegInf : rec.em_trace.front();
  rec.best_validation_ll = hmm_batch_loglik(*rec.hmm_best, y_val);
  rec.validation_ll.push_back(rec.best_validation_ll);
  rec.train_sequences = y.rows();
  rec.train_observations = y.size();
  rec.validation_sequences = y_val.rows();
  rec.validation_observations = y_val.size();
  rec.wall_time = seconds_since(t0);
  return rec;
}

}  // namespace hqmm
