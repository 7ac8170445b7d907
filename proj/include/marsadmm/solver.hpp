#pragma once

// Momentum-based adaptive Riemannian stochastic ADMM.
//
// Per iteration k (all quantities at index k unless noted):
//   rho_k = c_rho k^{1/3},  eta_k = c_eta k^{-1/3},  alpha_{k+1} = c_alpha k^{-2/3}
//   y_{k+1}      = prox_{g/rho_k}(A x_k - lambda_k / rho_k)
//   x_{k+1}      = R_{x_k}(-eta_k G_k),  G_k = v_k + P_{T_x}(rho_k A^T(A x_k - y_{k+1} - lambda_k/rho_k))
//   beta_{k+1}   = min(beta_1 r_1 / (r_{k+1} (k+2)^2 ln(k+3)), c_beta / (k^{1/3} ln^2(k+2)))
//   lambda_{k+1} = lambda_k - beta_{k+1}(A x_{k+1} - y_{k+1})
//   v_{k+1}      = momentum estimator update on a fresh batch S_{k+1}
// where r_j = ||A x_j - y_j||.

#include "marsadmm/common.hpp"
#include "marsadmm/estimator.hpp"
#include "marsadmm/manifold.hpp"
#include "marsadmm/problem.hpp"
#include "marsadmm/rng.hpp"
#include "marsadmm/trace.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace marsadmm {

struct SolverConfig {
  double c_rho = 50.0;
  double c_eta = 0.01;
  double c_alpha = 0.8;
  double c_beta = 0.75;
  double beta1 = 50.0;
  Index batch_size = 50;
  /// Use every sample at every iteration instead of drawing a batch.
  bool full_batch = false;
  std::int64_t max_iters = 1500;
  std::uint64_t seed = 1;
  /// Objective and full-gradient diagnostics cadence.
  std::int64_t residual_check_every = 10;
  /// When false, wall_seconds is recorded as 0 so traces are reproducible
  /// byte for byte.
  bool record_wall_time = true;
};

/// Rejects invalid configurations; returns warnings for settings outside the
/// ranges under which the convergence theory applies.
inline std::vector<std::string> validate(const SolverConfig& c) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(std::string(name) + " must be positive");
    }
  };
  positive(c.c_rho, "c_rho");
  positive(c.c_eta, "c_eta");
  positive(c.c_alpha, "c_alpha");
  positive(c.c_beta, "c_beta");
  positive(c.beta1, "beta1");
  if (c.c_alpha > 1.0) {
    throw std::invalid_argument("c_alpha must lie in (0, 1]");
  }
  if (c.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (c.max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  if (c.residual_check_every < 1) {
    throw std::invalid_argument("residual_check_every must be >= 1");
  }
  std::vector<std::string> w;
  if (c.c_alpha < 0.8) w.push_back("c_alpha < 0.8: outside the analysed range [0.8, 1]");
  if (c.c_beta > c.c_rho / 3.0) w.push_back("c_beta > c_rho/3: outside the analysed range");
  if (c.c_rho < 2.0 * std::numbers::sqrt2) w.push_back("c_rho < 2*sqrt(2): outside the analysed range");
  if (c.c_eta * c.c_rho > 1.0) w.push_back("c_eta > 1/c_rho: primal step likely too large for the analysis");
  return w;
}

struct Schedule {
  double rho;
  double eta;
  double alpha_next;
};

inline Schedule schedule(const SolverConfig& c, std::int64_t k) {
  if (k < 1) throw std::invalid_argument("schedule index must be >= 1");
  const double cr = std::cbrt(static_cast<double>(k));
  return {c.c_rho * cr, c.c_eta / cr, c.c_alpha / (cr * cr)};
}

/// Second branch of the dual stepsize, also its upper bound.
inline double dual_step_cap(const SolverConfig& c, std::int64_t k) {
  const double l = std::log(static_cast<double>(k) + 2.0);
  return c.c_beta / (std::cbrt(static_cast<double>(k)) * l * l);
}

struct DualStep {
  double beta;
  /// r_1 = 0: the primary branch would freeze lambda, so only the cap is used.
  bool degenerate;
};

/// beta_{k+1} given r_1 = ||A x_1 - y_1|| and r_{k+1} = ||A x_{k+1} - y_{k+1}||.
inline DualStep dual_stepsize(const SolverConfig& c, std::int64_t k, double r1,
                              double r_next) {
  if (k < 1) throw std::invalid_argument("dual_stepsize index must be >= 1");
  const double cap = dual_step_cap(c, k);
  if (r1 == 0.0) return {cap, true};
  if (r_next == 0.0) return {cap, false};
  const double kk = static_cast<double>(k);
  const double first =
      c.beta1 * r1 / (r_next * (kk + 2.0) * (kk + 2.0) * std::log(kk + 3.0));
  return {std::min(first, cap), false};
}

/// lambda_max = ||lambda_1|| + (pi^2/6) beta_1 r_1.
inline double dual_bound(double lambda1_norm, double beta1, double r1) {
  return lambda1_norm + std::numbers::pi * std::numbers::pi / 6.0 * beta1 * r1;
}

struct SolverState {
  std::int64_t k = 1;
  Matrix x;
  Matrix y;
  Matrix lambda;
  EstimatorState est;

  // Iterate k-1; empty at k = 1.
  Matrix x_prev;
  Matrix lambda_prev;
  double rho_prev = NAN;

  double beta = NAN;  // beta_k (beta_1 at k = 1)
  double r1 = 0.0;
  double lambda1_norm = 0.0;
  /// Dual bound; +inf when r_1 = 0 (no certificate available).
  double lambda_max = 0.0;
  bool degenerate_dual = false;
  /// Running sum of beta_i ||A x_i - y_i|| for i >= 2.
  double dual_sum = 0.0;
  std::int64_t retractions = 0;
  std::int64_t diag_sfo = 0;
};

struct KktResiduals {
  double r_grad = 0.0;
  double r_subdiff = 0.0;
  double r_feas = 0.0;
  Matrix lambda_bar;
};

/// y_{k+1} = prox_{g/rho}(A x_k - lambda_k / rho).
template <class Problem>
Matrix y_update(const Problem& p, const SolverState& s, double rho) {
  return p.prox_g(p.apply_A(s.x) - s.lambda / rho, rho);
}

/// x_{k+1} = R_{x_k}(-eta G).
inline Matrix x_update(const ManifoldSpec& m, const Matrix& x, double eta,
                       const Matrix& g) {
  return retract(m, x, -eta * g);
}

/// lambda_{k+1} = lambda_k - beta (A x_{k+1} - y_{k+1}); enforces the dual bound.
inline Matrix lambda_update(const Matrix& lambda, double beta,
                            const Matrix& residual, double lambda_max) {
  require_same_shape(lambda, residual, "lambda_update");
  Matrix next = lambda - beta * residual;
  const double n = next.norm();
  if (n > lambda_max) {
    throw InvariantViolation("dual iterate norm " + format_double(n) +
                             " exceeds certificate " +
                             format_double(lambda_max));
  }
  return next;
}

namespace detail {

template <class Problem>
SampleBatch next_batch(const SolverConfig& c, const Problem& p, Rng& rng) {
  return c.full_batch ? full_batch(p.num_samples())
                      : draw_batch(p.num_samples(), c.batch_size, rng);
}

}  // namespace detail

/// Starts from a caller-supplied (x_1, y_1, lambda_1).
template <class Problem>
SolverState initialize_at(const SolverConfig& c, const Problem& p, Matrix x1,
                          Matrix y1, Matrix lambda1, Rng& sample_rng) {
  const ManifoldSpec& m = p.manifold();
  m.check_ambient(x1, "initial x");
  if (!is_on_manifold(m, x1)) {
    throw std::invalid_argument("initial x is not on " + m.describe());
  }
  const Matrix ax = p.apply_A(x1);
  require_same_shape(ax, y1, "initial y");
  require_same_shape(ax, lambda1, "initial lambda");

  SolverState s;
  s.k = 1;
  s.r1 = (ax - y1).norm();
  s.lambda1_norm = lambda1.norm();
  s.degenerate_dual = (s.r1 == 0.0);
  s.lambda_max = s.degenerate_dual ? std::numeric_limits<double>::infinity()
                                   : dual_bound(s.lambda1_norm, c.beta1, s.r1);
  s.beta = c.beta1;
  s.x = std::move(x1);
  s.y = std::move(y1);
  s.lambda = std::move(lambda1);
  s.est = init_estimator(p, s.x, detail::next_batch(c, p, sample_rng));
  return s;
}

/// x_1 random, y_1 = prox_{g/rho_1}(A x_1), lambda_1 = 0.
template <class Problem>
SolverState initialize(const SolverConfig& c, const Problem& p, Rng& init_rng,
                       Rng& sample_rng) {
  Matrix x1 = random_point(p.manifold(), init_rng);
  const Matrix ax = p.apply_A(x1);
  Matrix y1 = p.prox_g(ax, schedule(c, 1).rho);
  Matrix l1 = Matrix::Zero(ax.rows(), ax.cols());
  return initialize_at(c, p, std::move(x1), std::move(y1), std::move(l1),
                       sample_rng);
}

/// One pass of the loop body: y, then x, then beta, then lambda, then v.
template <class Problem>
SolverState step(SolverState s, const SolverConfig& c, const Problem& p,
                 Rng& sample_rng) {
  const ManifoldSpec& m = p.manifold();
  const std::int64_t k = s.k;
  const Schedule sch = schedule(c, k);

  Matrix y_next = y_update(p, s, sch.rho);

  const Matrix g = augmented_grad(p, s.est.v, s.x, y_next, s.lambda, sch.rho);
  Matrix x_next = x_update(m, s.x, sch.eta, g);
  if (!(x_next == s.x) && ++s.retractions % 100 == 0) {
    x_next = reorthonormalize(m, x_next);
  }

  const Matrix resid = p.apply_A(x_next) - y_next;
  const double r_next = resid.norm();
  const DualStep ds = dual_stepsize(c, k, s.r1, r_next);
  Matrix lambda_next = lambda_update(s.lambda, ds.beta, resid, s.lambda_max);

  const SampleBatch batch = detail::next_batch(c, p, sample_rng);
  EstimatorState est_next =
      update_estimator(s.est, p, s.x, x_next, batch, sch.alpha_next);

  s.dual_sum += ds.beta * r_next;
  s.x_prev = std::move(s.x);
  s.lambda_prev = std::move(s.lambda);
  s.rho_prev = sch.rho;
  s.x = std::move(x_next);
  s.y = std::move(y_next);
  s.lambda = std::move(lambda_next);
  s.est = std::move(est_next);
  s.beta = ds.beta;
  s.k = k + 1;
  return s;
}

/// KKT residuals at iterate k >= 2 with lambda_bar_k = lambda_{k-1} - rho_{k-1}(A x_k - y_k).
/// Uses the full gradient of F (diagnostics only).
template <class Problem>
KktResiduals kkt_residuals(const SolverState& s, const Problem& p) {
  if (s.k < 2) throw std::invalid_argument("kkt_residuals needs k >= 2");
  KktResiduals r;
  const Matrix resid = p.apply_A(s.x) - s.y;
  r.r_feas = resid.norm();
  r.lambda_bar = s.lambda_prev - s.rho_prev * resid;
  r.r_subdiff = p.dist_to_subdiff_g(s.y, -r.lambda_bar);
  const Matrix stat =
      project_tangent(p.manifold(), s.x, -p.apply_At(r.lambda_bar)) +
      p.riemannian_grad(s.x);
  r.r_grad = stat.norm();
  return r;
}

/// dist(-lambda_bar_k, dg(y_k)) without the full-gradient term.
template <class Problem>
double subdiff_residual(const SolverState& s, const Problem& p) {
  if (s.k < 2) return NAN;
  const Matrix lambda_bar = s.lambda_prev - s.rho_prev * (p.apply_A(s.x) - s.y);
  return p.dist_to_subdiff_g(s.y, -lambda_bar);
}

/// Right-hand side of ||A x_k - y_k|| <= (L_g + lambda_max)/rho_{k-1} + ||A|| ||x_k - x_{k-1}||.
template <class Problem>
double feasibility_bound(const SolverState& s, const Problem& p) {
  if (s.k < 2) throw std::invalid_argument("feasibility_bound needs k >= 2");
  return (p.g_lipschitz() + s.lambda_max) / s.rho_prev +
         p.a_norm() * (s.x - s.x_prev).norm();
}

struct StopCriteria {
  std::int64_t max_iters = 1500;
  /// Stop once successive objective checks differ by at most this much.
  /// A non-finite value disables the test.
  double obj_tol = 1e-6;
  /// Stop once the objective is at or below this value.
  double target_objective = -std::numeric_limits<double>::infinity();
  /// Oracle-call budget (0: none); a run stops before a step that would
  /// exceed it.
  std::int64_t max_sfo = 0;
};

struct RunResult {
  Trace trace;
  SolverState state;
  std::vector<std::string> warnings;
  std::string stop_reason;
};

using StateObserver = std::function<void(const SolverState&)>;

namespace detail {

template <class Problem>
IterationRecord make_record(const SolverState& s, const SolverConfig& c,
                            const Problem& p, bool diagnostics,
                            double wall_seconds, std::int64_t& diag_sfo) {
  IterationRecord r;
  r.iter = s.k;
  r.sfo_count = s.est.sfo_count;
  r.wall_seconds = c.record_wall_time ? wall_seconds : 0.0;
  r.r_feas = (p.apply_A(s.x) - s.y).norm();
  const Schedule sch = schedule(c, s.k);
  r.rho = sch.rho;
  r.eta = sch.eta;
  r.beta = s.beta;
  r.lambda_norm = s.lambda.norm();
  if (diagnostics) {
    r.objective = p.objective(s.x);
    if (s.k >= 2) {
      const KktResiduals kkt = kkt_residuals(s, p);
      r.r_grad = kkt.r_grad;
      r.r_subdiff = kkt.r_subdiff;
      diag_sfo += p.num_samples();
    }
  } else {
    r.r_subdiff = subdiff_residual(s, p);
  }
  r.diag_sfo = diag_sfo;
  return r;
}

}  // namespace detail

/// Runs the method from a random start derived from cfg.seed. Record j of the
/// trace describes iterate j; record 1 is the initialization.
template <class Problem>
RunResult run(const SolverConfig& c, const Problem& p, const StopCriteria& stop,
              const StateObserver& observer = {}) {
  RunResult out;
  out.warnings = validate(c);
  Rng init_rng = make_stream(c.seed, "init");
  Rng sample_rng = make_stream(c.seed, "sampling");
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  };

  SolverState s = initialize(c, p, init_rng, sample_rng);
  if (s.degenerate_dual) {
    out.warnings.push_back(
        "||A x_1 - y_1|| = 0: dual stepsize falls back to its cap and the "
        "dual-bound certificate is disabled");
  }
  std::int64_t diag_sfo = 0;
  out.trace.push_back(detail::make_record(s, c, p, true, elapsed(), diag_sfo));
  if (observer) observer(s);

  const std::int64_t max_iters = std::min(stop.max_iters, c.max_iters);
  double last_obj = out.trace.back().objective;
  out.stop_reason = "max_iters";
  if (last_obj <= stop.target_objective) {
    out.stop_reason = "target_objective";
    out.state = std::move(s);
    return out;
  }
  while (s.k < max_iters) {
    s = step(std::move(s), c, p, sample_rng);
    const Index per_step = 2 * (c.full_batch ? p.num_samples() : c.batch_size);
    const bool budget_hit =
        stop.max_sfo > 0 && s.est.sfo_count + per_step > stop.max_sfo;
    const bool last = s.k >= max_iters || budget_hit;
    const bool diag = last || s.k % c.residual_check_every == 0;
    out.trace.push_back(
        detail::make_record(s, c, p, diag, elapsed(), diag_sfo));
    s.diag_sfo = diag_sfo;
    if (observer) observer(s);
    if (diag) {
      const double obj = out.trace.back().objective;
      if (obj <= stop.target_objective) {
        out.stop_reason = "target_objective";
        break;
      }
      if (std::isfinite(stop.obj_tol) && std::abs(obj - last_obj) <= stop.obj_tol) {
        out.stop_reason = "obj_tol";
        break;
      }
      last_obj = obj;
    }
    if (budget_hit) {
      out.stop_reason = "max_sfo";
      break;
    }
  }
  if (s.est.degenerate_transports > 0) {
    out.warnings.push_back(std::to_string(s.est.degenerate_transports) +
                           " vector transports could not be rescaled");
  }
  out.state = std::move(s);
  return out;
}

/// Best KKT residual sum r_grad + r_subdiff + r_feas over iterates
/// k in [ceil(K/2), K], K being the last iterate in the trace. Iterates
/// without full diagnostics are skipped; NaN if none qualify.
inline double best_window_residual(const Trace& trace) {
  if (trace.empty()) return NAN;
  const std::int64_t last = trace.back().iter;
  const std::int64_t lo = (last + 1) / 2;
  double best = NAN;
  for (const auto& r : trace) {
    if (r.iter < lo) continue;
    const double sum = r.r_grad + r.r_subdiff + r.r_feas;
    if (std::isnan(sum)) continue;
    if (std::isnan(best) || sum < best) best = sum;
  }
  return best;
}

}  // namespace marsadmm
