#pragma once

// Riemannian stochastic subgradient method (R-Subgrad):
//   x_{k+1} = R_{x_k}(-eta_k P_{T_x}(grad f_S(x_k) + A^T s_k)),  s_k = mu sign(A x_k),
// with eta_k = eta_0 / sqrt(k + 1). Traces share the solver's schema; the
// ADMM-only columns (rho, beta, lambda_norm, r_feas, r_grad, r_subdiff) are NaN.

#include "marsadmm/common.hpp"
#include "marsadmm/manifold.hpp"
#include "marsadmm/problem.hpp"
#include "marsadmm/rng.hpp"
#include "marsadmm/solver.hpp"
#include "marsadmm/trace.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace marsadmm {

struct SubgradConfig {
  double eta0 = 0.001;
  Index batch_size = 50;
  bool full_batch = false;
  std::int64_t max_iters = 1500;
  std::uint64_t seed = 1;
  std::int64_t residual_check_every = 10;
  bool record_wall_time = true;
};

inline void validate(const SubgradConfig& c) {
  if (!(c.eta0 > 0.0) || !std::isfinite(c.eta0)) {
    throw std::invalid_argument("eta0 must be positive");
  }
  if (c.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (c.max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  if (c.residual_check_every < 1) {
    throw std::invalid_argument("residual_check_every must be >= 1");
  }
}

inline double subgrad_stepsize(const SubgradConfig& c, std::int64_t k) {
  return c.eta0 / std::sqrt(static_cast<double>(k) + 1.0);
}

template <class Problem>
Matrix subgrad_step(const Matrix& x, const Problem& p, const SampleBatch& batch,
                    double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("subgradient step must be > 0");
  const Matrix euclid =
      p.sample_euclidean_grad(x, batch) + p.apply_At(p.g().subgradient(p.apply_A(x)));
  return retract(p.manifold(), x, -eta * project_tangent(p.manifold(), x, euclid));
}

struct SubgradResult {
  Trace trace;
  Matrix x;
  std::string stop_reason;
};

template <class Problem>
SubgradResult run_subgrad(const SubgradConfig& c, const Problem& p,
                          const StopCriteria& stop) {
  validate(c);
  // Same initialization stream as the ADMM solver, so paired runs share x_1.
  Rng init_rng = make_stream(c.seed, "init");
  Rng sample_rng = make_stream(c.seed, "sampling");
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return c.record_wall_time
               ? std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                     .count()
               : 0.0;
  };

  SubgradResult out;
  Matrix x = random_point(p.manifold(), init_rng);
  std::int64_t sfo = 0;
  auto record = [&](std::int64_t k, bool diag) {
    IterationRecord r;
    r.iter = k;
    r.sfo_count = sfo;
    r.diag_sfo = 0;
    r.wall_seconds = elapsed();
    r.eta = subgrad_stepsize(c, k);
    if (diag) r.objective = p.objective(x);
    out.trace.push_back(r);
  };

  record(1, true);
  const std::int64_t max_iters = std::min(stop.max_iters, c.max_iters);
  double last_obj = out.trace.back().objective;
  out.stop_reason = "max_iters";
  if (last_obj <= stop.target_objective) {
    out.stop_reason = "target_objective";
    out.x = x;
    return out;
  }
  for (std::int64_t k = 1; k < max_iters; ++k) {
    const SampleBatch batch = c.full_batch
                                  ? full_batch(p.num_samples())
                                  : draw_batch(p.num_samples(), c.batch_size, sample_rng);
    x = subgrad_step(x, p, batch, subgrad_stepsize(c, k));
    if ((k + 1) % 100 == 0) x = reorthonormalize(p.manifold(), x);
    sfo += batch.size();
    const bool budget_hit =
        stop.max_sfo > 0 && sfo + batch.size() > stop.max_sfo;
    const bool last = k + 1 >= max_iters || budget_hit;
    const bool diag = last || (k + 1) % c.residual_check_every == 0;
    record(k + 1, diag);
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
  out.x = x;
  return out;
}

}  // namespace marsadmm
