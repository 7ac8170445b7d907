#pragma once

// Recursive momentum (STORM-type) estimator of the Riemannian gradient of F,
//
//   v_k = grad f_S(x_k) + (1 - alpha_k) T_{x_{k-1}}^{x_k}(v_{k-1} - grad f_S(x_{k-1})),
//
// with the same sample set S = S_k used at both points, and the assembled
// augmented-Lagrangian direction G_k = v_k + P_{T_x}(rho A^T(Ax - y - lambda/rho)).

#include "marsadmm/common.hpp"
#include "marsadmm/manifold.hpp"
#include "marsadmm/problem.hpp"

#include <cstdint>
#include <string>

namespace marsadmm {

struct EstimatorState {
  Matrix v;        // tangent at carrier
  Matrix carrier;  // the point v is based at
  std::int64_t sfo_count = 0;
  /// Number of Stiefel transports whose rescaling was undefined.
  std::int64_t degenerate_transports = 0;
};

/// Riemannian mini-batch gradient grad f_S(x) = P_{T_x}(mean of grad f(x, xi)).
template <class Problem>
Matrix sample_riemannian_grad(const Problem& p, const Matrix& x,
                              const SampleBatch& batch) {
  return project_tangent(p.manifold(), x, p.sample_euclidean_grad(x, batch));
}

/// v_1 = grad f_{S_1}(x_1).
template <class Problem>
EstimatorState init_estimator(const Problem& p, const Matrix& x1,
                              const SampleBatch& batch) {
  EstimatorState s;
  s.v = sample_riemannian_grad(p, x1, batch);
  s.carrier = x1;
  s.sfo_count = batch.size();
  return s;
}

/// One recursive update from x_prev (the current carrier) to x_curr.
/// alpha = 1 reduces to the plain mini-batch estimator.
template <class Problem>
EstimatorState update_estimator(const EstimatorState& state, const Problem& p,
                                const Matrix& x_prev, const Matrix& x_curr,
                                const SampleBatch& batch, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("momentum weight alpha must lie in (0, 1], got " +
                                std::to_string(alpha));
  }
  if (state.carrier.rows() != x_prev.rows() ||
      state.carrier.cols() != x_prev.cols() || state.carrier != x_prev) {
    throw std::invalid_argument(
        "update_estimator: estimator is not based at x_prev");
  }
  const ManifoldSpec& m = p.manifold();
  const Matrix g_curr = sample_riemannian_grad(p, x_curr, batch);
  EstimatorState next;
  next.degenerate_transports = state.degenerate_transports;
  const Matrix g_prev = sample_riemannian_grad(p, x_prev, batch);
  Transported t = transport(m, x_prev, x_curr, state.v - g_prev);
  if (t.degenerate) ++next.degenerate_transports;
  next.v = g_curr + (1.0 - alpha) * t.value;
  // Re-project every step to bound tangency drift along transport chains.
  next.v = project_tangent(m, x_curr, next.v);
  next.carrier = x_curr;
  next.sfo_count = state.sfo_count + 2 * batch.size();
  return next;
}

/// G = v + P_{T_x}(rho A^T(Ax - y - lambda/rho)); the penalty/dual part is
/// deterministic and evaluated exactly.
template <class Problem>
Matrix augmented_grad(const Problem& p, const Matrix& v, const Matrix& x,
                      const Matrix& y, const Matrix& lambda, double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be > 0");
  const Matrix ax = p.apply_A(x);
  require_same_shape(ax, y, "augmented_grad(y)");
  require_same_shape(ax, lambda, "augmented_grad(lambda)");
  const Matrix resid = ax - y - lambda / rho;
  return v + project_tangent(p.manifold(), x, rho * p.apply_At(resid));
}

/// Diagnostics only: eps = v - grad F(carrier), using the full dataset.
template <class Problem>
Matrix estimation_error(const EstimatorState& state, const Problem& p) {
  return state.v - p.riemannian_grad(state.carrier);
}

}  // namespace marsadmm
