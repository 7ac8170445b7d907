#pragma once

// Quick invariant suite behind `marsadmm check`.

#include "marsadmm/data_io.hpp"
#include "marsadmm/estimator.hpp"
#include "marsadmm/manifold.hpp"
#include "marsadmm/problem.hpp"
#include "marsadmm/solver.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace marsadmm::tools {

struct CheckResult {
  std::string name;
  bool ok = false;
  std::string detail;
};

namespace detail {

inline std::vector<ManifoldSpec> check_manifolds() {
  return {ManifoldSpec::sphere(3), ManifoldSpec::sphere(12),
          ManifoldSpec::stiefel(6, 2), ManifoldSpec::stiefel(5, 5)};
}

/// Max relative error between the central difference of f o R_x along u and
/// <grad f(x), u> over `pairs` random (x, u).
template <class Problem>
double pullback_gradient_error(const Problem& p, Rng& rng, int pairs) {
  const double h = 1e-6;
  double worst = 0.0;
  for (int i = 0; i < pairs; ++i) {
    const Matrix x = random_point(p.manifold(), rng);
    Matrix u = random_tangent(p.manifold(), x, rng);
    u /= u.norm();
    const double fd = (p.smooth_value(retract(p.manifold(), x, h * u)) -
                       p.smooth_value(retract(p.manifold(), x, -h * u))) /
                      (2.0 * h);
    const double an = inner(p.riemannian_grad(x), u);
    worst = std::max(worst, std::abs(fd - an) / std::max(std::abs(an), 1e-3));
  }
  return worst;
}

}  // namespace detail

inline std::vector<CheckResult> run_self_checks(std::uint64_t seed) {
  std::vector<CheckResult> out;
  Rng rng = make_stream(seed, "selfcheck");

  {
    bool ok = true;
    for (const auto& m : detail::check_manifolds()) {
      const Matrix x = random_point(m, rng);
      const Matrix r = retract(m, x, Matrix::Zero(m.rows(), m.cols()));
      ok = ok && r == x && is_on_manifold(m, x);
    }
    out.push_back({"retraction R_x(0) = x", ok, ""});
  }
  {
    double worst = 0.0;
    for (const auto& m : detail::check_manifolds()) {
      for (int i = 0; i < 100; ++i) {
        const Matrix x = random_point(m, rng);
        const Matrix u = random_ambient(m, rng);
        const Matrix pu = project_tangent(m, x, u);
        worst = std::max(worst, (project_tangent(m, x, pu) - pu).norm());
      }
    }
    out.push_back({"tangent projection idempotent", worst <= 1e-12,
                   "max deviation " + format_double(worst)});
  }
  {
    double worst = 0.0;
    const auto m = ManifoldSpec::sphere(8);
    for (int i = 0; i < 200; ++i) {
      const Matrix x = random_point(m, rng);
      const Matrix y = retract(m, x, random_tangent(m, x, rng));
      const Matrix u = random_tangent(m, x, rng);
      const Matrix w = random_tangent(m, x, rng);
      const double d = inner(transport(m, x, y, u).value, transport(m, x, y, w).value) -
                       inner(u, w);
      worst = std::max(worst, std::abs(d));
    }
    out.push_back({"sphere transport isometric", worst <= 1e-10,
                   "max inner-product drift " + format_double(worst)});
  }
  {
    bool ok = true;
    const Regularizer g = Regularizer::l1(0.7);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < 50 && ok; ++i) {
      Matrix v(6, 1);
      for (Index j = 0; j < 6; ++j) v(j, 0) = 2.0 * normal(rng);
      const double rho = 0.5 + std::abs(normal(rng));
      const Matrix pv = g.prox(v, rho);
      const double best = g.value(pv) + 0.5 * rho * (pv - v).squaredNorm();
      for (int t = 0; t < 200; ++t) {
        Matrix z = pv;
        for (Index j = 0; j < 6; ++j) z(j, 0) += 0.5 * normal(rng);
        ok = ok && best <= g.value(z) + 0.5 * rho * (z - v).squaredNorm() + 1e-12;
      }
    }
    out.push_back({"l1 prox optimal against random candidates", ok, ""});
  }
  {
    const Dataset sd = gen_spca_data(8, 40, derive_seed(seed, "spca"));
    const auto spca = make_spca(sd.spca_matrix(), 0.3, 3);
    const Dataset cd = gen_classifier_data(6, 200, 0.5, derive_seed(seed, "clf"));
    const auto clf = make_sphere_classifier(cd.features, *cd.labels, 0.3);
    const double e1 = detail::pullback_gradient_error(spca, rng, 20);
    const double e2 = detail::pullback_gradient_error(clf, rng, 20);
    out.push_back({"SPCA Riemannian gradient vs finite differences", e1 < 1e-5,
                   "max rel error " + format_double(e1)});
    out.push_back({"classifier Riemannian gradient vs finite differences",
                   e2 < 1e-5, "max rel error " + format_double(e2)});
  }
  {
    const Dataset sd = gen_spca_data(10, 60, derive_seed(seed, "run"));
    const auto p = make_spca(sd.spca_matrix(), 0.4, 3);
    SolverConfig c;
    c.seed = derive_seed(seed, "run-solver");
    c.batch_size = 10;
    c.max_iters = 300;
    StopCriteria stop;
    stop.max_iters = 300;
    stop.obj_tol = INFINITY;
    std::int64_t dual_viol = 0, feas_viol = 0;
    auto watch = [&](const SolverState& s) {
      if (s.lambda.norm() > s.lambda_max) ++dual_viol;
      if (s.k >= 2 && (p.apply_A(s.x) - s.y).norm() > feasibility_bound(s, p) + 1e-8) {
        ++feas_viol;
      }
    };
    bool ran = true;
    std::string why;
    try {
      run(c, p, stop, watch);
    } catch (const std::exception& e) {
      ran = false;
      why = e.what();
    }
    out.push_back({"dual bound holds along a run", ran && dual_viol == 0,
                   ran ? std::to_string(dual_viol) + " violations" : why});
    out.push_back({"feasibility bound holds along a run", ran && feas_viol == 0,
                   ran ? std::to_string(feas_viol) + " violations" : why});
  }
  {
    const Dataset sd = gen_spca_data(8, 30, derive_seed(seed, "det"));
    const auto p = make_spca(sd.spca_matrix(), 0.2, 2);
    SolverConfig c;
    c.full_batch = true;
    c.seed = derive_seed(seed, "det-solver");
    StopCriteria stop;
    stop.max_iters = 100;
    stop.obj_tol = INFINITY;
    double worst = 0.0;
    run(c, p, stop, [&](const SolverState& s) {
      const Matrix g = p.riemannian_grad(s.x);
      worst = std::max(worst, (s.est.v - g).norm() / (1.0 + g.norm()));
    });
    out.push_back({"full-batch estimator equals the Riemannian gradient",
                   worst <= 1e-10, "max scaled error " + format_double(worst)});
  }
  return out;
}

}  // namespace marsadmm::tools
