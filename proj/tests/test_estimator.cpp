#include "marsadmm/data_io.hpp"
#include "marsadmm/estimator.hpp"
#include "marsadmm/solver.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace marsadmm;

namespace {

SpcaProblem small_spca(Index n = 8, Index m = 60, Index p = 3, std::uint64_t seed = 1) {
  return make_spca(gen_spca_data(n, m, seed).spca_matrix(), 0.3, p);
}

Matrix gaussian(Index r, Index c, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = n(rng);
  return m;
}

// Deterministic path x_1, x_2, ... following small Riemannian gradient steps.
std::vector<Matrix> gradient_path(const SpcaProblem& p, int steps, double eta, Rng& rng) {
  std::vector<Matrix> xs{random_point(p.manifold(), rng)};
  for (int k = 1; k < steps; ++k) {
    xs.push_back(retract(p.manifold(), xs.back(), -eta * p.riemannian_grad(xs.back())));
  }
  return xs;
}

}  // namespace

TEST(Estimator, InitUsesBatchGradient) {
  const auto p = small_spca();
  Rng rng(1);
  const Matrix x = random_point(p.manifold(), rng);
  const SampleBatch b = draw_batch(p.num_samples(), 7, rng);
  const EstimatorState s = init_estimator(p, x, b);
  EXPECT_EQ(s.sfo_count, 7);
  EXPECT_EQ(s.carrier, x);
  EXPECT_EQ(s.v, project_tangent(p.manifold(), x, p.sample_euclidean_grad(x, b)));
  EXPECT_EQ(init_estimator(p, x, full_batch(p.num_samples())).v, p.riemannian_grad(x));
  Rng a(5), c(5);
  EXPECT_EQ(init_estimator(p, x, draw_batch(60, 4, a)).v,
            init_estimator(p, x, draw_batch(60, 4, c)).v);
}

TEST(Estimator, AlphaOneIsPlainMinibatchGradient) {
  const auto p = small_spca();
  Rng rng(2);
  const auto xs = gradient_path(p, 2, 0.05, rng);
  const EstimatorState s0 = init_estimator(p, xs[0], draw_batch(60, 5, rng));
  const SampleBatch b = draw_batch(60, 5, rng);
  const EstimatorState s1 = update_estimator(s0, p, xs[0], xs[1], b, 1.0);
  EXPECT_LE((s1.v - sample_riemannian_grad(p, xs[1], b)).norm(), 1e-14);
  EXPECT_EQ(s1.sfo_count, 5 + 2 * 5);
}

TEST(Estimator, SamePointReducesToConvexCombination) {
  const auto p = small_spca();
  Rng rng(3);
  const Matrix x = random_point(p.manifold(), rng);
  const EstimatorState s0 = init_estimator(p, x, draw_batch(60, 5, rng));
  const SampleBatch b = draw_batch(60, 5, rng);
  const double alpha = 0.37;
  const EstimatorState s1 = update_estimator(s0, p, x, x, b, alpha);
  const Matrix expect = alpha * sample_riemannian_grad(p, x, b) + (1.0 - alpha) * s0.v;
  EXPECT_LE((s1.v - expect).norm(), 1e-14);
}

TEST(Estimator, DeterministicProblemStaysExact) {
  const auto p = small_spca();
  Rng rng(4);
  const auto xs = gradient_path(p, 200, 0.1, rng);
  const SampleBatch all = full_batch(p.num_samples());
  EstimatorState s = init_estimator(p, xs[0], all);
  for (std::size_t k = 1; k < xs.size(); ++k) {
    s = update_estimator(s, p, xs[k - 1], xs[k], all, 0.8 / std::pow(double(k), 2.0 / 3.0));
    const Matrix g = p.riemannian_grad(xs[k]);
    ASSERT_LE(estimation_error(s, p).norm(), 1e-10 * (1.0 + g.norm())) << "k=" << k;
  }
}

TEST(Estimator, RejectsBadAlphaAndCarrier) {
  const auto p = small_spca();
  Rng rng(5);
  const auto xs = gradient_path(p, 3, 0.05, rng);
  const SampleBatch b = draw_batch(60, 5, rng);
  const EstimatorState s = init_estimator(p, xs[0], b);
  EXPECT_THROW(update_estimator(s, p, xs[0], xs[1], b, 0.0), std::invalid_argument);
  EXPECT_THROW(update_estimator(s, p, xs[0], xs[1], b, 1.5), std::invalid_argument);
  EXPECT_THROW(update_estimator(s, p, xs[1], xs[2], b, 0.5), std::invalid_argument);
}

TEST(Estimator, TangencyPreservedAlongLongChains) {
  Rng rng(6);
  const Dataset d = gen_classifier_data(6, 200, 0.5, 2);
  const auto p = make_sphere_classifier(d.features, *d.labels, 0.1);
  const auto sp = small_spca(10, 50, 4, 3);
  auto chain = [&](const auto& prob) {
    Matrix x = random_point(prob.manifold(), rng);
    EstimatorState s = init_estimator(prob, x, draw_batch(prob.num_samples(), 5, rng));
    for (int k = 1; k <= 1000; ++k) {
      const Matrix next = retract(prob.manifold(), x, -0.05 * s.v);
      s = update_estimator(s, prob, x, next, draw_batch(prob.num_samples(), 5, rng), 0.3);
      x = next;
      ASSERT_TRUE(is_tangent(prob.manifold(), x, s.v, 1e-8)) << "k=" << k;
    }
  };
  chain(p);
  chain(sp);
}

TEST(Estimator, MomentumReducesErrorOnFixedTrajectory) {
  const auto p = small_spca(10, 200, 3, 7);
  Rng path_rng(70);
  const auto xs = gradient_path(p, 300, 0.02, path_rng);
  double err_momentum = 0.0, err_plain = 0.0;
  const int seeds = 40;
  for (int seed = 1; seed <= seeds; ++seed) {
    for (bool momentum : {true, false}) {
      Rng rng = make_stream(seed, "estimator-variance");
      EstimatorState s = init_estimator(p, xs[0], draw_batch(200, 5, rng));
      double acc = 0.0;
      for (std::size_t k = 1; k < xs.size(); ++k) {
        const double alpha = momentum ? 0.8 / std::pow(double(k), 2.0 / 3.0) : 1.0;
        s = update_estimator(s, p, xs[k - 1], xs[k], draw_batch(200, 5, rng), alpha);
        if (k >= 150) acc += estimation_error(s, p).squaredNorm();
      }
      (momentum ? err_momentum : err_plain) += acc;
    }
  }
  EXPECT_LT(err_momentum, err_plain);
  // Same oracle budget for both estimators by construction.
}

TEST(AugmentedGrad, VanishingPenaltyGivesV) {
  const auto p = small_spca();
  Rng rng(8);
  const Matrix x = random_point(p.manifold(), rng);
  const Matrix v = random_tangent(p.manifold(), x, rng);
  const Matrix zero = Matrix::Zero(x.rows(), x.cols());
  EXPECT_EQ(augmented_grad(p, v, x, p.apply_A(x), zero, 3.0), v);
  EXPECT_THROW(augmented_grad(p, v, x, x, zero, 0.0), std::invalid_argument);
}

TEST(AugmentedGrad, RadialResidualProjectsAway) {
  const Dataset d = gen_classifier_data(5, 20, 0.1, 1);
  const auto p = make_sphere_classifier(d.features, *d.labels, 0.1);
  Rng rng(9);
  const Matrix x = random_point(p.manifold(), rng);
  const Matrix v = random_tangent(p.manifold(), x, rng);
  const Matrix lambda = gaussian(5, 1, rng);
  const double rho = 2.5;
  const Matrix y = x - lambda / rho + 0.8 * x;
  EXPECT_LE((augmented_grad(p, v, x, y, lambda, rho) - v).norm(), 1e-14);
}

TEST(AugmentedGrad, MatchesTermByTermWithDenseMap) {
  Rng rng(10);
  const Matrix z = gaussian(4, 15, rng);
  const Matrix a = gaussian(6, 8, rng);
  const SpcaProblem p(SpcaOracle(z), Regularizer::l1(0.2), LinearMap::dense(a),
                      ManifoldSpec::stiefel(4, 2));
  for (int i = 0; i < 20; ++i) {
    const Matrix x = random_point(p.manifold(), rng);
    const Matrix v = random_tangent(p.manifold(), x, rng);
    const Matrix y = gaussian(6, 1, rng), lambda = gaussian(6, 1, rng);
    const double rho = 1.3;
    const Vector xf = Eigen::Map<const Vector>(x.data(), 8);
    const Vector at_r = a.transpose() * (rho * (a * xf - y.col(0)) - lambda.col(0));
    const Matrix term = Eigen::Map<const Matrix>(at_r.data(), 4, 2);
    const Matrix expect = v + project_tangent(p.manifold(), x, term);
    EXPECT_LE((augmented_grad(p, v, x, y, lambda, rho) - expect).norm(), 1e-12);
  }
}
