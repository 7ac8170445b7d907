#include "marsadmm/data_io.hpp"
#include "marsadmm/problem.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace marsadmm;

namespace {

Matrix col(std::initializer_list<double> v) {
  Matrix m(static_cast<Index>(v.size()), 1);
  Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

Matrix gaussian(Index r, Index c, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = n(rng);
  return m;
}

// argmin_z mu|z| + rho/2 (z - v)^2 by a grid scan then golden-section search.
double brute_prox_1d(double v, double mu, double rho) {
  auto h = [&](double z) { return mu * std::abs(z) + 0.5 * rho * (z - v) * (z - v); };
  const double lo = -std::abs(v) - 1.0, hi = std::abs(v) + 1.0;
  const int n = 2000;
  double best = lo;
  for (int i = 0; i <= n; ++i) {
    const double z = lo + (hi - lo) * i / n;
    if (h(z) < h(best)) best = z;
  }
  // Golden section on h(z) - h(best), expanded so no large constant cancels;
  // comparing raw h values stalls near sqrt(eps).
  const double c0 = best;
  auto dh = [&](double z) {
    return mu * (std::abs(z) - std::abs(c0)) + 0.5 * rho * (z - c0) * (z + c0 - 2.0 * v);
  };
  const double step = (hi - lo) / n;
  double a = best - step, b = best + step;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
    if (dh(c) < dh(d)) {
      b = d;
    } else {
      a = c;
    }
    c = b - phi * (b - a);
    d = a + phi * (b - a);
  }
  const double z = 0.5 * (a + b);
  // The minimizer may sit exactly at the kink.
  return dh(0.0) <= dh(z) ? 0.0 : z;
}

// Distance from w to the box product {mu sign y_i} / [-mu, mu] by clamping.
double clamp_dist(const Matrix& y, const Matrix& w, double mu) {
  double acc = 0.0;
  for (Index i = 0; i < y.size(); ++i) {
    const double lo = y(i) > 0 ? mu : -mu;
    const double hi = y(i) < 0 ? -mu : mu;
    const double c = std::clamp(w(i), lo, hi);
    acc += (w(i) - c) * (w(i) - c);
  }
  return std::sqrt(acc);
}

template <class P>
double pullback_fd_error(const P& p, Rng& rng) {
  const double h = 1e-6;
  const Matrix x = random_point(p.manifold(), rng);
  Matrix u = random_tangent(p.manifold(), x, rng);
  u /= u.norm();
  const double fd = (p.smooth_value(retract(p.manifold(), x, h * u)) -
                     p.smooth_value(retract(p.manifold(), x, -h * u))) / (2.0 * h);
  const double an = inner(p.riemannian_grad(x), u);
  return std::abs(fd - an) / std::max(std::abs(an), 1e-3);
}

}  // namespace

TEST(Regularizer, SoftThresholdExample) {
  const Regularizer g = Regularizer::l1(1.0);
  const Matrix p = g.prox(col({1.0, -0.3, 2.0}), 2.0);
  EXPECT_EQ(p(0, 0), 0.5);
  EXPECT_EQ(p(1, 0), 0.0);
  EXPECT_EQ(p(2, 0), 1.5);
}

TEST(Regularizer, ZeroProxIsIdentity) {
  Rng rng(1);
  const Matrix v = gaussian(4, 3, rng);
  EXPECT_EQ(Regularizer::zero().prox(v, 0.3), v);
  EXPECT_EQ(Regularizer::zero().value(v), 0.0);
}

TEST(Regularizer, RejectsBadArguments) {
  EXPECT_THROW(Regularizer::l1(-0.1), std::invalid_argument);
  EXPECT_THROW(Regularizer::l1(0.5).prox(col({1.0}), 0.0), std::invalid_argument);
  EXPECT_THROW(Regularizer::l1(0.5).prox(col({1.0}), -1.0), std::invalid_argument);
}

TEST(Regularizer, ProxMatchesBruteForceAndLipschitzBound) {
  Rng rng(2);
  std::uniform_real_distribution<double> u(0.05, 3.0);
  for (int i = 0; i < 200; ++i) {
    const double mu = u(rng), rho = u(rng);
    const Matrix v = gaussian(5, 1, rng, 2.0);
    const Matrix p = Regularizer::l1(mu).prox(v, rho);
    for (Index j = 0; j < v.size(); ++j) {
      EXPECT_NEAR(p(j), brute_prox_1d(v(j), mu, rho), 1e-8);
    }
    EXPECT_LE((v - p).norm(), mu / rho * std::sqrt(double(v.size())) + 1e-15);
  }
}

TEST(Regularizer, ProxIsOptimalAgainstRandomCandidates) {
  Rng rng(3);
  const Regularizer g = Regularizer::l1(0.6);
  for (int i = 0; i < 20; ++i) {
    const Matrix v = gaussian(6, 2, rng, 1.5);
    const double rho = 1.7;
    const Matrix p = g.prox(v, rho);
    const double best = g.value(p) + 0.5 * rho * (p - v).squaredNorm();
    for (int t = 0; t < 1000; ++t) {
      const Matrix z = p + gaussian(6, 2, rng, 0.3);
      EXPECT_LE(best, g.value(z) + 0.5 * rho * (z - v).squaredNorm() + 1e-12);
    }
  }
}

TEST(Regularizer, DistToSubdiffBoundaryCases) {
  const double mu = 0.4;
  const Regularizer g = Regularizer::l1(mu);
  const Matrix y = col({1.0, -2.0, 0.5});
  EXPECT_EQ(g.dist_to_subdiff(y, col({mu, -mu, mu})), 0.0);
  EXPECT_GT(g.dist_to_subdiff(y, col({mu, -mu, mu - 1e-3})), 0.0);
  const Matrix zero = Matrix::Zero(3, 1);
  EXPECT_EQ(g.dist_to_subdiff(zero, col({mu, -mu, 0.1})), 0.0);
  EXPECT_NEAR(g.dist_to_subdiff(zero, col({mu + 0.3, 0.0, 0.0})), 0.3, 1e-15);
  EXPECT_NEAR(Regularizer::zero().dist_to_subdiff(zero, col({3, 4, 0})), 5.0, 1e-15);
  EXPECT_THROW(g.dist_to_subdiff(y, Matrix::Zero(2, 1)), DimensionError);
}

TEST(Regularizer, DistToSubdiffMatchesClampOracle) {
  Rng rng(4);
  std::bernoulli_distribution zero_out(0.4);
  for (int i = 0; i < 500; ++i) {
    Matrix y = gaussian(7, 1, rng);
    for (Index j = 0; j < 7; ++j)
      if (zero_out(rng)) y(j) = 0.0;
    const Matrix w = gaussian(7, 1, rng);
    EXPECT_NEAR(Regularizer::l1(0.7).dist_to_subdiff(y, w), clamp_dist(y, w, 0.7), 1e-14);
  }
}

TEST(Regularizer, SubgradientUsesZeroSign) {
  const Matrix s = Regularizer::l1(0.3).subgradient(col({2.0, 0.0, -1e-300}));
  EXPECT_EQ(s(0), 0.3);
  EXPECT_EQ(s(1), 0.0);
  EXPECT_EQ(s(2), -0.3);
}

TEST(LinearMap, IdentityAndDenseColumns) {
  Rng rng(5);
  const Matrix x = gaussian(3, 2, rng);
  EXPECT_EQ(LinearMap::identity().apply(x), x);
  const Matrix a = gaussian(4, 6, rng);
  const LinearMap map = LinearMap::dense(a);
  for (Index j = 0; j < 6; ++j) {
    Matrix e = Matrix::Zero(3, 2);
    e(j % 3, j / 3) = 1.0;  // column-major flattening
    EXPECT_EQ(map.apply(e), a.col(j));
  }
  EXPECT_THROW(map.apply(Matrix::Zero(2, 2)), DimensionError);
}

TEST(LinearMap, AdjointIdentity) {
  Rng rng(6);
  const LinearMap map = LinearMap::dense(gaussian(5, 8, rng));
  for (int i = 0; i < 100; ++i) {
    const Matrix x = gaussian(4, 2, rng);
    const Matrix w = gaussian(5, 1, rng);
    EXPECT_NEAR(inner(map.apply(x), w), inner(x, map.adjoint(w, 4, 2)), 1e-12);
  }
}

TEST(LinearMap, OperatorNormMatchesSvd) {
  Rng rng(7);
  for (int i = 0; i < 10; ++i) {
    const Matrix a = gaussian(6, 9, rng);
    const double svd = Eigen::JacobiSVD<Matrix>(a).singularValues()(0);
    EXPECT_NEAR(LinearMap::dense(a).operator_norm(), svd, 1e-6 * svd);
  }
  EXPECT_EQ(LinearMap::identity().operator_norm(), 1.0);
}

TEST(CompositeProblem, DenseMapMustMatchAmbientSize) {
  Rng rng(8);
  const Matrix z = gaussian(4, 10, rng);
  EXPECT_THROW(SpcaProblem(SpcaOracle(z), Regularizer::l1(0.1),
                           LinearMap::dense(gaussian(3, 7, rng)),
                           ManifoldSpec::stiefel(4, 2)),
               DimensionError);
  const SpcaProblem p(SpcaOracle(z), Regularizer::l1(0.1),
                      LinearMap::dense(gaussian(3, 8, rng)), ManifoldSpec::stiefel(4, 2));
  EXPECT_EQ(p.constraint_dim(), 3);
  const Matrix x = random_point(p.manifold(), rng);
  EXPECT_EQ(p.apply_A(x).rows(), 3);
  EXPECT_EQ(p.apply_At(p.apply_A(x)).rows(), 4);
}

TEST(Sampling, DrawBatchContract) {
  Rng rng(9);
  const SampleBatch b = draw_batch(7, 1000, rng);
  EXPECT_EQ(b.size(), 1000);
  for (Index i : b.indices) {
    EXPECT_GE(i, 0);
    EXPECT_LT(i, 7);
  }
  EXPECT_THROW(draw_batch(7, 0, rng), std::invalid_argument);
  Rng a(3), c(3);
  EXPECT_EQ(draw_batch(100, 20, a).indices, draw_batch(100, 20, c).indices);
}

TEST(SpcaProblem, BatchOverAllSamplesEqualsFullGradient) {
  Rng rng(10);
  const auto p = make_spca(gen_spca_data(8, 40, 1).spca_matrix(), 0.2, 3);
  const Matrix x = random_point(p.manifold(), rng);
  EXPECT_EQ(p.sample_euclidean_grad(x, full_batch(40)), p.full_euclidean_grad(x));
  EXPECT_THROW(p.sample_euclidean_grad(x, SampleBatch{}), std::invalid_argument);
  SampleBatch bad;
  bad.indices = {40};
  EXPECT_THROW(p.sample_euclidean_grad(x, bad), std::out_of_range);
}

TEST(SpcaProblem, SingleSampleAndPartitionMean) {
  Rng rng(11);
  const Matrix z = gaussian(6, 12, rng);
  const auto p = make_spca(z, 0.0, 2);
  const Matrix x = random_point(p.manifold(), rng);
  const auto single = make_spca(z.col(3), 0.0, 2);
  SampleBatch b3;
  b3.indices = {3};
  EXPECT_LE((single.full_euclidean_grad(x) - p.sample_euclidean_grad(x, b3)).norm(), 1e-14);
  // Mean of the batch gradients over a partition of the samples.
  Matrix acc = Matrix::Zero(6, 2);
  for (Index start = 0; start < 12; start += 4) {
    SampleBatch part;
    for (Index i = start; i < start + 4; ++i) part.indices.push_back(i);
    acc += p.sample_euclidean_grad(x, part) / 3.0;
  }
  EXPECT_LE((acc - p.full_euclidean_grad(x)).norm(), 1e-13);
}

TEST(SpcaProblem, SampleOrthogonalToXHasZeroRiemannianGradient) {
  Rng rng(12);
  const auto s = ManifoldSpec::stiefel(5, 2);
  const Matrix x = random_point(s, rng);
  Matrix z = gaussian(5, 1, rng);
  z -= x * (x.transpose() * z);
  const auto p = make_spca(z, 0.0, 2);
  EXPECT_LE(p.riemannian_grad(x).norm(), 1e-14);
}

TEST(SpcaProblem, ValueMatchesReconstructionLoss) {
  Rng rng(13);
  const Matrix z = gaussian(6, 9, rng);
  const auto p = make_spca(z, 0.3, 3);
  const Matrix x = random_point(p.manifold(), rng);
  double direct = 0.0;
  for (Index i = 0; i < 9; ++i) {
    direct += (z.col(i) - x * x.transpose() * z.col(i)).squaredNorm();
  }
  direct /= 9.0;
  EXPECT_NEAR(p.smooth_value(x), direct, 1e-12);
  EXPECT_NEAR(p.objective(x) - p.smooth_value(x), 0.3 * x.lpNorm<1>(), 1e-12);
  EXPECT_EQ(make_spca(z, 0.0, 3).objective(x), p.smooth_value(x));
}

TEST(SpcaProblem, TopEigenvectorsMinimizeSmoothPart) {
  Rng rng(14);
  const Matrix z = gaussian(5, 30, rng);
  const auto p = make_spca(z, 0.0, 2);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(z * z.transpose());
  const Matrix top = eig.eigenvectors().rightCols(2);
  const double f_top = p.smooth_value(top);
  // Every other pair of eigenvectors and many random frames do worse.
  for (Index a = 0; a < 5; ++a) {
    for (Index b = a + 1; b < 5; ++b) {
      Matrix cand(5, 2);
      cand << eig.eigenvectors().col(a), eig.eigenvectors().col(b);
      EXPECT_LE(f_top, p.smooth_value(cand) + 1e-12);
    }
  }
  for (int i = 0; i < 2000; ++i) {
    EXPECT_LE(f_top, p.smooth_value(random_point(p.manifold(), rng)) + 1e-12);
  }
  EXPECT_LE(p.riemannian_grad(top).norm(), 1e-10);
}

TEST(SpcaProblem, PullbackFiniteDifferences) {
  Rng rng(15);
  const auto p = make_spca(gen_spca_data(10, 50, 2).spca_matrix(), 0.4, 3);
  for (int i = 0; i < 50; ++i) EXPECT_LT(pullback_fd_error(p, rng), 1e-5);
}

TEST(Classifier, LossAndDerivative) {
  EXPECT_DOUBLE_EQ(ClassifierOracle::loss(0.0), 0.25);
  EXPECT_DOUBLE_EQ(ClassifierOracle::loss_derivative(0.0), -0.25);
  EXPECT_EQ(sigmoid(-800.0), 0.0);
  EXPECT_EQ(sigmoid(800.0), 1.0);
  EXPECT_TRUE(std::isfinite(ClassifierOracle::loss_derivative(-1e4)));
  for (double t : {-3.0, -0.4, 0.7, 2.5}) {
    const double h = 1e-6;
    const double fd = (ClassifierOracle::loss(t + h) - ClassifierOracle::loss(t - h)) / (2 * h);
    EXPECT_NEAR(ClassifierOracle::loss_derivative(t), fd, 1e-8);
  }
}

TEST(Classifier, GradientAtZeroMargin) {
  const Matrix a = col({0.0, 2.0, -1.0}).transpose();
  const Matrix x = col({1.0, 0.0, 0.0});  // a^T x = 0
  for (double b : {1.0, -1.0}) {
    Vector lab(1);
    lab << b;
    const auto p = make_sphere_classifier(a, lab, 0.0);
    const Matrix g = p.full_euclidean_grad(x);
    EXPECT_LE((g - (-0.25 * b) * a.transpose()).norm(), 1e-16);
  }
}

TEST(Classifier, PullbackFiniteDifferencesAndFullBatch) {
  Rng rng(16);
  const Dataset d = gen_classifier_data(10, 300, 1.0, 3);
  const auto p = make_sphere_classifier(d.features, *d.labels, 0.25);
  for (int i = 0; i < 50; ++i) EXPECT_LT(pullback_fd_error(p, rng), 1e-5);
  const Matrix x = random_point(p.manifold(), rng);
  EXPECT_EQ(p.sample_euclidean_grad(x, full_batch(300)), p.full_euclidean_grad(x));
}

TEST(Classifier, RejectsBadLabels) {
  Matrix f(2, 3);
  f.setOnes();
  Vector lab(2);
  lab << 1, 0;
  EXPECT_THROW(make_sphere_classifier(f, lab, 0.1), std::invalid_argument);
  EXPECT_THROW(make_sphere_classifier(f, Vector::Ones(3), 0.1), DimensionError);
}

TEST(Unbiasedness, BatchMeanWithinThreeStandardErrors) {
  Rng rng(17);
  const auto spca = make_spca(gen_spca_data(6, 80, 4).spca_matrix(), 0.1, 2);
  const Dataset cd = gen_classifier_data(5, 200, 0.5, 5);
  const auto clf = make_sphere_classifier(cd.features, *cd.labels, 0.1);
  auto check = [&](const auto& p) {
    const Matrix x = random_point(p.manifold(), rng);
    const Matrix full = p.full_euclidean_grad(x);
    const int reps = 10000;
    Matrix sum = Matrix::Zero(full.rows(), full.cols());
    Matrix sq = sum;
    for (int r = 0; r < reps; ++r) {
      const Matrix g = p.sample_euclidean_grad(x, draw_batch(p.num_samples(), 10, rng));
      sum += g;
      sq += g.cwiseProduct(g);
    }
    const Matrix mean = sum / reps;
    const Matrix var = (sq / reps - mean.cwiseProduct(mean)) * (reps / (reps - 1.0));
    const Matrix stderr_ = (var / reps).cwiseSqrt();
    for (Index i = 0; i < full.size(); ++i) {
      EXPECT_LE(std::abs(mean(i) - full(i)), 3.0 * stderr_(i) + 1e-15) << "entry " << i;
    }
  };
  check(spca);
  check(clf);
}
