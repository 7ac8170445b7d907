#pragma once

// Composite problem  min_{x in M} F(x) + g(Ax),  F(x) = E_xi f(x, xi),
// split as  min F(x) + g(y)  s.t.  Ax = y.  The expectation is the uniform
// average over a finite dataset of N samples.

#include "marsadmm/common.hpp"
#include "marsadmm/manifold.hpp"
#include "marsadmm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <numeric>
#include <optional>
#include <random>
#include <utility>
#include <vector>

namespace marsadmm {

// ---------------------------------------------------------------------------
// Nonsmooth part g

/// g(y) = mu ||y||_1 (mu >= 0), or g = 0.
class Regularizer {
 public:
  static Regularizer zero() { return Regularizer(0.0, true); }
  static Regularizer l1(double mu) {
    if (!(mu >= 0.0) || !std::isfinite(mu)) {
      throw std::invalid_argument("l1 weight must be finite and >= 0");
    }
    return Regularizer(mu, false);
  }

  bool is_zero() const { return zero_; }
  double weight() const { return zero_ ? 0.0 : mu_; }

  double value(const Matrix& y) const {
    return zero_ ? 0.0 : mu_ * y.lpNorm<1>();
  }

  /// prox_{g/rho}(v) = argmin_z g(z) + (rho/2)||z - v||^2.
  Matrix prox(const Matrix& v, double rho) const {
    if (!(rho > 0.0)) throw std::invalid_argument("prox scale rho must be > 0");
    if (zero_) return v;
    const double tau = mu_ / rho;
    return v.unaryExpr([tau](double t) {
      const double a = std::abs(t) - tau;
      return a > 0.0 ? std::copysign(a, t) : 0.0;
    });
  }

  /// Euclidean distance from w to the subdifferential of g at y.
  double dist_to_subdiff(const Matrix& y, const Matrix& w) const {
    require_same_shape(y, w, "dist_to_subdiff");
    if (zero_) return w.norm();
    double acc = 0.0;
    for (Index j = 0; j < y.cols(); ++j) {
      for (Index i = 0; i < y.rows(); ++i) {
        const double yi = y(i, j);
        const double wi = w(i, j);
        double d;
        if (yi > 0.0) {
          d = wi - mu_;
        } else if (yi < 0.0) {
          d = wi + mu_;
        } else {
          d = std::max(std::abs(wi) - mu_, 0.0);
        }
        acc += d * d;
      }
    }
    return std::sqrt(acc);
  }

  /// Element mu sign(y) of the subdifferential, with sign(0) = 0.
  Matrix subgradient(const Matrix& y) const {
    if (zero_) return Matrix::Zero(y.rows(), y.cols());
    return y.unaryExpr([mu = mu_](double t) {
      return t > 0.0 ? mu : (t < 0.0 ? -mu : 0.0);
    });
  }

  /// Lipschitz constant of g w.r.t. the Euclidean norm on R^dim.
  double lipschitz(Index dim) const {
    return zero_ ? 0.0 : mu_ * std::sqrt(static_cast<double>(dim));
  }

 private:
  Regularizer(double mu, bool zero) : mu_(mu), zero_(zero) {}
  double mu_;
  bool zero_;
};

// ---------------------------------------------------------------------------
// Linear map A

/// Either the identity, or a dense matrix acting on the column-major
/// flattening of the ambient variable (result is a column vector).
class LinearMap {
 public:
  static LinearMap identity() { return LinearMap(); }
  static LinearMap dense(Matrix a) {
    if (a.size() == 0) throw DimensionError("dense linear map is empty");
    LinearMap m;
    m.dense_ = std::move(a);
    m.norm_ = spectral_norm(*m.dense_);
    return m;
  }

  bool is_identity() const { return !dense_.has_value(); }
  const Matrix& matrix() const { return *dense_; }

  Matrix apply(const Matrix& x) const {
    if (!dense_) return x;
    if (dense_->cols() != x.size()) {
      throw DimensionError("apply_A: map has " +
                           std::to_string(dense_->cols()) +
                           " columns, input has " + std::to_string(x.size()) +
                           " entries");
    }
    return (*dense_) * Eigen::Map<const Vector>(x.data(), x.size());
  }

  /// A^T w reshaped to rows x cols.
  Matrix adjoint(const Matrix& w, Index rows, Index cols) const {
    if (!dense_) {
      if (w.rows() != rows || w.cols() != cols) {
        throw DimensionError("apply_At: expected " + shape_string(rows, cols) +
                             ", got " + shape_string(w.rows(), w.cols()));
      }
      return w;
    }
    if (w.cols() != 1 || w.rows() != dense_->rows() ||
        dense_->cols() != rows * cols) {
      throw DimensionError("apply_At: incompatible shapes");
    }
    Vector flat = dense_->transpose() * w.col(0);
    return Eigen::Map<const Matrix>(flat.data(), rows, cols);
  }

  /// Output shape of A for an input of shape rows x cols.
  std::pair<Index, Index> output_shape(Index rows, Index cols) const {
    if (!dense_) return {rows, cols};
    return {dense_->rows(), 1};
  }

  /// Spectral norm ||A||_2 (exactly 1 for the identity).
  double operator_norm() const { return norm_; }

  /// Largest singular value. Power iteration can stall below it when the
  /// top singular values cluster, which would understate the bound.
  static double spectral_norm(const Matrix& a) {
    if (a.size() == 0) return 0.0;
    return Eigen::JacobiSVD<Matrix>(a).singularValues()(0);
  }

 private:
  LinearMap() = default;
  std::optional<Matrix> dense_;
  double norm_ = 1.0;
};

// ---------------------------------------------------------------------------
// Sampling

/// Sample ids drawn i.i.d. uniformly with replacement.
struct SampleBatch {
  std::vector<Index> indices;
  Index size() const { return static_cast<Index>(indices.size()); }
};

inline SampleBatch draw_batch(Index num_samples, Index size, Rng& rng) {
  if (size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (num_samples < 1) throw std::invalid_argument("no samples to draw from");
  std::uniform_int_distribution<Index> pick(0, num_samples - 1);
  SampleBatch b;
  b.indices.resize(static_cast<std::size_t>(size));
  for (auto& i : b.indices) i = pick(rng);
  return b;
}

inline SampleBatch full_batch(Index num_samples) {
  SampleBatch b;
  b.indices.resize(static_cast<std::size_t>(num_samples));
  std::iota(b.indices.begin(), b.indices.end(), Index{0});
  return b;
}

// ---------------------------------------------------------------------------
// Smooth parts

/// What the solver needs from the smooth stochastic part F. Gradients are
/// Euclidean (ambient) and averaged over the given samples; the full-data
/// versions must agree bitwise with the batch versions on the batch 0..N-1.
template <class O>
concept SampleOracle = requires(const O& o, const Matrix& x,
                                const SampleBatch& b) {
  { o.num_samples() } -> std::convertible_to<Index>;
  { o.batch_gradient(x, b) } -> std::convertible_to<Matrix>;
  { o.batch_value(x, b) } -> std::convertible_to<double>;
  { o.full_gradient(x) } -> std::convertible_to<Matrix>;
  { o.full_value(x) } -> std::convertible_to<double>;
};

namespace detail {

inline void check_batch(const SampleBatch& b, Index n) {
  if (b.indices.empty()) throw std::invalid_argument("empty sample batch");
  for (Index i : b.indices) {
    if (i < 0 || i >= n) {
      throw std::out_of_range("sample index " + std::to_string(i) +
                              " outside [0, " + std::to_string(n) + ")");
    }
  }
}

inline Matrix gather_columns(const Matrix& m, const SampleBatch& b) {
  Matrix out(m.rows(), b.size());
  for (Index j = 0; j < b.size(); ++j) {
    out.col(j) = m.col(b.indices[static_cast<std::size_t>(j)]);
  }
  return out;
}

}  // namespace detail

/// Sparse-PCA reconstruction loss f(X, z) = ||z - X X^T z||^2 for samples
/// z (columns of Z, n x m). On St(n,p) this equals ||z||^2 - ||X^T z||^2,
/// whose ambient gradient -2 z z^T X is what the oracle returns.
class SpcaOracle {
 public:
  explicit SpcaOracle(Matrix z) : z_(std::move(z)) {
    if (z_.cols() < 1 || z_.rows() < 1) {
      throw std::invalid_argument("SPCA data matrix is empty");
    }
    if (!z_.allFinite()) throw std::invalid_argument("SPCA data has NaN/Inf");
    sq_norms_ = z_.colwise().squaredNorm().transpose();
  }

  Index num_samples() const { return z_.cols(); }
  Index dim() const { return z_.rows(); }
  const Matrix& data() const { return z_; }

  Matrix batch_gradient(const Matrix& x, const SampleBatch& b) const {
    detail::check_batch(b, num_samples());
    return gradient_of(detail::gather_columns(z_, b), x);
  }
  double batch_value(const Matrix& x, const SampleBatch& b) const {
    detail::check_batch(b, num_samples());
    double sq = 0.0;
    for (Index i : b.indices) sq += sq_norms_(i);
    return value_of(detail::gather_columns(z_, b), sq, x);
  }
  Matrix full_gradient(const Matrix& x) const { return gradient_of(z_, x); }
  double full_value(const Matrix& x) const {
    double sq = 0.0;
    for (Index i = 0; i < sq_norms_.size(); ++i) sq += sq_norms_(i);
    return value_of(z_, sq, x);
  }

 private:
  static Matrix gradient_of(const Matrix& cols, const Matrix& x) {
    if (x.rows() != cols.rows()) {
      throw DimensionError("SPCA gradient: X has " + std::to_string(x.rows()) +
                           " rows, data has " + std::to_string(cols.rows()));
    }
    const Matrix proj = cols.transpose() * x;  // b x p
    return (-2.0 / double(cols.cols())) * (cols * proj);
  }
  static double value_of(const Matrix& cols, double sq_sum, const Matrix& x) {
    if (x.rows() != cols.rows()) throw DimensionError("SPCA value: bad X");
    const Matrix proj = cols.transpose() * x;
    return (sq_sum - proj.squaredNorm()) / double(cols.cols());
  }

  Matrix z_;
  Vector sq_norms_;
};

/// Numerically stable logistic sigmoid.
inline double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

/// Smooth nonconvex classification loss f(x, (a, b)) = (1 - sigmoid(b a^T x))^2.
class ClassifierOracle {
 public:
  /// features: N x m (one sample per row); labels in {-1, +1}.
  ClassifierOracle(const Matrix& features, Vector labels)
      : at_(features.transpose()), labels_(std::move(labels)) {
    if (at_.cols() < 1) throw std::invalid_argument("no classification samples");
    if (labels_.size() != at_.cols()) {
      throw DimensionError("labels/features size mismatch");
    }
    for (Index i = 0; i < labels_.size(); ++i) {
      if (labels_(i) != 1.0 && labels_(i) != -1.0) {
        throw std::invalid_argument("labels must be +1 or -1");
      }
    }
  }

  Index num_samples() const { return at_.cols(); }
  Index dim() const { return at_.rows(); }

  Matrix batch_gradient(const Matrix& x, const SampleBatch& b) const {
    detail::check_batch(b, num_samples());
    return gradient_of(detail::gather_columns(at_, b), gather_labels(b), x);
  }
  double batch_value(const Matrix& x, const SampleBatch& b) const {
    detail::check_batch(b, num_samples());
    return value_of(detail::gather_columns(at_, b), gather_labels(b), x);
  }
  Matrix full_gradient(const Matrix& x) const {
    return gradient_of(at_, labels_, x);
  }
  double full_value(const Matrix& x) const {
    return value_of(at_, labels_, x);
  }

  /// Per-sample loss as a function of the margin t = b a^T x.
  static double loss(double t) {
    const double s = sigmoid(-t);
    return s * s;
  }
  /// d loss / dt = -2 sigmoid(-t)^2 sigmoid(t).
  static double loss_derivative(double t) {
    const double s = sigmoid(-t);
    return -2.0 * s * s * sigmoid(t);
  }

 private:
  Vector gather_labels(const SampleBatch& b) const {
    Vector out(b.size());
    for (Index j = 0; j < b.size(); ++j) {
      out(j) = labels_(b.indices[static_cast<std::size_t>(j)]);
    }
    return out;
  }
  static void check_x(const Matrix& cols, const Matrix& x) {
    if (x.rows() != cols.rows() || x.cols() != 1) {
      throw DimensionError("classifier: x must be " +
                           shape_string(cols.rows(), 1));
    }
  }
  static Matrix gradient_of(const Matrix& cols, const Vector& labels,
                            const Matrix& x) {
    check_x(cols, x);
    const Vector margins = (cols.transpose() * x.col(0)).cwiseProduct(labels);
    Vector w(margins.size());
    for (Index i = 0; i < w.size(); ++i) {
      w(i) = loss_derivative(margins(i)) * labels(i);
    }
    return (cols * w) / double(cols.cols());
  }
  static double value_of(const Matrix& cols, const Vector& labels,
                         const Matrix& x) {
    check_x(cols, x);
    const Vector margins = (cols.transpose() * x.col(0)).cwiseProduct(labels);
    double acc = 0.0;
    for (Index i = 0; i < margins.size(); ++i) acc += loss(margins(i));
    return acc / double(cols.cols());
  }

  Matrix at_;  // m x N, samples as columns
  Vector labels_;
};

// ---------------------------------------------------------------------------
// The composite problem

template <SampleOracle Oracle>
class CompositeProblem {
 public:
  CompositeProblem(Oracle oracle, Regularizer g, LinearMap a,
                   ManifoldSpec manifold)
      : oracle_(std::move(oracle)),
        g_(std::move(g)),
        a_(std::move(a)),
        manifold_(manifold) {
    if (!a_.is_identity() &&
        a_.matrix().cols() != manifold_.ambient_size()) {
      throw DimensionError("linear map has " +
                           std::to_string(a_.matrix().cols()) +
                           " columns but the ambient space has " +
                           std::to_string(manifold_.ambient_size()) +
                           " entries");
    }
  }

  const Oracle& oracle() const { return oracle_; }
  const Regularizer& g() const { return g_; }
  const LinearMap& A() const { return a_; }
  const ManifoldSpec& manifold() const { return manifold_; }
  Index num_samples() const { return oracle_.num_samples(); }

  /// Dimension of the constraint space (where y and lambda live).
  Index constraint_dim() const {
    auto [r, c] = a_.output_shape(manifold_.rows(), manifold_.cols());
    return r * c;
  }

  Matrix sample_euclidean_grad(const Matrix& x, const SampleBatch& b) const {
    manifold_.check_ambient(x, "sample_euclidean_grad");
    return oracle_.batch_gradient(x, b);
  }
  Matrix full_euclidean_grad(const Matrix& x) const {
    manifold_.check_ambient(x, "full_euclidean_grad");
    return oracle_.full_gradient(x);
  }
  /// Riemannian gradient of F (full data).
  Matrix riemannian_grad(const Matrix& x) const {
    return project_tangent(manifold_, x, full_euclidean_grad(x));
  }
  double smooth_value(const Matrix& x) const {
    manifold_.check_ambient(x, "smooth_value");
    return oracle_.full_value(x);
  }
  /// F(x) + g(Ax).
  double objective(const Matrix& x) const {
    return smooth_value(x) + g_.value(apply_A(x));
  }

  Matrix apply_A(const Matrix& x) const {
    manifold_.check_ambient(x, "apply_A");
    return a_.apply(x);
  }
  Matrix apply_At(const Matrix& w) const {
    return a_.adjoint(w, manifold_.rows(), manifold_.cols());
  }
  Matrix prox_g(const Matrix& v, double rho) const { return g_.prox(v, rho); }
  double dist_to_subdiff_g(const Matrix& y, const Matrix& w) const {
    return g_.dist_to_subdiff(y, w);
  }
  double a_norm() const { return a_.operator_norm(); }
  double g_lipschitz() const { return g_.lipschitz(constraint_dim()); }

 private:
  Oracle oracle_;
  Regularizer g_;
  LinearMap a_;
  ManifoldSpec manifold_;
};

using SpcaProblem = CompositeProblem<SpcaOracle>;
using ClassifierProblem = CompositeProblem<ClassifierOracle>;

/// min_{X in St(n,p)} mean_i ||z_i - X X^T z_i||^2 + mu ||X||_1 for data
/// Z = [z_1 ... z_m] in R^{n x m}.
inline SpcaProblem make_spca(const Matrix& z, double mu, Index p) {
  return SpcaProblem(SpcaOracle(z), Regularizer::l1(mu), LinearMap::identity(),
                     ManifoldSpec::stiefel(z.rows(), p));
}

/// min_{x in S^{m-1}} mean_i (1 - sigmoid(b_i a_i^T x))^2 + mu ||x||_1 with
/// features given row-wise (N x m).
inline ClassifierProblem make_sphere_classifier(const Matrix& features,
                                                const Vector& labels,
                                                double mu) {
  return ClassifierProblem(ClassifierOracle(features, labels),
                           Regularizer::l1(mu), LinearMap::identity(),
                           ManifoldSpec::sphere(features.cols()));
}

}  // namespace marsadmm
