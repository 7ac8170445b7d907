#pragma once

// Geometry of the unit sphere S^{m-1} (stored as m x 1 columns) and the
// compact Stiefel manifold St(n, p) = {X in R^{n x p} : X^T X = I_p}, both as
// Riemannian submanifolds of Euclidean space with the Frobenius metric.

#include "marsadmm/common.hpp"
#include "marsadmm/rng.hpp"

#include <cmath>
#include <random>
#include <string>

namespace marsadmm {

enum class ManifoldKind { Sphere, Stiefel };

class ManifoldSpec {
 public:
  /// Unit sphere in R^m; points are m x 1 matrices.
  static ManifoldSpec sphere(Index m) {
    if (m < 2) {
      throw std::invalid_argument("sphere dimension must be >= 2, got " +
                                  std::to_string(m));
    }
    return ManifoldSpec(ManifoldKind::Sphere, m, 1);
  }

  static ManifoldSpec stiefel(Index n, Index p) {
    if (p < 1 || n < p) {
      throw std::invalid_argument("Stiefel manifold needs n >= p >= 1, got " +
                                  shape_string(n, p));
    }
    return ManifoldSpec(ManifoldKind::Stiefel, n, p);
  }

  ManifoldKind kind() const { return kind_; }
  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index ambient_size() const { return rows_ * cols_; }

  /// Intrinsic dimension of the manifold.
  Index dimension() const {
    if (kind_ == ManifoldKind::Sphere) return rows_ - 1;
    return rows_ * cols_ - cols_ * (cols_ + 1) / 2;
  }

  std::string describe() const {
    if (kind_ == ManifoldKind::Sphere) {
      return "Sphere(" + std::to_string(rows_) + ")";
    }
    return "Stiefel(" + std::to_string(rows_) + "," + std::to_string(cols_) +
           ")";
  }

  void check_ambient(const Matrix& m, const char* what) const {
    if (m.rows() != rows_ || m.cols() != cols_) {
      throw DimensionError(std::string(what) + ": expected " +
                           shape_string(rows_, cols_) + " on " + describe() +
                           ", got " + shape_string(m.rows(), m.cols()));
    }
  }

  friend bool operator==(const ManifoldSpec&, const ManifoldSpec&) = default;

 private:
  ManifoldSpec(ManifoldKind kind, Index rows, Index cols)
      : kind_(kind), rows_(rows), cols_(cols) {}

  ManifoldKind kind_;
  Index rows_;
  Index cols_;
};

inline constexpr double kManifoldTol = 1e-10;

inline bool is_on_manifold(const ManifoldSpec& spec, const Matrix& x,
                           double tol = kManifoldTol) {
  if (x.rows() != spec.rows() || x.cols() != spec.cols()) return false;
  if (!x.allFinite()) return false;
  if (spec.kind() == ManifoldKind::Sphere) {
    return std::abs(x.norm() - 1.0) <= tol;
  }
  const Matrix gram = x.transpose() * x;
  return (gram - Matrix::Identity(spec.cols(), spec.cols())).norm() <= tol;
}

/// Relative tangency test: Sphere |x^T u| <= tol ||u||,
/// Stiefel ||X^T U + U^T X||_F <= tol ||U||_F.
inline bool is_tangent(const ManifoldSpec& spec, const Matrix& x,
                       const Matrix& u, double tol = kManifoldTol) {
  if (u.rows() != spec.rows() || u.cols() != spec.cols()) return false;
  const double scale = u.norm();
  if (spec.kind() == ManifoldKind::Sphere) {
    return std::abs(inner(x, u)) <= tol * scale;
  }
  const Matrix xtu = x.transpose() * u;
  return (xtu + xtu.transpose()).norm() <= tol * scale;
}

/// Orthogonal projection of an ambient matrix onto T_x.
/// Sphere: U - (x^T U) x.  Stiefel: U - X sym(X^T U).
inline Matrix project_tangent(const ManifoldSpec& spec, const Matrix& x,
                              const Matrix& u) {
  spec.check_ambient(x, "project_tangent(x)");
  spec.check_ambient(u, "project_tangent(U)");
  if (spec.kind() == ManifoldKind::Sphere) {
    return u - inner(x, u) * x;
  }
  const Matrix xtu = x.transpose() * u;
  return u - 0.5 * x * (xtu + xtu.transpose());
}

namespace detail {

/// Thin Q factor of m with the sign convention diag(R) > 0, which makes the
/// factorization unique for full column rank m.
inline Matrix thin_q_positive(const Matrix& m) {
  const Index n = m.rows();
  const Index p = m.cols();
  Eigen::HouseholderQR<Matrix> qr(m);
  Matrix q = qr.householderQ() * Matrix::Identity(n, p);
  const auto& packed = qr.matrixQR();
  for (Index j = 0; j < p; ++j) {
    if (packed(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

}  // namespace detail

/// Retraction R_x(u). Sphere: (x + u)/||x + u||. Stiefel: qf(X + U).
/// R_x(0) returns x unchanged (a bitwise copy).
inline Matrix retract(const ManifoldSpec& spec, const Matrix& x,
                      const Matrix& u) {
  spec.check_ambient(x, "retract(x)");
  spec.check_ambient(u, "retract(u)");
  if (u.isZero(0.0)) return x;
  if (spec.kind() == ManifoldKind::Sphere) {
    const Matrix sum = x + u;
    return sum / sum.norm();
  }
  return detail::thin_q_positive(x + u);
}

/// Pulls a point that has drifted numerically back onto the manifold.
inline Matrix reorthonormalize(const ManifoldSpec& spec, const Matrix& x) {
  spec.check_ambient(x, "reorthonormalize");
  if (spec.kind() == ManifoldKind::Sphere) return x / x.norm();
  return detail::thin_q_positive(x);
}

struct Transported {
  Matrix value;
  /// Set when the Stiefel projection vanished and the norm could not be
  /// restored; value is then the unrescaled projection.
  bool degenerate = false;
};

/// Isometric vector transport of v in T_x to T_y.
///
/// Sphere: parallel transport along the great circle through x and y,
///   v - (y^T v)/(1 + x^T y) (x + y).
/// Stiefel: P_{T_y}(v) rescaled so that ||result|| = ||v||. This preserves
/// norms and is positively homogeneous but is not additive in v.
inline Transported transport(const ManifoldSpec& spec, const Matrix& x,
                             const Matrix& y, const Matrix& v) {
  spec.check_ambient(x, "transport(x)");
  spec.check_ambient(y, "transport(y)");
  spec.check_ambient(v, "transport(v)");
  if (x == y) return {v, false};
  if (spec.kind() == ManifoldKind::Sphere) {
    const double c = 1.0 + inner(x, y);
    if (c <= 1e-12) {
      throw std::domain_error("sphere transport between antipodal points");
    }
    return {v - (inner(y, v) / c) * (x + y), false};
  }
  Matrix proj = project_tangent(spec, y, v);
  const double vn = v.norm();
  if (vn == 0.0) return {proj, false};
  const double pn = proj.norm();
  if (pn < 1e-14 * vn) return {proj, true};
  proj *= vn / pn;
  return {proj, false};
}

/// Matrix of ambient shape with i.i.d. N(0, 1) entries.
inline Matrix random_ambient(const ManifoldSpec& spec, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(spec.rows(), spec.cols());
  for (Index j = 0; j < g.cols(); ++j) {
    for (Index i = 0; i < g.rows(); ++i) g(i, j) = normal(rng);
  }
  return g;
}

/// Gaussian ambient sample mapped onto the manifold (normalize / QR).
inline Matrix random_point(const ManifoldSpec& spec, Rng& rng) {
  for (;;) {
    const Matrix g = random_ambient(spec, rng);
    if (spec.kind() == ManifoldKind::Sphere) {
      const double n = g.norm();
      if (n > 0.0) return g / n;
      continue;
    }
    Eigen::ColPivHouseholderQR<Matrix> rank_check(g);
    if (rank_check.rank() == spec.cols()) return detail::thin_q_positive(g);
  }
}

/// Random tangent vector at x (projected Gaussian).
inline Matrix random_tangent(const ManifoldSpec& spec, const Matrix& x,
                             Rng& rng) {
  return project_tangent(spec, x, random_ambient(spec, rng));
}

}  // namespace marsadmm
