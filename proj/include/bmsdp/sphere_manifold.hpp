#pragma once

// Geometry of the product of n unit spheres in R^k, i.e. the set of n x k
// matrices with unit rows, and the quadratic objective f(s) = <s, A s>.

#include "bmsdp/common.hpp"
#include "bmsdp/symmat.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>

namespace bmsdp {

/// A point of the sphere product: n rows, each a unit vector of R^k.
class SphereConfig {
 public:
  static constexpr double kUnitTolerance = 1e-10;

  /// Validates that every row has unit norm to within 1e-10.
  explicit SphereConfig(Matrix rows) {
    if (rows.rows() < 1 || rows.cols() < 1)
      throw std::invalid_argument("SphereConfig: n and k must be positive");
    for (Index i = 0; i < rows.rows(); ++i) {
      if (std::abs(rows.row(i).norm() - 1.0) > kUnitTolerance)
        throw std::invalid_argument("SphereConfig: row " + std::to_string(i) +
                                    " is not a unit vector");
    }
    rows_ = std::make_shared<const Matrix>(std::move(rows));
  }

  /// Rescales every row to unit norm. Zero rows are rejected.
  static SphereConfig normalized(Matrix rows) {
    for (Index i = 0; i < rows.rows(); ++i) {
      const double r = rows.row(i).norm();
      if (!(r > 0.0)) throw std::domain_error("SphereConfig: zero row cannot be normalized");
      rows.row(i) /= r;
    }
    return SphereConfig(std::make_shared<const Matrix>(std::move(rows)));
  }

  Index n() const { return rows_->rows(); }
  Index k() const { return rows_->cols(); }
  const Matrix& rows() const { return *rows_; }

  /// True when both configurations share storage (same point object).
  bool same_point(const SphereConfig& other) const { return rows_ == other.rows_; }
  const std::shared_ptr<const Matrix>& storage() const { return rows_; }

  /// Wraps storage already known to satisfy the invariant.
  static SphereConfig adopt(std::shared_ptr<const Matrix> rows) {
    return SphereConfig(std::move(rows));
  }

 private:
  explicit SphereConfig(std::shared_ptr<const Matrix> rows) : rows_(std::move(rows)) {}

  std::shared_ptr<const Matrix> rows_;
};

/// A tangent vector at `base`: each row orthogonal to the matching base row.
class TangentField {
 public:
  static constexpr double kTangentTolerance = 1e-10;

  TangentField(SphereConfig base, Matrix rows) : base_(std::move(base)), rows_(std::move(rows)) {
    require_shape(rows_.rows() == base_.n() && rows_.cols() == base_.k(), "TangentField");
    const Matrix& s = base_.rows();
    for (Index i = 0; i < rows_.rows(); ++i) {
      const double dot = s.row(i).dot(rows_.row(i));
      if (std::abs(dot) > kTangentTolerance * std::max(1.0, rows_.row(i).norm()))
        throw std::invalid_argument("TangentField: row " + std::to_string(i) +
                                    " is not orthogonal to the base point");
    }
  }

  /// Skips the orthogonality check; for results of projections.
  struct Trusted {};
  TangentField(SphereConfig base, Matrix rows, Trusted)
      : base_(std::move(base)), rows_(std::move(rows)) {}

  const SphereConfig& base() const { return base_; }
  const Matrix& rows() const { return rows_; }
  double norm() const { return rows_.norm(); }

  TangentField scaled(double c) const { return {base_, c * rows_, Trusted{}}; }
  TangentField normalized() const { return scaled(1.0 / norm()); }

 private:
  SphereConfig base_;
  Matrix rows_;
};

inline void require_same_base(const TangentField& u, const SphereConfig& s, const char* where) {
  if (!u.base().same_point(s) && u.base().rows() != s.rows())
    throw std::invalid_argument(std::string(where) + ": tangent is based at a different point");
}

inline double inner(const TangentField& u, const TangentField& v) {
  require_shape(u.rows().rows() == v.rows().rows() && u.rows().cols() == v.rows().cols(),
                "inner");
  return frobenius_inner(u.rows(), v.rows());
}

/// Row-wise orthogonal projection v_i - <s_i, v_i> s_i onto the tangent space.
inline TangentField project_tangent(const SphereConfig& s, const Matrix& v) {
  require_shape(v.rows() == s.n() && v.cols() == s.k(), "project_tangent");
  const Vector dots = (s.rows().array() * v.array()).rowwise().sum();
  Matrix out = v - dots.asDiagonal() * s.rows();
  return {s, std::move(out), TangentField::Trusted{}};
}

/// Metric projection of s + t u back onto the manifold. Since u_i is
/// orthogonal to the unit vector s_i the row norm is sqrt(1 + t^2 |u_i|^2),
/// which is at least one.
inline SphereConfig retract(const SphereConfig& s, const TangentField& u, double t) {
  require_shape(u.rows().rows() == s.n() && u.rows().cols() == s.k(), "retract");
  if (t == 0.0) return s;
  Matrix next = s.rows() + t * u.rows();
  for (Index i = 0; i < next.rows(); ++i) next.row(i) /= next.row(i).norm();
  return SphereConfig::adopt(std::make_shared<const Matrix>(std::move(next)));
}

inline double objective(const SymmetricMatrix& a, const SphereConfig& s) {
  require_shape(a.n() == s.n(), "objective");
  return frobenius_inner(s.rows(), a.multiply(s.rows()));
}

/// Values shared by the objective, the gradient and the Hessian at a point.
struct SphereEvaluation {
  Matrix a_sigma;  // A s
  Vector lambda;   // diagonal of ddiag(A s s^T)
  double f = 0.0;
  TangentField grad;
  double grad_norm = 0.0;
};

inline SphereEvaluation evaluate(const SymmetricMatrix& a, const SphereConfig& s) {
  require_shape(a.n() == s.n(), "evaluate");
  Matrix as = a.multiply(s.rows());
  Vector lambda = (s.rows().array() * as.array()).rowwise().sum();
  const double f = lambda.sum();
  Matrix g = 2.0 * (as - lambda.asDiagonal() * s.rows());
  TangentField grad(s, std::move(g), TangentField::Trusted{});
  const double gn = grad.norm();
  return {std::move(as), std::move(lambda), f, std::move(grad), gn};
}

/// Riemannian gradient 2 (A - Lambda) s with Lambda = ddiag(A s s^T).
inline TangentField gradient(const SymmetricMatrix& a, const SphereConfig& s) {
  return evaluate(a, s).grad;
}

/// Riemannian Hessian of f at a fixed base point. Caches Lambda.
class HessianOperator {
 public:
  HessianOperator(const SymmetricMatrix& a, SphereConfig base)
      : a_(&a), base_(std::move(base)) {
    require_shape(a.n() == base_.n(), "HessianOperator");
    const Matrix as = a.multiply(base_.rows());
    lambda_ = (base_.rows().array() * as.array()).rowwise().sum();
  }

  HessianOperator(const SymmetricMatrix& a, SphereConfig base, Vector lambda)
      : a_(&a), base_(std::move(base)), lambda_(std::move(lambda)) {
    require_shape(a.n() == base_.n() && lambda_.size() == base_.n(), "HessianOperator");
  }

  const SphereConfig& base() const { return base_; }
  const Vector& lambda() const { return lambda_; }
  const SymmetricMatrix& matrix() const { return *a_; }

  /// 2 (A - Lambda) u, not yet projected.
  Matrix shifted_product(const Matrix& u) const {
    return 2.0 * (a_->multiply(u) - lambda_.asDiagonal() * u);
  }

  /// Hess f(s)[u] = P(2 (A - Lambda) u - 2 ddiag(A s u^T + A u s^T) s). The
  /// ddiag term is normal to the tangent space and vanishes under P.
  TangentField apply(const TangentField& u) const {
    require_same_base(u, base_, "hessian_apply");
    return project_tangent(base_, shifted_product(u.rows()));
  }

  /// <u, Hess[u]> / <u, u> through the identity <v, Hess[u]> = 2 <v, (A - Lambda) u>.
  double rayleigh(const TangentField& u) const {
    require_same_base(u, base_, "rayleigh");
    const double uu = u.rows().squaredNorm();
    if (!(uu > 0.0)) throw std::invalid_argument("rayleigh: zero tangent");
    return frobenius_inner(u.rows(), shifted_product(u.rows())) / uu;
  }

 private:
  const SymmetricMatrix* a_;
  SphereConfig base_;
  Vector lambda_;
};

inline TangentField hessian_apply(const HessianOperator& h, const TangentField& u) {
  return h.apply(u);
}

inline double rayleigh(const HessianOperator& h, const TangentField& u) { return h.rayleigh(u); }

/// Rows are independent normalized Gaussians, i.e. uniform on the sphere.
inline SphereConfig random_config(Index n, Index k, Rng& rng) {
  if (n < 1 || k < 1) throw std::invalid_argument("random_config: n and k must be positive");
  Matrix g = gaussian_matrix(n, k, rng);
  return SphereConfig::normalized(std::move(g));
}

inline SphereConfig random_config(Index n, Index k, std::uint64_t seed) {
  Rng rng(seed);
  return random_config(n, k, rng);
}

/// Projected Gaussian with unit Frobenius norm. For k = 1 the tangent space
/// is trivial and the zero field is returned.
inline TangentField random_tangent(const SphereConfig& s, Rng& rng) {
  TangentField u = project_tangent(s, gaussian_matrix(s.n(), s.k(), rng));
  const double nrm = u.norm();
  return nrm > 0.0 ? u.scaled(1.0 / nrm) : u;
}

inline TangentField random_tangent(const SphereConfig& s, std::uint64_t seed) {
  Rng rng(seed);
  return random_tangent(s, rng);
}

// ---- text format -----------------------------------------------------------
//
//   config n <n> k <k>
//   n lines of k values, 17 significant digits

inline void write_matrix_rows(std::ostream& os, const Matrix& m) {
  os << std::setprecision(17);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) os << (j ? " " : "") << m(i, j);
    os << '\n';
  }
}

inline Matrix read_matrix_rows(std::istream& is, Index rows, Index cols) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j)
      if (!(is >> m(i, j))) throw std::runtime_error("read config: truncated data");
  return m;
}

inline void write_config(std::ostream& os, const SphereConfig& s) {
  os << "config n " << s.n() << " k " << s.k() << '\n';
  write_matrix_rows(os, s.rows());
}

inline SphereConfig read_config(std::istream& is) {
  std::string tag, kn, kk;
  Index n = 0, k = 0;
  if (!(is >> tag >> kn >> n >> kk >> k) || tag != "config" || kn != "n" || kk != "k")
    throw std::runtime_error("read_config: bad header");
  return SphereConfig(read_matrix_rows(is, n, k));
}

}  // namespace bmsdp
