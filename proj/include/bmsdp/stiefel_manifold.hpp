#pragma once

// Geometry of O(d,k)^m, the feasible set of the rank-k Orthogonal-Cut
// problem. A point is stored as an (m d) x k matrix whose i-th group of d
// rows Y_i satisfies Y_i Y_i^T = I_d (Y_i is the transpose of the k x d frame).
//
// With d = 1 every kernel forwards to the sphere-product implementation, so
// the two pipelines produce identical floating-point results.

#include "bmsdp/common.hpp"
#include "bmsdp/sphere_manifold.hpp"
#include "bmsdp/symmat.hpp"

#include <Eigen/SVD>

#include <optional>

namespace bmsdp {

class StiefelConfig {
 public:
  static constexpr double kOrthoTolerance = 1e-9;

  StiefelConfig(Matrix rows, Index d) : d_(d) {
    if (d < 1 || rows.rows() < 1 || rows.rows() % d != 0)
      throw std::invalid_argument("StiefelConfig: row count must be a positive multiple of d");
    if (rows.cols() < d) throw std::invalid_argument("StiefelConfig: requires k >= d");
    const Matrix eye = Matrix::Identity(d, d);
    for (Index i = 0; i < rows.rows() / d; ++i) {
      const auto y = rows.middleRows(i * d, d);
      if ((y * y.transpose() - eye).norm() > kOrthoTolerance)
        throw std::invalid_argument("StiefelConfig: block " + std::to_string(i) +
                                    " is not orthonormal");
    }
    rows_ = std::make_shared<const Matrix>(std::move(rows));
  }

  static StiefelConfig adopt(std::shared_ptr<const Matrix> rows, Index d) {
    return StiefelConfig(std::move(rows), d, 0);
  }

  /// O(1,k) is the unit sphere; shares storage with the sphere point.
  static StiefelConfig from_sphere(const SphereConfig& s) { return adopt(s.storage(), 1); }

  SphereConfig as_sphere() const {
    if (d_ != 1) throw std::logic_error("StiefelConfig::as_sphere requires d = 1");
    return SphereConfig::adopt(rows_);
  }

  Index m() const { return rows_->rows() / d_; }
  Index d() const { return d_; }
  Index k() const { return rows_->cols(); }
  Index n() const { return rows_->rows(); }
  const Matrix& rows() const { return *rows_; }
  auto block(Index i) const { return rows_->middleRows(i * d_, d_); }

  bool same_point(const StiefelConfig& other) const { return rows_ == other.rows_; }
  const std::shared_ptr<const Matrix>& storage() const { return rows_; }

 private:
  StiefelConfig(std::shared_ptr<const Matrix> rows, Index d, int) : rows_(std::move(rows)), d_(d) {}

  std::shared_ptr<const Matrix> rows_;
  Index d_ = 1;
};

class StiefelTangent {
 public:
  static constexpr double kSkewTolerance = 1e-9;

  StiefelTangent(StiefelConfig base, Matrix rows) : base_(std::move(base)), rows_(std::move(rows)) {
    require_shape(rows_.rows() == base_.n() && rows_.cols() == base_.k(), "StiefelTangent");
    const Index d = base_.d();
    for (Index i = 0; i < base_.m(); ++i) {
      const Matrix c = base_.block(i) * rows_.middleRows(i * d, d).transpose();
      const double scale = std::max(1.0, rows_.middleRows(i * d, d).norm());
      if ((c + c.transpose()).norm() > kSkewTolerance * scale)
        throw std::invalid_argument("StiefelTangent: block " + std::to_string(i) +
                                    " violates the tangency condition");
    }
  }

  struct Trusted {};
  StiefelTangent(StiefelConfig base, Matrix rows, Trusted)
      : base_(std::move(base)), rows_(std::move(rows)) {}

  static StiefelTangent from_sphere(const TangentField& u) {
    return {StiefelConfig::from_sphere(u.base()), u.rows(), Trusted{}};
  }

  TangentField as_sphere() const { return {base_.as_sphere(), rows_, TangentField::Trusted{}}; }

  const StiefelConfig& base() const { return base_; }
  const Matrix& rows() const { return rows_; }
  double norm() const { return rows_.norm(); }

  StiefelTangent scaled(double c) const { return {base_, c * rows_, Trusted{}}; }
  StiefelTangent normalized() const { return scaled(1.0 / norm()); }

 private:
  StiefelConfig base_;
  Matrix rows_;
};

inline double inner(const StiefelTangent& u, const StiefelTangent& v) {
  require_shape(u.rows().rows() == v.rows().rows() && u.rows().cols() == v.rows().cols(),
                "inner");
  return frobenius_inner(u.rows(), v.rows());
}

namespace detail {

inline Matrix sym(const Matrix& x) { return 0.5 * (x + x.transpose()); }

inline void require_blocks(const SymmetricMatrix& a, const StiefelConfig& s, const char* where) {
  const bool ok = a.block_dim() ? *a.block_dim() == s.d() : s.d() == 1;
  if (!ok)
    throw std::invalid_argument(std::string(where) +
                                ": matrix lacks block structure matching d = " +
                                std::to_string(s.d()));
  require_shape(a.n() == s.n(), where);
}

/// Orthonormal polar factor of a d x k block with full row rank.
inline Matrix polar_rows(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.singularValues().minCoeff() < 1e-12)
    throw std::domain_error("retraction undefined: rank-deficient block");
  return svd.matrixU() * svd.matrixV().transpose();
}

}  // namespace detail

/// Blockwise V_i - sym(V_i Y_i^T) Y_i: removes the normal component
/// Y_i S with S symmetric.
inline StiefelTangent oc_project_tangent(const StiefelConfig& s, const Matrix& v) {
  require_shape(v.rows() == s.n() && v.cols() == s.k(), "oc_project_tangent");
  if (s.d() == 1) return StiefelTangent::from_sphere(project_tangent(s.as_sphere(), v));
  const Index d = s.d();
  Matrix out = v;
  for (Index i = 0; i < s.m(); ++i) {
    const Matrix yi = s.block(i);
    const Matrix vi = v.middleRows(i * d, d);
    out.middleRows(i * d, d) -= detail::sym(vi * yi.transpose()) * yi;
  }
  return {s, std::move(out), StiefelTangent::Trusted{}};
}

/// Blockwise polar factor of Y_i + t U_i, the nearest orthonormal frame.
inline StiefelConfig oc_retract(const StiefelConfig& s, const StiefelTangent& u, double t) {
  require_shape(u.rows().rows() == s.n() && u.rows().cols() == s.k(), "oc_retract");
  if (s.d() == 1) return StiefelConfig::from_sphere(retract(s.as_sphere(), u.as_sphere(), t));
  if (t == 0.0) return s;
  const Index d = s.d();
  Matrix next(s.n(), s.k());
  for (Index i = 0; i < s.m(); ++i)
    next.middleRows(i * d, d) =
        detail::polar_rows(s.block(i) + t * u.rows().middleRows(i * d, d));
  return StiefelConfig::adopt(std::make_shared<const Matrix>(std::move(next)), d);
}

inline double oc_objective(const SymmetricMatrix& a, const StiefelConfig& s) {
  detail::require_blocks(a, s, "oc_objective");
  if (s.d() == 1) return objective(a, s.as_sphere());
  return frobenius_inner(s.rows(), a.multiply(s.rows()));
}

struct StiefelEvaluation {
  Matrix a_sigma;
  Matrix lambda;  // (m d) x d, block i = sym((A s)_i Y_i^T)
  double f = 0.0;
  StiefelTangent grad;
  double grad_norm = 0.0;
};

inline StiefelEvaluation oc_evaluate(const SymmetricMatrix& a, const StiefelConfig& s) {
  detail::require_blocks(a, s, "oc_evaluate");
  if (s.d() == 1) {
    SphereEvaluation e = evaluate(a, s.as_sphere());
    Matrix lam = e.lambda;
    return {std::move(e.a_sigma), std::move(lam), e.f, StiefelTangent::from_sphere(e.grad),
            e.grad_norm};
  }
  const Index d = s.d();
  Matrix as = a.multiply(s.rows());
  Matrix lambda(s.n(), d);
  Matrix g(s.n(), s.k());
  for (Index i = 0; i < s.m(); ++i) {
    const Matrix yi = s.block(i);
    const Matrix gi = as.middleRows(i * d, d);
    const Matrix li = detail::sym(gi * yi.transpose());
    lambda.middleRows(i * d, d) = li;
    g.middleRows(i * d, d) = 2.0 * (gi - li * yi);
  }
  const double f = frobenius_inner(s.rows(), as);
  StiefelTangent grad(s, std::move(g), StiefelTangent::Trusted{});
  const double gn = grad.norm();
  return {std::move(as), std::move(lambda), f, std::move(grad), gn};
}

/// Riemannian gradient 2 (A - Lambda) s with Lambda block diagonal.
inline StiefelTangent oc_gradient(const SymmetricMatrix& a, const StiefelConfig& s) {
  return oc_evaluate(a, s).grad;
}

/// Riemannian Hessian on O(d,k)^m at a fixed point; caches the Lambda blocks.
class OcHessianOperator {
 public:
  OcHessianOperator(const SymmetricMatrix& a, StiefelConfig base)
      : a_(&a), base_(std::move(base)) {
    detail::require_blocks(a, base_, "OcHessianOperator");
    if (base_.d() == 1) {
      sphere_.emplace(a, base_.as_sphere());
      lambda_ = sphere_->lambda();
      return;
    }
    const Index d = base_.d();
    const Matrix as = a.multiply(base_.rows());
    lambda_.resize(base_.n(), d);
    for (Index i = 0; i < base_.m(); ++i)
      lambda_.middleRows(i * d, d) =
          detail::sym(as.middleRows(i * d, d) * base_.block(i).transpose());
  }

  const StiefelConfig& base() const { return base_; }
  const Matrix& lambda() const { return lambda_; }

  Matrix shifted_product(const Matrix& u) const {
    if (sphere_) return sphere_->shifted_product(u);
    const Index d = base_.d();
    Matrix lu(u.rows(), u.cols());
    for (Index i = 0; i < base_.m(); ++i)
      lu.middleRows(i * d, d) = lambda_.middleRows(i * d, d) * u.middleRows(i * d, d);
    return 2.0 * (a_->multiply(u) - lu);
  }

  StiefelTangent apply(const StiefelTangent& u) const {
    check_base(u);
    if (sphere_) return StiefelTangent::from_sphere(sphere_->apply(u.as_sphere()));
    return oc_project_tangent(base_, shifted_product(u.rows()));
  }

  /// 2 <u, (A - Lambda) u> / <u, u>.
  double rayleigh(const StiefelTangent& u) const {
    check_base(u);
    if (sphere_) return sphere_->rayleigh(u.as_sphere());
    const double uu = u.rows().squaredNorm();
    if (!(uu > 0.0)) throw std::invalid_argument("oc_rayleigh: zero tangent");
    return frobenius_inner(u.rows(), shifted_product(u.rows())) / uu;
  }

 private:
  void check_base(const StiefelTangent& u) const {
    if (!u.base().same_point(base_) && u.base().rows() != base_.rows())
      throw std::invalid_argument("OcHessianOperator: tangent is based at a different point");
  }

  const SymmetricMatrix* a_;
  StiefelConfig base_;
  Matrix lambda_;
  std::optional<HessianOperator> sphere_;
};

inline double oc_rayleigh(const SymmetricMatrix& a, const StiefelConfig& s,
                          const StiefelTangent& u) {
  return OcHessianOperator(a, s).rayleigh(u);
}

/// Polar factors of Gaussian blocks are Haar distributed on O(d,k).
inline StiefelConfig oc_random_config(Index m, Index d, Index k, Rng& rng) {
  if (m < 1 || d < 1 || k < d)
    throw std::invalid_argument("oc_random_config: requires m, d >= 1 and k >= d");
  if (d == 1) return StiefelConfig::from_sphere(random_config(m, k, rng));
  Matrix rows(m * d, k);
  for (Index i = 0; i < m; ++i)
    rows.middleRows(i * d, d) = detail::polar_rows(gaussian_matrix(d, k, rng));
  return StiefelConfig::adopt(std::make_shared<const Matrix>(std::move(rows)), d);
}

inline StiefelConfig oc_random_config(Index m, Index d, Index k, std::uint64_t seed) {
  Rng rng(seed);
  return oc_random_config(m, d, k, rng);
}

inline StiefelTangent oc_random_tangent(const StiefelConfig& s, Rng& rng) {
  if (s.d() == 1) return StiefelTangent::from_sphere(random_tangent(s.as_sphere(), rng));
  StiefelTangent u = oc_project_tangent(s, gaussian_matrix(s.n(), s.k(), rng));
  const double nrm = u.norm();
  return nrm > 0.0 ? u.scaled(1.0 / nrm) : u;
}

inline StiefelTangent oc_random_tangent(const StiefelConfig& s, std::uint64_t seed) {
  Rng rng(seed);
  return oc_random_tangent(s, rng);
}

// ---- text format -----------------------------------------------------------
//
//   occonfig m <m> d <d> k <k>
//   m*d lines of k values, 17 significant digits

inline void write_oc_config(std::ostream& os, const StiefelConfig& s) {
  os << "occonfig m " << s.m() << " d " << s.d() << " k " << s.k() << '\n';
  write_matrix_rows(os, s.rows());
}

inline StiefelConfig read_oc_config(std::istream& is) {
  std::string tag, km, kd, kk;
  Index m = 0, d = 0, k = 0;
  if (!(is >> tag >> km >> m >> kd >> d >> kk >> k) || tag != "occonfig" || km != "m" ||
      kd != "d" || kk != "k")
    throw std::runtime_error("read_oc_config: bad header");
  return StiefelConfig(read_matrix_rows(is, m * d, k), d);
}

}  // namespace bmsdp
