#pragma once

// Oracles and fixtures shared by the unit tests and the acceptance suite.
// The oracles are built from dense linear algebra independently of the
// library kernels they check.

#include "bmsdp/bmsdp.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <functional>

namespace bmsdp::testing {

inline Matrix random_symmetric(Index n, std::uint64_t seed) {
  Rng rng(seed);
  const Matrix g = gaussian_matrix(n, n, rng);
  return 0.5 * (g + g.transpose());
}

inline SymmetricMatrix random_sparse(Index n, double density, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Triplet> t;
  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j)
      if (unif(rng) < density) t.emplace_back(i, j, normal(rng));
  return SymmetricMatrix::from_triplets(n, t, true);
}

/// Row-major flattening of an n x k matrix into R^{nk}.
inline Vector flatten(const Matrix& m) {
  Vector v(m.size());
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) v(i * m.cols() + j) = m(i, j);
  return v;
}

inline Matrix unflatten(const Vector& v, Index rows, Index cols) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = v(i * cols + j);
  return m;
}

/// Orthonormal basis (columns, in flattened coordinates) of the tangent
/// space of the sphere product at s: for each row, the complement of s_i.
inline Matrix sphere_tangent_basis(const Matrix& s) {
  const Index n = s.rows(), k = s.cols();
  Matrix b = Matrix::Zero(n * k, n * (k - 1));
  for (Index i = 0; i < n; ++i) {
    // Householder-free complement: full QR of s_i^T.
    Eigen::HouseholderQR<Matrix> qr(s.row(i).transpose());
    const Matrix q = qr.householderQ() * Matrix::Identity(k, k);
    for (Index c = 1; c < k; ++c)
      for (Index j = 0; j < k; ++j) b(i * k + j, i * (k - 1) + c - 1) = q(j, c);
  }
  return b;
}

/// Dense Riemannian Hessian in the tangent basis from the Euclidean Hessian
/// 2 (A kron I_k) and the Weingarten correction -2 Lambda kron I_k.
inline Matrix dense_sphere_hessian(const Matrix& a, const Matrix& s) {
  const Index n = s.rows(), k = s.cols();
  const Matrix as = a * s;
  Matrix big = Matrix::Zero(n * k, n * k);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      big.block(i * k, j * k, k, k) = 2.0 * a(i, j) * Matrix::Identity(k, k);
  for (Index i = 0; i < n; ++i) {
    const double lam = s.row(i).dot(as.row(i));
    big.block(i * k, i * k, k, k) -= 2.0 * lam * Matrix::Identity(k, k);
  }
  const Matrix b = sphere_tangent_basis(s);
  return b.transpose() * big * b;
}

inline double dense_lambda_max(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
  return eig.eigenvalues().maxCoeff();
}

/// Projection onto the null space of the linearized Stiefel constraints
/// V_i Y_i^T + Y_i V_i^T = 0, built from the explicit constraint Jacobian.
inline Matrix stiefel_constraint_projector(const Matrix& y, Index d) {
  const Index m = y.rows() / d, k = y.cols();
  const Index per = d * (d + 1) / 2;
  Matrix j = Matrix::Zero(m * per, y.size());
  for (Index b = 0; b < m; ++b) {
    Index row = b * per;
    for (Index p = 0; p < d; ++p)
      for (Index q = p; q < d; ++q, ++row) {
        // d/dV of (V Y^T + Y V^T)_{pq} = <V_p, Y_q> + <Y_p, V_q>.
        for (Index c = 0; c < k; ++c) {
          j(row, (b * d + p) * k + c) += y(b * d + q, c);
          j(row, (b * d + q) * k + c) += y(b * d + p, c);
        }
      }
  }
  const Matrix pinv = j.completeOrthogonalDecomposition().pseudoInverse();
  return Matrix::Identity(y.size(), y.size()) - pinv * j;
}

/// Retraction curve extended to negative t through -u.
inline SphereConfig retract_signed(const SphereConfig& s, const TangentField& u, double t) {
  return t >= 0.0 ? retract(s, u, t) : retract(s, u.scaled(-1.0), -t);
}

inline StiefelConfig retract_signed(const StiefelConfig& s, const StiefelTangent& u, double t) {
  return t >= 0.0 ? oc_retract(s, u, t) : oc_retract(s, u.scaled(-1.0), -t);
}

/// Central first and second differences of t -> g(t) at 0.
inline double central_first(const std::function<double(double)>& g, double h) {
  return (g(h) - g(-h)) / (2.0 * h);
}

inline double central_second(const std::function<double(double)>& g, double h) {
  return (g(h) - 2.0 * g(0.0) + g(-h)) / (h * h);
}

/// Third derivative by the five-point central stencil.
inline double central_third(const std::function<double(double)>& g, double t, double h) {
  return (g(t + 2 * h) - 2 * g(t + h) + 2 * g(t - h) - g(t - 2 * h)) / (2 * h * h * h);
}

/// Exhaustive max over x in {+-1}^n of x^T A x (n <= 20).
inline double max_quadratic_pm1(const Matrix& a) {
  const Index n = a.rows();
  double best = -std::numeric_limits<double>::infinity();
  for (std::uint64_t code = 0; code < (std::uint64_t{1} << n); ++code) {
    Vector x(n);
    for (Index i = 0; i < n; ++i) x(i) = (code >> i) & 1 ? -1.0 : 1.0;
    best = std::max(best, x.dot(a * x));
  }
  return best;
}

/// Random graph with independent edges of probability p.
inline SymmetricMatrix random_graph(Index n, double p, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Triplet> t;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      if (unif(rng) < p) t.emplace_back(i, j, 1.0);
  return SymmetricMatrix::from_triplets(n, t, false);
}

}  // namespace bmsdp::testing
