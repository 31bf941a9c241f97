#pragma once

// Rounding, estimation metrics, high-rank SDP value estimates and the
// Grothendieck-type bound checks for the sphere and Stiefel problems.

#include "bmsdp/common.hpp"
#include "bmsdp/solver.hpp"
#include "bmsdp/sphere_manifold.hpp"
#include "bmsdp/stiefel_manifold.hpp"
#include "bmsdp/symmat.hpp"

#include <Eigen/Eigenvalues>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

namespace bmsdp {

/// Goemans-Williamson constant, truncated.
inline constexpr double kGwAlpha = 0.878;

/// Lower-bound estimates of SDP(A) and SDP(-A). Each value is the objective
/// of a feasible point, so it never exceeds the true optimum. Bounds derived
/// from these estimates are therefore conservative in one direction only:
/// an underestimated SDP(A) makes f(s) look closer to the optimum.
struct SdpEstimate {
  double value_plus = 0.0;
  double value_minus = 0.0;
  Index rank_used = 0;
  double epsilon_used = 0.0;
  double rg = 0.0;
  bool converged_plus = true;
  bool converged_minus = true;
  /// Row matrices of the points behind value_plus and value_minus.
  Matrix point_plus;
  Matrix point_minus;

  bool converged() const { return converged_plus && converged_minus; }
};

struct SdpEstimateOptions {
  /// Coordinate-ascent warm start: stop after this many sweeps, or once
  /// ||grad||_F <= sweep_grad_tol * sqrt(n).
  long max_sweeps = 300;
  double sweep_grad_tol = 1e-3;
  /// Budget for the certifying trust-region run started at the warm start.
  long max_iters = 2000;
  std::optional<Index> rank;
};

/// Smallest rank above which every SDP optimum has a factorization:
/// r (r + 1) / 2 > m d (d + 1) / 2, i.e. ceil(sqrt(2 n)) + 1 for d = 1.
inline Index sdp_rank(Index m, Index d) {
  const double v = std::sqrt(static_cast<double>(m) * static_cast<double>(d * (d + 1)));
  return static_cast<Index>(std::ceil(v)) + 1;
}

/// Block coordinate ascent: each block is replaced by the maximizer of f with
/// the other blocks fixed, polar(sum_{j != i} A_ij Y_j) (row normalization
/// for d = 1). Monotone in f.
inline Matrix coordinate_ascent_rows(const SymmetricMatrix& a, Matrix s, Index d, long max_sweeps,
                                     double grad_tol) {
  const Index m = s.rows() / d;
  Matrix as = a.multiply(s);
  Matrix diag_blocks(s.rows(), d);
  for (Index i = 0; i < m; ++i)
    for (Index r = 0; r < d; ++r)
      for (Index c = 0; c < d; ++c) diag_blocks(i * d + r, c) = a.entry(i * d + r, i * d + c);

  auto grad_norm = [&] {
    if (d == 1) {
      const Vector lam = (s.array() * as.array()).rowwise().sum();
      return (2.0 * (as - lam.asDiagonal() * s)).norm();
    }
    double acc = 0.0;
    for (Index i = 0; i < m; ++i) {
      const Matrix g = as.middleRows(i * d, d);
      const Matrix y = s.middleRows(i * d, d);
      const Matrix gy = g * y.transpose();
      acc += (g - 0.5 * (gy + gy.transpose()) * y).squaredNorm();
    }
    return 2.0 * std::sqrt(acc);
  };

  for (long sweep = 0; sweep < max_sweeps; ++sweep) {
    if (sweep % 10 == 0) {
      as = a.multiply(s);  // drop accumulated rounding
      if (grad_norm() <= grad_tol) break;
    }
    for (Index i = 0; i < m; ++i) {
      const Matrix y = s.middleRows(i * d, d);
      const Matrix g = as.middleRows(i * d, d) - diag_blocks.middleRows(i * d, d) * y;
      Matrix next;
      if (d == 1) {
        const double nrm = g.norm();
        if (!(nrm > 0.0)) continue;
        next = g / nrm;
      } else {
        Eigen::JacobiSVD<Matrix> svd(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
        if (!(svd.singularValues().minCoeff() > 1e-12)) continue;
        next = svd.matrixU() * svd.matrixV().transpose();
      }
      const Matrix diff = next - y;
      s.middleRows(i * d, d) = next;
      for (Index r = 0; r < d; ++r) a.add_column_outer(i * d + r, diff.row(r), as);
    }
  }
  return s;
}

inline SphereConfig coordinate_ascent(const SymmetricMatrix& a, const SphereConfig& s0,
                                      long max_sweeps, double grad_tol) {
  require_shape(a.n() == s0.n(), "coordinate_ascent");
  return SphereConfig::normalized(coordinate_ascent_rows(a, s0.rows(), 1, max_sweeps, grad_tol));
}

inline StiefelConfig oc_coordinate_ascent(const SymmetricMatrix& a, const StiefelConfig& s0,
                                          long max_sweeps, double grad_tol) {
  detail::require_blocks(a, s0, "oc_coordinate_ascent");
  if (s0.d() == 1)
    return StiefelConfig::from_sphere(coordinate_ascent(a, s0.as_sphere(), max_sweeps, grad_tol));
  return StiefelConfig(coordinate_ascent_rows(a, s0.rows(), s0.d(), max_sweeps, grad_tol), s0.d());
}

namespace detail {

template <class G, class Ascent>
SdpEstimate estimate_sdp_impl(const SymmetricMatrix& a, double epsilon, std::uint64_t seed,
                              const SdpEstimateOptions& o, Index rank, Ascent&& ascent) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("estimate_sdp: epsilon must be positive");
  SdpEstimate est;
  est.rank_used = rank;
  est.epsilon_used = epsilon;
  if (a.l1() == 0.0) {
    est.point_plus = est.point_minus = Matrix::Zero(a.n(), rank);
    return est;
  }
  const double tol = o.sweep_grad_tol * std::sqrt(static_cast<double>(a.n()));
  for (int sign = 0; sign < 2; ++sign) {
    const SymmetricMatrix b = sign == 0 ? a : a.negated();
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(sign)));
    auto start = ascent(b, G::random_point(b, rank, rng), o.max_sweeps, tol);
    SolverOptions so;
    so.k = rank;
    so.mode = RtrMode::GradientEigen;
    so.epsilon = epsilon;
    so.max_iters = o.max_iters;
    so.seed = derive_seed(seed, static_cast<std::uint64_t>(sign) + 2);
    so.record_trace = false;
    const auto rep = solve<G>(b, so, start);
    (sign == 0 ? est.value_plus : est.value_minus) = rep.objective;
    (sign == 0 ? est.converged_plus : est.converged_minus) = rep.converged;
    (sign == 0 ? est.point_plus : est.point_minus) = rep.sigma.rows();
  }
  est.rg = est.value_plus + est.value_minus;
  return est;
}

}  // namespace detail

/// Estimates SDP(A) and SDP(-A) by rank-k* solves, k* = ceil(sqrt(2n)) + 1.
/// A coordinate-ascent warm start precedes the certifying trust-region run.
inline SdpEstimate estimate_sdp(const SymmetricMatrix& a, double epsilon, std::uint64_t seed,
                                const SdpEstimateOptions& o = {}) {
  const Index rank = o.rank.value_or(sdp_rank(a.n(), 1));
  return detail::estimate_sdp_impl<SphereGeometry>(
      a, epsilon, seed, o, rank, [](const SymmetricMatrix& b, const SphereConfig& s, long sw, double t) {
        return coordinate_ascent(b, s, sw, t);
      });
}

/// Orthogonal-Cut version; the rank is sqrt(m d (d + 1)) rounded up, plus one.
inline SdpEstimate oc_estimate_sdp(const SymmetricMatrix& a, double epsilon, std::uint64_t seed,
                                   const SdpEstimateOptions& o = {}) {
  const Index d = a.block_dim().value_or(1);
  const Index rank = o.rank.value_or(sdp_rank(a.n() / d, d));
  return detail::estimate_sdp_impl<StiefelGeometry>(
      a, epsilon, seed, o, rank,
      [](const SymmetricMatrix& b, const StiefelConfig& s, long sw, double t) {
        return oc_coordinate_ascent(b, s, sw, t);
      });
}

/// Weak-duality upper bound on SDP(A) from any point with unit rows: with
/// Lambda = ddiag(A s s^T), <A, X> = <A - Lambda, X> + tr(Lambda) for every
/// feasible X, so SDP(A) <= tr(Lambda) + n max(0, lambda_max(A - Lambda)).
/// Dense eigensolve, O(n^3).
inline double sdp_dual_bound(const SymmetricMatrix& a, const Matrix& s) {
  require_shape(a.n() == s.rows(), "sdp_dual_bound");
  Matrix dense = a.to_dense();
  const Vector lam = (s.array() * a.multiply(s).array()).rowwise().sum();
  dense.diagonal() -= lam;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(dense, Eigen::EigenvaluesOnly);
  return lam.sum() + static_cast<double>(a.n()) * std::max(0.0, eig.eigenvalues().maxCoeff());
}

struct BoundCheck {
  bool holds = true;
  /// f(s) minus the lower bound; negative means the bound is violated.
  double slack = 0.0;
  double bound = 0.0;
  double f = 0.0;
};

/// Default tolerance for bound checks, 1e-6 n ||A||_1.
inline double bound_tolerance(const SymmetricMatrix& a) {
  return 1e-6 * static_cast<double>(a.n()) * a.l1();
}

namespace detail {

inline BoundCheck bound_check(double f, double k_eff, Index n, double epsilon,
                              const SdpEstimate& est, double tol) {
  if (!(k_eff > 1.0)) throw std::invalid_argument("grothendieck_check: effective rank must exceed 1");
  BoundCheck c;
  c.f = f;
  c.bound = est.value_plus - est.rg / (k_eff - 1.0) - 0.5 * static_cast<double>(n) * epsilon;
  c.slack = f - c.bound;
  c.holds = c.slack >= -tol;
  return c;
}

}  // namespace detail

/// f(s) >= SDP(A) - Rg(A) / (k - 1) - n eps / 2 with SDP and Rg replaced by
/// estimates. A negative `tol` selects bound_tolerance(a).
inline BoundCheck grothendieck_check(const SymmetricMatrix& a, const SphereConfig& s,
                                     double epsilon, const SdpEstimate& est, double tol = -1.0) {
  require_shape(a.n() == s.n(), "grothendieck_check");
  if (s.k() < 2) throw std::invalid_argument("grothendieck_check: requires k >= 2");
  return detail::bound_check(objective(a, s), static_cast<double>(s.k()), s.n(), epsilon, est,
                             tol < 0.0 ? bound_tolerance(a) : tol);
}

/// Same check with k replaced by k_d = 2k / (d + 1).
inline BoundCheck oc_grothendieck_check(const SymmetricMatrix& a, const StiefelConfig& s,
                                        double epsilon, const SdpEstimate& est, double tol = -1.0) {
  detail::require_blocks(a, s, "oc_grothendieck_check");
  const double kd = 2.0 * static_cast<double>(s.k()) / static_cast<double>(s.d() + 1);
  if (!(kd > 1.0)) throw std::invalid_argument("oc_grothendieck_check: requires 2k / (d + 1) > 1");
  return detail::bound_check(oc_objective(a, s), kd, s.n(), epsilon, est,
                             tol < 0.0 ? bound_tolerance(a) : tol);
}

// ---- rounding and metrics --------------------------------------------------

struct RoundingResult {
  Vector labels;
  double value = 0.0;
  long samples_tried = 0;
};

/// sign with ties mapped to +1.
inline double sign_pos(double x) { return x < 0.0 ? -1.0 : 1.0; }

/// (1/4) sum_ij A_ij (1 - x_i x_j).
inline double cut_value(const SymmetricMatrix& a, const Vector& x) {
  require_shape(x.size() == a.n(), "cut_value");
  const Vector ones = Vector::Ones(a.n());
  const double total = ones.dot(a.multiply(ones).col(0));
  const double quad = x.dot(a.multiply(x).col(0));
  return 0.25 * (total - quad);
}

inline void require_nonnegative(const SymmetricMatrix& a, const char* where) {
  bool ok = true;
  if (a.has_rank_one()) {
    ok = (a.to_dense().array() >= 0.0).all();
  } else {
    a.for_each_core_upper([&](Index, Index, double v) { ok = ok && v >= 0.0; });
  }
  if (!ok) throw std::invalid_argument(std::string(where) + ": negative edge weight");
}

/// Hyperplane rounding: v_i = sign(<s_i, g>) for Gaussian g, best cut of
/// `num_samples` draws. The draws form one stream, so the best value is
/// non-decreasing in num_samples for a fixed seed.
inline RoundingResult gw_round(const SymmetricMatrix& adj, const Matrix& s, long num_samples,
                               std::uint64_t seed) {
  require_shape(adj.n() == s.rows(), "gw_round");
  if (num_samples < 1) throw std::invalid_argument("gw_round: num_samples must be >= 1");
  require_nonnegative(adj, "gw_round");
  Rng rng(seed);
  RoundingResult best;
  best.value = -std::numeric_limits<double>::infinity();
  for (long t = 0; t < num_samples; ++t) {
    const Vector g = gaussian_matrix(s.cols(), 1, rng).col(0);
    const Vector proj = s * g;
    Vector x = proj.unaryExpr([](double v) { return sign_pos(v); });
    const double val = cut_value(adj, x);
    if (val > best.value) {
      best.value = val;
      best.labels = std::move(x);
    }
  }
  best.samples_tried = num_samples;
  return best;
}

inline RoundingResult gw_round(const SymmetricMatrix& adj, const SphereConfig& s,
                               long num_samples, std::uint64_t seed) {
  return gw_round(adj, s.rows(), num_samples, seed);
}

/// Exhaustive MaxCut over the 2^(n-1) sign patterns with x_0 = +1, visited in
/// Gray-code order with O(n) updates.
inline double maxcut_bruteforce(const SymmetricMatrix& adj) {
  const Index n = adj.n();
  if (n > 24) throw std::invalid_argument("maxcut_bruteforce: n must be <= 24");
  const Matrix a = adj.to_dense();
  const double total = a.sum();
  Vector x = Vector::Ones(n);
  Vector ax = a * x;
  double quad = x.dot(ax);
  double best = quad;
  const std::uint64_t count = n > 1 ? (std::uint64_t{1} << (n - 1)) : 1;
  for (std::uint64_t code = 1; code < count; ++code) {
    const Index i = 1 + static_cast<Index>(std::countr_zero(code));
    // Flipping x_i: quad changes by -4 x_i (ax_i - a_ii x_i).
    quad -= 4.0 * x(i) * (ax(i) - a(i, i) * x(i));
    ax -= 2.0 * x(i) * a.col(i);
    x(i) = -x(i);
    best = std::min(best, quad);
  }
  return 0.25 * (total - best);
}

/// Entrywise sign (ties to +1) of the top left singular vector of s. The
/// singular vector is s v with v the top eigenvector of the k x k matrix
/// s^T s, oriented so that its largest-magnitude entry is positive.
inline Vector principal_sign(const Matrix& s) {
  if (s.size() == 0 || s.norm() == 0.0) throw std::invalid_argument("principal_sign: zero input");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s.transpose() * s);
  Vector v = eig.eigenvectors().col(s.cols() - 1);
  Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  if (v(imax) < 0.0) v = -v;
  return (s * v).unaryExpr([](double x) { return sign_pos(x); });
}

inline Vector principal_sign(const SphereConfig& s) { return principal_sign(s.rows()); }

/// ||s^T u||^2 / n^2, in [0, 1] for unit rows and u in {+-1}^n.
inline double correlation(const Matrix& s, const Vector& u) {
  require_shape(s.rows() == u.size(), "correlation");
  const double n = static_cast<double>(u.size());
  return (s.transpose() * u).squaredNorm() / (n * n);
}

inline double correlation(const SphereConfig& s, const Vector& u) {
  return correlation(s.rows(), u);
}

/// (<x, u> / n)^2 for two label vectors.
inline double overlap(const Vector& x, const Vector& u) {
  require_shape(x.size() == u.size(), "overlap");
  const double r = x.dot(u) / static_cast<double>(u.size());
  return r * r;
}

}  // namespace bmsdp
