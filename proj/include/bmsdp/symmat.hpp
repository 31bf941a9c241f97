#pragma once

#include "bmsdp/common.hpp"

#include <Eigen/SparseCore>

#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <utility>
#include <variant>
#include <vector>

namespace bmsdp {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<double>;

struct NormCache {
  double l1 = 0.0;
  double l2_est = 0.0;
  double fro = 0.0;
  bool l2_converged = true;
};

struct OpnormResult {
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

class SymmetricMatrix;
OpnormResult opnorm_estimate(const SymmetricMatrix& a, double rel_tol,
                             int max_iters, std::uint64_t seed);

/// Real symmetric n x n matrix, stored dense or as a full-pattern sparse
/// matrix, optionally carrying a lazily applied rank-one term:
///
///   A = scale * (core + alpha * w w^T)
///
/// Instances are immutable and cheap to copy; negation and block-view
/// changes share the underlying storage.
class SymmetricMatrix {
 public:
  static constexpr double kAsymmetryTolerance = 1e-8;

  static SymmetricMatrix from_dense(Matrix m,
                                    std::optional<Index> block_dim = {}) {
    require_shape(m.rows() == m.cols(), "SymmetricMatrix::from_dense");
    const double scale = std::max(m.norm(), 1e-300);
    if ((m - m.transpose()).norm() > kAsymmetryTolerance * scale)
      throw std::invalid_argument("SymmetricMatrix: input is not symmetric");
    Matrix sym = 0.5 * (m + m.transpose());
    auto core = std::make_shared<Core>();
    core->n = sym.rows();
    core->storage = std::move(sym);
    return SymmetricMatrix(finish(std::move(core)), 1.0, block_dim);
  }

  static SymmetricMatrix from_sparse(const SparseMatrix& m,
                                     std::optional<Index> block_dim = {}) {
    require_shape(m.rows() == m.cols(), "SymmetricMatrix::from_sparse");
    SparseMatrix t = m.transpose();
    const double scale = std::max(m.norm(), 1e-300);
    if (SparseMatrix(m - t).norm() > kAsymmetryTolerance * scale)
      throw std::invalid_argument("SymmetricMatrix: input is not symmetric");
    SparseMatrix sym = 0.5 * (m + t);
    sym.makeCompressed();
    auto core = std::make_shared<Core>();
    core->n = sym.rows();
    core->storage = std::move(sym);
    return SymmetricMatrix(finish(std::move(core)), 1.0, block_dim);
  }

  /// Builds from entries of one or both triangles. Each unordered pair may be
  /// listed once or twice; duplicates must agree. Entries are mirrored.
  static SymmetricMatrix from_triplets(Index n, const std::vector<Triplet>& entries,
                                       bool sparse,
                                       std::optional<Index> block_dim = {}) {
    if (n < 1) throw std::invalid_argument("SymmetricMatrix: n must be positive");
    std::map<std::pair<Index, Index>, double> pairs;
    for (const auto& t : entries) {
      Index i = t.row(), j = t.col();
      if (i < 0 || j < 0 || i >= n || j >= n)
        throw std::out_of_range("SymmetricMatrix: triplet index out of range");
      if (i > j) std::swap(i, j);
      auto [it, inserted] = pairs.emplace(std::make_pair(i, j), t.value());
      if (!inserted && it->second != t.value())
        throw std::invalid_argument("SymmetricMatrix: conflicting entries for (" +
                                    std::to_string(i) + "," + std::to_string(j) + ")");
    }
    if (sparse) {
      std::vector<Triplet> full;
      full.reserve(2 * pairs.size());
      for (const auto& [ij, v] : pairs) {
        full.emplace_back(ij.first, ij.second, v);
        if (ij.first != ij.second) full.emplace_back(ij.second, ij.first, v);
      }
      SparseMatrix s(n, n);
      s.setFromTriplets(full.begin(), full.end());
      return from_sparse(s, block_dim);
    }
    Matrix d = Matrix::Zero(n, n);
    for (const auto& [ij, v] : pairs) {
      d(ij.first, ij.second) = v;
      d(ij.second, ij.first) = v;
    }
    return from_dense(std::move(d), block_dim);
  }

  static SymmetricMatrix identity(Index n) {
    return from_dense(Matrix::Identity(n, n));
  }

  static SymmetricMatrix zero(Index n) { return from_dense(Matrix::Zero(n, n)); }

  /// Returns this + alpha w w^T, kept lazy. Only one rank-one term is held;
  /// an existing one is densified into the core first.
  SymmetricMatrix plus_rank_one(double alpha, const Vector& w) const {
    require_shape(w.size() == n(), "SymmetricMatrix::plus_rank_one");
    auto core = std::make_shared<Core>();
    core->n = n();
    if (core_->alpha != 0.0) {
      core->storage = to_dense();
    } else if (scale_ == 1.0) {
      core->storage = core_->storage;
    } else {
      std::visit([&](const auto& s) { core->storage = std::decay_t<decltype(s)>(scale_ * s); },
                 core_->storage);
    }
    core->alpha = alpha;
    core->w = w;
    return SymmetricMatrix(finish(std::move(core)), 1.0, block_dim_);
  }

  SymmetricMatrix with_block_dim(std::optional<Index> d) const {
    return SymmetricMatrix(core_, scale_, d);
  }

  SymmetricMatrix negated() const { return SymmetricMatrix(core_, -scale_, block_dim_); }

  SymmetricMatrix scaled(double c) const {
    return SymmetricMatrix(core_, c * scale_, block_dim_);
  }

  Index n() const { return core_->n; }
  std::optional<Index> block_dim() const { return block_dim_; }
  bool is_sparse() const { return std::holds_alternative<SparseMatrix>(core_->storage); }
  bool has_rank_one() const { return core_->alpha != 0.0; }

  /// Number of stored entries of the core (full pattern).
  Index stored_entries() const {
    if (const auto* s = std::get_if<SparseMatrix>(&core_->storage)) return s->nonZeros();
    return n() * n();
  }

  Matrix multiply(const Matrix& x) const {
    require_shape(x.rows() == n() && x.cols() >= 1, "symmatmul");
    Matrix y = std::visit([&](const auto& s) -> Matrix { return s * x; }, core_->storage);
    if (core_->alpha != 0.0) {
      const Eigen::RowVectorXd wx = core_->w.transpose() * x;
      y.noalias() += (core_->alpha * core_->w) * wx;
    }
    if (scale_ != 1.0) y *= scale_;
    return y;
  }

  double entry(Index i, Index j) const {
    double v = std::visit(
        [&](const auto& s) -> double {
          if constexpr (std::is_same_v<std::decay_t<decltype(s)>, SparseMatrix>)
            return s.coeff(i, j);
          else
            return s(i, j);
        },
        core_->storage);
    if (core_->alpha != 0.0) v += core_->alpha * core_->w(i) * core_->w(j);
    return scale_ * v;
  }

  /// out += A(:, j) * row, without forming the column. O(nnz in row j + n k).
  void add_column_outer(Index j, const Eigen::RowVectorXd& row, Matrix& out) const {
    require_shape(out.rows() == n() && out.cols() == row.size(), "add_column_outer");
    if (const auto* s = std::get_if<SparseMatrix>(&core_->storage)) {
      // Row j equals column j by symmetry.
      for (SparseMatrix::InnerIterator it(*s, j); it; ++it)
        out.row(it.col()) += (scale_ * it.value()) * row;
    } else {
      out.noalias() += (scale_ * std::get<Matrix>(core_->storage).col(j)) * row;
    }
    if (core_->alpha != 0.0)
      out.noalias() += (scale_ * core_->alpha * core_->w(j) * core_->w) * row;
  }

  Matrix to_dense() const {
    Matrix d = std::visit([](const auto& s) -> Matrix { return Matrix(s); }, core_->storage);
    if (core_->alpha != 0.0) d.noalias() += core_->alpha * core_->w * core_->w.transpose();
    if (scale_ != 1.0) d *= scale_;
    return d;
  }

  /// Calls fn(i, j, value) for every stored entry of the core with i <= j,
  /// scaled. The rank-one term is not visited.
  template <class Fn>
  void for_each_core_upper(Fn&& fn) const {
    if (const auto* s = std::get_if<SparseMatrix>(&core_->storage)) {
      for (Index i = 0; i < s->outerSize(); ++i)
        for (SparseMatrix::InnerIterator it(*s, i); it; ++it)
          if (it.col() >= i) fn(i, it.col(), scale_ * it.value());
    } else {
      const auto& d = std::get<Matrix>(core_->storage);
      for (Index j = 0; j < d.cols(); ++j)
        for (Index i = 0; i <= j; ++i)
          if (d(i, j) != 0.0) fn(i, j, scale_ * d(i, j));
    }
  }

  /// Exact max column absolute sum.
  double l1() const { return std::abs(scale_) * core_->l1; }
  double fro() const { return std::abs(scale_) * core_->fro; }

  /// Power-iteration estimate of the operator norm, computed on first use
  /// with relative tolerance 1e-6 and cached with the storage.
  double l2() const {
    std::call_once(core_->l2_once, [this] {
      const SymmetricMatrix unit(core_, 1.0, std::nullopt);
      const OpnormResult r = opnorm_estimate(unit, 1e-6, 5000, 0x5eed);
      core_->l2 = r.value;
      core_->l2_converged = r.converged;
    });
    return std::abs(scale_) * core_->l2;
  }

  NormCache norms() const {
    NormCache c;
    c.l1 = l1();
    c.fro = fro();
    c.l2_est = l2();
    c.l2_converged = core_->l2_converged;
    return c;
  }

 private:
  struct Core {
    Index n = 0;
    std::variant<Matrix, SparseMatrix> storage;
    double alpha = 0.0;
    Vector w;
    double l1 = 0.0;
    double fro = 0.0;
    mutable std::once_flag l2_once;
    mutable double l2 = 0.0;
    mutable bool l2_converged = false;
  };

  SymmetricMatrix(std::shared_ptr<const Core> core, double scale,
                  std::optional<Index> block_dim)
      : core_(std::move(core)), scale_(scale), block_dim_(block_dim) {
    if (block_dim_) {
      if (*block_dim_ < 1 || core_->n % *block_dim_ != 0)
        throw std::invalid_argument("SymmetricMatrix: n must be a multiple of block_dim");
    }
  }

  static std::shared_ptr<const Core> finish(std::shared_ptr<Core> core) {
    const Index n = core->n;
    const double alpha = core->alpha;
    const Vector w = alpha != 0.0 ? core->w : Vector::Zero(n);
    Vector colsum = Vector::Zero(n);
    double fro2 = 0.0;
    if (const auto* s = std::get_if<SparseMatrix>(&core->storage)) {
      if (alpha != 0.0) {
        const double wsum = w.cwiseAbs().sum();
        colsum = std::abs(alpha) * wsum * w.cwiseAbs();
      }
      for (Index i = 0; i < s->outerSize(); ++i) {
        for (SparseMatrix::InnerIterator it(*s, i); it; ++it) {
          const double r = alpha * w(i) * w(it.col());
          colsum(it.col()) += std::abs(it.value() + r) - std::abs(r);
        }
      }
      const double ww = w.squaredNorm();
      const double wcw = alpha != 0.0 ? w.dot(*s * w) : 0.0;
      fro2 = s->squaredNorm() + 2.0 * alpha * wcw + alpha * alpha * ww * ww;
    } else {
      Matrix d = std::get<Matrix>(core->storage);
      if (alpha != 0.0) d.noalias() += alpha * w * w.transpose();
      colsum = d.cwiseAbs().colwise().sum().transpose();
      fro2 = d.squaredNorm();
    }
    core->l1 = n > 0 ? colsum.maxCoeff() : 0.0;
    core->fro = std::sqrt(std::max(fro2, 0.0));
    return core;
  }

  std::shared_ptr<const Core> core_;
  double scale_ = 1.0;
  std::optional<Index> block_dim_;
};

inline double l1_norm(const SymmetricMatrix& a) { return a.l1(); }

inline Matrix symmatmul(const SymmetricMatrix& a, const Matrix& x) { return a.multiply(x); }

/// Keeps the diagonal of a square matrix and zeroes everything else.
inline Matrix ddiag(const Matrix& b) {
  require_shape(b.rows() == b.cols(), "ddiag");
  return b.diagonal().asDiagonal();
}

/// Operator-norm estimate by power iteration on A^2 (v <- A(Av)), so that
/// negative extreme eigenvalues are captured. The estimate ||A v|| with
/// ||v|| = 1 never exceeds ||A||_2. Converged once the relative change stays
/// below rel_tol for three consecutive iterations.
inline OpnormResult opnorm_estimate(const SymmetricMatrix& a, double rel_tol,
                                    int max_iters, std::uint64_t seed) {
  if (!(rel_tol > 0.0 && rel_tol < 1.0))
    throw std::invalid_argument("opnorm_estimate: rel_tol must lie in (0, 1)");
  Rng rng(seed);
  Matrix v = gaussian_matrix(a.n(), 1, rng);
  v /= v.norm();
  OpnormResult out;
  double prev = -1.0;
  int stable = 0;
  for (int it = 1; it <= max_iters; ++it) {
    const Matrix y = a.multiply(v);
    const double est = y.norm();
    out.value = est;
    out.iterations = it;
    if (est == 0.0) {
      out.converged = true;
      return out;
    }
    if (prev > 0.0 && std::abs(est - prev) <= rel_tol * est) {
      if (++stable >= 3) {
        out.converged = true;
        return out;
      }
    } else {
      stable = 0;
    }
    prev = est;
    Matrix z = a.multiply(y);
    const double zn = z.norm();
    if (zn == 0.0) {
      out.converged = true;
      return out;
    }
    v = z / zn;
  }
  return out;
}

// ---- text format -----------------------------------------------------------
//
//   symmat n <n> [blockdim <d>]
//   i j value          (0-indexed; one triangle suffices, mirrored on read)

inline void write_symmat(std::ostream& os, const SymmetricMatrix& a) {
  os << "symmat n " << a.n();
  if (a.block_dim()) os << " blockdim " << *a.block_dim();
  os << '\n' << std::setprecision(17);
  if (a.has_rank_one()) {
    const Matrix d = a.to_dense();
    for (Index j = 0; j < d.cols(); ++j)
      for (Index i = 0; i <= j; ++i)
        if (d(i, j) != 0.0) os << i << ' ' << j << ' ' << d(i, j) << '\n';
  } else {
    a.for_each_core_upper([&](Index i, Index j, double v) {
      os << i << ' ' << j << ' ' << v << '\n';
    });
  }
}

/// Reads the text format. Storage is sparse when fewer than 10% of the
/// entries are nonzero.
inline SymmetricMatrix read_symmat(std::istream& is) {
  std::string line;
  while (std::getline(is, line) && (line.empty() || line[0] == '#')) {
  }
  std::istringstream header(line);
  std::string tag, key;
  Index n = 0;
  std::optional<Index> block_dim;
  header >> tag >> key >> n;
  if (tag != "symmat" || key != "n" || !header || n < 1)
    throw std::runtime_error("read_symmat: bad header '" + line + "'");
  if (header >> key) {
    Index d = 0;
    if (key != "blockdim" || !(header >> d))
      throw std::runtime_error("read_symmat: bad header '" + line + "'");
    block_dim = d;
  }
  std::vector<Triplet> entries;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    Index i = 0, j = 0;
    double v = 0.0;
    if (!(row >> i >> j >> v))
      throw std::runtime_error("read_symmat: bad entry line '" + line + "'");
    entries.emplace_back(i, j, v);
  }
  Index full = 0;
  for (const auto& t : entries) full += (t.row() == t.col()) ? 1 : 2;
  const bool sparse = static_cast<double>(full) < 0.1 * static_cast<double>(n) * n;
  return SymmetricMatrix::from_triplets(n, entries, sparse, block_dim);
}

}  // namespace bmsdp
