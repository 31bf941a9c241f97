#pragma once

// Seeded random data models: GOE, spiked Wigner (Z2 synchronization), the
// two-group stochastic block model, Erdos-Renyi and random regular graphs.
// Every generator is a deterministic function of its parameters and seed.

#include "bmsdp/common.hpp"
#include "bmsdp/symmat.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

namespace bmsdp {

struct InstanceMeta {
  std::string model;
  std::map<std::string, double> params;
  std::uint64_t seed = 0;
};

struct Instance {
  SymmetricMatrix a;
  /// +-1 labels for planted models.
  std::optional<Vector> ground_truth;
  InstanceMeta meta;
  /// Raw graph adjacency where the model is a graph (sbm).
  std::optional<SymmetricMatrix> adjacency;
};

/// W_ii ~ N(0, 2/n), W_ij ~ N(0, 1/n) for i < j. The upper triangle is drawn
/// row by row.
inline SymmetricMatrix goe(Index n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("goe: n must be positive");
  std::normal_distribution<double> normal(0.0, 1.0);
  const double off = 1.0 / std::sqrt(static_cast<double>(n));
  const double diag = std::sqrt(2.0) * off;
  Matrix w(n, n);
  for (Index i = 0; i < n; ++i) {
    w(i, i) = diag * normal(rng);
    for (Index j = i + 1; j < n; ++j) {
      const double v = off * normal(rng);
      w(i, j) = v;
      w(j, i) = v;
    }
  }
  return SymmetricMatrix::from_dense(std::move(w));
}

inline SymmetricMatrix goe(Index n, std::uint64_t seed) {
  Rng rng(seed);
  return goe(n, rng);
}

/// Uniform +-1 vector.
inline Vector random_signs(Index n, Rng& rng) {
  std::bernoulli_distribution coin(0.5);
  Vector u(n);
  for (Index i = 0; i < n; ++i) u(i) = coin(rng) ? 1.0 : -1.0;
  return u;
}

/// A(lambda) = (lambda / n) u u^T + W with W ~ GOE(n) and u uniform on
/// {+-1}^n. W is drawn first from the seed, so lambda = 0 reproduces goe(n, seed).
inline Instance spiked(Index n, double lambda, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("spiked: n must be positive");
  if (!(lambda >= 0.0)) throw std::invalid_argument("spiked: lambda must be >= 0");
  Rng rng(seed);
  const SymmetricMatrix w = goe(n, rng);
  const Vector u = random_signs(n, rng);
  Matrix a = w.to_dense();
  if (lambda != 0.0) a.noalias() += (lambda / static_cast<double>(n)) * u * u.transpose();
  return {SymmetricMatrix::from_dense(std::move(a)), u,
          InstanceMeta{"spiked", {{"n", double(n)}, {"lambda", lambda}}, seed}, std::nullopt};
}

namespace detail {

inline SymmetricMatrix adjacency_from_edges(Index n,
                                            const std::vector<std::pair<Index, Index>>& edges) {
  std::vector<Triplet> t;
  t.reserve(2 * edges.size());
  for (const auto& [i, j] : edges) {
    t.emplace_back(i, j, 1.0);
    t.emplace_back(j, i, 1.0);
  }
  SparseMatrix s(n, n);
  s.setFromTriplets(t.begin(), t.end());
  return SymmetricMatrix::from_sparse(s);
}

inline std::uint64_t edge_key(Index i, Index j) {
  if (i > j) std::swap(i, j);
  return (static_cast<std::uint64_t>(i) << 32) | static_cast<std::uint64_t>(j);
}

}  // namespace detail

/// Signal-to-noise parameter (a - b) / sqrt(2 (a + b)) of the two-group SBM.
inline double sbm_snr(double a, double b) {
  if (a + b == 0.0) return 0.0;
  return (a - b) / std::sqrt(2.0 * (a + b));
}

/// Two balanced groups (<u, 1> = 0); edges independent with probability a/n
/// inside a group and b/n across. The returned matrix is the centered and
/// scaled adjacency (A_G - (d/n) 1 1^T) / sqrt(d), d = (a + b) / 2, with the
/// rank-one centering kept lazy.
inline Instance sbm(Index n, double a, double b, std::uint64_t seed) {
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("sbm: n must be even and >= 2");
  const double nn = static_cast<double>(n);
  if (a > nn || b > nn || a / nn > 1.0 || b / nn > 1.0)
    throw std::invalid_argument("sbm: edge probabilities a/n and b/n must not exceed 1");
  if (!(b >= 0.0 && a >= b)) throw std::invalid_argument("sbm: requires 0 <= b <= a");
  if (a + b == 0.0) throw std::invalid_argument("sbm: average degree must be positive");
  Rng rng(seed);
  Vector u(n);
  u.head(n / 2).setOnes();
  u.tail(n / 2).setConstant(-1.0);
  std::shuffle(u.data(), u.data() + n, rng);

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double p_in = a / nn, p_out = b / nn;
  std::vector<std::pair<Index, Index>> edges;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      if (unif(rng) < (u(i) == u(j) ? p_in : p_out)) edges.emplace_back(i, j);

  const SymmetricMatrix adj = detail::adjacency_from_edges(n, edges);
  const double d = 0.5 * (a + b);
  const double rs = 1.0 / std::sqrt(d);
  SymmetricMatrix centered = adj.scaled(rs).plus_rank_one(-(d / nn) * rs, Vector::Ones(n));
  return {std::move(centered), u,
          InstanceMeta{"sbm", {{"n", nn}, {"a", a}, {"b", b}, {"d", d}}, seed}, adj};
}

/// Each unordered pair is an edge independently with probability d_avg / n.
inline SymmetricMatrix erdos_renyi(Index n, double d_avg, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("erdos_renyi: n must be positive");
  if (!(d_avg >= 0.0 && d_avg < static_cast<double>(n)))
    throw std::invalid_argument("erdos_renyi: requires 0 <= d_avg < n");
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double p = d_avg / static_cast<double>(n);
  std::vector<std::pair<Index, Index>> edges;
  if (p > 0.0)
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j)
        if (unif(rng) < p) edges.emplace_back(i, j);
  return detail::adjacency_from_edges(n, edges);
}

/// Simple d-regular graph from the pairing (configuration) model. Point
/// pairs that would create a loop or a repeated edge are redrawn; when the
/// remaining points admit no valid pair the whole pairing restarts. Fails
/// after 200 consecutive restarts.
inline SymmetricMatrix random_regular(Index n, Index d, std::uint64_t seed) {
  if (n < 1 || d < 0 || d >= n) throw std::invalid_argument("random_regular: requires 0 <= d < n");
  if ((n * d) % 2 != 0) throw std::invalid_argument("random_regular: n * d must be even");
  Rng rng(seed);
  std::vector<std::pair<Index, Index>> edges;
  for (int attempt = 0; attempt < 200; ++attempt) {
    std::vector<Index> points;
    points.reserve(static_cast<std::size_t>(n * d));
    for (Index v = 0; v < n; ++v)
      for (Index c = 0; c < d; ++c) points.push_back(v);
    std::unordered_set<std::uint64_t> seen;
    edges.clear();
    bool stuck = false;
    while (!points.empty() && !stuck) {
      std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
      bool placed = false;
      for (int tries = 0; tries < 1000 && !placed; ++tries) {
        std::size_t p = pick(rng), q = pick(rng);
        if (p == q) continue;
        const Index x = points[p], y = points[q];
        if (x == y || seen.count(detail::edge_key(x, y))) continue;
        seen.insert(detail::edge_key(x, y));
        edges.emplace_back(x, y);
        if (p < q) std::swap(p, q);
        points[p] = points.back();
        points.pop_back();
        points[q] = points.back();
        points.pop_back();
        placed = true;
      }
      stuck = !placed;
    }
    if (!stuck) return detail::adjacency_from_edges(n, edges);
  }
  throw std::runtime_error("random_regular: pairing model failed 200 consecutive times");
}

/// A_G - (d/n) 1 1^T for a random d-regular graph, rank-one term kept lazy.
inline SymmetricMatrix centered_regular(Index n, Index d, std::uint64_t seed) {
  return random_regular(n, d, seed)
      .plus_rank_one(-static_cast<double>(d) / static_cast<double>(n), Vector::Ones(n));
}

/// GOE(m d) viewed as an m x m array of d x d blocks. This is a plain
/// Gaussian block model, not an SO(d) synchronization observation model.
inline SymmetricMatrix oc_gaussian(Index m, Index d, std::uint64_t seed) {
  if (m < 1 || d < 1) throw std::invalid_argument("oc_gaussian: requires m, d >= 1");
  return goe(m * d, seed).with_block_dim(d);
}

inline Instance goe_instance(Index n, std::uint64_t seed) {
  return {goe(n, seed), std::nullopt, InstanceMeta{"goe", {{"n", double(n)}}, seed},
          std::nullopt};
}

}  // namespace bmsdp
