#pragma once

// Seeded experiment sweeps behind the CLI. Each sweep returns a CsvTable
// whose rows carry every parameter and seed needed to recompute them.

#include "bmsdp/analysis.hpp"
#include "bmsdp/common.hpp"
#include "bmsdp/instances.hpp"
#include "bmsdp/solver.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace bmsdp {

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

  /// Values are formatted with 17 significant digits.
  template <class... T>
  void add(const T&... values) {
    std::vector<std::string> row;
    (row.push_back(format(values)), ...);
    if (row.size() != header_.size()) throw std::logic_error("CsvTable: row width mismatch");
    rows_.push_back(std::move(row));
  }

  /// Index of a column by name.
  std::size_t column(const std::string& name) const {
    const auto it = std::find(header_.begin(), header_.end(), name);
    if (it == header_.end()) throw std::out_of_range("CsvTable: no column " + name);
    return static_cast<std::size_t>(it - header_.begin());
  }

  double value(std::size_t row, const std::string& name) const {
    return std::stod(rows_.at(row).at(column(name)));
  }

  void write(std::ostream& os) const {
    write_row(os, header_);
    for (const auto& r : rows_) write_row(os, r);
  }

 private:
  static std::string format(const std::string& s) { return s; }
  static std::string format(const char* s) { return s; }
  static std::string format(bool b) { return b ? "1" : "0"; }
  template <class T>
  static std::string format(const T& v) {
    std::ostringstream os;
    if constexpr (std::is_floating_point_v<T>)
      os << std::setprecision(17) << v;
    else
      os << v;
    return os.str();
  }
  static void write_row(std::ostream& os, const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << '\n';
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

enum class SolverKind { Pga, RtrA, RtrB };

inline const char* to_string(SolverKind s) {
  switch (s) {
    case SolverKind::Pga: return "pga";
    case SolverKind::RtrA: return "rtr-a";
    case SolverKind::RtrB: return "rtr-b";
  }
  return "?";
}

inline SolverKind parse_solver(const std::string& s) {
  if (s == "pga") return SolverKind::Pga;
  if (s == "rtr-a") return SolverKind::RtrA;
  if (s == "rtr-b") return SolverKind::RtrB;
  throw std::invalid_argument("unknown solver '" + s + "' (expected pga, rtr-a or rtr-b)");
}

/// How the sweeps find local maximizers.
struct LocalSolveOptions {
  SolverKind solver = SolverKind::Pga;
  /// Iteration cap for both PGA and the trust-region solver.
  long budget = 20000;
  /// PGA step; unset means pga_step_scale / ||A||_2.
  std::optional<double> pga_step;
  double pga_step_scale = 0.25;
  /// PGA stops once ||grad||_F <= pga_grad_tol.
  double pga_grad_tol = 1e-3;
  /// Trust-region target curvature; unset means the solver default.
  std::optional<double> epsilon;
  double power_c = 8.0;
  /// Target curvature of the high-rank SDP estimates.
  double sdp_epsilon = 1.0;
};

inline double pga_step_for(const SymmetricMatrix& a, const LocalSolveOptions& o) {
  if (o.pga_step) return *o.pga_step;
  const double l2 = a.l2();
  return l2 > 0.0 ? o.pga_step_scale / l2 : 1.0;
}

/// Local maximizer of <s, A s> over rank-k configurations from a uniform
/// random start drawn with `seed`.
template <class G = SphereGeometry>
SolveReport<typename G::Point> local_maximizer(const SymmetricMatrix& a, Index k,
                                               std::uint64_t seed, const LocalSolveOptions& o) {
  if (o.solver == SolverKind::Pga) {
    Rng rng(seed);
    auto s0 = G::random_point(a, k, rng);
    PgaOptions po;
    po.step = pga_step_for(a, o);
    po.iters = o.budget;
    po.grad_tol = o.pga_grad_tol;
    po.trace_every = 0;
    auto rep = projected_gradient_ascent<G>(a, std::move(s0), po);
    rep.seed = seed;
    return rep;
  }
  SolverOptions so;
  so.k = k;
  so.mode = o.solver == SolverKind::RtrA ? RtrMode::EigenOnly : RtrMode::GradientEigen;
  so.epsilon = o.epsilon;
  so.max_iters = o.budget;
  so.power_c = o.power_c;
  so.seed = seed;
  so.record_trace = false;
  return solve<G>(a, so);
}

inline void require_seeds(const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw std::invalid_argument("seed list must not be empty");
}

inline void require_ranks(const std::vector<Index>& ks, Index min_k = 1) {
  if (ks.empty()) throw std::invalid_argument("k list must not be empty");
  for (Index k : ks)
    if (k < min_k)
      throw std::invalid_argument("invalid k " + std::to_string(k) + " (must be >= " +
                                  std::to_string(min_k) + ")");
}

// ---- landscape -------------------------------------------------------------

struct LandscapeOptions {
  LocalSolveOptions solve;
  /// Record a trajectory point every this many PGA iterations (0: finals only).
  long record_every = 0;
  /// Shifted power iterations per curvature estimate.
  long curvature_iters = 500;
  Index max_n = 2000;
};

/// Largest Hessian eigenvalue estimate: shifted power method with a fixed
/// iteration count, returning the Rayleigh quotient (0 when k = 1).
template <class G = SphereGeometry>
double curvature_estimate(const SymmetricMatrix& a, const typename G::Point& s, long iters,
                          std::uint64_t seed) {
  const auto h = G::hessian(a, s);
  Rng rng(seed);
  const auto u = power_method<G>(h, 4.0 * a.l1(), iters, rng);
  return u.norm() > 0.0 ? h.rayleigh(u) : 0.0;
}

/// GOE(n) landscape: per (k, seed) final gaps, optionally with trajectory
/// points (curvature estimate, 2 (SDP_est - f) / n) along PGA runs.
inline CsvTable run_landscape(Index n, const std::vector<Index>& ks,
                              const std::vector<std::uint64_t>& seeds,
                              const LandscapeOptions& o = {}) {
  if (n < 1 || n > o.max_n)
    throw std::invalid_argument("landscape: n must be in [1, " + std::to_string(o.max_n) + "]");
  require_ranks(ks, 2);
  require_seeds(seeds);
  CsvTable t({"model", "n", "k", "seed", "solver", "row", "iteration", "f", "grad_norm",
              "curvature", "gap", "gap_norm", "sdp_est", "rg_est", "gap_over_rg_k1"});
  std::vector<std::uint64_t> sorted = seeds;
  std::sort(sorted.begin(), sorted.end());
  for (std::uint64_t seed : sorted) {
    const SymmetricMatrix a = goe(n, seed);
    const SdpEstimate est = estimate_sdp(a, o.solve.sdp_epsilon, derive_seed(seed, 100));
    for (Index k : ks) {
      const std::uint64_t init = derive_seed(seed, static_cast<std::uint64_t>(k));
      auto add_row = [&](const char* row, long it, const SphereConfig& s,
                         const SphereEvaluation& e) {
        const double curv = curvature_estimate(a, s, o.curvature_iters, derive_seed(init, it));
        const double gap = est.value_plus - e.f;
        t.add(std::string("goe"), n, k, seed, std::string(to_string(o.solve.solver)),
              std::string(row), it, e.f, e.grad_norm, curv, gap,
              2.0 * gap / static_cast<double>(n), est.value_plus, est.rg,
              gap / (est.rg / static_cast<double>(k - 1)));
      };
      SphereReport rep = [&] {
        if (o.solve.solver == SolverKind::Pga && o.record_every > 0) {
          Rng rng(init);
          auto s0 = random_config(n, k, rng);
          PgaOptions po;
          po.step = pga_step_for(a, o.solve);
          po.iters = o.solve.budget;
          po.grad_tol = o.solve.pga_grad_tol;
          po.trace_every = 0;
          return projected_gradient_ascent(
              a, s0, po, [&](long it, const SphereConfig& s, const SphereEvaluation& e) {
                if (it % o.record_every == 0) add_row("trajectory", it, s, e);
              });
        }
        return local_maximizer(a, k, init, o.solve);
      }();
      add_row("final", rep.iterations, rep.sigma, evaluate(a, rep.sigma));
    }
  }
  return t;
}

// ---- Z2 synchronization ----------------------------------------------------

/// 1 - min(16 / lambda, 1 / k + 4 / lambda): lower bound on the correlation
/// of every local maximizer of the spiked model.
inline double correlation_bound(double lambda, Index k) {
  return 1.0 - std::min(16.0 / lambda, 1.0 / static_cast<double>(k) + 4.0 / lambda);
}

/// Spiked-model sweep: per-seed rows and per-lambda means of the
/// correlation ||s^T u||^2 / n^2 and the principal-sign overlap.
inline CsvTable run_z2sync(Index n, const std::vector<double>& lambdas, Index k,
                           const std::vector<std::uint64_t>& seeds,
                           const LocalSolveOptions& o = {}) {
  if (n < 1) throw std::invalid_argument("z2sync: n must be positive");
  if (lambdas.empty()) throw std::invalid_argument("z2sync: lambda grid must not be empty");
  for (double l : lambdas)
    if (!(l >= 0.0)) throw std::invalid_argument("z2sync: lambda must be >= 0");
  require_ranks({k}, 1);
  require_seeds(seeds);
  CsvTable t({"model", "n", "lambda", "k", "seed", "solver", "row", "f", "grad_norm", "converged",
              "correlation", "overlap", "correlation_bound"});
  std::vector<double> grid = lambdas;
  std::sort(grid.begin(), grid.end());
  std::vector<std::uint64_t> sorted = seeds;
  std::sort(sorted.begin(), sorted.end());
  for (double lambda : grid) {
    double sum_c = 0.0, sum_o = 0.0;
    for (std::uint64_t seed : sorted) {
      const Instance inst = spiked(n, lambda, seed);
      const auto rep = local_maximizer(inst.a, k, derive_seed(seed, 1), o);
      const double c = correlation(rep.sigma, *inst.ground_truth);
      const double ov = overlap(principal_sign(rep.sigma), *inst.ground_truth);
      sum_c += c;
      sum_o += ov;
      t.add(std::string("spiked"), n, lambda, k, seed, std::string(to_string(o.solver)),
            std::string("seed"), rep.objective, rep.grad_norm, rep.converged, c, ov,
            correlation_bound(lambda, k));
    }
    const double m = static_cast<double>(sorted.size());
    t.add(std::string("spiked"), n, lambda, k, std::string("all"),
          std::string(to_string(o.solver)), std::string("mean"), std::string(""), std::string(""),
          std::string(""), sum_c / m, sum_o / m, correlation_bound(lambda, k));
  }
  return t;
}

// ---- stochastic block model ------------------------------------------------

inline CsvTable run_sbm(Index n, const std::vector<std::pair<double, double>>& ab, Index k,
                        const std::vector<std::uint64_t>& seeds, const LocalSolveOptions& o = {}) {
  if (ab.empty()) throw std::invalid_argument("sbm: (a, b) grid must not be empty");
  require_ranks({k}, 1);
  require_seeds(seeds);
  CsvTable t({"model", "n", "a", "b", "d", "snr", "k", "seed", "solver", "row", "f", "grad_norm",
              "converged", "correlation", "overlap"});
  std::vector<std::pair<double, double>> grid = ab;
  std::sort(grid.begin(), grid.end());
  std::vector<std::uint64_t> sorted = seeds;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& [a, b] : grid) {
    double sum_c = 0.0, sum_o = 0.0;
    for (std::uint64_t seed : sorted) {
      const Instance inst = sbm(n, a, b, seed);
      const auto rep = local_maximizer(inst.a, k, derive_seed(seed, 1), o);
      const double c = correlation(rep.sigma, *inst.ground_truth);
      const double ov = overlap(principal_sign(rep.sigma), *inst.ground_truth);
      sum_c += c;
      sum_o += ov;
      t.add(std::string("sbm"), n, a, b, 0.5 * (a + b), sbm_snr(a, b), k, seed,
            std::string(to_string(o.solver)), std::string("seed"), rep.objective, rep.grad_norm,
            rep.converged, c, ov);
    }
    const double m = static_cast<double>(sorted.size());
    t.add(std::string("sbm"), n, a, b, 0.5 * (a + b), sbm_snr(a, b), k, std::string("all"),
          std::string(to_string(o.solver)), std::string("mean"), std::string(""),
          std::string(""), std::string(""), sum_c / m, sum_o / m);
  }
  return t;
}

// ---- MaxCut ----------------------------------------------------------------

struct GraphSpec {
  std::string model = "er";  // er | regular
  Index n = 100;
  double degree = 10.0;
};

inline SymmetricMatrix make_graph(const GraphSpec& g, std::uint64_t seed) {
  if (g.model == "er") return erdos_renyi(g.n, g.degree, seed);
  if (g.model == "regular") {
    if (g.degree != std::floor(g.degree))
      throw std::invalid_argument("maxcut: regular graph degree must be an integer");
    return random_regular(g.n, static_cast<Index>(g.degree), seed);
  }
  throw std::invalid_argument("maxcut: unknown graph model '" + g.model + "'");
}

struct MaxcutOptions {
  LocalSolveOptions solve;
  long samples = 200;
  /// Add a row at rank sdp_rank(n) (the SDP relaxation itself).
  bool high_rank = false;
  /// Exhaustive optimum for n <= 24.
  bool bruteforce = false;
};

/// MaxCut by maximizing <s, -A_G s>: relaxation value (total + f) / 4 and
/// best-of-N hyperplane rounding per (k, seed).
inline CsvTable run_maxcut(const GraphSpec& g, const std::vector<Index>& ks,
                           const std::vector<std::uint64_t>& seeds, const MaxcutOptions& o = {}) {
  require_ranks(ks, 1);
  require_seeds(seeds);
  if (o.samples < 1) throw std::invalid_argument("maxcut: samples must be >= 1");
  if (o.bruteforce && g.n > 24) throw std::invalid_argument("maxcut: bruteforce requires n <= 24");
  std::vector<Index> ranks = ks;
  std::sort(ranks.begin(), ranks.end());
  ranks.erase(std::unique(ranks.begin(), ranks.end()), ranks.end());
  if (o.high_rank) {
    const Index kh = sdp_rank(g.n, 1);
    if (std::find(ranks.begin(), ranks.end(), kh) == ranks.end()) ranks.push_back(kh);
  }
  std::vector<std::uint64_t> sorted = seeds;
  std::sort(sorted.begin(), sorted.end());
  CsvTable t({"model", "n", "degree", "k", "seed", "solver", "edges", "f", "relax_cut", "cut",
              "cut_per_edge", "maxcut", "ratio", "guarantee"});
  for (std::uint64_t seed : sorted) {
    const SymmetricMatrix adj = make_graph(g, seed);
    const SymmetricMatrix neg = adj.negated();
    const Vector ones = Vector::Ones(adj.n());
    const double total = ones.dot(adj.multiply(ones).col(0));
    const double exact = o.bruteforce ? maxcut_bruteforce(adj)
                                      : std::numeric_limits<double>::quiet_NaN();
    for (Index k : ranks) {
      const auto rep = local_maximizer(neg, k, derive_seed(seed, static_cast<std::uint64_t>(k)),
                                       o.solve);
      const RoundingResult r = gw_round(adj, rep.sigma, o.samples,
                                        derive_seed(seed, 1000 + static_cast<std::uint64_t>(k)));
      const double guarantee =
          k >= 2 ? kGwAlpha * (1.0 - 1.0 / static_cast<double>(k - 1)) : 0.0;
      t.add(g.model, g.n, g.degree, k, seed, std::string(to_string(o.solve.solver)), 0.5 * total,
            rep.objective, 0.25 * (total + rep.objective), r.value,
            total > 0.0 ? r.value / (0.5 * total) : 0.0, exact,
            exact > 0.0 ? r.value / exact : std::numeric_limits<double>::quiet_NaN(), guarantee);
    }
  }
  return t;
}

// ---- Orthogonal-Cut --------------------------------------------------------

/// GOE(m d) in the d-block view: per (k, seed) gap to the high-rank SDP_o
/// estimate and slack of the k_d = 2k / (d + 1) bound.
inline CsvTable run_ocsdp(Index m, Index d, const std::vector<Index>& ks,
                          const std::vector<std::uint64_t>& seeds,
                          const LocalSolveOptions& o = {}) {
  if (m < 1 || d < 1) throw std::invalid_argument("ocsdp: requires m, d >= 1");
  require_ranks(ks, d);
  for (Index k : ks)
    if (2 * k <= d + 1)
      throw std::invalid_argument("ocsdp: k must satisfy 2k / (d + 1) > 1");
  require_seeds(seeds);
  std::vector<Index> ranks = ks;
  std::sort(ranks.begin(), ranks.end());
  std::vector<std::uint64_t> sorted = seeds;
  std::sort(sorted.begin(), sorted.end());
  CsvTable t({"model", "m", "d", "n", "k", "k_d", "seed", "solver", "f", "grad_norm",
              "converged", "epsilon", "sdp_est", "rg_est", "gap", "gap_over_rg_kd1",
              "bound_slack", "bound_holds"});
  for (std::uint64_t seed : sorted) {
    const SymmetricMatrix a = oc_gaussian(m, d, seed);
    const SdpEstimate est = oc_estimate_sdp(a, o.sdp_epsilon, derive_seed(seed, 100));
    for (Index k : ranks) {
      const auto rep = local_maximizer<StiefelGeometry>(
          a, k, derive_seed(seed, static_cast<std::uint64_t>(k)), o);
      const double kd = 2.0 * static_cast<double>(k) / static_cast<double>(d + 1);
      // PGA runs carry no curvature certificate; their rows use eps = 0.
      const double eps = rep.converged && o.solver != SolverKind::Pga ? rep.epsilon : 0.0;
      const BoundCheck c = oc_grothendieck_check(a, rep.sigma, eps, est);
      const double gap = est.value_plus - rep.objective;
      t.add(std::string("goe-blocks"), m, d, m * d, k, kd, seed,
            std::string(to_string(o.solver)), rep.objective, rep.grad_norm, rep.converged, eps,
            est.value_plus, est.rg, gap, gap / (est.rg / (kd - 1.0)), c.slack, c.holds);
    }
  }
  return t;
}

}  // namespace bmsdp
