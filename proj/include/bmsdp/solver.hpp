#pragma once

// Fast Riemannian trust-region ascent for f(s) = <s, A s> on the sphere
// product or the Stiefel product, plus a fixed-step projected gradient
// ascent baseline. Both are generic over a Geometry policy.

#include "bmsdp/common.hpp"
#include "bmsdp/sphere_manifold.hpp"
#include "bmsdp/stiefel_manifold.hpp"
#include "bmsdp/symmat.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace bmsdp {

struct SphereGeometry {
  using Point = SphereConfig;
  using Tangent = TangentField;
  using Hessian = HessianOperator;
  using Evaluation = SphereEvaluation;

  static Point random_point(const SymmetricMatrix& a, Index k, Rng& rng) {
    return random_config(a.n(), k, rng);
  }
  static Tangent random_tangent(const Point& s, Rng& rng) { return bmsdp::random_tangent(s, rng); }
  static Evaluation evaluate(const SymmetricMatrix& a, const Point& s) {
    return bmsdp::evaluate(a, s);
  }
  static Hessian hessian(const SymmetricMatrix& a, const Point& s) { return {a, s}; }
  static Point retract(const Point& s, const Tangent& u, double t) {
    return bmsdp::retract(s, u, t);
  }
};

struct StiefelGeometry {
  using Point = StiefelConfig;
  using Tangent = StiefelTangent;
  using Hessian = OcHessianOperator;
  using Evaluation = StiefelEvaluation;

  static Point random_point(const SymmetricMatrix& a, Index k, Rng& rng) {
    const Index d = a.block_dim().value_or(1);
    return oc_random_config(a.n() / d, d, k, rng);
  }
  static Tangent random_tangent(const Point& s, Rng& rng) { return oc_random_tangent(s, rng); }
  static Evaluation evaluate(const SymmetricMatrix& a, const Point& s) {
    return oc_evaluate(a, s);
  }
  static Hessian hessian(const SymmetricMatrix& a, const Point& s) { return {a, s}; }
  static Point retract(const Point& s, const Tangent& u, double t) { return oc_retract(s, u, t); }
};

/// (a): eigen-steps only. (b): gradient-steps while the gradient is large.
enum class RtrMode { EigenOnly, GradientEigen };

enum class StepKind { Gradient, Eigen, Pga, Stop };

inline const char* to_string(StepKind k) {
  switch (k) {
    case StepKind::Gradient: return "gradient";
    case StepKind::Eigen: return "eigen";
    case StepKind::Pga: return "pga";
    case StepKind::Stop: return "stop";
  }
  return "?";
}

inline const char* to_string(RtrMode m) {
  return m == RtrMode::EigenOnly ? "eigen-only" : "gradient-eigen";
}

struct SolverOptions {
  Index k = 2;
  RtrMode mode = RtrMode::GradientEigen;
  /// Target curvature. When unset, 2 Rg / (n (k - 1)) with the spectral
  /// upper bound Rg <= 2 n ||A||_2, i.e. 4 ||A||_2 / (k - 1).
  std::optional<double> epsilon;
  long max_iters = 200000;
  /// Constant C in N_H = C ||A||_1 log n / lambda.
  double power_c = 8.0;
  long power_max_iters = 1000000;
  std::uint64_t seed = 0;
  std::optional<double> pga_step;
  bool record_trace = true;

  void validate() const {
    if (k < 1) throw std::invalid_argument("SolverOptions: k must be >= 1");
    if (epsilon && !(*epsilon > 0.0))
      throw std::invalid_argument("SolverOptions: epsilon must be positive");
    if (max_iters < 1) throw std::invalid_argument("SolverOptions: max_iters must be >= 1");
    if (!(power_c > 0.0)) throw std::invalid_argument("SolverOptions: power_c must be positive");
    if (pga_step && !(*pga_step > 0.0))
      throw std::invalid_argument("SolverOptions: pga_step must be positive");
  }
};

/// One row per visited iterate: its objective and gradient norm, and the
/// step taken from it. `guaranteed_increment` is the per-step lower bound on
/// the objective increase that the step-size rule certifies (0 if none).
struct TraceRow {
  long iteration = 0;
  double f = 0.0;
  double grad_norm = 0.0;
  StepKind kind = StepKind::Stop;
  double step = 0.0;
  double lambda_h = std::numeric_limits<double>::quiet_NaN();
  double guaranteed_increment = 0.0;
  long power_iters = 0;
};

template <class Point>
struct SolveReport {
  explicit SolveReport(Point s) : sigma(std::move(s)) {}

  Point sigma;
  double objective = 0.0;
  double grad_norm = 0.0;
  /// Last power-method Rayleigh value; NaN if no eigen direction was computed.
  double curvature_cert = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  std::string stop_reason;
  long iterations = 0;
  long gradient_steps = 0;
  long eigen_steps = 0;
  long power_iterations = 0;
  /// Steps whose observed increase fell short of the certified one (or that
  /// decreased f) beyond 1e-9 ||A||_1 n.
  long ascent_violations = 0;
  double epsilon = 0.0;
  double mu_g = 0.0;
  std::uint64_t seed = 0;
  std::vector<TraceRow> trace;
};

using SphereReport = SolveReport<SphereConfig>;
using StiefelReport = SolveReport<StiefelConfig>;

inline double default_epsilon(double rg, Index n, Index k) {
  if (k < 2) throw std::invalid_argument("default_epsilon: requires k >= 2");
  return 2.0 * rg / (static_cast<double>(n) * static_cast<double>(k - 1));
}

/// Sufficient eigen-step count for implementation (a), c n ||A||_1^2 / eps^2.
inline double eigen_only_budget(Index n, double l1, double eps, double c = 64e4) {
  return c * static_cast<double>(n) * l1 * l1 / (eps * eps);
}

/// Number of shifted power iterations C ||A||_1 log n / lambda, clamped to
/// [1, cap].
inline long power_iteration_count(double c, double l1, Index n, double lambda, long cap) {
  const double raw = c * l1 * std::log(static_cast<double>(std::max<Index>(n, 2))) / lambda;
  if (!std::isfinite(raw)) return cap;
  return std::clamp<long>(static_cast<long>(std::ceil(raw)), 1, cap);
}

/// Shifted power method u <- Hess[u] + mu_h u, normalized each step,
/// started from a uniformly random unit tangent. Returns the start itself
/// when iters = 0, and the (zero) start when the tangent space is trivial.
template <class G = SphereGeometry>
typename G::Tangent power_method(const typename G::Hessian& h, double mu_h, long iters, Rng& rng) {
  typename G::Tangent u = G::random_tangent(h.base(), rng);
  if (!(u.norm() > 0.0)) return u;
  for (long i = 0; i < iters; ++i) {
    Matrix next = h.apply(u).rows() + mu_h * u.rows();
    const double nrm = next.norm();
    if (!(nrm > 0.0)) break;
    next /= nrm;
    u = typename G::Tangent(h.base(), std::move(next), typename G::Tangent::Trusted{});
  }
  return u;
}

template <class G = SphereGeometry>
typename G::Tangent power_method(const typename G::Hessian& h, double mu_h, long iters,
                                 std::uint64_t seed) {
  Rng rng(seed);
  return power_method<G>(h, mu_h, iters, rng);
}

struct PowerOptions {
  double mu_h = 0.0;
  long iters = 1;
};

template <class G>
struct Direction {
  typename G::Tangent u;
  StepKind kind = StepKind::Gradient;
  /// <u, Hess[u]> for eigen directions, NaN for gradient directions.
  double lambda_h = std::numeric_limits<double>::quiet_NaN();
  long power_iters = 0;
};

/// Normalized gradient when its norm exceeds mu_g, otherwise a power-method
/// direction oriented so that <u, grad> >= 0.
template <class G = SphereGeometry>
Direction<G> direction_finding(const SymmetricMatrix& a, const typename G::Point& s,
                               const typename G::Evaluation& e, double mu_g,
                               const PowerOptions& power, Rng& rng) {
  if (e.grad_norm > mu_g) {
    return {e.grad.scaled(1.0 / e.grad_norm), StepKind::Gradient,
            std::numeric_limits<double>::quiet_NaN(), 0};
  }
  const auto h = G::hessian(a, s);
  auto u = power_method<G>(h, power.mu_h, power.iters, rng);
  double lambda = 0.0;
  if (u.norm() > 0.0) {
    lambda = h.rayleigh(u);
    if (inner(u, e.grad) < 0.0) u = u.scaled(-1.0);
  }
  return {std::move(u), StepKind::Eigen, lambda, power.iters};
}

template <class G = SphereGeometry>
Direction<G> direction_finding(const SymmetricMatrix& a, const typename G::Point& s,
                               double mu_g, const PowerOptions& power, std::uint64_t seed) {
  Rng rng(seed);
  return direction_finding<G>(a, s, G::evaluate(a, s), mu_g, power, rng);
}

/// Step-size rules. Returns {step, certified increment}.
struct StepRule {
  double step = 0.0;
  double guaranteed = 0.0;
};

/// Gradient-step: eta = mu_g / (20 ||A||_1), increase >= mu_g^2 / (40 ||A||_1).
inline StepRule gradient_step_rule(double mu_g, double l1) {
  return {mu_g / (20.0 * l1), mu_g * mu_g / (40.0 * l1)};
}

/// Eigen-step. (a): eta = lambda / (100 ||A||_1), increase >= lambda^3 / (4e4 ||A||_1^2).
/// (b): eta = min(sqrt(lambda / (216 ||A||_1)), lambda / (12 ||A||_2)),
/// increase >= lambda eta^2 / 4.
inline StepRule eigen_step_rule(RtrMode mode, double lambda, double l1, double l2) {
  if (!(lambda > 0.0)) return {};
  if (mode == RtrMode::EigenOnly)
    return {lambda / (100.0 * l1), lambda * lambda * lambda / (4e4 * l1 * l1)};
  const double eta = std::min(std::sqrt(lambda / (216.0 * l1)), lambda / (12.0 * l2));
  return {eta, 0.25 * lambda * eta * eta};
}

template <class Point>
struct StepRecord {
  Point next;
  TraceRow row;
};

/// One trust-region step from s. The returned row describes s and the step.
/// `lambda_prev` feeds the power-iteration count.
template <class G = SphereGeometry>
StepRecord<typename G::Point> rtr_step(const SymmetricMatrix& a, const typename G::Point& s,
                                       const typename G::Evaluation& e, RtrMode mode,
                                       double epsilon, double lambda_prev,
                                       const SolverOptions& opts, Rng& rng) {
  const double l1 = a.l1();
  TraceRow row;
  row.f = e.f;
  row.grad_norm = e.grad_norm;
  if (l1 == 0.0) return {s, row};
  const double l2 = a.l2();
  const double mu_g =
      mode == RtrMode::EigenOnly ? std::numeric_limits<double>::infinity() : l2;
  const PowerOptions power{
      4.0 * l1, power_iteration_count(opts.power_c, l1, a.n(), std::max(lambda_prev, epsilon),
                                      opts.power_max_iters)};
  auto dir = direction_finding<G>(a, s, e, mu_g, power, rng);
  row.kind = dir.kind;
  row.power_iters = dir.power_iters;
  if (dir.kind == StepKind::Gradient) {
    const StepRule rule = gradient_step_rule(mu_g, l1);
    row.step = rule.step;
    row.guaranteed_increment = rule.guaranteed;
    return {G::retract(s, dir.u, rule.step), row};
  }
  row.lambda_h = dir.lambda_h;
  const StepRule rule = eigen_step_rule(mode, dir.lambda_h, l1, l2);
  row.step = rule.step;
  row.guaranteed_increment = rule.guaranteed;
  if (rule.step == 0.0) return {s, row};
  return {G::retract(s, dir.u, rule.step), row};
}

/// Runs trust-region steps until the gradient is at most mu_g and a power
/// method certificate lambda <= epsilon is confirmed by a second, fresh run
/// with N_H sized for epsilon, or until max_iters steps have been taken.
template <class G = SphereGeometry>
SolveReport<typename G::Point> solve(const SymmetricMatrix& a, const SolverOptions& opts,
                                     std::optional<typename G::Point> init = std::nullopt) {
  opts.validate();
  Rng rng(opts.seed);
  typename G::Point s = init ? *init : G::random_point(a, opts.k, rng);
  require_shape(s.n() == a.n() && s.k() == opts.k, "solve");

  const double l1 = a.l1();
  SolveReport<typename G::Point> rep(s);
  rep.seed = opts.seed;
  if (l1 == 0.0) {
    auto e = G::evaluate(a, s);
    rep.objective = e.f;
    rep.grad_norm = e.grad_norm;
    rep.converged = true;
    rep.curvature_cert = 0.0;
    rep.stop_reason = "zero matrix";
    if (opts.record_trace) rep.trace.push_back({0, e.f, e.grad_norm});
    return rep;
  }
  const double l2 = a.l2();
  const double eps =
      opts.epsilon ? *opts.epsilon
                   : 4.0 * l2 / static_cast<double>(std::max<Index>(opts.k - 1, 1));
  rep.epsilon = eps;
  rep.mu_g = opts.mode == RtrMode::EigenOnly ? std::numeric_limits<double>::infinity() : l2;
  const double tol = 1e-9 * l1 * static_cast<double>(a.n());
  const long cert_iters =
      power_iteration_count(opts.power_c, l1, a.n(), eps, opts.power_max_iters);

  double lambda_prev = eps;
  auto e = G::evaluate(a, s);
  std::optional<TraceRow> pending;
  for (long it = 0;; ++it) {
    if (pending) {
      const double gained = e.f - pending->f;
      if (gained < pending->guaranteed_increment - tol || gained < -tol) ++rep.ascent_violations;
      if (opts.record_trace) rep.trace.push_back(*pending);
      pending.reset();
    }
    if (it >= opts.max_iters) {
      rep.stop_reason = "budget exhausted";
      break;
    }
    auto step = rtr_step<G>(a, s, e, opts.mode, eps, lambda_prev, opts, rng);
    TraceRow row = step.row;
    row.iteration = it;
    rep.power_iterations += row.power_iters;
    if (row.kind == StepKind::Eigen) {
      rep.curvature_cert = row.lambda_h;
      if (row.lambda_h <= eps) {
        // Possible power-method miss; confirm with a fresh start sized for eps.
        const auto h = G::hessian(a, s);
        auto u = power_method<G>(h, 4.0 * l1, cert_iters, rng);
        rep.power_iterations += cert_iters;
        const double lam = u.norm() > 0.0 ? h.rayleigh(u) : 0.0;
        if (lam <= eps) {
          rep.curvature_cert = std::max(row.lambda_h, lam);
          rep.converged = true;
          rep.stop_reason = "certificate";
          row.kind = StepKind::Stop;
          row.step = 0.0;
          row.guaranteed_increment = 0.0;
          row.power_iters += cert_iters;
          if (opts.record_trace) rep.trace.push_back(row);
          break;
        }
        if (inner(u, e.grad) < 0.0) u = u.scaled(-1.0);
        const StepRule rule = eigen_step_rule(opts.mode, lam, l1, l2);
        row.lambda_h = lam;
        row.step = rule.step;
        row.guaranteed_increment = rule.guaranteed;
        row.power_iters += cert_iters;
        rep.curvature_cert = lam;
        step.next = G::retract(s, u, rule.step);
      }
      lambda_prev = row.lambda_h;
      ++rep.eigen_steps;
    } else {
      ++rep.gradient_steps;
    }
    s = std::move(step.next);
    e = G::evaluate(a, s);
    pending = row;
    rep.iterations = it + 1;
  }
  rep.sigma = s;
  rep.objective = e.f;
  rep.grad_norm = e.grad_norm;
  if (rep.stop_reason == "budget exhausted" && opts.record_trace) {
    TraceRow last;
    last.iteration = rep.iterations;
    last.f = e.f;
    last.grad_norm = e.grad_norm;
    rep.trace.push_back(last);
  }
  return rep;
}

inline StiefelReport oc_solve(const SymmetricMatrix& a, const SolverOptions& opts,
                              std::optional<StiefelConfig> init = std::nullopt) {
  return solve<StiefelGeometry>(a, opts, std::move(init));
}

struct PgaOptions {
  double step = 0.0;
  long iters = 1000;
  /// Stop once ||grad f||_F <= grad_tol (0 disables).
  double grad_tol = 0.0;
  /// Record every n-th iterate in the trace (0 disables the trace).
  long trace_every = 1;
};

/// Library default step 1/(20 ||A||_1), small enough for monotone ascent.
inline double default_pga_step(const SymmetricMatrix& a) {
  const double l1 = a.l1();
  return l1 > 0.0 ? 1.0 / (20.0 * l1) : 1.0;
}

/// Fixed-step projected gradient ascent s <- P_M(s + step * grad f(s)).
/// `on_iterate`, when set, is called with every visited iterate.
template <class G = SphereGeometry>
SolveReport<typename G::Point> projected_gradient_ascent(
    const SymmetricMatrix& a, typename G::Point s0, const PgaOptions& opts,
    const std::function<void(long, const typename G::Point&, const typename G::Evaluation&)>&
        on_iterate = nullptr) {
  if (!(opts.step > 0.0)) throw std::invalid_argument("projected_gradient_ascent: step must be positive");
  SolveReport<typename G::Point> rep(s0);
  typename G::Point s = std::move(s0);
  auto e = G::evaluate(a, s);
  long it = 0;
  for (;; ++it) {
    if (on_iterate) on_iterate(it, s, e);
    const bool done = it >= opts.iters || e.grad_norm <= opts.grad_tol;
    if (opts.trace_every > 0 && (done || it % opts.trace_every == 0)) {
      TraceRow row;
      row.iteration = it;
      row.f = e.f;
      row.grad_norm = e.grad_norm;
      row.kind = done ? StepKind::Stop : StepKind::Pga;
      row.step = done ? 0.0 : opts.step;
      rep.trace.push_back(row);
    }
    if (done) {
      rep.converged = e.grad_norm <= opts.grad_tol;
      rep.stop_reason = rep.converged ? "gradient tolerance" : "iteration limit";
      break;
    }
    s = G::retract(s, e.grad, opts.step);
    e = G::evaluate(a, s);
  }
  rep.sigma = s;
  rep.objective = e.f;
  rep.grad_norm = e.grad_norm;
  rep.iterations = it;
  rep.gradient_steps = it;
  return rep;
}

// ---- trace CSV -------------------------------------------------------------
//
//   iteration,f,grad_norm,kind,step,lambda_h,guaranteed_increment,power_iters
//   ...
//   # summary converged=<0|1> reason=<...> f=<...> grad_norm=<...> cert=<...>
//     iterations=<...> gradient_steps=<...> eigen_steps=<...> epsilon=<...> seed=<...>

template <class Point>
void write_trace_csv(std::ostream& os, const SolveReport<Point>& rep) {
  os << "iteration,f,grad_norm,kind,step,lambda_h,guaranteed_increment,power_iters\n";
  os << std::setprecision(17);
  for (const auto& r : rep.trace) {
    os << r.iteration << ',' << r.f << ',' << r.grad_norm << ',' << to_string(r.kind) << ','
       << r.step << ',' << r.lambda_h << ',' << r.guaranteed_increment << ',' << r.power_iters
       << '\n';
  }
  os << "# summary converged=" << (rep.converged ? 1 : 0) << " reason=\"" << rep.stop_reason
     << "\" f=" << rep.objective << " grad_norm=" << rep.grad_norm
     << " cert=" << rep.curvature_cert << " iterations=" << rep.iterations
     << " gradient_steps=" << rep.gradient_steps << " eigen_steps=" << rep.eigen_steps
     << " epsilon=" << rep.epsilon << " seed=" << rep.seed << '\n';
}

}  // namespace bmsdp
