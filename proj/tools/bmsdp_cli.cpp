// bmsdp command-line harness. Exit codes: 0 success, 1 runtime failure,
// 2 usage error, 3 non-convergence under --strict.

#include "bmsdp/bmsdp.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

namespace {

using namespace bmsdp;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNotConverged = 3;

struct SeedArgs {
  std::vector<std::uint64_t> list;
  std::uint64_t base = 1;
  long reps = 1;

  void add(CLI::App* cmd) {
    cmd->add_option("--seeds", list, "Explicit seed list (comma separated)")->delimiter(',');
    cmd->add_option("--seed", base, "Base seed when --seeds is not given");
    cmd->add_option("--reps", reps, "Number of seeds base, base+1, ...");
  }

  std::vector<std::uint64_t> resolve() const {
    if (!list.empty()) return list;
    if (reps < 1) throw std::invalid_argument("seed list must not be empty (--reps >= 1)");
    std::vector<std::uint64_t> s;
    for (long i = 0; i < reps; ++i) s.push_back(base + static_cast<std::uint64_t>(i));
    return s;
  }
};

struct SolveArgs {
  std::string solver = "pga";
  long budget = 20000;
  double pga_step = 0.0;
  double pga_grad_tol = 1e-3;
  double eps = 0.0;
  double sdp_eps = 1.0;
  double power_c = 8.0;

  void add(CLI::App* cmd) {
    cmd->add_option("--solver", solver, "pga | rtr-a | rtr-b")->capture_default_str();
    cmd->add_option("--budget", budget, "Iteration cap per solve")->capture_default_str();
    cmd->add_option("--pga-step", pga_step, "Fixed PGA step (default 0.25 / ||A||_2)");
    cmd->add_option("--pga-grad-tol", pga_grad_tol, "PGA gradient-norm stop")->capture_default_str();
    cmd->add_option("--eps", eps, "Trust-region target curvature (default 4||A||_2/(k-1))");
    cmd->add_option("--sdp-eps", sdp_eps, "Target curvature of high-rank SDP estimates")
        ->capture_default_str();
    cmd->add_option("--power-c", power_c, "Constant C of the power-iteration count")
        ->capture_default_str();
  }

  LocalSolveOptions options() const {
    LocalSolveOptions o;
    o.solver = parse_solver(solver);
    if (budget < 1) throw std::invalid_argument("--budget must be >= 1");
    o.budget = budget;
    if (pga_step < 0.0) throw std::invalid_argument("--pga-step must be positive");
    if (pga_step > 0.0) o.pga_step = pga_step;
    o.pga_grad_tol = pga_grad_tol;
    if (eps < 0.0) throw std::invalid_argument("--eps must be positive");
    if (eps > 0.0) o.epsilon = eps;
    if (!(sdp_eps > 0.0)) throw std::invalid_argument("--sdp-eps must be positive");
    o.sdp_epsilon = sdp_eps;
    o.power_c = power_c;
    return o;
  }
};

struct OutArgs {
  std::string path;
  bool strict = false;
  void add(CLI::App* cmd) {
    cmd->add_option("--out", path, "Output file (default stdout)");
    cmd->add_flag("--strict", strict, "Exit with code 3 if any run did not converge");
  }
};

int emit(const CsvTable& t, const OutArgs& out) {
  if (out.path.empty()) {
    t.write(std::cout);
  } else {
    std::ofstream f(out.path);
    if (!f) throw std::runtime_error("cannot open " + out.path);
    t.write(f);
  }
  if (out.strict) {
    const auto& h = t.header();
    const auto it = std::find(h.begin(), h.end(), "converged");
    if (it != h.end()) {
      const std::size_t c = static_cast<std::size_t>(it - h.begin());
      for (const auto& r : t.rows())
        if (r[c] == "0") return kExitNotConverged;
    }
  }
  return 0;
}

SymmetricMatrix load_matrix(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  return read_symmat(f);
}

// ---- gen -------------------------------------------------------------------

struct GenArgs {
  std::string model = "goe";
  Index n = 100;
  double lambda = 0.0, a = 0.0, b = 0.0, degree = 0.0;
  Index block_dim = 1;
  bool centered = false;
  std::uint64_t seed = 1;
  std::string out;
};

int run_gen(const GenArgs& g) {
  Instance inst{SymmetricMatrix::zero(1), std::nullopt, {g.model, {}, g.seed}, std::nullopt};
  if (g.model == "goe") {
    inst = goe_instance(g.n, g.seed);
    if (g.block_dim > 1) {
      inst.a = inst.a.with_block_dim(g.block_dim);
      inst.meta.params["block_dim"] = double(g.block_dim);
    }
  } else if (g.model == "spiked") {
    inst = spiked(g.n, g.lambda, g.seed);
  } else if (g.model == "sbm") {
    inst = sbm(g.n, g.a, g.b, g.seed);
  } else if (g.model == "er") {
    inst.a = erdos_renyi(g.n, g.degree, g.seed);
    inst.meta.params = {{"n", double(g.n)}, {"d", g.degree}};
  } else if (g.model == "regular") {
    if (g.degree != std::floor(g.degree)) throw std::invalid_argument("--d must be an integer");
    const Index d = static_cast<Index>(g.degree);
    inst.a = g.centered ? centered_regular(g.n, d, g.seed) : random_regular(g.n, d, g.seed);
    inst.meta.params = {{"n", double(g.n)}, {"d", g.degree}, {"centered", g.centered ? 1.0 : 0.0}};
  } else {
    throw std::invalid_argument("unknown model '" + g.model + "'");
  }
  {
    std::ofstream f(g.out);
    if (!f) throw std::runtime_error("cannot open " + g.out);
    write_symmat(f, inst.a);
  }
  std::ofstream meta(g.out + ".meta");
  if (!meta) throw std::runtime_error("cannot open " + g.out + ".meta");
  meta << std::setprecision(17) << "model=" << inst.meta.model;
  for (const auto& [k, v] : inst.meta.params) meta << ' ' << k << '=' << v;
  meta << " seed=" << inst.meta.seed << '\n';
  if (inst.ground_truth) {
    meta << "ground_truth";
    for (Index i = 0; i < inst.ground_truth->size(); ++i)
      meta << ' ' << static_cast<int>((*inst.ground_truth)(i));
    meta << '\n';
  }
  return 0;
}

// ---- solve -----------------------------------------------------------------

struct SolveCmd {
  std::string in, out, trace, mode;
  Index k = 2;
  std::uint64_t seed = 1;
  SolveArgs solve;
  bool strict = false;
};

template <class G>
int run_solve_on(const SymmetricMatrix& a, const SolveCmd& c, const LocalSolveOptions& o) {
  SolveReport<typename G::Point> rep = [&] {
    if (o.solver != SolverKind::Pga) {
      SolverOptions so;
      so.k = c.k;
      so.mode = o.solver == SolverKind::RtrA ? RtrMode::EigenOnly : RtrMode::GradientEigen;
      so.epsilon = o.epsilon;
      so.max_iters = o.budget;
      so.power_c = o.power_c;
      so.seed = c.seed;
      so.record_trace = !c.trace.empty();
      return solve<G>(a, so);
    }
    Rng rng(c.seed);
    PgaOptions po;
    po.step = pga_step_for(a, o);
    po.iters = o.budget;
    po.grad_tol = o.pga_grad_tol;
    po.trace_every = c.trace.empty() ? 0 : 1;
    auto r = projected_gradient_ascent<G>(a, G::random_point(a, c.k, rng), po);
    r.seed = c.seed;
    return r;
  }();
  if (!c.out.empty()) {
    std::ofstream f(c.out);
    if (!f) throw std::runtime_error("cannot open " + c.out);
    if constexpr (std::is_same_v<G, SphereGeometry>)
      write_config(f, rep.sigma);
    else
      write_oc_config(f, rep.sigma);
  }
  if (!c.trace.empty()) {
    std::ofstream f(c.trace);
    if (!f) throw std::runtime_error("cannot open " + c.trace);
    write_trace_csv(f, rep);
  }
  std::cout << std::setprecision(17) << "solver=" << to_string(o.solver) << " k=" << c.k
            << " seed=" << c.seed << " converged=" << (rep.converged ? 1 : 0) << " reason=\""
            << rep.stop_reason << "\" f=" << rep.objective << " grad_norm=" << rep.grad_norm
            << " cert=" << rep.curvature_cert << " iterations=" << rep.iterations
            << " gradient_steps=" << rep.gradient_steps << " eigen_steps=" << rep.eigen_steps
            << '\n';
  return c.strict && !rep.converged ? kExitNotConverged : 0;
}

int run_solve(SolveCmd c) {
  if (!c.mode.empty()) {
    if (c.mode != "a" && c.mode != "b") throw std::invalid_argument("--mode must be a or b");
    c.solve.solver = "rtr-" + c.mode;
  }
  const LocalSolveOptions o = c.solve.options();
  const SymmetricMatrix a = load_matrix(c.in);
  if (c.k < 1) throw std::invalid_argument("--k must be >= 1");
  if (a.block_dim().value_or(1) > 1) return run_solve_on<StiefelGeometry>(a, c, o);
  return run_solve_on<SphereGeometry>(a, c, o);
}

// ---- check -----------------------------------------------------------------

struct CheckCmd {
  std::string config, matrix;
  double eps = 0.0;
  double sdp_eps = 1.0;
  std::uint64_t seed = 1;
  OutArgs out;
};

int run_check(const CheckCmd& c) {
  if (!(c.sdp_eps > 0.0)) throw std::invalid_argument("--sdp-eps must be positive");
  if (c.eps < 0.0) throw std::invalid_argument("--eps must be >= 0");
  const SymmetricMatrix a = load_matrix(c.matrix);
  std::ifstream f(c.config);
  if (!f) throw std::runtime_error("cannot open " + c.config);
  std::string tag;
  f >> tag;
  f.seekg(0);
  CsvTable t({"n", "k", "d", "k_eff", "f", "epsilon", "sdp_est", "rg_est", "bound", "slack",
              "holds", "sdp_converged"});
  if (tag == "occonfig") {
    const StiefelConfig s = read_oc_config(f);
    const SymmetricMatrix ab = a.block_dim() ? a : a.with_block_dim(s.d());
    const SdpEstimate est = oc_estimate_sdp(ab, c.sdp_eps, c.seed);
    const BoundCheck r = oc_grothendieck_check(ab, s, c.eps, est);
    t.add(s.n(), s.k(), s.d(), 2.0 * double(s.k()) / double(s.d() + 1), r.f, c.eps,
          est.value_plus, est.rg, r.bound, r.slack, r.holds, est.converged());
  } else {
    const SphereConfig s = read_config(f);
    const SdpEstimate est = estimate_sdp(a, c.sdp_eps, c.seed);
    const BoundCheck r = grothendieck_check(a, s, c.eps, est);
    t.add(s.n(), s.k(), Index{1}, double(s.k()), r.f, c.eps, est.value_plus, est.rg, r.bound,
          r.slack, r.holds, est.converged());
  }
  const int code = emit(t, OutArgs{c.out.path, false});
  return code;
}

std::vector<std::pair<double, double>> parse_ab(const std::vector<std::string>& items) {
  std::vector<std::pair<double, double>> out;
  for (const auto& s : items) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("--ab expects a:b pairs, got " + s);
    try {
      out.emplace_back(std::stod(s.substr(0, colon)), std::stod(s.substr(colon + 1)));
    } catch (const std::logic_error&) {
      throw std::invalid_argument("--ab expects numeric a:b pairs, got " + s);
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-rank Burer-Monteiro SDP solver and experiment harness"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* c_gen = app.add_subcommand("gen", "Generate a random instance");
  c_gen->add_option("--model", gen.model, "goe | spiked | sbm | er | regular")->capture_default_str();
  c_gen->add_option("--n", gen.n, "Dimension")->capture_default_str();
  c_gen->add_option("--lambda", gen.lambda, "Spike strength (spiked)");
  c_gen->add_option("--a", gen.a, "Within-group degree parameter (sbm)");
  c_gen->add_option("--b", gen.b, "Across-group degree parameter (sbm)");
  c_gen->add_option("--d", gen.degree, "Average degree (er) or degree (regular)");
  c_gen->add_option("--block-dim", gen.block_dim, "Block size recorded with a goe matrix");
  c_gen->add_flag("--centered", gen.centered, "Center the regular graph adjacency");
  c_gen->add_option("--seed", gen.seed, "Seed")->capture_default_str();
  c_gen->add_option("--out", gen.out, "Output matrix file (metadata goes to <out>.meta)")
      ->required();

  SolveCmd sc;
  auto* c_solve = app.add_subcommand("solve", "Find a local maximizer of <s, A s>");
  c_solve->add_option("--in", sc.in, "Matrix file")->required();
  c_solve->add_option("--k", sc.k, "Rank")->capture_default_str();
  c_solve->add_option("--mode", sc.mode, "Trust-region implementation a | b (sets --solver)");
  c_solve->add_option("--seed", sc.seed, "Seed")->capture_default_str();
  c_solve->add_option("--out", sc.out, "Write the final configuration here");
  c_solve->add_option("--trace", sc.trace, "Write the iteration trace CSV here");
  c_solve->add_flag("--strict", sc.strict, "Exit with code 3 if the run did not converge");
  sc.solve.solver = "rtr-b";
  sc.solve.add(c_solve);

  Index ls_n = 200;
  std::vector<Index> ls_k{2, 3, 4};
  LandscapeOptions ls;
  SeedArgs ls_seeds;
  SolveArgs ls_solve;
  OutArgs ls_out;
  auto* c_land = app.add_subcommand("landscape", "GOE landscape: gaps and curvature along PGA");
  c_land->add_option("--n", ls_n, "Dimension")->capture_default_str();
  c_land->add_option("--k", ls_k, "Ranks (comma separated)")->delimiter(',');
  c_land->add_option("--record-every", ls.record_every, "Trajectory sampling period (0: off)");
  c_land->add_option("--curvature-iters", ls.curvature_iters, "Power iterations per estimate");
  c_land->add_option("--max-n", ls.max_n, "Size guard")->capture_default_str();
  ls_seeds.add(c_land);
  ls_solve.add(c_land);
  ls_out.add(c_land);

  Index z_n = 500, z_k = 5;
  std::vector<double> z_lambda{0.5, 1.0, 1.5, 2.0};
  SeedArgs z_seeds;
  SolveArgs z_solve;
  OutArgs z_out;
  auto* c_z2 = app.add_subcommand("z2sync", "Spiked-model correlation sweep");
  c_z2->add_option("--n", z_n, "Dimension")->capture_default_str();
  c_z2->add_option("--lambda", z_lambda, "Spike strengths (comma separated)")->delimiter(',');
  c_z2->add_option("--k", z_k, "Rank")->capture_default_str();
  z_seeds.add(c_z2);
  z_solve.add(c_z2);
  z_out.add(c_z2);

  Index b_n = 500, b_k = 8;
  std::vector<std::string> b_ab{"12:4"};
  SeedArgs b_seeds;
  SolveArgs b_solve;
  OutArgs b_out;
  auto* c_sbm = app.add_subcommand("sbm", "Stochastic block model correlation sweep");
  c_sbm->add_option("--n", b_n, "Dimension (even)")->capture_default_str();
  c_sbm->add_option("--ab", b_ab, "a:b pairs (comma separated)")->delimiter(',');
  c_sbm->add_option("--k", b_k, "Rank")->capture_default_str();
  b_seeds.add(c_sbm);
  b_solve.add(c_sbm);
  b_out.add(c_sbm);

  GraphSpec mc_graph;
  std::vector<Index> mc_k{2, 3, 4, 5};
  MaxcutOptions mc;
  SeedArgs mc_seeds;
  SolveArgs mc_solve;
  OutArgs mc_out;
  auto* c_mc = app.add_subcommand("maxcut", "MaxCut by rounding low-rank local maximizers");
  c_mc->add_option("--graph", mc_graph.model, "er | regular")->capture_default_str();
  c_mc->add_option("--n", mc_graph.n, "Vertices")->capture_default_str();
  c_mc->add_option("--d", mc_graph.degree, "Average degree (er) or degree (regular)")
      ->capture_default_str();
  c_mc->add_option("--k", mc_k, "Ranks (comma separated)")->delimiter(',');
  c_mc->add_option("--samples", mc.samples, "Hyperplanes per rounding")->capture_default_str();
  c_mc->add_flag("--high-rank", mc.high_rank, "Add a row at the SDP-exact rank");
  c_mc->add_flag("--bruteforce", mc.bruteforce, "Exhaustive optimum (n <= 24)");
  mc_seeds.add(c_mc);
  mc_solve.add(c_mc);
  mc_out.add(c_mc);

  Index oc_m = 100, oc_d = 3;
  std::vector<Index> oc_k{6, 9, 12, 15};
  SeedArgs oc_seeds;
  SolveArgs oc_solve;
  OutArgs oc_out;
  auto* c_oc = app.add_subcommand("ocsdp", "Orthogonal-Cut gaps on GOE in the block view");
  c_oc->add_option("--m", oc_m, "Number of blocks")->capture_default_str();
  c_oc->add_option("--d", oc_d, "Block size")->capture_default_str();
  c_oc->add_option("--k", oc_k, "Ranks (comma separated)")->delimiter(',');
  oc_seeds.add(c_oc);
  oc_solve.add(c_oc);
  oc_out.add(c_oc);

  CheckCmd ck;
  auto* c_check = app.add_subcommand("check", "Check the Grothendieck-type bound for a configuration");
  c_check->add_option("--in-config", ck.config, "Configuration file")->required();
  c_check->add_option("--in-matrix", ck.matrix, "Matrix file")->required();
  c_check->add_option("--eps", ck.eps, "Curvature certificate of the configuration");
  c_check->add_option("--sdp-eps", ck.sdp_eps, "Target curvature of the SDP estimates")
      ->capture_default_str();
  c_check->add_option("--seed", ck.seed, "Seed for the SDP estimates")->capture_default_str();
  c_check->add_option("--out", ck.out.path, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*c_gen) return run_gen(gen);
    if (*c_solve) return run_solve(sc);
    if (*c_check) return run_check(ck);
    if (*c_land) {
      ls.solve = ls_solve.options();
      return emit(run_landscape(ls_n, ls_k, ls_seeds.resolve(), ls), ls_out);
    }
    if (*c_z2) return emit(run_z2sync(z_n, z_lambda, z_k, z_seeds.resolve(), z_solve.options()), z_out);
    if (*c_sbm)
      return emit(run_sbm(b_n, parse_ab(b_ab), b_k, b_seeds.resolve(), b_solve.options()), b_out);
    if (*c_mc) {
      mc.solve = mc_solve.options();
      return emit(run_maxcut(mc_graph, mc_k, mc_seeds.resolve(), mc), mc_out);
    }
    if (*c_oc) return emit(run_ocsdp(oc_m, oc_d, oc_k, oc_seeds.resolve(), oc_solve.options()), oc_out);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
