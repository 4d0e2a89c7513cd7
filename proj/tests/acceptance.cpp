// Acceptance runner: one line per criterion, nonzero exit if any fails.
// Each criterion is independent and wrapped so a numerical throw turns
// into a FAIL line instead of aborting the suite.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "hifisher/core.hpp"
#include "hifisher/models.hpp"
#include "hifisher/oracle.hpp"
#include "hifisher/priors.hpp"
#include "hifisher/special.hpp"

#ifndef HIFISHER_CLI_PATH
#error "HIFISHER_CLI_PATH must be defined"
#endif

using namespace hifisher;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& on_fail) {
    if (!ok && pass) {
      pass = false;
      detail = on_fail;
    }
  }
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct CliResult {
  int exit_code = -1;
  std::string output;
};

CliResult run_cli(const std::string& args, const std::string& env_prefix = "") {
  std::string cmd = env_prefix;
  if (!cmd.empty()) cmd += ' ';
  cmd += '\'';
  cmd += HIFISHER_CLI_PATH;
  cmd += "' ";
  cmd += args;
  cmd += " 2>&1";
  CliResult res;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return res;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) res.output.append(buf, n);
  const int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

// ---------------------------------------------------------------------
// 1. KL chain rule on random discrete joints.

Outcome criterion1() {
  Outcome out;
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    SplitRng rng = SplitRng(2026).split(static_cast<std::uint64_t>(i));
    const DiscreteJoint f = DiscreteJoint::random(8, 8, rng);
    const DiscreteJoint g = DiscreteJoint::random(8, 8, rng);
    const KlChainReport rep = discrete_kl_chain_check(f, g);
    out.require(rep.finite, "support mismatch on strictly positive tables");
    worst = std::max({worst, rep.residual_obs, rep.residual_latent});
  }
  const double dt = seconds_since(t0);
  out.require(worst <= 1e-12, "max residual " + num(worst) + " above 1e-12");
  out.require(dt < 1.0, "took " + num(dt) + " s, budget 1 s");
  if (out.pass) out.detail = "max residual " + num(worst) + " over 100 joints";
  return out;
}

// ---------------------------------------------------------------------
// 2. Closed-form gaussian hierarchy against its decomposition.

Outcome criterion2() {
  Outcome out;
  const HierarchicalModel m = make_gaussian2();
  EstimatorConfig cfg;
  double worst_rel = 0.0, worst_alg = 0.0;
  for (double phi : parse_grid("0.1:10:50:log")) {
    const double expect = 1.0 / (2.0 * phi * phi * (phi + 1.0) * (phi + 1.0));
    const DecompositionReport rep = decompose_two_level(m, m.param(phi), cfg);
    worst_rel = std::max(worst_rel,
                         std::fabs(rep.i_marginal.scalar() - expect) / expect);
    // The identity assembled from the two closed-form pieces.
    const double lhs = 1.0 / (2.0 * phi * phi) -
                       (phi + 2.0) / (2.0 * phi * (phi + 1.0) * (phi + 1.0));
    worst_alg = std::max(worst_alg, std::fabs(lhs - expect) / expect);
    const double route = rep.i_w.scalar() - rep.e_iw_given_y.scalar();
    worst_alg = std::max(worst_alg, std::fabs(route - expect) / expect);
  }
  out.require(worst_rel <= 1e-10,
              "marginal info off by " + num(worst_rel) + " relative");
  out.require(worst_alg <= 1e-12, "identity residual " + num(worst_alg));
  if (out.pass)
    out.detail = "50 log-grid points, worst rel err " + num(worst_rel) +
                 ", identity " + num(worst_alg);
  return out;
}

// ---------------------------------------------------------------------
// 3. Monte Carlo path with every closed form switched off.

Outcome criterion3() {
  Outcome out;
  const auto t0 = Clock::now();
  const HierarchicalModel m = make_gaussian2();
  double worst_sigma = 0.0;
  int k = 0;
  for (double phi : {0.5, 1.0, 3.0}) {
    EstimatorConfig cfg;
    cfg.use_analytic_expectation = false;
    cfg.use_analytic_fisher = false;
    cfg.n_outer = 100000;
    cfg.n_inner = 64;
    cfg.seed = 301 + static_cast<std::uint64_t>(k++);
    const DecompositionReport rep = decompose_two_level(m, m.param(phi), cfg);
    const double expect =
        (2.0 + phi) / (2.0 * phi * (phi + 1.0) * (phi + 1.0));
    const double got = rep.e_iw_given_y.scalar();
    const double se = rep.e_iw_given_y.stderr_entries()(0, 0);
    out.require(se > 0.0, "Monte Carlo route reported a zero standard error");
    const double sigmas = std::fabs(got - expect) / se;
    worst_sigma = std::max(worst_sigma, sigmas);
    out.require(sigmas <= 3.0, "phi " + num(phi) + ": estimate " + num(got) +
                                   " vs " + num(expect) + " is " + num(sigmas) +
                                   " standard errors away");
  }
  const double dt = seconds_since(t0);
  out.require(dt < 30.0, "took " + num(dt) + " s, budget 30 s");
  if (out.pass)
    out.detail = "worst deviation " + num(worst_sigma) +
                 " standard errors at n_outer 100000";
  return out;
}

// ---------------------------------------------------------------------
// 4. Student-t latent precision: oracles, tail, properness.

Outcome criterion4() {
  Outcome out;
  const HierarchicalModel m = make_studentt();
  EstimatorConfig cfg;
  cfg.quad_points = 301;

  double worst_oracle = 0.0, worst_pair = 0.0;
  int k = 0;
  for (double th : {1.0, 2.0, 5.0, 10.0, 30.0}) {
    EstimatorConfig c = cfg;
    c.seed = 401 + static_cast<std::uint64_t>(k++);
    const ParamPoint pt = m.param(th);
    const double dec = marginal_fisher(m, pt, c).scalar();
    const double sv = score_variance_fisher(m, pt, c).scalar();
    const double kh = kl_hessian_fisher(m, pt, c).scalar();
    worst_oracle = std::max(worst_oracle, std::fabs(dec - sv) / std::fabs(sv));
    worst_pair = std::max(worst_pair, std::fabs(sv - kh) / std::fabs(sv));
  }
  out.require(worst_oracle <= 0.01, "decomposition vs score variance off by " +
                                        num(worst_oracle) + " relative");
  out.require(worst_pair <= 0.001,
              "the two oracles disagree by " + num(worst_pair) + " relative");

  std::vector<double> ts = parse_grid("50:500:12:log"), iys;
  for (double th : ts) {
    iys.push_back(decompose_two_level(m, m.param(th), cfg).i_marginal.scalar());
  }
  const TailFit fit = fit_power_tail(ts, iys);
  out.require(fit.usable, "tail fit unusable");
  out.require(std::fabs(fit.exponent + 4.0) <= 0.3,
              "tail exponent " + num(fit.exponent) + " outside -4 +- 0.3");

  std::vector<double> gs = parse_grid("0.5:500:64:log"), js;
  for (double th : gs) {
    js.push_back(std::sqrt(decompose_two_level(m, m.param(th), cfg)
                               .i_marginal.scalar()));
  }
  const PropernessReport rep =
      properness_diagnostic(gs, js, m.domain, m.tail_diag_lower, m.tail_diag_upper);
  out.require(rep.verdict == "proper", "verdict '" + rep.verdict + "'");

  if (out.pass)
    out.detail = "oracle gap " + num(worst_oracle) + ", oracle pair gap " +
                 num(worst_pair) + ", tail exponent " + num(fit.exponent) +
                 ", verdict proper";
  return out;
}

// ---------------------------------------------------------------------
// 5. Lasso scale: exact algebra in the library, exact ratios in the CSV.

Outcome criterion5() {
  Outcome out;
  EstimatorConfig cfg;
  double worst = 0.0;
  for (int p : {1, 2, 5}) {
    const HierarchicalModel m = make_lasso(p, 1.0);
    for (double th : parse_grid("0.5:8:20")) {
      const DecompositionReport rep = decompose_two_level(m, m.param(th), cfg);
      worst = std::max(worst,
                       std::fabs(th * th * rep.i_marginal.scalar() - p) / p);
    }
  }
  out.require(worst <= 1e-12,
              "theta^2 I_y deviates from p by " + num(worst) + " relative");

  const CliResult r = run_cli("prior --model lasso --p 2 --theta-grid 0.5:8:20");
  out.require(r.exit_code == 0, "prior command exited " + num(r.exit_code));
  std::vector<double> thetas, jeffreys;
  std::stringstream ss(r.output);
  std::string line;
  std::getline(ss, line);  // header
  for (int i = 0; i < 20 && std::getline(ss, line); ++i) {
    std::stringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != 8) {
      out.require(false, "CSV row with " + num(cells.size()) + " columns");
      break;
    }
    thetas.push_back(std::stod(cells[0]));
    jeffreys.push_back(std::stod(cells[5]));
  }
  double worst_ratio = 0.0;
  if (thetas.size() == 20) {
    for (std::size_t i = 1; i < thetas.size(); ++i) {
      // pi(t0)/pi(ti) must equal ti/t0.
      const double ratio = (jeffreys[0] / jeffreys[i]) * (thetas[0] / thetas[i]);
      worst_ratio = std::max(worst_ratio, std::fabs(ratio - 1.0));
    }
  } else {
    out.require(false, "expected 20 CSV rows, got " + num(thetas.size()));
  }
  out.require(worst_ratio <= 1e-12,
              "emitted prior ratios off by " + num(worst_ratio));
  if (out.pass)
    out.detail = "exact algebra to " + num(worst) + ", CSV ratios to " +
                 num(worst_ratio);
  return out;
}

// ---------------------------------------------------------------------
// 6. Mixture weights: route agreement, worked value, envelope mass.

Outcome criterion6() {
  Outcome out;
  EstimatorConfig cfg;

  const HierarchicalModel disc =
      make_discrete_mixture({{0.6, 0.4}, {0.3, 0.7}});
  double worst_route = 0.0;
  for (double th : parse_grid("0.1:0.9:9")) {
    const double dec =
        decompose_two_level(disc, disc.param(th), cfg).i_marginal.scalar();
    const double direct =
        mixture_direct_marginal_fisher(disc, VectorXd::Constant(1, th))(0, 0);
    worst_route = std::max(worst_route, std::fabs(dec - direct));
  }
  out.require(worst_route <= 1e-12,
              "decomposition vs direct route gap " + num(worst_route));
  const double worked =
      decompose_two_level(disc, disc.param(0.5), cfg).i_marginal.scalar();
  out.require(std::fabs(worked - 4.0 / 11.0) <= 1e-12,
              "worked instance gave " + num(worked) + " instead of 4/11");

  const HierarchicalModel cont = make_gaussian_mixture({-2.0, 2.0}, {1.0, 1.0});
  std::vector<VectorXd> thetas;
  std::vector<double> ts;
  for (double th : parse_grid("0.0005:0.9995:2001")) {
    ts.push_back(th);
    thetas.push_back(VectorXd::Constant(1, th));
  }
  const PriorGrid grid = jeffreys_grid(cont, thetas, cfg, 4);
  std::vector<double> upper;
  double worst_dom = 0.0;
  for (const PriorPoint& pt : grid.points) {
    upper.push_back(pt.upper_bound);
    worst_dom = std::max(worst_dom,
                         pt.jeffreys - pt.upper_bound - 1e-12 * pt.upper_bound);
  }
  out.require(worst_dom <= 0.0,
              "marginal prior exceeds its envelope by " + num(worst_dom));

  // For one free weight the envelope is (theta (1 - theta))^{-1/2}, whose
  // integral over (0, 1) is pi.
  const double pi = std::acos(-1.0);
  const PropernessReport mass =
      properness_diagnostic(ts, upper, cont.domain, true, true);
  const double rel = std::fabs(mass.total_mass - pi) / pi;
  out.require(rel <= 0.02, "envelope mass " + num(mass.total_mass) +
                               " differs from pi by " + num(rel) + " relative");
  if (out.pass)
    out.detail = "routes agree to " + num(worst_route) + ", envelope mass " +
                 num(mass.total_mass) + " vs pi";
  return out;
}

// ---------------------------------------------------------------------
// 7. Determinant superadditivity across the simplex.

Outcome criterion7() {
  Outcome out;
  const MatrixXd id = MatrixXd::Identity(2, 2);
  const MinkowskiReport eq = minkowski_check(id, id);
  out.require(eq.lhs_root_n == 2.0 && eq.rhs_root_n == 2.0 &&
                  eq.slack_root_n == 0.0,
              "identity case is not exactly 2 = 1 + 1");

  const HierarchicalModel m =
      make_gaussian_mixture({-3.0, 0.0, 3.0}, {1.0, 1.0, 1.0});
  EstimatorConfig cfg;
  const std::vector<VectorXd> pts = simplex_interior_grid(2, 11);
  out.require(pts.size() >= 45, "simplex grid has only " + num(pts.size()) +
                                    " interior points");
  double worst = 0.0;
  for (const VectorXd& th : pts) {
    const DecompositionReport rep = decompose_two_level(m, m.param(th), cfg);
    const MinkowskiReport mk = minkowski_check(rep.i_marginal.entries(),
                                               rep.e_iw_given_y.entries());
    const double allowance =
        3.0 * (rep.i_marginal.sqrt_det_stderr() +
               rep.e_iw_given_y.sqrt_det_stderr()) +
        1e-9 * std::max(1.0, mk.lhs_root_n);
    const double deficit = -(mk.slack_root_n + allowance);
    worst = std::max(worst, deficit);
    out.require(deficit <= 0.0, "superadditivity violated by " + num(deficit));
    out.require(mk.holds_sqrt, "square-root form violated");
  }
  if (out.pass)
    out.detail = num(pts.size()) + " interior points, equality case exact";
  return out;
}

// ---------------------------------------------------------------------
// 8. Hyperbolic model: conditional information, envelope, special functions.

Outcome criterion8() {
  Outcome out;
  const HierarchicalModel m = make_hyperbolic();

  double worst_rel = 0.0;
  int k = 0;
  for (double th : {0.5, 1.0, 3.0}) {
    for (double y : {0.0, 0.9, 2.5}) {
      const double x = th * std::sqrt(2.0 * (y * y + 1.0));
      const double analytic = 2.0 * (y * y + 1.0) * s_curvature(0.5, x);

      // Enough draws to put three sigma of the per-draw spread, which is
      // 1 / sqrt(x + 2) relative, inside the 1e-3 band with margin.
      const double rel_sd = 1.0 / std::sqrt(x + 2.0);
      const long n_draws =
          static_cast<long>(std::ceil((rel_sd / 2.9e-4) * (rel_sd / 2.9e-4)));

      const VectorXd yv = VectorXd::Constant(1, y);
      const ParamPoint pt = m.param(th);
      EstimatorConfig cfg;
      auto logd = [&](const VectorXd& w, const VectorXd& theta) {
        return m.complete_conditional.log_density(w, yv, theta);
      };
      auto draw = [&](SplitRng& rng) {
        return m.complete_conditional.sample(yv, pt.values, rng);
      };
      const FisherMatrix numeric = numeric_conditional_fisher_stream(
          logd, draw, pt, cfg, SplitRng(801 + static_cast<std::uint64_t>(k++)),
          n_draws);
      const double rel = std::fabs(numeric.scalar() - analytic) / analytic;
      worst_rel = std::max(worst_rel, rel);
      out.require(rel <= 1e-3, "theta " + num(th) + ", y " + num(y) +
                                   ": numeric off by " + num(rel) + " relative");
    }
  }

  // Monte Carlo prior against its envelope across a wide grid.
  EstimatorConfig gcfg;
  gcfg.seed = 88;
  std::vector<VectorXd> thetas;
  for (double th : parse_grid("0.2:20:100:log")) {
    thetas.push_back(VectorXd::Constant(1, th));
  }
  const PriorGrid grid = jeffreys_grid(m, thetas, gcfg, 4);
  const DominanceReport dom = envelope_properness_check(grid);
  out.require(dom.holds, "envelope dominance violated by " +
                             num(dom.max_violation) + " beyond three sigma");

  // Frozen special-function identities the model leans on.
  out.require(std::fabs(trigamma(1.0) - 1.6449340668482264) <= 1e-13,
              "trigamma(1) drifted");
  out.require(std::fabs(digamma(0.5) + 1.9635100260214235) <= 1e-13,
              "digamma(1/2) drifted");
  out.require(std::fabs(log_bessel_k(0.5, 2.0) -
                        std::log(0.119937771968061)) <= 1e-12,
              "K_{1/2}(2) drifted");
  out.require(std::fabs(bessel_ratio_r(1.0, 1.0) - 2.69948393559377) <= 1e-11,
              "R_1(1) drifted");
  for (double x : {0.7, 2.0, 10.0}) {
    const double closed = 1.0 / x + 2.0 / (x * x);
    out.require(std::fabs(s_curvature(0.5, x) - closed) <= 1e-12 * closed,
                "S_{1/2} closed form drifted at x " + num(x));
  }
  out.require(std::fabs(gig_moments(GigParams(0.5, 2.0, 1.5)).mean - 1.0) <= 1e-12,
              "GIG(1/2, 2, 3/2) mean drifted from 1");

  if (out.pass)
    out.detail = "worst conditional-information error " + num(worst_rel) +
                 " relative, envelope holds on 100 points";
  return out;
}

// ---------------------------------------------------------------------
// 9. End-to-end determinism of the command line, and the time budget.

Outcome criterion9(Clock::time_point suite_start) {
  Outcome out;
  const std::string dec =
      "decompose --model hyperbolic --grid 0.5:5:6:log --n-outer 500 --seed 42";
  const CliResult a = run_cli(dec);
  const CliResult b = run_cli(dec);
  out.require(a.exit_code == 0 && b.exit_code == 0, "decompose exited nonzero");
  out.require(a.output == b.output, "repeated decompose runs differ");

  const std::string pri =
      "prior --model hyperbolic --grid 0.5:5:6:log --n-outer 500 --seed 42";
  const CliResult t1 = run_cli(pri, "HIFISHER_THREADS=1");
  const CliResult t4 = run_cli(pri, "HIFISHER_THREADS=4");
  out.require(t1.exit_code == 0 && t4.exit_code == 0, "prior exited nonzero");
  out.require(t1.output == t4.output,
              "outputs differ between 1 and 4 worker threads");

  const CliResult k1 = run_cli("klcheck --instances 50 --size 6 --seed 7");
  const CliResult k2 = run_cli("klcheck --instances 50 --size 6 --seed 7");
  out.require(k1.exit_code == 0 && k1.output == k2.output,
              "klcheck runs are not reproducible");

  const double total = seconds_since(suite_start);
  out.require(total < 300.0,
              "suite total " + num(total) + " s exceeds the 300 s budget");
  if (out.pass)
    out.detail = "byte-identical reruns, thread-count invariant, total " +
                 num(total) + " s";
  return out;
}

}  // namespace

int main() {
  const auto suite_start = Clock::now();
  std::vector<std::function<Outcome()>> criteria = {
      criterion1, criterion2, criterion3,
      criterion4, criterion5, criterion6,
      criterion7, criterion8, [&] { return criterion9(suite_start); }};

  bool all_pass = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = Clock::now();
    Outcome out;
    try {
      out = criteria[i]();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    const double dt = seconds_since(t0);
    std::printf("criterion %zu: %s  %s  (%.2f s)\n", i + 1,
                out.pass ? "PASS" : "FAIL", out.detail.c_str(), dt);
    std::fflush(stdout);
    all_pass = all_pass && out.pass;
  }
  return all_pass ? 0 : 1;
}
