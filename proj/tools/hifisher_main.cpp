#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hifisher/core.hpp"
#include "hifisher/models.hpp"
#include "hifisher/oracle.hpp"
#include "hifisher/priors.hpp"

using nlohmann::json;
using namespace hifisher;

namespace {

constexpr int kSchemaVersion = 1;

// All floating-point text goes through one formatter so outputs are
// bit-identical across runs and unaffected by stream state.
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join_semicolon(const VectorXd& v) {
  std::string out;
  for (int i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += fmt(v[i]);
  }
  return out;
}

json matrix_json(const MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json fisher_json(const FisherMatrix& f) {
  return json{{"entries", matrix_json(f.entries())},
              {"stderr", matrix_json(f.stderr_entries())},
              {"method", method_name(f.method())}};
}

json report_json(const DecompositionReport& rep) {
  json theta = json::array();
  for (int i = 0; i < rep.theta.size(); ++i) theta.push_back(rep.theta[i]);
  return json{{"model", rep.model},
              {"theta", std::move(theta)},
              {"i_w", fisher_json(rep.i_w)},
              {"e_iy_given_w", fisher_json(rep.e_iy_given_w)},
              {"i_complete", fisher_json(rep.i_complete)},
              {"e_iw_given_y", fisher_json(rep.e_iw_given_y)},
              {"i_marginal", fisher_json(rep.i_marginal)},
              {"identity_residual", rep.identity_residual},
              {"min_eigenvalue", rep.min_eigenvalue},
              {"psd_clamped", rep.psd_clamped},
              {"fast_path", rep.fast_path},
              {"n_rejected", rep.n_rejected},
              {"seed", rep.cfg_echo.seed},
              {"n_outer", rep.cfg_echo.n_outer},
              {"n_inner", rep.cfg_echo.n_inner}};
}

int worker_count() {
  if (const char* env = std::getenv("HIFISHER_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || n < 1 || n > 256) {
      throw ConfigError("HIFISHER_THREADS must be an integer in [1, 256]");
    }
    return static_cast<int>(n);
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(std::min(hc, 8u));
}

// Everything a subcommand needs, bound to CLI11 options once.
struct CliOptions {
  std::string model;
  std::string grid;
  std::string theta;  // single point, comma separated for vector theta
  int simplex_depth = 0;
  std::uint64_t seed = 1;
  int n_outer = 20000;
  int n_inner = 200;
  int quad_points = 201;
  double fd_step = 1e-4;
  bool no_analytic_expectation = false;
  bool no_analytic_fisher = false;
  bool no_fast_path = false;
  std::string out;
  bool as_json = false;

  double mu = 0.0;
  double delta = 1.0;
  int p = 1;
  double sigma = 1.0;
  std::vector<double> means = {-2.0, 2.0};
  std::vector<double> sds = {1.0, 1.0};

  int instances = 100;  // klcheck
  int size = 8;

  EstimatorConfig estimator_config() const {
    EstimatorConfig cfg;
    cfg.seed = seed;
    cfg.n_outer = n_outer;
    cfg.n_inner = n_inner;
    cfg.quad_points = quad_points;
    cfg.fd_step = fd_step;
    cfg.use_analytic_expectation = !no_analytic_expectation;
    cfg.use_analytic_fisher = !no_analytic_fisher;
    cfg.allow_fast_path = !no_fast_path;
    cfg.validate();
    return cfg;
  }

  ModelOptions model_options() const {
    ModelOptions mo;
    mo.mu = mu;
    mo.delta = delta;
    mo.p = p;
    mo.sigma = sigma;
    mo.means = means;
    mo.sds = sds;
    return mo;
  }
};

void add_model_options(CLI::App* cmd, CliOptions& o) {
  cmd->add_option("--model", o.model, "model name; see list-models")->required();
  cmd->add_option("--mu", o.mu, "gaussian2: latent mean");
  cmd->add_option("--delta", o.delta, "gaussian2: observation precision");
  cmd->add_option("--p", o.p, "lasso: coefficient count");
  cmd->add_option("--sigma", o.sigma, "lasso: scale of the uniform stage");
  cmd->add_option("--means", o.means, "mixture: component means")->delimiter(',');
  cmd->add_option("--sds", o.sds, "mixture: component sds")->delimiter(',');
}

void add_grid_options(CLI::App* cmd, CliOptions& o) {
  cmd->add_option("--grid,--phi-grid,--theta-grid", o.grid,
                  "scalar grid min:max:count[:log]");
  cmd->add_option("--theta", o.theta, "single theta, comma separated if vector");
  cmd->add_option("--simplex-depth", o.simplex_depth,
                  "barycentric subdivision depth for simplex-valued theta");
}

void add_estimator_options(CLI::App* cmd, CliOptions& o) {
  cmd->add_option("--seed", o.seed, "root seed; every stream derives from it");
  cmd->add_option("--n-outer", o.n_outer, "outer Monte Carlo draws");
  cmd->add_option("--n-inner", o.n_inner, "inner draws per numeric Fisher");
  cmd->add_option("--quad-points", o.quad_points, "quadrature nodes");
  cmd->add_option("--fd-step", o.fd_step, "relative finite-difference step");
  cmd->add_flag("--no-analytic-expectation", o.no_analytic_expectation,
                "ignore closed-form expectation providers");
  cmd->add_flag("--no-analytic-fisher", o.no_analytic_fisher,
                "ignore closed-form per-law Fisher providers");
  cmd->add_flag("--no-fast-path", o.no_fast_path,
                "evaluate E_w[I_y(theta|w)] even when level 1 is theta-free");
}

void add_output_options(CLI::App* cmd, CliOptions& o) {
  cmd->add_option("--out", o.out, "output path (default stdout)");
  cmd->add_flag("--json", o.as_json, "single JSON document instead of text");
}

std::vector<VectorXd> resolve_thetas(const HierarchicalModel& m, const CliOptions& o) {
  const bool has_grid = !o.grid.empty();
  const bool has_theta = !o.theta.empty();
  const bool has_depth = o.simplex_depth > 0;
  if (has_theta && (has_grid || has_depth)) {
    throw ConfigError("--theta excludes --grid and --simplex-depth");
  }
  if (has_theta) {
    std::vector<double> vals;
    std::stringstream ss(o.theta);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ConfigError("--theta expects numbers, got '" + tok + "'");
      }
    }
    if (static_cast<int>(vals.size()) != m.theta_dim) {
      throw ConfigError("--theta needs " + std::to_string(m.theta_dim) +
                        " coordinates for model '" + m.name + "'");
    }
    VectorXd v(m.theta_dim);
    for (int i = 0; i < m.theta_dim; ++i) v[i] = vals[i];
    return {v};
  }
  if (m.theta_dim == 1) {
    if (!has_grid) throw ConfigError("scalar models need --grid or --theta");
    if (has_depth) throw ConfigError("--simplex-depth applies to simplex models only");
    std::vector<VectorXd> out;
    for (double t : parse_grid(o.grid)) out.push_back(VectorXd::Constant(1, t));
    return out;
  }
  if (!has_depth) {
    throw ConfigError("model '" + m.name + "' has a " + std::to_string(m.theta_dim) +
                      "-dimensional simplex parameter; use --simplex-depth (or --theta)");
  }
  if (has_grid) throw ConfigError("--grid applies to scalar models only");
  return simplex_interior_grid(m.theta_dim, o.simplex_depth);
}

// Writes either to the path or to stdout.
class OutputSink {
 public:
  explicit OutputSink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw ConfigError("cannot open output file '" + path + "'");
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

// Scalar cell for the CSV: the entry itself in one dimension, the
// determinant above (documented in the README).
double matrix_cell(const FisherMatrix& f) {
  return f.dim() == 1 ? f.scalar() : f.entries().determinant();
}

json properness_json(const std::vector<double>& theta, const std::vector<double>& dens,
                     const HierarchicalModel& m) {
  if (theta.size() < 16) {
    return json{{"verdict", "not_evaluated"},
                {"reason", "grid too short for tail diagnostics"}};
  }
  const PropernessReport rep = properness_diagnostic(
      theta, dens, m.domain, m.tail_diag_lower, m.tail_diag_upper);
  json out{{"verdict", rep.verdict},
           {"grid_mass", rep.grid_mass},
           {"normalization", rep.total_mass}};
  if (rep.upper_diagnosed && rep.upper.usable) {
    out["tail_exponent"] = rep.upper.exponent;
    out["tail_exponent_se"] = rep.upper.exponent_se;
  }
  if (rep.lower_diagnosed && rep.lower.usable) {
    out["lower_tail_exponent"] = rep.lower.exponent;
    out["lower_tail_exponent_se"] = rep.lower.exponent_se;
  }
  return out;
}

int cmd_decompose(const CliOptions& o) {
  const HierarchicalModel m = make_model(o.model, o.model_options());
  const EstimatorConfig cfg = o.estimator_config();
  const std::vector<VectorXd> thetas = resolve_thetas(m, o);
  const PriorGrid grid = jeffreys_grid(m, thetas, cfg, worker_count());

  OutputSink sink(o.out);
  if (o.as_json) {
    json doc{{"schema_version", kSchemaVersion},
             {"command", "decompose"},
             {"reports", json::array()}};
    for (const PriorPoint& pt : grid.points) {
      doc["reports"].push_back(report_json(pt.report));
    }
    sink.stream() << doc.dump(2) << '\n';
  } else {
    for (const PriorPoint& pt : grid.points) {
      sink.stream() << report_json(pt.report).dump() << '\n';
    }
  }
  return 0;
}

int cmd_prior(const CliOptions& o) {
  const HierarchicalModel m = make_model(o.model, o.model_options());
  const EstimatorConfig cfg = o.estimator_config();
  const std::vector<VectorXd> thetas = resolve_thetas(m, o);
  const PriorGrid grid = jeffreys_grid(m, thetas, cfg, worker_count());

  // Footers diagnose the scalar-theta case; simplex grids carry no
  // single tail direction.
  json jeffreys_footer, upper_footer;
  if (m.theta_dim == 1) {
    std::vector<double> ts, js, us;
    for (const PriorPoint& pt : grid.points) {
      ts.push_back(pt.theta[0]);
      js.push_back(pt.jeffreys);
      us.push_back(pt.upper_bound);
    }
    jeffreys_footer = properness_json(ts, js, m);
    upper_footer = properness_json(ts, us, m);
  } else {
    jeffreys_footer = json{{"verdict", "not_evaluated"},
                           {"reason", "tail diagnostics are scalar only"}};
    upper_footer = jeffreys_footer;
  }
  json footer{{"schema_version", kSchemaVersion},
              {"command", "prior"},
              {"model", m.name},
              {"points", grid.points.size()},
              {"jeffreys", jeffreys_footer},
              {"upper_bound", upper_footer}};

  if (o.as_json) {
    json doc{{"schema_version", kSchemaVersion},
             {"command", "prior"},
             {"rows", json::array()},
             {"footer", footer}};
    for (const PriorPoint& pt : grid.points) {
      json theta = json::array();
      for (int i = 0; i < pt.theta.size(); ++i) theta.push_back(pt.theta[i]);
      doc["rows"].push_back(json{{"theta", std::move(theta)},
                                 {"i_w", matrix_cell(pt.report.i_w)},
                                 {"e_iw_given_y", matrix_cell(pt.report.e_iw_given_y)},
                                 {"e_iy_given_w", matrix_cell(pt.report.e_iy_given_w)},
                                 {"i_y", matrix_cell(pt.report.i_marginal)},
                                 {"jeffreys", pt.jeffreys},
                                 {"upper_bound", pt.upper_bound},
                                 {"stderr_jeffreys", pt.jeffreys_stderr}});
    }
    OutputSink sink(o.out);
    sink.stream() << doc.dump(2) << '\n';
    return 0;
  }

  OutputSink sink(o.out);
  std::ostream& os = sink.stream();
  os << "theta,i_w,e_iw_given_y,e_iy_given_w,i_y,jeffreys,upper_bound,stderr_jeffreys\n";
  for (const PriorPoint& pt : grid.points) {
    os << join_semicolon(pt.theta) << ',' << fmt(matrix_cell(pt.report.i_w)) << ','
       << fmt(matrix_cell(pt.report.e_iw_given_y)) << ','
       << fmt(matrix_cell(pt.report.e_iy_given_w)) << ','
       << fmt(matrix_cell(pt.report.i_marginal)) << ',' << fmt(pt.jeffreys) << ','
       << fmt(pt.upper_bound) << ',' << fmt(pt.jeffreys_stderr) << '\n';
  }
  if (!o.out.empty()) {
    std::ofstream ff(o.out + ".footer.json", std::ios::binary | std::ios::trunc);
    if (!ff) throw ConfigError("cannot open footer file '" + o.out + ".footer.json'");
    ff << footer.dump(2) << '\n';
  } else {
    os << footer.dump() << '\n';
  }
  return 0;
}

int cmd_validate(const CliOptions& o) {
  const HierarchicalModel m = make_model(o.model, o.model_options());
  if (!m.oracle_supported) {
    throw ConfigError("model '" + m.name +
                      "' is validated by exact algebra (theta^2 I_y = p); the "
                      "quadrature oracles do not apply. See the lasso unit tests.");
  }
  const EstimatorConfig cfg = o.estimator_config();
  const std::vector<VectorXd> thetas = resolve_thetas(m, o);

  struct Row {
    VectorXd theta;
    double i_y, score, kl, err_score, err_kl, rel_tol;
  };
  std::vector<Row> rows;
  double max_err = 0.0;
  bool pass = true;

  for (std::size_t i = 0; i < thetas.size(); ++i) {
    EstimatorConfig c = cfg;
    c.seed = SplitRng(cfg.seed).split(0x9d0b5ull + i).next_u64();
    const ParamPoint pt = m.param(thetas[i]);
    const FisherMatrix dec = marginal_fisher(m, pt, c);
    const FisherMatrix sv = score_variance_fisher(m, pt, c);
    const FisherMatrix kh = kl_hessian_fisher(m, pt, c);

    const double scale = std::max({dec.entries().cwiseAbs().maxCoeff(),
                                   sv.entries().cwiseAbs().maxCoeff(), 1e-300});
    Row r;
    r.theta = thetas[i];
    r.i_y = matrix_cell(dec);
    r.score = matrix_cell(sv);
    r.kl = matrix_cell(kh);
    r.err_score = (dec.entries() - sv.entries()).cwiseAbs().maxCoeff() / scale;
    r.err_kl = (dec.entries() - kh.entries()).cwiseAbs().maxCoeff() / scale;
    // The oracles are deterministic quadrature; the decomposition may
    // carry Monte Carlo error, so the gate widens by three of its
    // standard errors. Analytic routes have zero stderr and keep the
    // plain 1% gate.
    r.rel_tol = 0.01 + 3.0 * dec.stderr_entries().cwiseAbs().maxCoeff() / scale;
    rows.push_back(r);
    max_err = std::max({max_err, r.err_score, r.err_kl});
    pass = pass && r.err_score <= r.rel_tol && r.err_kl <= r.rel_tol;
  }

  OutputSink sink(o.out);
  std::ostream& os = sink.stream();
  if (o.as_json) {
    json doc{{"schema_version", kSchemaVersion},
             {"command", "validate"},
             {"model", m.name},
             {"max_rel_err", max_err},
             {"pass", pass},
             {"rows", json::array()}};
    for (const Row& r : rows) {
      json theta = json::array();
      for (int i = 0; i < r.theta.size(); ++i) theta.push_back(r.theta[i]);
      doc["rows"].push_back(json{{"theta", std::move(theta)},
                                 {"i_y", r.i_y},
                                 {"score_variance", r.score},
                                 {"kl_hessian", r.kl},
                                 {"rel_err_score", r.err_score},
                                 {"rel_err_kl", r.err_kl},
                                 {"rel_tol", r.rel_tol}});
    }
    os << doc.dump(2) << '\n';
  } else {
    os << "theta i_y score_variance kl_hessian rel_err_score rel_err_kl rel_tol\n";
    for (const Row& r : rows) {
      os << join_semicolon(r.theta) << ' ' << fmt(r.i_y) << ' ' << fmt(r.score) << ' '
         << fmt(r.kl) << ' ' << fmt(r.err_score) << ' ' << fmt(r.err_kl) << ' '
         << fmt(r.rel_tol) << '\n';
    }
    os << (pass ? "pass" : "fail") << " max_rel_err=" << fmt(max_err) << '\n';
  }
  if (!pass)
    throw Error("oracle disagreement beyond 1% plus Monte Carlo allowance (max " +
                fmt(max_err) + ")");
  return 0;
}

int cmd_klcheck(const CliOptions& o) {
  if (o.instances < 1) throw ConfigError("--instances must be >= 1");
  if (o.size < 1 || o.size > 64) throw ConfigError("--size must be in [1, 64]");

  double worst = 0.0;
  int infinite_pairs = 0;
  for (int i = 0; i < o.instances; ++i) {
    SplitRng rng = SplitRng(o.seed).split(static_cast<std::uint64_t>(i));
    const DiscreteJoint f = DiscreteJoint::random(o.size, o.size, rng);
    const DiscreteJoint g = DiscreteJoint::random(o.size, o.size, rng);
    const KlChainReport rep = discrete_kl_chain_check(f, g);
    if (!rep.finite) {
      // Dirichlet tables are strictly positive, so this cannot trigger
      // here; counted for completeness of the report.
      ++infinite_pairs;
      continue;
    }
    worst = std::max({worst, rep.residual_obs, rep.residual_latent});
  }
  const bool pass = worst <= 1e-12;

  OutputSink sink(o.out);
  if (o.as_json) {
    sink.stream() << json{{"schema_version", kSchemaVersion},
                          {"command", "klcheck"},
                          {"instances", o.instances},
                          {"size", o.size},
                          {"max_residual", worst},
                          {"infinite_pairs", infinite_pairs},
                          {"pass", pass}}
                         .dump(2)
                  << '\n';
  } else {
    sink.stream() << "instances=" << o.instances << " size=" << o.size
                  << " max_residual=" << fmt(worst) << (pass ? " pass" : " fail")
                  << '\n';
  }
  if (!pass) {
    throw Error("chain-rule residual above 1e-12 (max " + fmt(worst) + ")");
  }
  return 0;
}

int cmd_list_models(const CliOptions& o) {
  OutputSink sink(o.out);
  if (o.as_json) {
    json doc{{"schema_version", kSchemaVersion},
             {"command", "list-models"},
             {"models", json::array()}};
    for (const std::string& name : model_names()) {
      const HierarchicalModel m = make_model(name, ModelOptions{});
      doc["models"].push_back(json{{"name", m.name},
                                   {"summary", m.summary},
                                   {"theta_dim", m.theta_dim},
                                   {"domain", m.domain.describe()}});
    }
    sink.stream() << doc.dump(2) << '\n';
  } else {
    for (const std::string& name : model_names()) {
      const HierarchicalModel m = make_model(name, ModelOptions{});
      sink.stream() << m.name << "  " << m.summary << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fisher information decompositions and induced priors for "
               "two-level hierarchies"};
  app.require_subcommand(1);

  CliOptions o;

  CLI::App* dec = app.add_subcommand("decompose", "decomposition reports on a grid");
  add_model_options(dec, o);
  add_grid_options(dec, o);
  add_estimator_options(dec, o);
  add_output_options(dec, o);

  CLI::App* pri = app.add_subcommand("prior", "Jeffreys and upper-bound prior CSV");
  add_model_options(pri, o);
  add_grid_options(pri, o);
  add_estimator_options(pri, o);
  add_output_options(pri, o);

  CLI::App* val = app.add_subcommand("validate", "decomposition vs quadrature oracles");
  add_model_options(val, o);
  add_grid_options(val, o);
  add_estimator_options(val, o);
  add_output_options(val, o);

  CLI::App* klc = app.add_subcommand("klcheck", "KL chain-rule identity on random joints");
  klc->add_option("--instances", o.instances, "number of seeded joint pairs");
  klc->add_option("--size", o.size, "support size per axis, up to 64");
  klc->add_option("--seed", o.seed, "root seed");
  add_output_options(klc, o);

  CLI::App* lst = app.add_subcommand("list-models", "catalog names and summaries");
  add_output_options(lst, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (dec->parsed()) return cmd_decompose(o);
    if (pri->parsed()) return cmd_prior(o);
    if (val->parsed()) return cmd_validate(o);
    if (klc->parsed()) return cmd_klcheck(o);
    if (lst->parsed()) return cmd_list_models(o);
    std::cerr << "no subcommand selected\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << '\n';
    return 3;
  }
}
