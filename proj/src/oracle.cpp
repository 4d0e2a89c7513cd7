#include "hifisher/oracle.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "hifisher/quadrature.hpp"

namespace hifisher {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// exp(-45) ~ 3e-20: relative mass left outside any integration window.
constexpr double kWindowDrop = 45.0;
// Relative step for the KL Hessian probes. Curvature bias is O(step^2),
// far below the 0.1% the oracle cross-checks ask for, while keeping the
// KL values large enough to survive quadrature noise.
constexpr double kKlStepRel = 1e-3;

// KL between two probability vectors, 0 log 0 = 0.
double kl_of(const VectorXd& p, const VectorXd& q) {
  double acc = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    if (!(p[i] > 0.0)) continue;
    if (!(q[i] > 0.0)) return kInf;
    acc += p[i] * std::log(p[i] / q[i]);
  }
  return acc;
}

// Enumerate quadrature nodes over the observation axis, calling
// visit(y, weight) so multiple integrands share one node sweep. `logf`
// is only consulted by the Scan kind, to place the window.
void for_each_obs_node(const HierarchicalModel& m, const VectorXd& theta,
                       const std::function<double(double)>& logf, int quad_points,
                       const std::function<void(double, double)>& visit) {
  const ObsIntegration& oi = m.obs_integration;

  auto visit_panel = [&](double a, double b, int n,
                         const std::function<double(double)>& map_y,
                         const std::function<double(double)>& map_w) {
    const QuadRule& rule = gauss_legendre(n);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int i = 0; i < n; ++i) {
      const double u = mid + half * rule.nodes[i];
      visit(map_y(u), rule.weights[i] * half * map_w(u));
    }
  };
  auto ident = [](double u) { return u; };
  auto unit = [](double) { return 1.0; };

  auto composite = [&](double lo, double hi) {
    const int panels = 16;
    const int nodes = std::max(21, quad_points / 8);
    const double width = (hi - lo) / panels;
    for (int k = 0; k < panels; ++k) {
      visit_panel(lo + k * width, lo + (k + 1) * width, nodes, ident, unit);
    }
  };

  switch (oi.kind) {
    case ObsIntegration::Kind::Discrete: {
      for (double y : oi.support) visit(y, 1.0);
      return;
    }
    case ObsIntegration::Kind::Fixed: {
      if (!oi.lo || !oi.hi) throw ConfigError("fixed observation window missing bounds");
      composite(oi.lo(theta), oi.hi(theta));
      return;
    }
    case ObsIntegration::Kind::Scan: {
      if (!oi.start || !oi.scale) throw ConfigError("scan integration missing start/scale");
      PeakWindow win =
          find_peak_window(logf, oi.start(theta), oi.scale(theta), kWindowDrop);
      composite(win.lo, win.hi);
      return;
    }
    case ObsIntegration::Kind::TanSub: {
      if (!oi.scale) throw ConfigError("tan substitution missing its scale");
      const double s = oi.scale(theta);
      auto map_y = [s](double u) { return s * std::tan(u); };
      auto map_w = [s](double u) {
        const double c = std::cos(u);
        return s / (c * c);
      };
      // Panels graded toward both endpoints, where tan blows up: edges
      // walk from the midpoint outward in geometrically shrinking steps,
      // so the slivers adjacent to +-pi/2 resolve integrands whose tails
      // decay like powers of the original coordinate.
      const double pi_half = 1.5707963267948966;
      const int levels = 14;
      const int nodes = std::max(21, quad_points / 10);
      double edge = 0.0;
      double width = 0.5 * pi_half;
      for (int k = 0; k < levels; ++k) {
        const double next = (k == levels - 1) ? pi_half : edge + width;
        visit_panel(edge, next, nodes, map_y, map_w);
        visit_panel(-next, -edge, nodes, map_y, map_w);
        edge = next;
        width *= 0.5;
      }
      return;
    }
  }
  throw ConfigError("unhandled observation integration kind");
}

// Registered closed-form marginal when present, quadrature otherwise.
std::function<double(double, const VectorXd&)> log_marginal_of(
    const HierarchicalModel& m, int quad_points) {
  if (m.marginal_log_density) {
    auto f = m.marginal_log_density;
    return [f](double y, const VectorXd& th) {
      VectorXd yv(1);
      yv[0] = y;
      return f(yv, th);
    };
  }
  const HierarchicalModel* mp = &m;
  return [mp, quad_points](double y, const VectorXd& th) {
    VectorXd yv(1);
    yv[0] = y;
    return std::log(marginal_density_quadrature(*mp, yv, th, quad_points));
  };
}

void require_oracle_applicable(const HierarchicalModel& m) {
  if (!m.oracle_supported) {
    throw ConfigError("model '" + m.name +
                      "' opts out of the quadrature oracles; use its exact algebra checks");
  }
  if (m.obs_dim != 1) {
    throw ConfigError("quadrature oracles require a scalar observation");
  }
}

VectorXd probe_in_domain(const Domain& dom, VectorXd v) {
  if (!dom.contains(v)) {
    throw ConfigError("finite-difference probe leaves the domain " + dom.describe());
  }
  return v;
}

}  // namespace

DiscreteJoint::DiscreteJoint(MatrixXd probs) : p(std::move(probs)) {
  if (p.rows() < 1 || p.cols() < 1 || p.rows() > 64 || p.cols() > 64) {
    throw ConfigError("discrete joint must be between 1x1 and 64x64");
  }
  double total = 0.0;
  for (int i = 0; i < p.rows(); ++i) {
    for (int j = 0; j < p.cols(); ++j) {
      const double v = p(i, j);
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw ConfigError("discrete joint entries must be finite and nonnegative");
      }
      total += v;
    }
  }
  if (std::abs(total - 1.0) > 1e-14) {
    throw ConfigError("discrete joint mass differs from one");
  }
}

DiscreteJoint DiscreteJoint::random(int n_obs, int n_latent, SplitRng& rng) {
  MatrixXd t(n_obs, n_latent);
  double total = 0.0;
  for (int i = 0; i < n_obs; ++i) {
    for (int j = 0; j < n_latent; ++j) {
      t(i, j) = rng.exponential(1.0);
      total += t(i, j);
    }
  }
  t /= total;
  // Renormalize exactly once more so the constructor's mass check is
  // immune to the summation order.
  t /= t.sum();
  return DiscreteJoint(t);
}

VectorXd DiscreteJoint::obs_marginal() const { return p.rowwise().sum(); }
VectorXd DiscreteJoint::latent_marginal() const { return p.colwise().sum(); }

KlChainReport discrete_kl_chain_check(const DiscreteJoint& pj, const DiscreteJoint& qj) {
  if (pj.p.rows() != qj.p.rows() || pj.p.cols() != qj.p.cols()) {
    throw ConfigError("kl chain check needs equally shaped joints");
  }
  const MatrixXd& p = pj.p;
  const MatrixXd& q = qj.p;

  KlChainReport rep;

  // Direct joint divergence.
  {
    VectorXd pf(p.size()), qf(q.size());
    int k = 0;
    for (int i = 0; i < p.rows(); ++i) {
      for (int j = 0; j < p.cols(); ++j, ++k) {
        pf[k] = p(i, j);
        qf[k] = q(i, j);
      }
    }
    rep.joint_kl = kl_of(pf, qf);
  }

  // Marginal over the observation plus expected conditional divergence.
  {
    const VectorXd py = pj.obs_marginal(), qy = qj.obs_marginal();
    double route = kl_of(py, qy);
    for (int i = 0; i < p.rows() && std::isfinite(route); ++i) {
      if (!(py[i] > 0.0)) continue;
      const VectorXd pc = p.row(i).transpose() / py[i];
      const VectorXd qc = qy[i] > 0.0 ? VectorXd(q.row(i).transpose() / qy[i])
                                      : VectorXd(VectorXd::Zero(q.cols()));
      const double c = kl_of(pc, qc);
      route = std::isfinite(c) ? route + py[i] * c : kInf;
    }
    rep.obs_route = route;
  }

  // Same split with the latent variable first.
  {
    const VectorXd pw = pj.latent_marginal(), qw = qj.latent_marginal();
    double route = kl_of(pw, qw);
    for (int j = 0; j < p.cols() && std::isfinite(route); ++j) {
      if (!(pw[j] > 0.0)) continue;
      const VectorXd pc = p.col(j) / pw[j];
      const VectorXd qc = qw[j] > 0.0 ? VectorXd(q.col(j) / qw[j])
                                      : VectorXd(VectorXd::Zero(q.rows()));
      const double c = kl_of(pc, qc);
      route = std::isfinite(c) ? route + pw[j] * c : kInf;
    }
    rep.latent_route = route;
  }

  rep.finite = std::isfinite(rep.joint_kl) && std::isfinite(rep.obs_route) &&
               std::isfinite(rep.latent_route);
  if (rep.finite) {
    rep.residual_obs = std::abs(rep.joint_kl - rep.obs_route);
    rep.residual_latent = std::abs(rep.joint_kl - rep.latent_route);
  } else if (std::isinf(rep.joint_kl) && std::isinf(rep.obs_route) &&
             std::isinf(rep.latent_route)) {
    rep.residual_obs = 0.0;  // all three routes agree on +inf
    rep.residual_latent = 0.0;
  } else {
    rep.residual_obs = kInf;
    rep.residual_latent = kInf;
  }
  return rep;
}

DiscreteJoint discrete_joint_of(const HierarchicalModel& m, const VectorXd& theta) {
  if (m.obs_integration.kind != ObsIntegration::Kind::Discrete ||
      m.latent_integration.kind != LatentIntegration::Kind::Labels) {
    throw ConfigError("discrete_joint_of needs finite observation and latent supports");
  }
  const auto& support = m.obs_integration.support;
  const int nw = m.latent_integration.n_labels;
  MatrixXd t(static_cast<int>(support.size()), nw);
  VectorXd w(1), y(1);
  for (int k = 0; k < nw; ++k) {
    w[0] = k;
    const double lw = m.level2.log_density(w, theta);
    for (std::size_t i = 0; i < support.size(); ++i) {
      y[0] = support[i];
      t(static_cast<int>(i), k) = std::exp(lw + m.level1.log_density(y, w, theta));
    }
  }
  return DiscreteJoint(t);
}

double marginal_density_quadrature(const HierarchicalModel& m, const VectorXd& y,
                                   const VectorXd& theta, int quad_points) {
  const LatentIntegration& li = m.latent_integration;

  if (li.kind == LatentIntegration::Kind::Labels) {
    double acc = 0.0;
    VectorXd w(1);
    for (int k = 0; k < li.n_labels; ++k) {
      w[0] = k;
      acc += std::exp(m.level2.log_density(w, theta) +
                      m.level1.log_density(y, w, theta));
    }
    return acc;
  }

  if (m.latent_dim != 1) {
    throw ConfigError("latent quadrature requires a scalar latent level");
  }
  const bool logpos = li.kind == LatentIntegration::Kind::ScanLogPositive;

  // Integrand in scan coordinates; positive latents carry the log-space
  // Jacobian term.
  auto h = [&](double t) {
    VectorXd w(1);
    w[0] = logpos ? std::exp(t) : t;
    const double lp =
        m.level2.log_density(w, theta) + m.level1.log_density(y, w, theta);
    return logpos ? lp + t : lp;
  };

  PeakWindow win = find_peak_window(h, li.start, li.scan_scale, kWindowDrop);
  auto g = [&](double t) { return std::exp(h(t) - win.h_peak); };
  const double v1 = integrate(g, win.lo, win.hi, quad_points);
  const double v2 = integrate(g, win.lo, win.hi, 2 * quad_points + 1);
  if (!(v2 > 0.0) || std::abs(v2 - v1) > 1e-6 * v2) {
    throw QuadratureNotConverged("latent integral failed its node-doubling check");
  }
  return std::exp(win.h_peak) * v2;
}

FisherMatrix score_variance_fisher(const HierarchicalModel& m, const ParamPoint& theta,
                                   const EstimatorConfig& cfg) {
  cfg.validate();
  require_oracle_applicable(m);
  const VectorXd& th = theta.values;
  if (th.size() != m.theta_dim) throw ConfigError("theta dimension mismatch");
  const int d = m.theta_dim;

  auto logf = log_marginal_of(m, cfg.quad_points);

  std::vector<VectorXd> plus(d), minus(d);
  VectorXd hstep(d);
  for (int i = 0; i < d; ++i) {
    hstep[i] = cfg.fd_step * std::max(1.0, std::abs(th[i]));
    VectorXd a = th, b = th;
    a[i] += hstep[i];
    b[i] -= hstep[i];
    plus[i] = probe_in_domain(m.domain, a);
    minus[i] = probe_in_domain(m.domain, b);
  }

  double mass = 0.0;
  VectorXd mean = VectorXd::Zero(d);
  MatrixXd second = MatrixXd::Zero(d, d);
  VectorXd score(d);

  auto center_logf = [&](double y) { return logf(y, th); };
  for_each_obs_node(m, th, center_logf, cfg.quad_points, [&](double y, double wq) {
    const double f = std::exp(logf(y, th));
    if (!(f > 0.0)) return;
    for (int i = 0; i < d; ++i) {
      score[i] = (logf(y, plus[i]) - logf(y, minus[i])) / (2.0 * hstep[i]);
    }
    mass += wq * f;
    mean.noalias() += (wq * f) * score;
    second.noalias() += (wq * f) * (score * score.transpose());
  });

  if (std::abs(mass - 1.0) > 1e-6) {
    throw QuadratureNotConverged("marginal mass deviates from one in the score oracle");
  }
  mean /= mass;
  second /= mass;
  MatrixXd info = second - mean * mean.transpose();
  return FisherMatrix(std::move(info), EstimateMethod::Quadrature);
}

FisherMatrix kl_hessian_fisher(const HierarchicalModel& m, const ParamPoint& theta,
                               const EstimatorConfig& cfg) {
  cfg.validate();
  require_oracle_applicable(m);
  const VectorXd& th = theta.values;
  if (th.size() != m.theta_dim) throw ConfigError("theta dimension mismatch");
  const int d = m.theta_dim;

  auto logf = log_marginal_of(m, cfg.quad_points);

  VectorXd hstep(d);
  for (int i = 0; i < d; ++i) {
    hstep[i] = kKlStepRel * std::max(1.0, std::abs(th[i]));
  }

  // Probe set: axis pairs for the diagonal, four corners per off-diagonal.
  std::vector<VectorXd> probes;
  auto add_probe = [&](VectorXd v) {
    probes.push_back(probe_in_domain(m.domain, std::move(v)));
  };
  for (int i = 0; i < d; ++i) {
    VectorXd a = th, b = th;
    a[i] += hstep[i];
    b[i] -= hstep[i];
    add_probe(a);
    add_probe(b);
  }
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      for (int si = -1; si <= 1; si += 2) {
        for (int sj = -1; sj <= 1; sj += 2) {
          VectorXd v = th;
          v[i] += si * hstep[i];
          v[j] += sj * hstep[j];
          add_probe(v);
        }
      }
    }
  }

  std::vector<double> kl(probes.size(), 0.0);
  auto center_logf = [&](double y) { return logf(y, th); };
  for_each_obs_node(m, th, center_logf, cfg.quad_points, [&](double y, double wq) {
    const double l0 = logf(y, th);
    const double f = std::exp(l0);
    if (!(f > 0.0)) return;
    for (std::size_t k = 0; k < probes.size(); ++k) {
      kl[k] += wq * f * (l0 - logf(y, probes[k]));
    }
  });

  MatrixXd info(d, d);
  for (int i = 0; i < d; ++i) {
    info(i, i) = (kl[2 * i] + kl[2 * i + 1]) / (hstep[i] * hstep[i]);
  }
  std::size_t base = 2 * static_cast<std::size_t>(d);
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      const double pp = kl[base + 0], pm = kl[base + 1];
      const double mp = kl[base + 2], mm = kl[base + 3];
      base += 4;
      info(i, j) = info(j, i) = (pp + mm - pm - mp) / (4.0 * hstep[i] * hstep[j]);
    }
  }
  return FisherMatrix(std::move(info), EstimateMethod::Quadrature);
}

}  // namespace hifisher
