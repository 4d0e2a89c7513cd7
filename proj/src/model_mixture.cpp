#include <cmath>
#include <limits>
#include <memory>
#include <utility>

#include "hifisher/models.hpp"
#include "hifisher/quadrature.hpp"

namespace hifisher {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Component {
  std::function<double(double)> dens;  // g_k(y), plain density or pmf
  std::function<double(SplitRng&)> draw;
};

// theta holds the free weights theta_1..theta_p; theta_0 closes the simplex.
std::vector<double> full_weights(const VectorXd& th) {
  std::vector<double> w(th.size() + 1);
  w[0] = 1.0 - th.sum();
  for (int i = 0; i < th.size(); ++i) w[i + 1] = th[i];
  return w;
}

int label_of(const VectorXd& w, int n_labels) {
  const double raw = w[0];
  const int k = static_cast<int>(std::lround(raw));
  if (k < 0 || k >= n_labels || std::abs(raw - k) > 1e-9) return -1;
  return k;
}

VectorXd label_vec(int k) {
  VectorXd w(1);
  w[0] = static_cast<double>(k);
  return w;
}

HierarchicalModel build_mixture(std::vector<Component> comps, std::string summary) {
  const int p = static_cast<int>(comps.size()) - 1;
  if (p < 1) throw ConfigError("mixture: needs at least two components");

  auto shared = std::make_shared<std::vector<Component>>(std::move(comps));
  const int n_labels = p + 1;

  HierarchicalModel m;
  m.name = "mixture";
  m.summary = std::move(summary);
  m.theta_dim = p;
  m.latent_dim = 1;
  m.obs_dim = 1;
  m.domain = Domain::simplex_free();
  m.reference_theta = VectorXd::Constant(p, 1.0 / n_labels);
  m.tail_diag_lower = true;
  m.tail_diag_upper = true;

  m.level1.depends_on_theta = false;
  m.level1.log_density = [shared, n_labels](const VectorXd& y, const VectorXd& w,
                                            const VectorXd&) {
    const int k = label_of(w, n_labels);
    if (k < 0) return kNegInf;
    return std::log((*shared)[k].dens(y[0]));
  };
  m.level1.sample = [shared, n_labels](const VectorXd& w, const VectorXd&,
                                       SplitRng& rng) {
    const int k = label_of(w, n_labels);
    if (k < 0) throw DomainError("mixture: latent draw is not a label");
    VectorXd y(1);
    y[0] = (*shared)[k].draw(rng);
    return y;
  };

  m.level2.log_density = [n_labels](const VectorXd& w, const VectorXd& th) {
    const int k = label_of(w, n_labels);
    if (k < 0) return kNegInf;
    return std::log(full_weights(th)[k]);
  };
  m.level2.sample = [](const VectorXd& th, SplitRng& rng) {
    return label_vec(rng.categorical(full_weights(th)));
  };
  m.level2.fisher = [](const VectorXd& th) { return mixture_latent_fisher(th); };

  auto dens_at = [shared, n_labels](double y) {
    VectorXd g(n_labels);
    for (int k = 0; k < n_labels; ++k) g[k] = (*shared)[k].dens(y);
    return g;
  };

  m.complete_conditional.log_density = [dens_at, n_labels](const VectorXd& w,
                                                           const VectorXd& y,
                                                           const VectorXd& th) {
    const int k = label_of(w, n_labels);
    if (k < 0) return kNegInf;
    const VectorXd g = dens_at(y[0]);
    const std::vector<double> wt = full_weights(th);
    double mix = 0.0;
    for (int j = 0; j < n_labels; ++j) mix += wt[j] * g[j];
    if (!(mix > 0.0)) return kNegInf;
    return std::log(wt[k] * g[k] / mix);
  };
  m.complete_conditional.sample = [dens_at, n_labels](const VectorXd& y,
                                                      const VectorXd& th,
                                                      SplitRng& rng) {
    const VectorXd g = dens_at(y[0]);
    std::vector<double> q = full_weights(th);
    for (int j = 0; j < n_labels; ++j) q[j] *= g[j];
    return label_vec(rng.categorical(q));
  };
  m.complete_conditional.fisher = [dens_at](const VectorXd& y, const VectorXd& th) {
    return mixture_conditional_fisher(th, dens_at(y[0]));
  };

  m.marginal_log_density = [dens_at, n_labels](const VectorXd& y,
                                               const VectorXd& th) {
    const VectorXd g = dens_at(y[0]);
    const std::vector<double> wt = full_weights(th);
    double mix = 0.0;
    for (int j = 0; j < n_labels; ++j) mix += wt[j] * g[j];
    return std::log(mix);
  };

  m.latent_integration.kind = LatentIntegration::Kind::Labels;
  m.latent_integration.n_labels = n_labels;

  return m;
}

// Window over which every component has essentially all of its mass.
// The integrands all decay at a Gaussian component's rate, so 12 sd
// past the extreme means leaves < 1e-30 outside.
std::pair<double, double> gaussian_window(const std::vector<double>& means,
                                          const std::vector<double>& sds) {
  double lo = means[0], hi = means[0], sd = sds[0];
  for (std::size_t k = 0; k < means.size(); ++k) {
    lo = std::min(lo, means[k]);
    hi = std::max(hi, means[k]);
    sd = std::max(sd, sds[k]);
  }
  return {lo - 12.0 * sd, hi + 12.0 * sd};
}

double composite_integrate(const std::function<double(double)>& f, double lo,
                           double hi, int panels, int nodes) {
  double total = 0.0;
  const double width = (hi - lo) / panels;
  for (int i = 0; i < panels; ++i) {
    total += integrate(f, lo + i * width, lo + (i + 1) * width, nodes);
  }
  return total;
}

}  // namespace

MatrixXd mixture_latent_fisher(const VectorXd& theta) {
  const int p = static_cast<int>(theta.size());
  const double t0 = 1.0 - theta.sum();
  if (!(t0 > 0.0)) throw DomainError("mixture_latent_fisher: weights leave the simplex");
  MatrixXd out = MatrixXd::Constant(p, p, 1.0 / t0);
  for (int i = 0; i < p; ++i) out(i, i) += 1.0 / theta[i];
  return out;
}

MatrixXd mixture_conditional_fisher(const VectorXd& theta, const VectorXd& g) {
  const int p = static_cast<int>(theta.size());
  if (g.size() != p + 1) {
    throw ConfigError("mixture_conditional_fisher: need p + 1 component values");
  }
  const std::vector<double> wt = full_weights(theta);
  double mix = 0.0;
  for (int k = 0; k <= p; ++k) mix += wt[k] * g[k];
  if (!(mix > 0.0)) {
    throw DomainError("mixture_conditional_fisher: zero mixture density");
  }

  // dq[k](i) = d q_k / d theta_i with q_k = wt_k g_k / mix.
  MatrixXd out = MatrixXd::Zero(p, p);
  VectorXd dq(p);
  for (int k = 0; k <= p; ++k) {
    const double qk = wt[k] * g[k] / mix;
    if (!(qk > 0.0)) continue;  // vanishing component, zero contribution
    for (int i = 0; i < p; ++i) {
      const double dmix = g[i + 1] - g[0];
      double d = -wt[k] * g[k] * dmix / (mix * mix);
      if (k == i + 1) d += g[k] / mix;
      if (k == 0) d -= g[0] / mix;
      dq[i] = d;
    }
    out.noalias() += dq * dq.transpose() / qk;
  }
  return out;
}

MatrixXd mixture_direct_marginal_fisher(const HierarchicalModel& mix,
                                        const VectorXd& theta, int quad_points) {
  const int p = mix.theta_dim;
  if (theta.size() != p) {
    throw ConfigError("mixture_direct_marginal_fisher: theta dimension mismatch");
  }
  const int n_labels = p + 1;
  const std::vector<double> wt = full_weights(theta);

  auto dens_at = [&](double y) {
    VectorXd g(n_labels);
    VectorXd yv(1);
    yv[0] = y;
    for (int k = 0; k < n_labels; ++k) {
      g[k] = std::exp(mix.level1.log_density(yv, label_vec(k), theta));
    }
    return g;
  };
  auto kernel = [&](double y, int i, int j) {
    const VectorXd g = dens_at(y);
    double f = 0.0;
    for (int k = 0; k < n_labels; ++k) f += wt[k] * g[k];
    if (!(f > 0.0)) return 0.0;
    return (g[i + 1] - g[0]) * (g[j + 1] - g[0]) / f;
  };

  MatrixXd out = MatrixXd::Zero(p, p);
  if (mix.obs_integration.kind == ObsIntegration::Kind::Discrete) {
    for (int i = 0; i < p; ++i) {
      for (int j = i; j < p; ++j) {
        double s = 0.0;
        for (double y : mix.obs_integration.support) s += kernel(y, i, j);
        out(i, j) = out(j, i) = s;
      }
    }
    return out;
  }

  if (!mix.obs_integration.start || !mix.obs_integration.scale) {
    throw ConfigError("mixture_direct_marginal_fisher: no integration window");
  }
  const double c = mix.obs_integration.start(theta);
  const double s = mix.obs_integration.scale(theta);
  const double lo = c - 14.0 * s, hi = c + 14.0 * s;
  const int nodes = std::max(17, quad_points / 8);
  for (int i = 0; i < p; ++i) {
    for (int j = i; j < p; ++j) {
      auto f = [&](double y) { return kernel(y, i, j); };
      out(i, j) = out(j, i) = composite_integrate(f, lo, hi, 40, nodes);
    }
  }
  return out;
}

HierarchicalModel make_gaussian_mixture(const std::vector<double>& means,
                                        const std::vector<double>& sds) {
  if (means.size() != sds.size()) {
    throw ConfigError("mixture: means and sds must have equal length");
  }
  if (means.size() < 2) throw ConfigError("mixture: needs at least two components");
  for (double s : sds) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw ConfigError("mixture: component sds must be positive and finite");
    }
  }

  std::vector<Component> comps(means.size());
  for (std::size_t k = 0; k < means.size(); ++k) {
    const double mk = means[k], sk = sds[k];
    comps[k].dens = [mk, sk](double y) {
      const double z = (y - mk) / sk;
      return std::exp(-0.5 * (kLog2Pi + z * z)) / sk;
    };
    comps[k].draw = [mk, sk](SplitRng& rng) { return mk + sk * rng.normal(); };
  }

  // Each component must be a normalized density.
  const auto [wlo, whi] = gaussian_window(means, sds);
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const double mass = composite_integrate(comps[k].dens, wlo, whi, 40, 25);
    if (std::abs(mass - 1.0) > 1e-8) {
      throw ConfigError("mixture: component " + std::to_string(k) +
                        " does not integrate to one");
    }
  }

  HierarchicalModel m =
      build_mixture(std::move(comps), "finite Gaussian mixture, free weights");

  const std::vector<double> mv = means, sv = sds;
  m.obs_integration.kind = ObsIntegration::Kind::Scan;
  m.obs_integration.start = [mv](const VectorXd& th) {
    const std::vector<double> wt = full_weights(th);
    double mean = 0.0;
    for (std::size_t k = 0; k < mv.size(); ++k) mean += wt[k] * mv[k];
    return mean;
  };
  m.obs_integration.scale = [mv, sv](const VectorXd& th) {
    const std::vector<double> wt = full_weights(th);
    double mean = 0.0, second = 0.0;
    for (std::size_t k = 0; k < mv.size(); ++k) {
      mean += wt[k] * mv[k];
      second += wt[k] * (sv[k] * sv[k] + mv[k] * mv[k]);
    }
    return std::sqrt(std::max(second - mean * mean, 1e-12));
  };

  // E_y[I_w(theta|y)] by quadrature over the mixture marginal; smooth
  // integrand with Gaussian decay, so fixed composite panels suffice.
  const auto [lo, hi] = gaussian_window(means, sds);
  auto cond_fisher = m.complete_conditional.fisher;
  auto marg = m.marginal_log_density;
  const int p = m.theta_dim;
  m.expected_latent_fisher_given_obs = [cond_fisher, marg, lo, hi,
                                        p](const VectorXd& th) {
    MatrixXd acc = MatrixXd::Zero(p, p);
    for (int i = 0; i < p; ++i) {
      for (int j = i; j < p; ++j) {
        auto f = [&](double y) {
          VectorXd yv(1);
          yv[0] = y;
          const MatrixXd cf = cond_fisher(yv, th);
          return std::exp(marg(yv, th)) * cf(i, j);
        };
        acc(i, j) = acc(j, i) = composite_integrate(f, lo, hi, 40, 25);
      }
    }
    return acc;
  };

  return m;
}

HierarchicalModel make_discrete_mixture(const std::vector<std::vector<double>>& pmf) {
  if (pmf.size() < 2) throw ConfigError("mixture: needs at least two components");
  const std::size_t K = pmf[0].size();
  if (K < 2) throw ConfigError("mixture: support needs at least two points");
  for (const auto& row : pmf) {
    if (row.size() != K) throw ConfigError("mixture: ragged pmf table");
    double sum = 0.0;
    for (double v : row) {
      if (v < 0.0 || !std::isfinite(v)) throw ConfigError("mixture: bad pmf entry");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-8) {
      throw ConfigError("mixture: pmf row does not sum to one");
    }
  }

  std::vector<Component> comps(pmf.size());
  for (std::size_t k = 0; k < pmf.size(); ++k) {
    const std::vector<double> row = pmf[k];
    comps[k].dens = [row](double y) {
      const int i = static_cast<int>(std::lround(y));
      if (i < 0 || i >= static_cast<int>(row.size()) || std::abs(y - i) > 1e-9) {
        return 0.0;
      }
      return row[i];
    };
    comps[k].draw = [row](SplitRng& rng) {
      return static_cast<double>(rng.categorical(row));
    };
  }

  HierarchicalModel m =
      build_mixture(std::move(comps), "finite discrete mixture, free weights");

  m.obs_integration.kind = ObsIntegration::Kind::Discrete;
  m.obs_integration.support.resize(K);
  for (std::size_t i = 0; i < K; ++i) m.obs_integration.support[i] = double(i);

  // Exact finite sum for the conditional expectation.
  auto cond_fisher = m.complete_conditional.fisher;
  auto marg = m.marginal_log_density;
  const int p = m.theta_dim;
  std::vector<double> support = m.obs_integration.support;
  m.expected_latent_fisher_given_obs = [cond_fisher, marg, support,
                                        p](const VectorXd& th) {
    MatrixXd acc = MatrixXd::Zero(p, p);
    for (double y : support) {
      VectorXd yv(1);
      yv[0] = y;
      acc += std::exp(marg(yv, th)) * cond_fisher(yv, th);
    }
    return acc;
  };

  return m;
}

}  // namespace hifisher
