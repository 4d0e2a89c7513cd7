#include <cmath>

#include "hifisher/models.hpp"

namespace hifisher {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double normal_logpdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (kLog2Pi + std::log(var) + d * d / var);
}

}  // namespace

double gaussian2_marginal_info(double phi, double delta) {
  const double s = delta + phi;
  return delta * delta / (2.0 * phi * phi * s * s);
}

double gaussian2_variance_marginal_info(double v, double delta) {
  const double s = 1.0 + delta * v;
  return delta * delta / (2.0 * s * s);
}

// Latent mean with unknown precision: w | phi ~ N(mu, 1/phi),
// y | w ~ N(w, 1/delta). The observation level never sees phi, so the
// complete-data information is the prior's alone and the marginal
// information is what conditioning on y takes away from it.
HierarchicalModel make_gaussian2(double mu, double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta) || !std::isfinite(mu)) {
    throw ConfigError("gaussian2: delta must be positive and finite");
  }

  HierarchicalModel m;
  m.name = "gaussian2";
  m.summary = "normal mean hierarchy, unknown latent precision";
  m.theta_dim = 1;
  m.latent_dim = 1;
  m.obs_dim = 1;
  m.domain = Domain::positive();
  m.reference_theta = VectorXd::Constant(1, 1.0);

  m.level1.depends_on_theta = false;
  m.level1.log_density = [delta](const VectorXd& y, const VectorXd& w,
                                 const VectorXd&) {
    return normal_logpdf(y[0], w[0], 1.0 / delta);
  };
  m.level1.sample = [delta](const VectorXd& w, const VectorXd&, SplitRng& rng) {
    VectorXd y(1);
    y[0] = w[0] + rng.normal() / std::sqrt(delta);
    return y;
  };
  // level1.fisher deliberately unset: the theta-free flag already encodes
  // the zero, and the forced-numeric route should rediscover it.

  m.level2.log_density = [mu](const VectorXd& w, const VectorXd& th) {
    return normal_logpdf(w[0], mu, 1.0 / th[0]);
  };
  m.level2.sample = [mu](const VectorXd& th, SplitRng& rng) {
    VectorXd w(1);
    w[0] = mu + rng.normal() / std::sqrt(th[0]);
    return w;
  };
  m.level2.fisher = [](const VectorXd& th) -> MatrixXd {
    return MatrixXd::Constant(1, 1, 0.5 / (th[0] * th[0]));
  };

  // w | y, phi ~ N((phi mu + delta y) / (phi + delta), 1 / (phi + delta)).
  m.complete_conditional.log_density = [mu, delta](const VectorXd& w,
                                                   const VectorXd& y,
                                                   const VectorXd& th) {
    const double s = th[0] + delta;
    return normal_logpdf(w[0], (th[0] * mu + delta * y[0]) / s, 1.0 / s);
  };
  m.complete_conditional.sample = [mu, delta](const VectorXd& y,
                                              const VectorXd& th,
                                              SplitRng& rng) {
    const double s = th[0] + delta;
    VectorXd w(1);
    w[0] = (th[0] * mu + delta * y[0]) / s + rng.normal() / std::sqrt(s);
    return w;
  };
  m.complete_conditional.fisher = [mu, delta](const VectorXd& y,
                                              const VectorXd& th) -> MatrixXd {
    const double s = th[0] + delta;
    const double d = y[0] - mu;
    return MatrixXd::Constant(
        1, 1, 0.5 / (s * s) + delta * delta * d * d / (s * s * s));
  };

  m.expected_latent_fisher_given_obs = [delta](const VectorXd& th) -> MatrixXd {
    const double phi = th[0];
    const double s = phi + delta;
    return MatrixXd::Constant(1, 1, (phi + 2.0 * delta) / (2.0 * phi * s * s));
  };

  m.marginal_log_density = [mu, delta](const VectorXd& y, const VectorXd& th) {
    return normal_logpdf(y[0], mu, 1.0 / th[0] + 1.0 / delta);
  };

  m.obs_integration.kind = ObsIntegration::Kind::Scan;
  m.obs_integration.start = [mu](const VectorXd&) { return mu; };
  m.obs_integration.scale = [delta](const VectorXd& th) {
    return std::sqrt(1.0 / th[0] + 1.0 / delta);
  };
  m.latent_integration.kind = LatentIntegration::Kind::ScanReal;
  m.latent_integration.start = mu;
  m.latent_integration.scan_scale = 1.0;

  return m;
}

// Same hierarchy with theta = v = 1/phi, the latent variance. Used to
// exercise reparametrization invariance of the induced prior.
HierarchicalModel make_gaussian2_variance(double mu, double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta) || !std::isfinite(mu)) {
    throw ConfigError("gaussian2_variance: delta must be positive and finite");
  }

  HierarchicalModel m;
  m.name = "gaussian2_variance";
  m.summary = "normal mean hierarchy, unknown latent variance";
  m.theta_dim = 1;
  m.latent_dim = 1;
  m.obs_dim = 1;
  m.domain = Domain::positive();
  m.reference_theta = VectorXd::Constant(1, 1.0);

  m.level1.depends_on_theta = false;
  m.level1.log_density = [delta](const VectorXd& y, const VectorXd& w,
                                 const VectorXd&) {
    return normal_logpdf(y[0], w[0], 1.0 / delta);
  };
  m.level1.sample = [delta](const VectorXd& w, const VectorXd&, SplitRng& rng) {
    VectorXd y(1);
    y[0] = w[0] + rng.normal() / std::sqrt(delta);
    return y;
  };

  m.level2.log_density = [mu](const VectorXd& w, const VectorXd& th) {
    return normal_logpdf(w[0], mu, th[0]);
  };
  m.level2.sample = [mu](const VectorXd& th, SplitRng& rng) {
    VectorXd w(1);
    w[0] = mu + std::sqrt(th[0]) * rng.normal();
    return w;
  };
  m.level2.fisher = [](const VectorXd& th) -> MatrixXd {
    return MatrixXd::Constant(1, 1, 0.5 / (th[0] * th[0]));
  };

  // w | y, v ~ N((mu + delta v y) / (1 + delta v), v / (1 + delta v)).
  m.complete_conditional.log_density = [mu, delta](const VectorXd& w,
                                                   const VectorXd& y,
                                                   const VectorXd& th) {
    const double v = th[0];
    const double s = 1.0 + delta * v;
    return normal_logpdf(w[0], (mu + delta * v * y[0]) / s, v / s);
  };
  m.complete_conditional.sample = [mu, delta](const VectorXd& y,
                                              const VectorXd& th,
                                              SplitRng& rng) {
    const double v = th[0];
    const double s = 1.0 + delta * v;
    VectorXd w(1);
    w[0] = (mu + delta * v * y[0]) / s + std::sqrt(v / s) * rng.normal();
    return w;
  };
  m.complete_conditional.fisher = [mu, delta](const VectorXd& y,
                                              const VectorXd& th) -> MatrixXd {
    const double v = th[0];
    const double s = 1.0 + delta * v;
    const double d = y[0] - mu;
    return MatrixXd::Constant(
        1, 1, 0.5 / (v * v * s * s) + delta * delta * d * d / (v * s * s * s));
  };

  m.expected_latent_fisher_given_obs = [delta](const VectorXd& th) -> MatrixXd {
    const double v = th[0];
    const double s = 1.0 + delta * v;
    return MatrixXd::Constant(1, 1, (1.0 + 2.0 * delta * v) / (2.0 * v * v * s * s));
  };

  m.marginal_log_density = [mu, delta](const VectorXd& y, const VectorXd& th) {
    return normal_logpdf(y[0], mu, th[0] + 1.0 / delta);
  };

  m.obs_integration.kind = ObsIntegration::Kind::Scan;
  m.obs_integration.start = [mu](const VectorXd&) { return mu; };
  m.obs_integration.scale = [delta](const VectorXd& th) {
    return std::sqrt(th[0] + 1.0 / delta);
  };
  m.latent_integration.kind = LatentIntegration::Kind::ScanReal;
  m.latent_integration.start = mu;
  m.latent_integration.scan_scale = 1.0;

  return m;
}

}  // namespace hifisher
