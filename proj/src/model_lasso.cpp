#include <cmath>
#include <limits>

#include "hifisher/models.hpp"

namespace hifisher {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

// Bayesian lasso scale hierarchy. The observed level is the coefficient
// vector itself: w1_j | w2_j ~ Uniform(-sigma w2_j, sigma w2_j) and
// w2_j | theta ~ Gamma(2, theta), which marginalizes to independent
// Laplace(theta/sigma) coefficients. Every stage is exponential-family
// in closed form, so this model is checked by exact algebra rather than
// by the quadrature oracles.
HierarchicalModel make_lasso(int p, double sigma) {
  if (p < 1) throw ConfigError("lasso: p must be >= 1");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ConfigError("lasso: sigma must be positive and finite");
  }

  HierarchicalModel m;
  m.name = "lasso";
  m.summary = "lasso coefficients via uniform-gamma scale mixture";
  m.theta_dim = 1;
  m.latent_dim = p;
  m.obs_dim = p;
  m.domain = Domain::positive();
  m.reference_theta = VectorXd::Constant(1, 1.0);
  m.oracle_supported = false;

  m.level1.depends_on_theta = false;
  m.level1.log_density = [p, sigma](const VectorXd& y, const VectorXd& w,
                                    const VectorXd&) {
    double lp = 0.0;
    for (int j = 0; j < p; ++j) {
      const double half = sigma * w[j];
      if (!(std::abs(y[j]) < half)) return kNegInf;
      lp -= std::log(2.0 * half);
    }
    return lp;
  };
  m.level1.sample = [p, sigma](const VectorXd& w, const VectorXd&,
                               SplitRng& rng) {
    VectorXd y(p);
    for (int j = 0; j < p; ++j) {
      const double half = sigma * w[j];
      y[j] = rng.uniform(-half, half);
    }
    return y;
  };

  m.level2.log_density = [p](const VectorXd& w, const VectorXd& th) {
    const double t = th[0];
    double lp = 0.0;
    for (int j = 0; j < p; ++j) {
      if (!(w[j] > 0.0)) return kNegInf;
      lp += 2.0 * std::log(t) + std::log(w[j]) - t * w[j];
    }
    return lp;
  };
  m.level2.sample = [p](const VectorXd& th, SplitRng& rng) {
    VectorXd w(p);
    for (int j = 0; j < p; ++j) w[j] = rng.gamma(2.0, th[0]);
    return w;
  };
  m.level2.fisher = [p](const VectorXd& th) -> MatrixXd {
    return MatrixXd::Constant(1, 1, 2.0 * p / (th[0] * th[0]));
  };

  // Conditionally on the coefficients, each scale is a shifted
  // exponential: w2_j = |w1_j| / sigma + Exp(theta).
  m.complete_conditional.log_density = [p, sigma](const VectorXd& w,
                                                  const VectorXd& y,
                                                  const VectorXd& th) {
    const double t = th[0];
    double lp = 0.0;
    for (int j = 0; j < p; ++j) {
      const double c = std::abs(y[j]) / sigma;
      if (!(w[j] > c)) return kNegInf;
      lp += std::log(t) - t * (w[j] - c);
    }
    return lp;
  };
  m.complete_conditional.sample = [p, sigma](const VectorXd& y,
                                             const VectorXd& th,
                                             SplitRng& rng) {
    VectorXd w(p);
    for (int j = 0; j < p; ++j) {
      w[j] = std::abs(y[j]) / sigma + rng.exponential(th[0]);
    }
    return w;
  };
  m.complete_conditional.fisher = [p](const VectorXd&,
                                      const VectorXd& th) -> MatrixXd {
    return MatrixXd::Constant(1, 1, static_cast<double>(p) / (th[0] * th[0]));
  };

  m.expected_latent_fisher_given_obs = [p](const VectorXd& th) -> MatrixXd {
    return MatrixXd::Constant(1, 1, static_cast<double>(p) / (th[0] * th[0]));
  };

  m.marginal_log_density = [p, sigma](const VectorXd& y, const VectorXd& th) {
    const double t = th[0];
    double lp = 0.0;
    for (int j = 0; j < p; ++j) {
      lp += std::log(0.5 * t / sigma) - t * std::abs(y[j]) / sigma;
    }
    return lp;
  };

  m.obs_integration.kind = ObsIntegration::Kind::Scan;
  m.obs_integration.start = [](const VectorXd&) { return 0.0; };
  m.obs_integration.scale = [sigma](const VectorXd& th) {
    return std::sqrt(2.0) * sigma / th[0];
  };
  m.latent_integration.kind = LatentIntegration::Kind::ScanLogPositive;
  m.latent_integration.start = 0.0;
  m.latent_integration.scan_scale = 1.0;

  return m;
}

// Regression demo: scales -> coefficients -> response with identity
// design and unit noise. Only the root depends on theta, so the full
// chain's information collapses to the gamma stage's.
std::vector<LevelSpec> lasso_three_level_chain(int p, double sigma) {
  if (p < 1) throw ConfigError("lasso chain: p must be >= 1");
  if (!(sigma > 0.0)) throw ConfigError("lasso chain: sigma must be positive");

  LevelSpec scales;
  scales.name = "scales";
  scales.dim = p;
  scales.depends_on_theta = true;
  scales.log_density = [p](const VectorXd& x, const std::vector<VectorXd>&,
                           const VectorXd& th) {
    const double t = th[0];
    double lp = 0.0;
    for (int j = 0; j < p; ++j) {
      if (!(x[j] > 0.0)) return kNegInf;
      lp += 2.0 * std::log(t) + std::log(x[j]) - t * x[j];
    }
    return lp;
  };
  scales.sample = [p](const std::vector<VectorXd>&, const VectorXd& th,
                      SplitRng& rng) {
    VectorXd x(p);
    for (int j = 0; j < p; ++j) x[j] = rng.gamma(2.0, th[0]);
    return x;
  };
  scales.fisher = [p](const std::vector<VectorXd>&,
                      const VectorXd& th) -> MatrixXd {
    return MatrixXd::Constant(1, 1, 2.0 * p / (th[0] * th[0]));
  };

  LevelSpec coef;
  coef.name = "coefficients";
  coef.dim = p;
  coef.depends_on_theta = false;
  coef.log_density = [p, sigma](const VectorXd& x,
                                const std::vector<VectorXd>& given,
                                const VectorXd&) {
    const VectorXd& w2 = given[0];
    double lp = 0.0;
    for (int j = 0; j < p; ++j) {
      const double half = sigma * w2[j];
      if (!(std::abs(x[j]) < half)) return kNegInf;
      lp -= std::log(2.0 * half);
    }
    return lp;
  };
  coef.sample = [p, sigma](const std::vector<VectorXd>& given, const VectorXd&,
                           SplitRng& rng) {
    const VectorXd& w2 = given[0];
    VectorXd x(p);
    for (int j = 0; j < p; ++j) {
      const double half = sigma * w2[j];
      x[j] = rng.uniform(-half, half);
    }
    return x;
  };

  LevelSpec obs;
  obs.name = "response";
  obs.dim = p;
  obs.depends_on_theta = false;
  obs.log_density = [p](const VectorXd& x, const std::vector<VectorXd>& given,
                        const VectorXd&) {
    const VectorXd& w1 = given[1];
    double lp = 0.0;
    for (int j = 0; j < p; ++j) {
      const double d = x[j] - w1[j];
      lp += -0.5 * (kLog2Pi + d * d);
    }
    return lp;
  };
  obs.sample = [p](const std::vector<VectorXd>& given, const VectorXd&,
                   SplitRng& rng) {
    const VectorXd& w1 = given[1];
    VectorXd x(p);
    for (int j = 0; j < p; ++j) x[j] = w1[j] + rng.normal();
    return x;
  };

  return {scales, coef, obs};
}

}  // namespace hifisher
