#include <cmath>
#include <optional>

#include "hifisher/models.hpp"
#include "hifisher/special.hpp"

namespace hifisher {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// Draws reuse the ratio-of-uniforms envelope while the parameter triple
// is unchanged, which is the common case inside the Monte Carlo loops.
// Separate Site instantiations keep the two call sites from evicting
// each other's cache. Cache state never touches the rng stream, so
// hits and misses produce identical draw sequences.
template <int Site>
double cached_gig_draw(double rho, double gamma, double kappa, SplitRng& rng) {
  thread_local double c_rho = -1.0, c_gamma = -1.0, c_kappa = -1.0;
  thread_local std::optional<GigSampler> sampler;
  if (!sampler || rho != c_rho || gamma != c_gamma || kappa != c_kappa) {
    sampler.emplace(GigParams(rho, gamma, kappa));
    c_rho = rho;
    c_gamma = gamma;
    c_kappa = kappa;
  }
  return (*sampler)(rng);
}

}  // namespace

// Hyperbolic location-scale mixture: y | w, theta ~ N(theta w, w) with
// w | theta ~ GIG(1, theta, 1). theta appears in both levels, so neither
// conditional term of the decomposition vanishes.
HierarchicalModel make_hyperbolic() {
  HierarchicalModel m;
  m.name = "hyperbolic";
  m.summary = "hyperbolic skew model over a GIG mixing law";
  m.theta_dim = 1;
  m.latent_dim = 1;
  m.obs_dim = 1;
  m.domain = Domain::positive();
  m.reference_theta = VectorXd::Constant(1, 1.0);

  m.level1.depends_on_theta = true;
  m.level1.log_density = [](const VectorXd& y, const VectorXd& w,
                            const VectorXd& th) {
    const double d = y[0] - th[0] * w[0];
    return -0.5 * (kLog2Pi + std::log(w[0]) + d * d / w[0]);
  };
  m.level1.sample = [](const VectorXd& w, const VectorXd& th, SplitRng& rng) {
    VectorXd y(1);
    y[0] = th[0] * w[0] + std::sqrt(w[0]) * rng.normal();
    return y;
  };
  // The conditional score in theta is y - theta w, with curvature w
  // exactly, not just in expectation.
  m.level1.fisher = [](const VectorXd& w, const VectorXd&) -> MatrixXd {
    return MatrixXd::Constant(1, 1, w[0]);
  };

  m.level2.log_density = [](const VectorXd& w, const VectorXd& th) {
    return gig_log_density(GigParams(1.0, th[0], 1.0), w[0]);
  };
  m.level2.sample = [](const VectorXd& th, SplitRng& rng) {
    VectorXd w(1);
    w[0] = cached_gig_draw<0>(1.0, th[0], 1.0, rng);
    return w;
  };
  m.level2.fisher = [](const VectorXd& th) -> MatrixXd {
    // Score theta: 1/theta - (log K_1)'(theta) - theta w, so the
    // information is theta^2 Var[w], a pure Bessel expression.
    return MatrixXd::Constant(1, 1, s_curvature(1.0, th[0]));
  };

  // Completing the square in w gives w | y ~ GIG(1/2, theta sqrt(2),
  // sqrt(y^2 + 1)).
  m.complete_conditional.log_density = [](const VectorXd& w, const VectorXd& y,
                                          const VectorXd& th) {
    const GigParams p(0.5, th[0] * std::sqrt(2.0), std::sqrt(y[0] * y[0] + 1.0));
    return gig_log_density(p, w[0]);
  };
  m.complete_conditional.sample = [](const VectorXd& y, const VectorXd& th,
                                     SplitRng& rng) {
    VectorXd w(1);
    w[0] = cached_gig_draw<1>(0.5, th[0] * std::sqrt(2.0),
                              std::sqrt(y[0] * y[0] + 1.0), rng);
    return w;
  };
  m.complete_conditional.fisher = [](const VectorXd& y,
                                     const VectorXd& th) -> MatrixXd {
    const double k2 = y[0] * y[0] + 1.0;
    const double omega = th[0] * std::sqrt(2.0 * k2);
    return MatrixXd::Constant(1, 1, 2.0 * k2 * s_curvature(0.5, omega));
  };

  m.expected_obs_fisher_given_latent = [](const VectorXd& th) -> MatrixXd {
    // E[w] under GIG(1, theta, 1).
    return MatrixXd::Constant(1, 1, bessel_ratio_r(1.0, th[0]) / th[0]);
  };
  // E_y[I_w(theta|y)] has no closed form here; the Monte Carlo route
  // carries that term.

  m.marginal_log_density = [](const VectorXd& y, const VectorXd& th) {
    const double t = th[0];
    return -std::log(2.0 * std::sqrt(2.0)) - log_bessel_k(1.0, t) -
           t * std::sqrt(2.0 * (y[0] * y[0] + 1.0)) + t * y[0];
  };

  m.obs_integration.kind = ObsIntegration::Kind::Scan;
  m.obs_integration.start = [](const VectorXd& th) {
    return bessel_ratio_r(1.0, th[0]);
  };
  m.obs_integration.scale = [](const VectorXd& th) {
    const double t = th[0];
    return std::sqrt(bessel_ratio_r(1.0, t) / t + s_curvature(1.0, t));
  };
  m.latent_integration.kind = LatentIntegration::Kind::ScanLogPositive;
  m.latent_integration.start = 0.0;
  m.latent_integration.scan_scale = 1.0;

  return m;
}

}  // namespace hifisher
