#include <cmath>

#include "hifisher/models.hpp"
#include "hifisher/special.hpp"

namespace hifisher {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kLogPi = 1.1447298858494001741;

}  // namespace

double studentt_marginal_info(double theta) {
  if (!(theta > 0.0)) throw DomainError("studentt_marginal_info: theta <= 0");
  return 0.25 * (trigamma(0.5 * theta) - trigamma(0.5 * (theta + 1.0))) -
         (theta + 5.0) /
             (2.0 * theta * (theta + 1.0) * (theta + 3.0));
}

// Student-t degrees of freedom via the scale-mixture representation:
// w | theta ~ Gamma(theta/2, theta/2), y | w ~ N(0, 1/w). The latent
// precision carries all the theta dependence.
HierarchicalModel make_studentt() {
  HierarchicalModel m;
  m.name = "studentt";
  m.summary = "t degrees of freedom as a gamma mixing hierarchy";
  m.theta_dim = 1;
  m.latent_dim = 1;
  m.obs_dim = 1;
  m.domain = Domain::positive();
  m.reference_theta = VectorXd::Constant(1, 2.0);

  m.level1.depends_on_theta = false;
  m.level1.log_density = [](const VectorXd& y, const VectorXd& w,
                            const VectorXd&) {
    return 0.5 * std::log(w[0]) - 0.5 * kLog2Pi - 0.5 * w[0] * y[0] * y[0];
  };
  m.level1.sample = [](const VectorXd& w, const VectorXd&, SplitRng& rng) {
    VectorXd y(1);
    y[0] = rng.normal() / std::sqrt(w[0]);
    return y;
  };

  m.level2.log_density = [](const VectorXd& w, const VectorXd& th) {
    const double a = 0.5 * th[0];
    return a * std::log(a) - std::lgamma(a) + (a - 1.0) * std::log(w[0]) -
           a * w[0];
  };
  m.level2.sample = [](const VectorXd& th, SplitRng& rng) {
    VectorXd w(1);
    w[0] = rng.gamma(0.5 * th[0], 0.5 * th[0]);
    return w;
  };
  m.level2.fisher = [](const VectorXd& th) -> MatrixXd {
    const double t = th[0];
    return MatrixXd::Constant(1, 1, 0.25 * trigamma(0.5 * t) - 0.5 / t);
  };

  // w | y, theta ~ Gamma((theta+1)/2, (theta+y^2)/2).
  m.complete_conditional.log_density = [](const VectorXd& w, const VectorXd& y,
                                          const VectorXd& th) {
    const double a = 0.5 * (th[0] + 1.0);
    const double b = 0.5 * (th[0] + y[0] * y[0]);
    return a * std::log(b) - std::lgamma(a) + (a - 1.0) * std::log(w[0]) -
           b * w[0];
  };
  m.complete_conditional.sample = [](const VectorXd& y, const VectorXd& th,
                                     SplitRng& rng) {
    VectorXd w(1);
    w[0] = rng.gamma(0.5 * (th[0] + 1.0), 0.5 * (th[0] + y[0] * y[0]));
    return w;
  };
  m.complete_conditional.fisher = [](const VectorXd& y,
                                     const VectorXd& th) -> MatrixXd {
    const double t = th[0];
    const double b2 = t + y[0] * y[0];
    return MatrixXd::Constant(1, 1,
                              0.25 * trigamma(0.5 * (t + 1.0)) +
                                  (t + 1.0) / (2.0 * b2 * b2) - 1.0 / b2);
  };

  m.expected_latent_fisher_given_obs = [](const VectorXd& th) -> MatrixXd {
    const double t = th[0];
    return MatrixXd::Constant(1, 1,
                              0.25 * trigamma(0.5 * (t + 1.0)) +
                                  (t + 2.0) / (2.0 * t * (t + 3.0)) -
                                  1.0 / (t + 1.0));
  };

  m.marginal_log_density = [](const VectorXd& y, const VectorXd& th) {
    const double t = th[0];
    return std::lgamma(0.5 * (t + 1.0)) - std::lgamma(0.5 * t) -
           0.5 * std::log(t) - 0.5 * kLogPi -
           0.5 * (t + 1.0) * std::log1p(y[0] * y[0] / t);
  };

  // Heavy tails: substitute y = sqrt(theta) tan(u) so the marginal
  // integrand is smooth on a finite interval.
  m.obs_integration.kind = ObsIntegration::Kind::TanSub;
  m.obs_integration.scale = [](const VectorXd& th) {
    return std::sqrt(th[0]);
  };
  m.latent_integration.kind = LatentIntegration::Kind::ScanLogPositive;
  m.latent_integration.start = 0.0;
  m.latent_integration.scan_scale = 1.0;

  return m;
}

}  // namespace hifisher
