#include "hifisher/special.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace hifisher {

namespace {

constexpr double kPi = 3.141592653589793238462643383280;
constexpr double kEps = std::numeric_limits<double>::epsilon();

void require_positive(double x, const char* fn) {
  if (!(x > 0.0))
    throw DomainError(std::string(fn) + " requires a strictly positive argument");
}

}  // namespace

double digamma(double x) {
  require_positive(x, "digamma");
  double acc = 0.0;
  while (x < 10.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  // Asymptotic expansion, Bernoulli coefficients through x^{-12}; the
  // first dropped term is below 1e-15 once x >= 10.
  double inv = 1.0 / x;
  double inv2 = inv * inv;
  double series = std::log(x) - 0.5 * inv -
                  inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 -
                          inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 -
                          inv2 * (691.0 / 32760.0))))));
  return acc + series;
}

double trigamma(double x) {
  require_positive(x, "trigamma");
  double acc = 0.0;
  // psi'(x) = psi'(x+1) + 1/x^2 shifts the argument into the asymptotic
  // regime without losing digits: every term added is exact to rounding.
  while (x < 8.0) {
    acc += 1.0 / (x * x);
    x += 1.0;
  }
  double inv = 1.0 / x;
  double inv2 = inv * inv;
  // 1/x + 1/(2x^2) + sum_k B_{2k} x^{-2k-1}; truncation below 1e-14
  // relative once x >= 8.
  double series = inv2 * (1.0 / 6.0 -
                  inv2 * (1.0 / 30.0 -
                  inv2 * (1.0 / 42.0 -
                  inv2 * (1.0 / 30.0 -
                  inv2 * (5.0 / 66.0 -
                  inv2 * (691.0 / 2730.0 -
                  inv2 * (7.0 / 6.0)))))));
  return acc + inv + 0.5 * inv2 + inv * series;
}

namespace {

// Coefficients of 1/Gamma(1+z) = sum_k g_k z^k (Abramowitz & Stegun 6.1.34).
constexpr double kInvGammaCoef[] = {
    1.0,
    0.57721566490153286061,
    -0.65587807152025388108,
    -0.04200263503409523553,
    0.16653861138229148950,
    -0.04219773455554433675,
    -0.00962197152787697356,
    0.00721894324666309954,
    -0.00116516759185906511,
    -0.00021524167411495097,
    0.00012805028238811619,
    -0.00002013485478078824,
    -0.00000125049348214267,
};

double inv_gamma_one_plus(double z) {
  // |z| <= 0.5 here; direct series, last term ~1e-10 * 0.5^12.
  double acc = 0.0;
  for (int k = 12; k >= 0; --k) acc = acc * z + kInvGammaCoef[k];
  return acc;
}

// gam1 = (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu), continuous through 0.
double temme_gam1(double mu) {
  if (std::fabs(mu) < 1e-4) {
    // Odd part of the reciprocal gamma series; avoids the cancellation
    // a direct difference would suffer at tiny mu. The 1/Gamma(1-mu)
    // expansion flips the odd coefficients, so they enter negated.
    double mu2 = mu * mu;
    return -(kInvGammaCoef[1] + mu2 * (kInvGammaCoef[3] + mu2 * kInvGammaCoef[5]));
  }
  return (inv_gamma_one_plus(-mu) - inv_gamma_one_plus(mu)) / (2.0 * mu);
}

double temme_gam2(double mu) {
  return 0.5 * (inv_gamma_one_plus(-mu) + inv_gamma_one_plus(mu));
}

// K_mu and K_{mu+1} scaled by e^x, |mu| <= 1/2, 0 < x <= 2.
// Temme's series (Temme, J. Comput. Phys. 19, 1975).
void bessel_k_temme(double mu, double x, double* k0, double* k1) {
  const double x2 = 0.5 * x;
  const double mu2 = mu * mu;
  const double pimu = kPi * mu;
  const double fact = std::fabs(pimu) < 1e-30 ? 1.0 : pimu / std::sin(pimu);
  double d = -std::log(x2);
  double e = mu * d;
  const double fact2 = std::fabs(e) < 1e-30 ? 1.0 : std::sinh(e) / e;
  double ff = fact * (temme_gam1(mu) * std::cosh(e) + temme_gam2(mu) * fact2 * d);
  double sum = ff;
  double ee = std::exp(e);  // (x/2)^{-mu}
  double p = 0.5 * ee / inv_gamma_one_plus(mu);    // = (x/2)^{-mu} Gamma(1+mu)/2
  double q = 0.5 / (ee * inv_gamma_one_plus(-mu));  // = (x/2)^{+mu} Gamma(1-mu)/2
  double c = 1.0;
  d = x2 * x2;
  double sum1 = p;
  for (int i = 1; i <= 500; ++i) {
    ff = (i * ff + p + q) / (i * i - mu2);
    c *= d / i;
    p /= (i - mu);
    q /= (i + mu);
    double del = c * ff;
    sum += del;
    double del1 = c * (p - i * ff);
    sum1 += del1;
    if (std::fabs(del) < std::fabs(sum) * kEps) break;
  }
  double scale = std::exp(x);
  *k0 = sum * scale;
  *k1 = sum1 * (2.0 / x) * scale;
}

// Same pair for x > 2 via Steed's continued fraction CF2
// (Thompson & Barnett, J. Comput. Phys. 64, 1986). Returns e^x K.
void bessel_k_cf2(double mu, double x, double* k0, double* k1) {
  const double mu2 = mu * mu;
  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double h = d, delh = d;
  double q1 = 0.0, q2 = 1.0;
  const double a1 = 0.25 - mu2;
  double q = a1, c = a1, a = -a1;
  double s = 1.0 + q * delh;
  for (int i = 2; i <= 10000; ++i) {
    a -= 2.0 * (i - 1);
    c = -a * c / i;
    double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    double dels = q * delh;
    s += dels;
    if (std::fabs(dels / s) < kEps) break;
  }
  h = a1 * h;
  double rk = std::sqrt(kPi / (2.0 * x)) / s;  // e^x K_mu(x)
  *k0 = rk;
  *k1 = rk * (mu + x + 0.5 - h) / x;
}

// log(e^x K_nu(x)) for nu >= 0 by upward recurrence from the fractional
// base pair. Upward is the stable direction: K grows with order.
double log_scaled_bessel_k(double nu, double x) {
  int n = int(nu + 0.5);
  double mu = nu - n;  // mu in [-1/2, 1/2)
  double kmu, kmu1;
  if (mu == -0.5) {
    // Half-integer order: K_{1/2}(x) = K_{-1/2}(x) = sqrt(pi/(2x)) e^{-x}
    // exactly, so the base pair skips the series. These orders sit in
    // inner Monte Carlo loops (GIG conditionals), where the series cost
    // would dominate the draw.
    kmu = kmu1 = std::sqrt(kPi / (2.0 * x));
  } else if (x <= 2.0) {
    bessel_k_temme(mu, x, &kmu, &kmu1);
  } else {
    bessel_k_cf2(mu, x, &kmu, &kmu1);
  }
  // Recur in scaled space, renormalizing through logs if values grow.
  double logshift = 0.0;
  double prev = kmu, cur = kmu1;
  if (n == 0) return std::log(kmu);
  for (int i = 1; i < n; ++i) {
    double next = prev + (2.0 * (mu + i) / x) * cur;
    prev = cur;
    cur = next;
    if (cur > 1e250) {
      logshift += std::log(cur);
      prev /= cur;
      cur = 1.0;
    }
  }
  return std::log(cur) + logshift;
}

}  // namespace

double log_bessel_k(double nu, double x) {
  require_positive(x, "log_bessel_k");
  nu = std::fabs(nu);  // K_{-nu} = K_nu
  return log_scaled_bessel_k(nu, x) - x;
}

double bessel_ratio_r(double rho, double x) {
  return std::exp(log_bessel_k(rho + 1.0, x) - log_bessel_k(rho, x));
}

double s_curvature(double rho, double x) {
  double r1 = bessel_ratio_r(rho, x);
  double r2 = std::exp(log_bessel_k(rho + 2.0, x) - log_bessel_k(rho, x));
  return r2 - r1 * r1;
}

GigParams::GigParams(double rho_, double gamma_, double kappa_)
    : rho(rho_), gamma(gamma_), kappa(kappa_) {
  if (!(gamma >= 0.0) || !(kappa >= 0.0))
    throw DomainError("gig parameters gamma, kappa must be nonnegative");
  if (gamma == 0.0 && kappa == 0.0)
    throw DomainError("gig parameters gamma and kappa cannot both vanish");
  if (gamma == 0.0 && !(rho < 0.0))
    throw DomainError("gig with gamma = 0 needs rho < 0 for an integrable tail");
  if (kappa == 0.0 && !(rho > 0.0))
    throw DomainError("gig with kappa = 0 needs rho > 0 for integrability at 0");
}

namespace {

void require_bessel_branch(const GigParams& p, const char* fn) {
  if (p.gamma == 0.0 || p.kappa == 0.0)
    throw DomainError(std::string(fn) +
                      ": degenerate gig (gamma or kappa zero) has gamma/inverse-gamma "
                      "moments, not Bessel ones");
}

}  // namespace

GigMoments gig_moments(const GigParams& p) {
  require_bessel_branch(p, "gig_moments");
  const double u = p.gamma * p.kappa;
  const double ratio = p.kappa / p.gamma;
  const double lk = log_bessel_k(p.rho, u);
  GigMoments m;
  m.mean = ratio * std::exp(log_bessel_k(p.rho + 1.0, u) - lk);
  m.mean_inv = std::exp(log_bessel_k(p.rho - 1.0, u) - lk) / ratio;
  const double h = 1e-5;  // d/drho of the log-normalizer
  m.mean_log = std::log(ratio) +
               (log_bessel_k(p.rho + h, u) - log_bessel_k(p.rho - h, u)) / (2.0 * h);
  m.variance = ratio * ratio * s_curvature(p.rho, u);
  return m;
}

double gig_log_density(const GigParams& p, double w) {
  if (!(w > 0.0)) return -std::numeric_limits<double>::infinity();
  require_bessel_branch(p, "gig_log_density");
  const double u = p.gamma * p.kappa;
  double log_norm = p.rho * std::log(p.gamma / p.kappa) - std::log(2.0) - log_bessel_k(p.rho, u);
  return log_norm + (p.rho - 1.0) * std::log(w) -
         0.5 * (p.kappa * p.kappa / w + p.gamma * p.gamma * w);
}

namespace {

// Log of the standardized unnormalized density x^{rho-1} e^{-omega(x+1/x)/2}.
inline double gig_std_log(double rho, double omega, double x) {
  return (rho - 1.0) * std::log(x) - 0.5 * omega * (x + 1.0 / x);
}

inline double gig_std_dlog(double rho, double omega, double x) {
  return (rho - 1.0) / x - 0.5 * omega * (1.0 - 1.0 / (x * x));
}

// Root of 1 + (x - m) dlog(x)/2 on a bracket where it changes sign;
// locates the extrema of (x - m) sqrt(density).
double bisect_rou_edge(double rho, double omega, double m, double lo, double hi) {
  auto t = [&](double x) { return 1.0 + 0.5 * (x - m) * gig_std_dlog(rho, omega, x); };
  double flo = t(lo);
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    double fm = t(mid);
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

GigSampler::GigSampler(const GigParams& p) : params_(p), branch_(Branch::RatioOfUniforms) {
  if (p.kappa == 0.0) {
    branch_ = Branch::Gamma;
    return;
  }
  if (p.gamma == 0.0) {
    branch_ = Branch::InverseGamma;
    return;
  }
  omega_ = p.gamma * p.kappa;
  const double rho = p.rho;
  // Mode of the standardized density; positive for every rho.
  mode_ = ((rho - 1.0) + std::sqrt((rho - 1.0) * (rho - 1.0) + omega_ * omega_)) / omega_;
  log_gm_ = gig_std_log(rho, omega_, mode_);

  // Bracket the two extrema of (x - m) sqrt(g(x)/g(m)) on either side of
  // the mode, then tighten by bisection on the stationarity condition.
  double hi = 2.0 * mode_ + 1.0;
  while (1.0 + 0.5 * (hi - mode_) * gig_std_dlog(rho, omega_, hi) > 0.0) hi *= 2.0;
  double xplus = bisect_rou_edge(rho, omega_, mode_, mode_, hi);
  double lo = 0.5 * mode_;
  while (1.0 + 0.5 * (lo - mode_) * gig_std_dlog(rho, omega_, lo) > 0.0) lo *= 0.5;
  double xminus = bisect_rou_edge(rho, omega_, mode_, lo, mode_);

  auto half_rel_log = [&](double x) {
    return 0.5 * (gig_std_log(rho, omega_, x) - log_gm_);
  };
  // Inflate the box a hair so edge rounding can never clip the region.
  vplus_ = (xplus - mode_) * std::exp(half_rel_log(xplus)) * (1.0 + 1e-9);
  vminus_ = (xminus - mode_) * std::exp(half_rel_log(xminus)) * (1.0 + 1e-9);
}

double GigSampler::operator()(SplitRng& rng) const {
  if (branch_ == Branch::Gamma)
    return rng.gamma(params_.rho, 0.5 * params_.gamma * params_.gamma);
  if (branch_ == Branch::InverseGamma)
    return 1.0 / rng.gamma(-params_.rho, 0.5 * params_.kappa * params_.kappa);

  for (;;) {
    double u = rng.uniform_pos();
    double v = rng.uniform(vminus_, vplus_);
    double x = mode_ + v / u;
    if (x <= 0.0) continue;
    if (2.0 * std::log(u) <= gig_std_log(params_.rho, omega_, x) - log_gm_)
      return (params_.kappa / params_.gamma) * x;
  }
}

double gig_sample(const GigParams& p, SplitRng& rng) { return GigSampler(p)(rng); }

}  // namespace hifisher
