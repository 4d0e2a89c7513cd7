#include "hifisher/quadrature.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <mutex>

#include "hifisher/errors.hpp"

namespace hifisher {

namespace {

QuadRule build_gauss_legendre(int n) {
  QuadRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const double pi = 3.141592653589793238462643383280;
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Chebyshev-based starting guess, then Newton on P_n.
    double z = std::cos(pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      double z1 = z;
      z = z1 - p0 / pp;
      if (std::fabs(z - z1) < 1e-15) break;
    }
    r.nodes[i] = -z;
    r.nodes[n - 1 - i] = z;
    r.weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    r.weights[n - 1 - i] = r.weights[i];
  }
  return r;
}

std::mutex g_rule_mutex;
std::map<int, QuadRule> g_rules;

}  // namespace

const QuadRule& gauss_legendre(int n) {
  if (n < 1) throw ConfigError("quadrature rule needs at least one node");
  std::lock_guard<std::mutex> lock(g_rule_mutex);
  auto it = g_rules.find(n);
  if (it == g_rules.end()) it = g_rules.emplace(n, build_gauss_legendre(n)).first;
  return it->second;
}

double integrate(const std::function<double(double)>& f, double lo, double hi, int n) {
  const QuadRule& rule = gauss_legendre(n);
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return acc * half;
}

double integrate_graded(const std::function<double(double)>& f, double lo, double hi,
                        int points_per_panel, int levels) {
  // Panel edges: midpoint out to each end in geometrically shrinking
  // steps, so the innermost panels hug the endpoints. The closing panel
  // on each side has width (hi-lo)/2^levels and is pinned to the exact
  // endpoint, which keeps integrable edge singularities confined to a
  // sliver whose mass vanishes as levels grows.
  const double mid = 0.5 * (lo + hi);
  double acc = 0.0;
  double edge = mid;
  double width = 0.25 * (hi - lo);
  for (int k = 0; k < levels; ++k) {
    const double next = (k == levels - 1) ? hi : edge + width;
    acc += integrate(f, edge, next, points_per_panel);
    edge = next;
    width *= 0.5;
  }
  edge = mid;
  width = 0.25 * (hi - lo);
  for (int k = 0; k < levels; ++k) {
    const double next = (k == levels - 1) ? lo : edge - width;
    acc += integrate(f, next, edge, points_per_panel);
    edge = next;
    width *= 0.5;
  }
  return acc;
}

PeakWindow find_peak_window(const std::function<double(double)>& h, double t0,
                            double scale0, double drop) {
  const double neg_inf = -std::numeric_limits<double>::infinity();
  double s = scale0;
  double center = t0;
  int best = 0;
  double hbest = neg_inf;
  // Coarse scan; recenter and widen until the maximum is interior.
  for (int attempt = 0; attempt < 64; ++attempt) {
    const int half = 40;
    best = 0;
    hbest = neg_inf;
    for (int k = -half; k <= half; ++k) {
      double v = h(center + k * s);
      if (std::isfinite(v) && v > hbest) {
        hbest = v;
        best = k;
      }
    }
    if (hbest == neg_inf) {
      s *= 2.0;  // everything underflowed; look wider
      continue;
    }
    if (std::abs(best) < half) break;
    center += best * s;
    s *= 2.0;
  }
  if (hbest == neg_inf)
    throw QuadratureNotConverged("no finite density values found while locating the peak");

  PeakWindow w;
  w.t_peak = center + best * s;
  w.h_peak = hbest;
  // Push each end outward until the log-integrand has dropped enough.
  double step = s;
  w.lo = w.t_peak - step;
  for (int i = 0; i < 400 && h(w.lo) > hbest - drop; ++i) {
    w.lo -= step;
    step *= 1.25;
  }
  step = s;
  w.hi = w.t_peak + step;
  for (int i = 0; i < 400 && h(w.hi) > hbest - drop; ++i) {
    w.hi += step;
    step *= 1.25;
  }
  if (!(std::isfinite(w.lo) && std::isfinite(w.hi)))
    throw QuadratureNotConverged("integration window failed to close; integrand decays too slowly");
  return w;
}

}  // namespace hifisher
