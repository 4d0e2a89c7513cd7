#pragma once

#include <Eigen/Dense>
#include <functional>

namespace hifisher {

// Gauss-Legendre rule on [-1, 1]. Rules are computed once per node count
// and cached; lookup is thread-safe.
struct QuadRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

const QuadRule& gauss_legendre(int n);

// Single-panel Gauss-Legendre integral of f over [lo, hi].
double integrate(const std::function<double(double)>& f, double lo, double hi, int n);

// Composite integral with panels graded geometrically toward both ends of
// [lo, hi]; `levels` halvings per side. Meant for integrands with
// integrable endpoint singularities, where a single panel stalls.
double integrate_graded(const std::function<double(double)>& f, double lo, double hi,
                        int points_per_panel, int levels);

// Window covering the mass of exp(h(t)): coarse scan from t0 at
// resolution scale0 finds the peak, then the ends are pushed outward
// until h falls `drop` below the peak value.
struct PeakWindow {
  double lo = 0.0;
  double hi = 0.0;
  double t_peak = 0.0;
  double h_peak = 0.0;
};

PeakWindow find_peak_window(const std::function<double(double)>& h, double t0,
                            double scale0, double drop);

}  // namespace hifisher
