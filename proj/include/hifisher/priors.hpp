#pragma once

#include <string>
#include <vector>

#include "hifisher/core.hpp"

namespace hifisher {

// Objective priors induced by the decomposition: the reference density
// sqrt(det I_y(theta)) and its computable upper envelope
// sqrt(det I_{y,w}(theta)). Both are unnormalized.

struct PriorPoint {
  VectorXd theta;
  DecompositionReport report;
  double jeffreys = 0.0;
  double jeffreys_stderr = 0.0;
  double upper_bound = 0.0;
  double upper_bound_stderr = 0.0;

  explicit PriorPoint(int dim) : theta(VectorXd::Zero(dim)), report(dim) {}
};

struct PriorGrid {
  std::vector<PriorPoint> points;
};

// "min:max:count" with an optional ":log" suffix for geometric spacing.
std::vector<double> parse_grid(const std::string& spec);

// Interior barycentric lattice of the simplex in p free coordinates:
// every composition (i_1, ..., i_p) with i_j >= 1 and sum <= n - 1,
// mapped to theta_j = i_j / n. All full weights stay positive.
std::vector<VectorXd> simplex_interior_grid(int p, int n);

// Decomposition at every grid point. Per-point seeds derive from
// cfg.seed and the point index alone, so results are independent of
// n_threads and arrive in grid order.
PriorGrid jeffreys_grid(const HierarchicalModel& m, const std::vector<VectorXd>& thetas,
                        const EstimatorConfig& cfg, int n_threads = 1);

// Determinant superadditivity of PSD matrices, n >= 2:
//   det(A+B)^{1/n} >= det(A)^{1/n} + det(B)^{1/n}
// and therefore, raising x^{n/2} over the superadditive sum,
//   det(A+B)^{1/2} >= det(A)^{1/2} + det(B)^{1/2}.
// Equality in the first form at A = B.
struct MinkowskiReport {
  double lhs_root_n = 0.0;
  double rhs_root_n = 0.0;
  double slack_root_n = 0.0;  // lhs - rhs
  double lhs_sqrt = 0.0;
  double rhs_sqrt = 0.0;
  double slack_sqrt = 0.0;
  bool holds_root_n = false;
  bool holds_sqrt = false;
};
MinkowskiReport minkowski_check(const MatrixXd& a, const MatrixXd& b);

// Pointwise audit that the marginal prior never exceeds its envelope
// beyond the Monte Carlo allowance; with an integrable envelope this is
// the properness certificate for the marginal prior.
struct DominanceReport {
  double max_violation = 0.0;  // worst jeffreys - upper - 3 se, floored at 0
  bool holds = true;
};
DominanceReport envelope_properness_check(const PriorGrid& grid);

// Log-log least squares fit of y against x. Pairs with nonpositive or
// nonfinite values are dropped; fewer than four survivors marks the fit
// unusable.
struct TailFit {
  double exponent = 0.0;
  double exponent_se = 0.0;
  double correction = 0.0;   // estimated mass beyond the grid edge
  bool usable = false;
  bool integrable = false;
  bool inconclusive = true;
};
TailFit fit_power_tail(const std::vector<double>& x, const std::vector<double>& y);

// Normalizability of a positive density sampled on an ascending scalar
// grid: trapezoid mass over the grid window plus power-law tail
// corrections toward the boundaries the model declares. The verdict
// speaks only about the declared boundaries.
struct PropernessReport {
  double grid_mass = 0.0;
  double total_mass = 0.0;
  TailFit lower;
  TailFit upper;
  bool lower_diagnosed = false;
  bool upper_diagnosed = false;
  std::string verdict;  // "proper" | "improper" | "inconclusive"
};
PropernessReport properness_diagnostic(const std::vector<double>& theta,
                                       const std::vector<double>& density,
                                       const Domain& domain, bool diag_lower,
                                       bool diag_upper);

}  // namespace hifisher
