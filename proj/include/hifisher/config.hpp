#pragma once

#include <cstdint>

#include "hifisher/errors.hpp"
#include "hifisher/types.hpp"

namespace hifisher {

// Knobs shared by every estimator. validate() is called at the entry of
// each public operation, so a config in flight is always internally
// consistent.
struct EstimatorConfig {
  int n_outer = 20000;      // Monte Carlo draws for outer expectations
  int n_inner = 200;        // draws per inner numeric Fisher evaluation
  std::uint64_t seed = 1;   // root seed; all streams derive from it
  double fd_step = 1e-4;    // finite-difference step, relative to |theta_i|
  int quad_points = 201;    // Gauss-Legendre nodes per latent integral
  double quad_range_sd = 12.0;  // integration window half-width, in sds

  // Dispatch switches. Normal runs prefer registered closed forms;
  // disabling them forces the generic Monte Carlo / finite-difference
  // machinery over the exact same contracts.
  bool use_analytic_expectation = true;  // closed-form E_y[.], E_w[.]
  bool use_analytic_fisher = true;       // closed-form per-law Fisher
  bool allow_fast_path = true;           // skip E_w[I_y(th|w)] when level 1 is theta-free

  void validate() const {
    if (n_outer < 100) throw ConfigError("n_outer must be >= 100");
    if (n_inner < 1) throw ConfigError("n_inner must be >= 1");
    if (!(fd_step > 1e-8 && fd_step < 1e-1))
      throw ConfigError("fd_step must lie in (1e-8, 1e-1)");
    if (quad_points < 21 || quad_points % 2 == 0)
      throw ConfigError("quad_points must be odd and >= 21");
    if (!(quad_range_sd > 0.0)) throw ConfigError("quad_range_sd must be positive");
  }
};

// Result of a Monte Carlo expectation: entrywise mean, entrywise standard
// error of the mean, and the rejection accounting behind them.
struct McEstimate {
  MatrixXd value;
  MatrixXd stderrs;
  long n_used = 0;
  long n_rejected = 0;

  FisherMatrix as_fisher() const {
    return FisherMatrix(value, EstimateMethod::MonteCarlo, stderrs);
  }
};

}  // namespace hifisher
