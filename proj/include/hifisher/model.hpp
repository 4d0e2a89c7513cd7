#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hifisher/rng.hpp"
#include "hifisher/types.hpp"

namespace hifisher {

// Two-level hierarchy: theta -> w (latent) -> y (observed).
//
//   f(y, w | theta) = f1(y | w, theta) f2(w | theta)
//
// Every law is a log-density plus a sampler; `fisher` members are
// optional closed forms for the information of that conditional law in
// theta, used ahead of the generic finite-difference fallback.

struct Level1Spec {  // f1(y | w, theta)
  bool depends_on_theta = true;
  std::function<double(const VectorXd& y, const VectorXd& w, const VectorXd& theta)>
      log_density;
  std::function<VectorXd(const VectorXd& w, const VectorXd& theta, SplitRng&)> sample;
  std::function<MatrixXd(const VectorXd& w, const VectorXd& theta)> fisher;  // I_y(theta|w)
};

struct Level2Spec {  // f2(w | theta)
  std::function<double(const VectorXd& w, const VectorXd& theta)> log_density;
  std::function<VectorXd(const VectorXd& theta, SplitRng&)> sample;
  std::function<MatrixXd(const VectorXd& theta)> fisher;  // I_w(theta)
};

struct CompleteConditionalSpec {  // f(w | theta, y)
  std::function<double(const VectorXd& w, const VectorXd& y, const VectorXd& theta)>
      log_density;
  std::function<VectorXd(const VectorXd& y, const VectorXd& theta, SplitRng&)> sample;
  std::function<MatrixXd(const VectorXd& y, const VectorXd& theta)> fisher;  // I_w(theta|y)
};

// How oracles should integrate over the observation axis.
struct ObsIntegration {
  enum class Kind {
    Scan,      // locate the peak of the log marginal, expand until it drops
    Fixed,     // explicit [lo(theta), hi(theta)] window
    TanSub,    // y = scale(theta) * tan(u), graded panels; power-law tails
    Discrete,  // finite support, exact sums
  };
  Kind kind = Kind::Scan;
  std::function<double(const VectorXd& theta)> start;  // Scan: initial guess
  std::function<double(const VectorXd& theta)> scale;  // Scan resolution / TanSub scale
  std::function<double(const VectorXd& theta)> lo;     // Fixed
  std::function<double(const VectorXd& theta)> hi;     // Fixed
  std::vector<double> support;                         // Discrete
};

// How oracles should integrate over the latent axis.
struct LatentIntegration {
  enum class Kind {
    ScanReal,         // latent ranges over the real line
    ScanLogPositive,  // positive latent, integrate in log w
    Labels,           // finite label set {0..n_labels-1}
  };
  Kind kind = Kind::ScanLogPositive;
  double start = 0.0;       // initial guess in transformed coordinates
  double scan_scale = 1.0;  // coarse scan resolution
  int n_labels = 0;
};

struct HierarchicalModel {
  std::string name;
  std::string summary;  // one line for list-models output

  int theta_dim = 1;
  int latent_dim = 1;
  int obs_dim = 1;
  Domain domain = Domain::positive();
  VectorXd reference_theta;  // interior point used by registration checks

  Level1Spec level1;
  Level2Spec level2;
  CompleteConditionalSpec complete_conditional;

  // Optional closed forms. The marginal is consumed only by oracles; the
  // expectation providers short-circuit the Monte Carlo outer loops.
  std::function<double(const VectorXd& y, const VectorXd& theta)> marginal_log_density;
  std::function<MatrixXd(const VectorXd& theta)> expected_latent_fisher_given_obs;  // E_y[I_w(theta|y)]
  std::function<MatrixXd(const VectorXd& theta)> expected_obs_fisher_given_latent;  // E_w[I_y(theta|w)]

  ObsIntegration obs_integration;
  LatentIntegration latent_integration;

  // Which open boundaries of a scalar domain the properness diagnostic
  // extrapolates toward. A model whose properness question lives at one
  // end declares only that end; the grid covers the rest.
  bool tail_diag_lower = false;
  bool tail_diag_upper = true;

  // Whether the quadrature oracles apply. False for models validated by
  // exact algebra instead (multidimensional latent blocks).
  bool oracle_supported = true;

  ParamPoint param(VectorXd theta) const { return ParamPoint(std::move(theta), domain); }
  ParamPoint param(double theta) const { return ParamPoint::scalar(theta, domain); }
};

// One conditional law in a chain w_1 -> w_2 -> ... -> y. `given` holds
// the draws of all shallower levels, in chain order.
struct LevelSpec {
  std::string name;
  int dim = 1;
  bool depends_on_theta = true;
  std::function<double(const VectorXd& x, const std::vector<VectorXd>& given,
                       const VectorXd& theta)>
      log_density;
  std::function<VectorXd(const std::vector<VectorXd>& given, const VectorXd& theta,
                         SplitRng&)>
      sample;
  std::function<MatrixXd(const std::vector<VectorXd>& given, const VectorXd& theta)>
      fisher;  // optional closed form given the conditioning stack
};

// Registration-time checks: sampler dimensions, finite log-densities at a
// reference draw, and honesty of a theta-free level-1 flag (two distinct
// theta values must give identical level-1 log-density within 1e-12).
void validate_model(const HierarchicalModel& m);

// Interior point distinct from v, used by the theta-free spot check.
VectorXd interior_perturb(const Domain& d, const VectorXd& v);

}  // namespace hifisher
