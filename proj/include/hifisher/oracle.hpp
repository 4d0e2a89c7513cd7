#pragma once

#include "hifisher/config.hpp"
#include "hifisher/model.hpp"

namespace hifisher {

// Cross-checks that never touch the decomposition code paths. Everything
// here works from densities alone: exact sums on finite supports,
// quadrature elsewhere.

// Joint law of a pair of finite variables, rows indexing the observation
// and columns the latent label. Construction validates shape (at most
// 64 x 64), nonnegativity, and total mass 1 within 1e-14.
struct DiscreteJoint {
  MatrixXd p;

  explicit DiscreteJoint(MatrixXd probs);

  // Dirichlet(1) table: exponential fills, normalized.
  static DiscreteJoint random(int n_obs, int n_latent, SplitRng& rng);

  VectorXd obs_marginal() const;     // sums over the latent axis
  VectorXd latent_marginal() const;  // sums over the observation axis
};

// KL(P || Q) split along both factorization orders.
struct KlChainReport {
  double joint_kl = 0.0;
  double obs_route = 0.0;     // KL of obs marginals + expected conditional KL
  double latent_route = 0.0;  // KL of latent marginals + expected conditional KL
  double residual_obs = 0.0;
  double residual_latent = 0.0;
  bool finite = true;  // false when a support mismatch drives all routes to +inf
};

KlChainReport discrete_kl_chain_check(const DiscreteJoint& p, const DiscreteJoint& q);

// Joint table of a model with finite observation support and label
// latent, p(y, w) = f2(w | theta) f1(y | w, theta).
DiscreteJoint discrete_joint_of(const HierarchicalModel& m, const VectorXd& theta);

// Marginal density f(y | theta) by integrating the latent variable out
// numerically, per the model's latent integration declaration. The node
// count doubles once as a convergence check; disagreement beyond 1e-6
// relative raises QuadratureNotConverged.
double marginal_density_quadrature(const HierarchicalModel& m, const VectorXd& y,
                                   const VectorXd& theta, int quad_points = 201);

// Fisher information as the variance of the finite-difference score of
// the log marginal, integrated over the observation axis. Prefers a
// registered closed-form marginal and falls back to quadrature. The
// marginal must integrate to 1 within 1e-6 over the window used.
FisherMatrix score_variance_fisher(const HierarchicalModel& m, const ParamPoint& theta,
                                   const EstimatorConfig& cfg);

// Fisher information as the small-step Hessian of the Kullback-Leibler
// divergence theta' -> KL(theta || theta') at theta' = theta.
FisherMatrix kl_hessian_fisher(const HierarchicalModel& m, const ParamPoint& theta,
                               const EstimatorConfig& cfg);

}  // namespace hifisher
