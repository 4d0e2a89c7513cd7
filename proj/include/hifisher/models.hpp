#pragma once

#include <string>
#include <vector>

#include "hifisher/model.hpp"

namespace hifisher {

// Catalog factories. Each model carries its closed-form Fisher providers
// where a safe derivation exists; everything else is left to the generic
// numeric machinery so the two routes stay independently checkable.

// Two-level Gaussian in precision form: y = w + e1, w = mu + e2 with
// e1 ~ N(0, 1/delta), e2 ~ N(0, 1/phi). theta = phi > 0 (latent
// precision), delta known. Level 1 carries no phi, so the marginal
// information is I_w minus the expected conditional information.
HierarchicalModel make_gaussian2(double mu = 0.0, double delta = 1.0);

// Same hierarchy parametrized by the latent variance v = 1/phi. Only
// used to exercise reparametrization invariance of the prior.
HierarchicalModel make_gaussian2_variance(double mu = 0.0, double delta = 1.0);

// Closed-form marginal informations, for tests and the analytic checks.
double gaussian2_marginal_info(double phi, double delta = 1.0);
double gaussian2_variance_marginal_info(double v, double delta = 1.0);

// Student-t as scale mixture: y|w ~ N(0, 1/w), w|theta ~ Ga(theta/2, theta/2).
HierarchicalModel make_studentt();
double studentt_marginal_info(double theta);  // closed form of the decomposition

// Bayesian lasso scale pair. The observation of the Fisher analysis is
// the coefficient vector w1 (its marginal law is Laplace):
//   w1_j | w2_j ~ Unif(-sigma w2_j, sigma w2_j),  w2_j | theta ~ Ga(2, theta).
// The regression data y enters only through a theta-free level, so it is
// omitted from the two-level registration and provided as a demo chain.
HierarchicalModel make_lasso(int p = 1, double sigma = 1.0);

// Three-level chain w2 -> w1 -> y with y | w1 ~ N(X w1, sigma^2 I), X the
// identity. Exercises the recursion and the grouping invariance.
std::vector<LevelSpec> lasso_three_level_chain(int p = 1, double sigma = 1.0);

// Finite mixture with known components: f(y|theta) = sum_k theta_k g_k(y),
// theta the p free weights (theta_0 = 1 - sum of the rest).
HierarchicalModel make_gaussian_mixture(const std::vector<double>& means,
                                        const std::vector<double>& sds);
// Components given as pmf rows over the support {0, ..., K-1}.
HierarchicalModel make_discrete_mixture(const std::vector<std::vector<double>>& pmf);

// I_w(theta)_ij = 1/theta_0 + delta_ij / theta_i for the categorical
// latent label; exact.
MatrixXd mixture_latent_fisher(const VectorXd& theta);

// Fisher of the complete conditional label law at one y, from the
// component density values g[k] = g_k(y). The label probabilities are
// q_k = theta_k g_k / m; the information is sum_k (d_i q_k)(d_j q_k)/q_k.
// Components with g_k = 0 contribute zero (their limit).
MatrixXd mixture_conditional_fisher(const VectorXd& theta, const VectorXd& g);

// Marginal Fisher computed directly from the mixture density,
// I_ij = E[(g_i - g_0)(g_j - g_0) / f(y)^2], by exact sum over a finite
// support or quadrature over the real line. The non-decomposition route.
MatrixXd mixture_direct_marginal_fisher(const HierarchicalModel& mix, const VectorXd& theta,
                                        int quad_points = 201);

// Hyperbolic model: y|w,theta ~ N(theta w, w), w|theta ~ GIG(1, theta, 1).
HierarchicalModel make_hyperbolic();

// Named registry for the CLI.
struct ModelOptions {
  double mu = 0.0;
  double delta = 1.0;                      // gaussian2
  int p = 1;                               // lasso
  double sigma = 1.0;                      // lasso
  std::vector<double> means = {-2.0, 2.0}; // mixture
  std::vector<double> sds = {1.0, 1.0};
};

const std::vector<std::string>& model_names();
HierarchicalModel make_model(const std::string& name, const ModelOptions& opts);

}  // namespace hifisher
