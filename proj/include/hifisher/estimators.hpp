#pragma once

#include <functional>

#include "hifisher/config.hpp"
#include "hifisher/model.hpp"
#include "hifisher/rng.hpp"
#include "hifisher/types.hpp"

namespace hifisher {

// Entrywise mean and standard error of f(x) over draws x ~ sampler.
// Draw i runs on the stream base.split(i), so results do not depend on
// evaluation order. Draws where f has a non-finite entry are discarded;
// more than 1% discarded raises TooManyRejections.
McEstimate mc_expectation_stream(const std::function<VectorXd(SplitRng&)>& sampler,
                                 const std::function<MatrixXd(const VectorXd&)>& f,
                                 SplitRng base, long n_draws);

// Same, with the stream rooted at cfg.seed and n_draws = cfg.n_outer.
McEstimate mc_expectation(const std::function<VectorXd(SplitRng&)>& sampler,
                          const std::function<MatrixXd(const VectorXd&)>& f,
                          const EstimatorConfig& cfg);

// Lowest-level form: the evaluation does its own sampling from the
// per-draw stream it is handed. Same rejection and averaging rules.
McEstimate draw_expectation_stream(const std::function<MatrixXd(SplitRng&)>& eval,
                                   SplitRng base, long n_draws);

// E over the joint hierarchy: w ~ f2(.|theta), y ~ f1(.|w, theta), then
// g(y, draw_rng). g receives a per-draw stream for any inner sampling it
// needs (numeric conditional Fisher evaluations, for example).
McEstimate nested_expectation_stream(
    const HierarchicalModel& m, const VectorXd& theta,
    const std::function<MatrixXd(const VectorXd& y, SplitRng&)>& g, SplitRng base,
    long n_draws);

McEstimate nested_expectation(const HierarchicalModel& m, const ParamPoint& theta,
                              const std::function<MatrixXd(const VectorXd& y, SplitRng&)>& g,
                              const EstimatorConfig& cfg);

// Finite-difference steps per coordinate: cfg.fd_step relative to
// |theta_i| with an absolute floor of 1e-6, halved (at most 8 times,
// then StepUnderflow) until the full stencil around theta stays inside
// the domain.
VectorXd fd_steps(const ParamPoint& theta, const EstimatorConfig& cfg);

// -E_x[d^2/dtheta^2 log f(x, theta)] by central finite differences of the
// log-density around theta, Hessian per draw, averaged over
// x ~ sampler_at_theta. Diagonal entries use the five-point fourth-order
// stencil, off-diagonal the four-corner cross, all on the 3x3 offset
// grid per entry. Small negative eigenvalues within 3 standard errors
// are clamped to zero; anything lower raises NonPositiveInformation.
FisherMatrix numeric_conditional_fisher_stream(
    const std::function<double(const VectorXd& x, const VectorXd& theta)>& log_density,
    const std::function<VectorXd(SplitRng&)>& sampler_at_theta, const ParamPoint& theta,
    const EstimatorConfig& cfg, SplitRng base, long n_draws);

FisherMatrix numeric_conditional_fisher(
    const std::function<double(const VectorXd& x, const VectorXd& theta)>& log_density,
    const std::function<VectorXd(SplitRng&)>& sampler_at_theta, const ParamPoint& theta,
    const EstimatorConfig& cfg);

// Eigenvalue clamp shared by every estimator that assembles a noisy
// information matrix: values in [-3 se_scale, 0) are zeroed and flagged,
// values below -3 se_scale raise NonPositiveInformation.
FisherMatrix repair_psd(const MatrixXd& raw, const MatrixXd& stderrs, EstimateMethod method,
                        bool* clamped);

}  // namespace hifisher
