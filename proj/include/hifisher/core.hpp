#pragma once

#include <vector>

#include "hifisher/config.hpp"
#include "hifisher/estimators.hpp"
#include "hifisher/model.hpp"
#include "hifisher/types.hpp"

namespace hifisher {

// Information accounting for one (model, theta): the complete-data
// information splits along both factorizations of f(y, w | theta),
//
//   I_{y,w} = I_w + E_w[ I_y(theta | w) ]          (build route)
//   I_{y,w} = I_y + E_y[ I_w(theta | y) ]          (read-off route)
//
// so the marginal information arrives as I_y = I_{y,w} - E_y[I_w(.|y)]
// without ever differentiating the marginal likelihood.
struct DecompositionReport {
  std::string model;
  VectorXd theta;

  FisherMatrix i_w;           // I_w(theta)
  FisherMatrix e_iy_given_w;  // E_w[I_y(theta|w)]
  FisherMatrix i_complete;    // I_{y,w}(theta)
  FisherMatrix e_iw_given_y;  // E_y[I_w(theta|y)]
  FisherMatrix i_marginal;    // I_y(theta), clamped PSD

  double identity_residual = 0.0;   // max |i_marginal + e_iw_given_y - i_complete|
  double min_eigenvalue = 0.0;      // of the marginal before clamping
  bool psd_clamped = false;
  bool fast_path = false;           // theta-free level 1 shortcut taken
  long n_rejected = 0;              // across all Monte Carlo components
  EstimatorConfig cfg_echo;         // exact configuration that produced this report

  DecompositionReport(int dim)
      : i_w(FisherMatrix::zero(dim, EstimateMethod::Analytic)),
        e_iy_given_w(i_w),
        i_complete(i_w),
        e_iw_given_y(i_w),
        i_marginal(i_w) {}
};

// I_{y,w}(theta) = I_w + E_w[I_y(theta|w)]. Registered closed forms are
// preferred; each term falls back to seeded Monte Carlo plus
// finite differences under the same contract.
FisherMatrix complete_fisher(const HierarchicalModel& m, const ParamPoint& theta,
                             const EstimatorConfig& cfg);

// E_y[I_w(theta|y)] via the closed-form provider or the nested routine:
// y drawn through the hierarchy, conditional information per draw.
FisherMatrix expected_conditional_latent_fisher(const HierarchicalModel& m,
                                                const ParamPoint& theta,
                                                const EstimatorConfig& cfg);

// I_y(theta) read off the decomposition; eigenvalues in [-3 stderr, 0)
// clamped to zero, lower ones fatal.
FisherMatrix marginal_fisher(const HierarchicalModel& m, const ParamPoint& theta,
                             const EstimatorConfig& cfg);

// All five matrices at once, with the identity and PSD bookkeeping.
DecompositionReport decompose_two_level(const HierarchicalModel& m, const ParamPoint& theta,
                                        const EstimatorConfig& cfg);

// Complete-data information of a chain w_1 -> ... -> w_k -> y:
// I_{w_1}(theta) plus one expected conditional information term per
// deeper level. Levels flagged theta-free contribute exactly zero.
FisherMatrix decompose_multilevel(const std::vector<LevelSpec>& levels,
                                  const ParamPoint& theta, const EstimatorConfig& cfg);

}  // namespace hifisher
