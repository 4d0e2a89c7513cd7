#include "hifisher/core.hpp"

#include <cmath>
#include <string>

namespace hifisher {

namespace {

// Stream ids for the independent Monte Carlo components of one
// decomposition. Fixed constants keep runs bit-identical however the
// work is scheduled.
constexpr std::uint64_t kStreamLatentFisher = 1;
constexpr std::uint64_t kStreamObsGivenLatent = 2;
constexpr std::uint64_t kStreamLatentGivenObs = 3;
constexpr std::uint64_t kStreamChainBase = 16;

FisherMatrix latent_prior_fisher(const HierarchicalModel& m, const ParamPoint& theta,
                                 const EstimatorConfig& cfg, SplitRng root) {
  if (cfg.use_analytic_fisher && m.level2.fisher)
    return FisherMatrix(m.level2.fisher(theta.values), EstimateMethod::Analytic);
  auto sampler = [&](SplitRng& rng) { return m.level2.sample(theta.values, rng); };
  return numeric_conditional_fisher_stream(m.level2.log_density, sampler, theta, cfg,
                                           root.split(kStreamLatentFisher), cfg.n_outer);
}

FisherMatrix obs_fisher_given_latent(const HierarchicalModel& m, const ParamPoint& theta,
                                     const EstimatorConfig& cfg, SplitRng root,
                                     bool* fast_path, long* rejected) {
  const int p = theta.dim();
  if (!m.level1.depends_on_theta && cfg.allow_fast_path) {
    if (fast_path) *fast_path = true;
    return FisherMatrix::zero(p, EstimateMethod::Analytic);
  }
  if (cfg.use_analytic_expectation && m.expected_obs_fisher_given_latent)
    return FisherMatrix(m.expected_obs_fisher_given_latent(theta.values),
                        EstimateMethod::Analytic);

  auto per_draw = [&](SplitRng& rng) -> MatrixXd {
    VectorXd w = m.level2.sample(theta.values, rng);
    if (cfg.use_analytic_fisher && m.level1.fisher) return m.level1.fisher(w, theta.values);
    auto ld = [&](const VectorXd& y, const VectorXd& th) {
      return m.level1.log_density(y, w, th);
    };
    auto sampler = [&](SplitRng& inner) { return m.level1.sample(w, theta.values, inner); };
    return numeric_conditional_fisher_stream(ld, sampler, theta, cfg, rng.split(0),
                                             cfg.n_inner)
        .entries();
  };
  McEstimate est =
      draw_expectation_stream(per_draw, root.split(kStreamObsGivenLatent), cfg.n_outer);
  if (rejected) *rejected += est.n_rejected;
  return repair_psd(est.value, est.stderrs, EstimateMethod::MonteCarlo, nullptr);
}

}  // namespace

FisherMatrix complete_fisher(const HierarchicalModel& m, const ParamPoint& theta,
                             const EstimatorConfig& cfg) {
  cfg.validate();
  SplitRng root(cfg.seed);
  FisherMatrix iw = latent_prior_fisher(m, theta, cfg, root);
  FisherMatrix eiy = obs_fisher_given_latent(m, theta, cfg, root, nullptr, nullptr);
  return add(iw, eiy);
}

FisherMatrix expected_conditional_latent_fisher(const HierarchicalModel& m,
                                                const ParamPoint& theta,
                                                const EstimatorConfig& cfg) {
  cfg.validate();
  if (cfg.use_analytic_expectation && m.expected_latent_fisher_given_obs)
    return FisherMatrix(m.expected_latent_fisher_given_obs(theta.values),
                        EstimateMethod::Analytic);
  SplitRng root(cfg.seed);
  auto g = [&](const VectorXd& y, SplitRng& rng) -> MatrixXd {
    if (cfg.use_analytic_fisher && m.complete_conditional.fisher)
      return m.complete_conditional.fisher(y, theta.values);
    auto ld = [&](const VectorXd& w, const VectorXd& th) {
      return m.complete_conditional.log_density(w, y, th);
    };
    auto sampler = [&](SplitRng& inner) {
      return m.complete_conditional.sample(y, theta.values, inner);
    };
    return numeric_conditional_fisher_stream(ld, sampler, theta, cfg, rng.split(0),
                                             cfg.n_inner)
        .entries();
  };
  McEstimate est = nested_expectation_stream(m, theta.values, g,
                                             root.split(kStreamLatentGivenObs), cfg.n_outer);
  return repair_psd(est.value, est.stderrs, EstimateMethod::MonteCarlo, nullptr);
}

DecompositionReport decompose_two_level(const HierarchicalModel& m, const ParamPoint& theta,
                                        const EstimatorConfig& cfg) {
  cfg.validate();
  if (theta.dim() != m.theta_dim)
    throw ConfigError("theta dimension does not match model " + m.name);

  DecompositionReport rep(theta.dim());
  rep.model = m.name;
  rep.theta = theta.values;
  rep.cfg_echo = cfg;

  SplitRng root(cfg.seed);
  rep.i_w = latent_prior_fisher(m, theta, cfg, root);
  rep.e_iy_given_w =
      obs_fisher_given_latent(m, theta, cfg, root, &rep.fast_path, &rep.n_rejected);
  rep.i_complete = add(rep.i_w, rep.e_iy_given_w);
  rep.e_iw_given_y = expected_conditional_latent_fisher(m, theta, cfg);

  MatrixXd diff = rep.i_complete.entries() - rep.e_iw_given_y.entries();
  MatrixXd se = (rep.i_complete.stderr_entries().array().square() +
                 rep.e_iw_given_y.stderr_entries().array().square())
                    .sqrt();
  {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (diff + diff.transpose()),
                                               Eigen::EigenvaluesOnly);
    rep.min_eigenvalue = es.eigenvalues().minCoeff();
  }
  EstimateMethod method = se.isZero(0.0) ? EstimateMethod::Analytic : EstimateMethod::MonteCarlo;
  rep.i_marginal = repair_psd(diff, se, method, &rep.psd_clamped);

  rep.identity_residual = (rep.i_marginal.entries() + rep.e_iw_given_y.entries() -
                           rep.i_complete.entries())
                              .cwiseAbs()
                              .maxCoeff();
  double budget = 3.0 * (se.size() ? se.maxCoeff() : 0.0) +
                  1e-12 * rep.i_complete.entries().cwiseAbs().maxCoeff();
  if (rep.identity_residual > budget)
    throw Error("decomposition identity violated: residual " +
                std::to_string(rep.identity_residual) + " exceeds " + std::to_string(budget));
  return rep;
}

FisherMatrix marginal_fisher(const HierarchicalModel& m, const ParamPoint& theta,
                             const EstimatorConfig& cfg) {
  return decompose_two_level(m, theta, cfg).i_marginal;
}

FisherMatrix decompose_multilevel(const std::vector<LevelSpec>& levels,
                                  const ParamPoint& theta, const EstimatorConfig& cfg) {
  cfg.validate();
  if (levels.size() < 2) throw ConfigError("a chain needs at least two levels");
  const int p = theta.dim();
  SplitRng root(cfg.seed);

  FisherMatrix total = FisherMatrix::zero(p, EstimateMethod::Analytic);
  for (std::size_t t = 0; t < levels.size(); ++t) {
    const LevelSpec& lv = levels[t];
    if (!lv.depends_on_theta) continue;  // exact zero contribution

    if (t == 0) {
      FisherMatrix term =
          (cfg.use_analytic_fisher && lv.fisher)
              ? FisherMatrix(lv.fisher({}, theta.values), EstimateMethod::Analytic)
              : numeric_conditional_fisher_stream(
                    [&](const VectorXd& x, const VectorXd& th) {
                      return lv.log_density(x, {}, th);
                    },
                    [&](SplitRng& rng) { return lv.sample({}, theta.values, rng); }, theta,
                    cfg, root.split(kStreamChainBase), cfg.n_outer);
      total = add(total, term);
      continue;
    }

    auto per_draw = [&, t](SplitRng& rng) -> MatrixXd {
      std::vector<VectorXd> given;
      given.reserve(t);
      for (std::size_t s = 0; s < t; ++s)
        given.push_back(levels[s].sample(given, theta.values, rng));
      if (cfg.use_analytic_fisher && lv.fisher) return lv.fisher(given, theta.values);
      auto ld = [&](const VectorXd& x, const VectorXd& th) {
        return lv.log_density(x, given, th);
      };
      auto sampler = [&](SplitRng& inner) { return lv.sample(given, theta.values, inner); };
      return numeric_conditional_fisher_stream(ld, sampler, theta, cfg, rng.split(0),
                                               cfg.n_inner)
          .entries();
    };
    McEstimate est =
        draw_expectation_stream(per_draw, root.split(kStreamChainBase + t), cfg.n_outer);
    total = add(total, repair_psd(est.value, est.stderrs, EstimateMethod::MonteCarlo, nullptr));
  }
  return total;
}

VectorXd interior_perturb(const Domain& d, const VectorXd& v) {
  VectorXd out = v;
  switch (d.kind) {
    case Domain::Kind::Positive:
      out *= 1.5;
      break;
    case Domain::Kind::Interval:
      for (int i = 0; i < out.size(); ++i) out[i] = d.lo + 0.75 * (v[i] - d.lo);
      break;
    case Domain::Kind::SimplexFree:
      out *= 0.9;
      break;
  }
  return out;
}

void validate_model(const HierarchicalModel& m) {
  if (m.theta_dim < 1 || m.latent_dim < 1 || m.obs_dim < 1)
    throw ConfigError("model " + m.name + ": dimensions must be positive");
  if (m.reference_theta.size() != m.theta_dim)
    throw ConfigError("model " + m.name + ": reference theta has wrong dimension");
  ParamPoint ref(m.reference_theta, m.domain);

  SplitRng rng(0x5eedu);
  VectorXd w = m.level2.sample(ref.values, rng);
  if (w.size() != m.latent_dim)
    throw ConfigError("model " + m.name + ": latent sampler dimension mismatch");
  VectorXd y = m.level1.sample(w, ref.values, rng);
  if (y.size() != m.obs_dim)
    throw ConfigError("model " + m.name + ": observation sampler dimension mismatch");

  if (!std::isfinite(m.level2.log_density(w, ref.values)) ||
      !std::isfinite(m.level1.log_density(y, w, ref.values)) ||
      !std::isfinite(m.complete_conditional.log_density(w, y, ref.values)))
    throw ConfigError("model " + m.name + ": non-finite log-density at a reference draw");

  if (!m.level1.depends_on_theta) {
    VectorXd other = interior_perturb(m.domain, ref.values);
    double a = m.level1.log_density(y, w, ref.values);
    double b = m.level1.log_density(y, w, other);
    double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
    if (std::fabs(a - b) > 1e-12 * scale)
      throw ConfigError("model " + m.name +
                        ": level 1 is flagged theta-free but its log-density moved");
  }
}

}  // namespace hifisher
