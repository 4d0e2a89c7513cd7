#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "hifisher/core.hpp"
#include "hifisher/models.hpp"
#include "hifisher/special.hpp"

using namespace hifisher;

namespace {

// Closed-form pieces of the two-level gaussian decomposition in the
// precision parameter, delta = 1: used as an independent yardstick.
double g2_iw(double phi) { return 0.5 / (phi * phi); }
double g2_expected_cond(double phi) {
  const double s = phi + 1.0;
  return (phi + 2.0) / (2.0 * phi * s * s);
}

}  // namespace

TEST_CASE("gaussian decomposition on the closed-form path") {
  HierarchicalModel m = make_gaussian2();
  EstimatorConfig cfg;
  for (double phi : {0.3, 1.0, 2.0, 7.5}) {
    DecompositionReport rep = decompose_two_level(m, m.param(phi), cfg);
    CHECK(rep.fast_path);
    CHECK(rep.i_w.exact());
    CHECK(rep.i_w.scalar() == doctest::Approx(g2_iw(phi)).epsilon(1e-14));
    CHECK(rep.e_iy_given_w.scalar() == 0.0);
    CHECK(rep.i_complete.scalar() == doctest::Approx(g2_iw(phi)).epsilon(1e-14));
    CHECK(rep.e_iw_given_y.scalar() ==
          doctest::Approx(g2_expected_cond(phi)).epsilon(1e-14));
    CHECK(rep.i_marginal.scalar() ==
          doctest::Approx(gaussian2_marginal_info(phi)).epsilon(1e-12));
    CHECK(rep.identity_residual <= 1e-15 * rep.i_complete.scalar() + 1e-300);
    CHECK(!rep.psd_clamped);
    CHECK(rep.n_rejected == 0);
  }
}

TEST_CASE("forcing the numeric route reproduces the closed forms") {
  HierarchicalModel m = make_gaussian2();
  EstimatorConfig cfg;
  cfg.use_analytic_expectation = false;
  cfg.use_analytic_fisher = false;
  cfg.allow_fast_path = false;
  cfg.n_outer = 6000;
  cfg.n_inner = 40;
  cfg.seed = 23;

  const double phi = 1.6;
  DecompositionReport rep = decompose_two_level(m, m.param(phi), cfg);
  CHECK(!rep.fast_path);

  // Level 1 never mentions theta, so even the finite-difference stencil
  // sees identical values at every probe: the term is exactly zero.
  CHECK(rep.e_iy_given_w.scalar() == 0.0);

  // The latent prior is a normal in the precision: its per-draw
  // curvature is constant, so only stencil rounding separates the
  // numeric I_w from 1/(2 phi^2).
  CHECK(rep.i_w.scalar() == doctest::Approx(g2_iw(phi)).epsilon(1e-5));

  const double tol =
      4.0 * rep.e_iw_given_y.scalar_stderr() + 1e-6 * g2_expected_cond(phi);
  CHECK(std::fabs(rep.e_iw_given_y.scalar() - g2_expected_cond(phi)) < tol);
  CHECK(std::fabs(rep.i_marginal.scalar() - gaussian2_marginal_info(phi)) <
        4.0 * rep.i_marginal.scalar_stderr() + 1e-6);
  CHECK(rep.e_iw_given_y.scalar_stderr() > 0.0);
}

TEST_CASE("student-t decomposition at the frozen reference point") {
  HierarchicalModel m = make_studentt();
  EstimatorConfig cfg;
  DecompositionReport rep = decompose_two_level(m, m.param(2.0), cfg);
  CHECK(rep.fast_path);
  CHECK(rep.i_w.scalar() ==
        doctest::Approx(0.25 * trigamma(1.0) - 0.25).epsilon(1e-12));
  CHECK(rep.e_iw_given_y.scalar() ==
        doctest::Approx(0.100367216802837).epsilon(1e-12));
  CHECK(rep.i_marginal.scalar() == doctest::Approx(0.0608662999092).epsilon(1e-10));
  CHECK(rep.i_marginal.scalar() ==
        doctest::Approx(studentt_marginal_info(2.0)).epsilon(1e-13));
}

TEST_CASE("reparametrizing the gaussian latent scale transforms the information") {
  // With v = 1/phi, I_v(v) = I_phi(1/v) / v^4: the prior is invariant.
  for (double v : {0.3, 1.0, 2.5}) {
    for (double delta : {0.7, 1.0}) {
      CHECK(gaussian2_variance_marginal_info(v, delta) ==
            doctest::Approx(gaussian2_marginal_info(1.0 / v, delta) / (v * v * v * v))
                .epsilon(1e-12));
    }
  }

  HierarchicalModel mv = make_gaussian2_variance();
  EstimatorConfig cfg;
  const double v = 0.8;
  DecompositionReport rep = decompose_two_level(mv, mv.param(v), cfg);
  CHECK(rep.i_marginal.scalar() ==
        doctest::Approx(gaussian2_variance_marginal_info(v)).epsilon(1e-12));
}

TEST_CASE("three-level chain matches the grouped two-level model") {
  for (int p : {1, 3}) {
    const double sigma = 1.0;
    std::vector<LevelSpec> chain = lasso_three_level_chain(p, sigma);
    REQUIRE(chain.size() == 3);
    CHECK(chain[0].depends_on_theta);
    CHECK(!chain[1].depends_on_theta);
    CHECK(!chain[2].depends_on_theta);

    EstimatorConfig cfg;
    for (double theta : {0.6, 2.0, 5.0}) {
      const ParamPoint t = ParamPoint::scalar(theta, Domain::positive());
      FisherMatrix chained = decompose_multilevel(chain, t, cfg);
      CHECK(chained.scalar() ==
            doctest::Approx(2.0 * p / (theta * theta)).epsilon(1e-12));

      // Grouping the two inner levels into the two-level registration
      // must not change the complete-data information.
      HierarchicalModel grouped = make_lasso(p, sigma);
      FisherMatrix direct = complete_fisher(grouped, grouped.param(theta), cfg);
      CHECK(chained.scalar() == doctest::Approx(direct.scalar()).epsilon(1e-12));
    }
  }
}

TEST_CASE("multilevel chain needs at least two levels") {
  std::vector<LevelSpec> chain = lasso_three_level_chain(1, 1.0);
  chain.resize(1);
  EstimatorConfig cfg;
  CHECK_THROWS_AS(decompose_multilevel(
                      chain, ParamPoint::scalar(1.0, Domain::positive()), cfg),
                  ConfigError);
}

TEST_CASE("model registration rejects a dishonest theta-free flag") {
  HierarchicalModel m = make_hyperbolic();
  m.level1.depends_on_theta = false;  // level 1 mean is theta * w: a lie
  CHECK_THROWS_AS(validate_model(m), ConfigError);
}

TEST_CASE("theta dimension mismatches are refused up front") {
  HierarchicalModel m = make_gaussian2();
  EstimatorConfig cfg;
  VectorXd two(2);
  two << 1.0, 2.0;
  CHECK_THROWS_AS(decompose_two_level(m, ParamPoint(two, Domain::positive()), cfg),
                  ConfigError);
}

TEST_CASE("domain membership is enforced at param construction") {
  HierarchicalModel m = make_gaussian2();
  CHECK_THROWS_AS(m.param(-1.0), DomainError);
  CHECK_THROWS_AS(m.param(0.0), DomainError);
}

TEST_CASE("decomposition is bit-identical for a fixed seed") {
  HierarchicalModel m = make_hyperbolic();
  EstimatorConfig cfg;
  cfg.n_outer = 500;
  cfg.seed = 31;
  DecompositionReport a = decompose_two_level(m, m.param(1.2), cfg);
  DecompositionReport b = decompose_two_level(m, m.param(1.2), cfg);
  CHECK(a.i_marginal.scalar() == b.i_marginal.scalar());
  CHECK(a.i_marginal.scalar_stderr() == b.i_marginal.scalar_stderr());
  CHECK(a.e_iw_given_y.scalar() == b.e_iw_given_y.scalar());

  cfg.seed = 32;
  DecompositionReport c = decompose_two_level(m, m.param(1.2), cfg);
  CHECK(c.e_iw_given_y.scalar() != a.e_iw_given_y.scalar());
}

TEST_CASE("config validation gates every entry point") {
  HierarchicalModel m = make_gaussian2();
  EstimatorConfig cfg;
  cfg.n_outer = 10;
  CHECK_THROWS_AS(decompose_two_level(m, m.param(1.0), cfg), ConfigError);
  cfg = EstimatorConfig{};
  cfg.quad_points = 20;
  CHECK_THROWS_AS(decompose_two_level(m, m.param(1.0), cfg), ConfigError);
}
