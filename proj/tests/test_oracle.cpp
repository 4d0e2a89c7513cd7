#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "hifisher/core.hpp"
#include "hifisher/models.hpp"
#include "hifisher/oracle.hpp"

using namespace hifisher;

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double normal_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return std::exp(-0.5 * (kLog2Pi + std::log(var) + d * d / var));
}

VectorXd vec1(double v) { return VectorXd::Constant(1, v); }

}  // namespace

TEST_CASE("discrete joints: construction, marginals, reproducibility") {
  MatrixXd tbl(2, 2);
  tbl << 0.3, 0.2, 0.1, 0.4;
  DiscreteJoint j(tbl);
  CHECK(j.obs_marginal()[0] == doctest::Approx(0.5));
  CHECK(j.latent_marginal()[1] == doctest::Approx(0.6));

  MatrixXd neg = tbl;
  neg(0, 0) = -0.1;
  neg(1, 1) = 0.8;
  CHECK_THROWS_AS(DiscreteJoint{neg}, ConfigError);
  MatrixXd off = tbl;
  off(0, 0) = 0.4;
  CHECK_THROWS_AS(DiscreteJoint{off}, ConfigError);

  SplitRng a(5), b(5);
  DiscreteJoint ra = DiscreteJoint::random(8, 8, a);
  DiscreteJoint rb = DiscreteJoint::random(8, 8, b);
  CHECK((ra.p - rb.p).cwiseAbs().maxCoeff() == 0.0);
  CHECK(ra.p.sum() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(ra.p.minCoeff() > 0.0);
}

TEST_CASE("kl chain rule on hand-checkable tables") {
  SUBCASE("identical joints: everything vanishes") {
    SplitRng rng(8);
    DiscreteJoint p = DiscreteJoint::random(4, 4, rng);
    KlChainReport rep = discrete_kl_chain_check(p, p);
    CHECK(rep.finite);
    CHECK(std::fabs(rep.joint_kl) <= 1e-15);
    CHECK(rep.residual_obs <= 1e-15);
    CHECK(rep.residual_latent <= 1e-15);
  }

  SUBCASE("2x2 table against the direct sum") {
    MatrixXd pt(2, 2), qt(2, 2);
    pt << 0.3, 0.2, 0.1, 0.4;
    qt << 0.25, 0.25, 0.25, 0.25;
    DiscreteJoint p(pt), q(qt);
    double direct = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) direct += pt(i, j) * std::log(pt(i, j) / qt(i, j));
    KlChainReport rep = discrete_kl_chain_check(p, q);
    CHECK(rep.finite);
    CHECK(rep.joint_kl == doctest::Approx(direct).epsilon(1e-14));
    CHECK(rep.obs_route == doctest::Approx(direct).epsilon(1e-13));
    CHECK(rep.latent_route == doctest::Approx(direct).epsilon(1e-13));
    CHECK(rep.residual_obs <= 1e-14);
    CHECK(rep.residual_latent <= 1e-14);
  }

  SUBCASE("support violation is consistently infinite, not an error") {
    MatrixXd pt(2, 2), qt(2, 2);
    pt << 0.25, 0.25, 0.25, 0.25;
    qt << 0.5, 0.5, 0.0, 0.0;
    KlChainReport rep = discrete_kl_chain_check(DiscreteJoint(pt), DiscreteJoint(qt));
    CHECK(!rep.finite);
    CHECK(rep.joint_kl == std::numeric_limits<double>::infinity());
    CHECK(rep.residual_obs == 0.0);
    CHECK(rep.residual_latent == 0.0);
  }

  SUBCASE("size one degenerates to zero everywhere") {
    MatrixXd one = MatrixXd::Constant(1, 1, 1.0);
    KlChainReport rep = discrete_kl_chain_check(DiscreteJoint(one), DiscreteJoint(one));
    CHECK(rep.finite);
    CHECK(rep.joint_kl == 0.0);
    CHECK(rep.residual_obs == 0.0);
  }
}

TEST_CASE("a long random sweep keeps both residuals at solver precision") {
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    SplitRng rng = SplitRng(424242).split(static_cast<std::uint64_t>(i));
    DiscreteJoint p = DiscreteJoint::random(8, 8, rng);
    DiscreteJoint q = DiscreteJoint::random(8, 8, rng);
    KlChainReport rep = discrete_kl_chain_check(p, q);
    REQUIRE(rep.finite);
    worst = std::max({worst, rep.residual_obs, rep.residual_latent});
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("model joint table matches the hand product") {
  HierarchicalModel m = make_discrete_mixture({{0.6, 0.4}, {0.3, 0.7}});
  DiscreteJoint j = discrete_joint_of(m, vec1(0.5));
  REQUIRE(j.p.rows() == 2);  // observation support
  REQUIRE(j.p.cols() == 2);  // labels
  CHECK(j.p(0, 0) == doctest::Approx(0.5 * 0.6).epsilon(1e-14));
  CHECK(j.p(0, 1) == doctest::Approx(0.5 * 0.3).epsilon(1e-14));
  CHECK(j.p(1, 0) == doctest::Approx(0.5 * 0.4).epsilon(1e-14));
  CHECK(j.p(1, 1) == doctest::Approx(0.5 * 0.7).epsilon(1e-14));

  HierarchicalModel g = make_gaussian2();
  CHECK_THROWS_AS(discrete_joint_of(g, vec1(1.0)), ConfigError);
}

TEST_CASE("latent quadrature reproduces known marginals") {
  SUBCASE("gaussian2: normal with summed variances") {
    const double mu = 0.4, delta = 1.3;
    HierarchicalModel m = make_gaussian2(mu, delta);
    m.marginal_log_density = nullptr;  // force the integration route
    for (double phi : {0.6, 2.0}) {
      for (double y : {-0.5, 1.7}) {
        const double got = marginal_density_quadrature(m, vec1(y), vec1(phi));
        CHECK(got == doctest::Approx(normal_pdf(y, mu, 1.0 / phi + 1.0 / delta))
                         .epsilon(1e-8));
      }
    }
  }

  SUBCASE("student-t: positive latent integrated in log space") {
    HierarchicalModel m = make_studentt();
    const double got = marginal_density_quadrature(m, vec1(0.0), vec1(4.0));
    CHECK(got == doctest::Approx(0.375).epsilon(1e-8));
  }

  SUBCASE("hyperbolic: matches the closed-form marginal") {
    HierarchicalModel m = make_hyperbolic();
    const double got = marginal_density_quadrature(m, vec1(0.0), vec1(1.0));
    CHECK(got == doctest::Approx(0.14280397618918).epsilon(1e-7));
  }

  SUBCASE("labels: exact sum") {
    HierarchicalModel m = make_discrete_mixture({{0.6, 0.4}, {0.3, 0.7}});
    CHECK(marginal_density_quadrature(m, vec1(0.0), vec1(0.5)) ==
          doctest::Approx(0.45).epsilon(1e-14));
  }
}

TEST_CASE("score-variance oracle on closed-form marginals") {
  HierarchicalModel m = make_gaussian2();
  EstimatorConfig cfg;
  for (double phi : {0.5, 1.7}) {
    FisherMatrix f = score_variance_fisher(m, m.param(phi), cfg);
    CHECK(f.scalar() == doctest::Approx(gaussian2_marginal_info(phi)).epsilon(1e-5));
  }
}

TEST_CASE("kl-hessian oracle on closed-form marginals") {
  HierarchicalModel m = make_gaussian2();
  EstimatorConfig cfg;
  for (double phi : {0.5, 1.7}) {
    FisherMatrix f = kl_hessian_fisher(m, m.param(phi), cfg);
    CHECK(f.scalar() == doctest::Approx(gaussian2_marginal_info(phi)).epsilon(1e-4));
  }
}

TEST_CASE("the two oracles agree tightly on the student-t") {
  HierarchicalModel m = make_studentt();
  EstimatorConfig cfg;
  const ParamPoint t = m.param(2.0);
  const double sv = score_variance_fisher(m, t, cfg).scalar();
  const double kh = kl_hessian_fisher(m, t, cfg).scalar();
  CHECK(sv == doctest::Approx(0.0608662999092).epsilon(2e-3));
  CHECK(std::fabs(sv - kh) / sv < 1e-3);
}

TEST_CASE("oracles also cover the discrete mixture by exact sums") {
  HierarchicalModel m = make_discrete_mixture({{0.6, 0.4}, {0.3, 0.7}});
  EstimatorConfig cfg;
  const ParamPoint t = m.param(0.5);
  CHECK(score_variance_fisher(m, t, cfg).scalar() ==
        doctest::Approx(4.0 / 11.0).epsilon(1e-5));
  CHECK(kl_hessian_fisher(m, t, cfg).scalar() ==
        doctest::Approx(4.0 / 11.0).epsilon(1e-4));
}

TEST_CASE("oracle entry points refuse what they cannot honestly check") {
  HierarchicalModel lasso = make_lasso(2, 1.0);
  EstimatorConfig cfg;
  CHECK_THROWS_AS(score_variance_fisher(lasso, lasso.param(1.0), cfg), ConfigError);
  CHECK_THROWS_AS(kl_hessian_fisher(lasso, lasso.param(1.0), cfg), ConfigError);
  try {
    score_variance_fisher(lasso, lasso.param(1.0), cfg);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("exact algebra") != std::string::npos);
  }
}

TEST_CASE("oracle rejects probe steps that would leave the domain") {
  // theta this close to the boundary cannot host the finite-difference
  // probes of the score oracle.
  HierarchicalModel m = make_gaussian2();
  EstimatorConfig cfg;
  cfg.fd_step = 1e-2;
  CHECK_THROWS_AS(score_variance_fisher(m, m.param(1e-3), cfg), Error);
}
