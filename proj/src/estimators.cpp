#include "hifisher/estimators.hpp"

#include <cmath>
#include <string>

namespace hifisher {

namespace {

constexpr double kRejectBudget = 0.01;  // tolerated share of discarded draws
constexpr double kFdFloor = 1e-6;       // absolute finite-difference step floor
constexpr int kMaxHalvings = 8;

// Entrywise running mean / M2 (Welford); combines exactly like the
// two-pass formulas but in one sweep.
struct Accumulator {
  MatrixXd mean, m2;
  long n = 0;

  explicit Accumulator(int r, int c) : mean(MatrixXd::Zero(r, c)), m2(MatrixXd::Zero(r, c)) {}

  void add(const MatrixXd& x) {
    ++n;
    MatrixXd delta = x - mean;
    mean += delta / double(n);
    m2 += delta.cwiseProduct(x - mean);
  }

  MatrixXd stderrs() const {
    if (n < 2) return MatrixXd::Zero(mean.rows(), mean.cols());
    return (m2 / (double(n) * double(n - 1))).cwiseSqrt();
  }
};

McEstimate run_expectation(const std::function<MatrixXd(SplitRng&)>& eval, SplitRng base,
                           long n_draws, const char* what) {
  if (n_draws < 1) throw ConfigError("expectation needs at least one draw");
  Accumulator* acc = nullptr;
  Accumulator storage(1, 1);
  long rejected = 0;
  bool first = true;
  for (long i = 0; i < n_draws; ++i) {
    SplitRng rng = base.split(std::uint64_t(i));
    MatrixXd v = eval(rng);
    if (!v.allFinite()) {
      ++rejected;
      continue;
    }
    if (first) {
      storage = Accumulator(int(v.rows()), int(v.cols()));
      acc = &storage;
      first = false;
    }
    acc->add(v);
  }
  long used = n_draws - rejected;
  if (used == 0 || double(rejected) > kRejectBudget * double(used))
    throw TooManyRejections(std::string(what) + ": rejected " + std::to_string(rejected) +
                            " of " + std::to_string(n_draws) + " draws");
  McEstimate out;
  out.value = acc->mean;
  out.stderrs = acc->stderrs();
  out.n_used = used;
  out.n_rejected = rejected;
  return out;
}

}  // namespace

McEstimate draw_expectation_stream(const std::function<MatrixXd(SplitRng&)>& eval,
                                   SplitRng base, long n_draws) {
  return run_expectation(eval, base, n_draws, "draw_expectation");
}

McEstimate mc_expectation_stream(const std::function<VectorXd(SplitRng&)>& sampler,
                                 const std::function<MatrixXd(const VectorXd&)>& f,
                                 SplitRng base, long n_draws) {
  return run_expectation(
      [&](SplitRng& rng) { return f(sampler(rng)); }, base, n_draws, "mc_expectation");
}

McEstimate mc_expectation(const std::function<VectorXd(SplitRng&)>& sampler,
                          const std::function<MatrixXd(const VectorXd&)>& f,
                          const EstimatorConfig& cfg) {
  cfg.validate();
  return mc_expectation_stream(sampler, f, SplitRng(cfg.seed), cfg.n_outer);
}

McEstimate nested_expectation_stream(
    const HierarchicalModel& m, const VectorXd& theta,
    const std::function<MatrixXd(const VectorXd& y, SplitRng&)>& g, SplitRng base,
    long n_draws) {
  return run_expectation(
      [&](SplitRng& rng) {
        VectorXd w = m.level2.sample(theta, rng);
        VectorXd y = m.level1.sample(w, theta, rng);
        return g(y, rng);
      },
      base, n_draws, "nested_expectation");
}

McEstimate nested_expectation(const HierarchicalModel& m, const ParamPoint& theta,
                              const std::function<MatrixXd(const VectorXd& y, SplitRng&)>& g,
                              const EstimatorConfig& cfg) {
  cfg.validate();
  return nested_expectation_stream(m, theta.values, g, SplitRng(cfg.seed), cfg.n_outer);
}

VectorXd fd_steps(const ParamPoint& theta, const EstimatorConfig& cfg) {
  const VectorXd& t = theta.values;
  VectorXd h(t.size());
  for (int i = 0; i < t.size(); ++i)
    h[i] = std::max(cfg.fd_step * std::fabs(t[i]), kFdFloor);

  // The widest excursion any stencil takes along coordinate i is 2 h_i,
  // possibly combined with 2 h_j sideways; shrink until all of those
  // stay interior.
  auto stencil_ok = [&](const VectorXd& steps) {
    for (int i = 0; i < t.size(); ++i)
      for (int j = 0; j < t.size(); ++j) {
        VectorXd probe = t;
        probe[i] += 2.0 * steps[i];
        if (i != j) probe[j] += 2.0 * steps[j];
        if (!theta.domain.contains(probe)) return false;
        probe = t;
        probe[i] -= 2.0 * steps[i];
        if (i != j) probe[j] -= 2.0 * steps[j];
        if (!theta.domain.contains(probe)) return false;
      }
    return true;
  };

  for (int k = 0; k <= kMaxHalvings; ++k) {
    if (stencil_ok(h)) return h;
    h *= 0.5;
  }
  throw StepUnderflow("finite-difference stencil cannot fit inside the domain at this point");
}

FisherMatrix repair_psd(const MatrixXd& raw, const MatrixXd& stderrs, EstimateMethod method,
                        bool* clamped) {
  MatrixXd sym = 0.5 * (raw + raw.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym);
  VectorXd ev = es.eigenvalues();
  double se_scale = stderrs.size() ? stderrs.maxCoeff() : 0.0;
  // Exact estimates still carry rounding of order eps * scale.
  double tol = 3.0 * se_scale + 1e-12 * sym.cwiseAbs().maxCoeff();
  bool any = false;
  for (int i = 0; i < ev.size(); ++i) {
    if (ev[i] < -tol)
      throw NonPositiveInformation("eigenvalue " + std::to_string(ev[i]) +
                                   " below -3 stderr (" + std::to_string(-tol) + ")");
    if (ev[i] < 0.0) {
      ev[i] = 0.0;
      any = true;
    }
  }
  if (clamped) *clamped = any;
  MatrixXd fixed = any ? MatrixXd(es.eigenvectors() * ev.asDiagonal() *
                                  es.eigenvectors().transpose())
                       : sym;
  return FisherMatrix(fixed, method, stderrs);
}

FisherMatrix numeric_conditional_fisher_stream(
    const std::function<double(const VectorXd& x, const VectorXd& theta)>& log_density,
    const std::function<VectorXd(SplitRng&)>& sampler_at_theta, const ParamPoint& theta,
    const EstimatorConfig& cfg, SplitRng base, long n_draws) {
  const VectorXd& t = theta.values;
  const int p = int(t.size());
  const VectorXd h = fd_steps(theta, cfg);

  auto hessian_of_minus_log = [&](const VectorXd& x) {
    MatrixXd fish(p, p);
    auto ld = [&](const VectorXd& th) { return log_density(x, th); };
    const double f0 = ld(t);
    for (int i = 0; i < p; ++i) {
      VectorXd th = t;
      th[i] = t[i] + h[i];
      double fp = ld(th);
      th[i] = t[i] - h[i];
      double fm = ld(th);
      th[i] = t[i] + 2.0 * h[i];
      double fpp = ld(th);
      th[i] = t[i] - 2.0 * h[i];
      double fmm = ld(th);
      // Fourth-order central second difference, assembled from offsets
      // against f0 so the common level cancels exactly. A density that
      // never reads theta then yields a bitwise-zero stencil instead of
      // rounding residue amplified by 1/h^2.
      const double d1 = fp - f0;
      const double d2 = fm - f0;
      const double d3 = fpp - f0;
      const double d4 = fmm - f0;
      fish(i, i) = -(16.0 * (d1 + d2) - (d3 + d4)) / (12.0 * h[i] * h[i]);
      for (int j = i + 1; j < p; ++j) {
        VectorXd q = t;
        q[i] = t[i] + h[i];
        q[j] = t[j] + h[j];
        double fa = ld(q);
        q[j] = t[j] - h[j];
        double fb = ld(q);
        q[i] = t[i] - h[i];
        q[j] = t[j] + h[j];
        double fc = ld(q);
        q[j] = t[j] - h[j];
        double fd = ld(q);
        // Paired differences for the same exact-cancellation property.
        double mixed = ((fa - fb) + (fd - fc)) / (4.0 * h[i] * h[j]);
        fish(i, j) = fish(j, i) = -mixed;
      }
    }
    return fish;
  };

  McEstimate est = run_expectation(
      [&](SplitRng& rng) { return hessian_of_minus_log(sampler_at_theta(rng)); }, base,
      n_draws, "numeric_conditional_fisher");
  return repair_psd(est.value, est.stderrs, EstimateMethod::FiniteDifference, nullptr);
}

FisherMatrix numeric_conditional_fisher(
    const std::function<double(const VectorXd& x, const VectorXd& theta)>& log_density,
    const std::function<VectorXd(SplitRng&)>& sampler_at_theta, const ParamPoint& theta,
    const EstimatorConfig& cfg) {
  cfg.validate();
  return numeric_conditional_fisher_stream(log_density, sampler_at_theta, theta, cfg,
                                           SplitRng(cfg.seed), cfg.n_outer);
}

}  // namespace hifisher
