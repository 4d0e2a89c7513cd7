#include "hifisher/priors.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>

#include <Eigen/Eigenvalues>

namespace hifisher {

namespace {

// Fit windows never exceed the stated fraction of the grid, but always
// include at least this many points when the grid has them.
constexpr int kMinTailPoints = 8;
constexpr double kTailFraction = 0.25;
constexpr double kMaxUsableSe = 0.15;

std::uint64_t per_point_seed(std::uint64_t root, std::size_t i) {
  return SplitRng(root).split(0x9d0b5ull + i).next_u64();
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double acc = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    acc += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
  }
  return acc;
}

void require_psd_symmetric(const MatrixXd& a, const char* which) {
  if (a.rows() != a.cols()) throw ConfigError("minkowski check needs square matrices");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw ConfigError(std::string("minkowski check: matrix ") + which +
                      " is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(a, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10 * scale) {
    throw NonPositiveInformation(std::string("minkowski check: matrix ") + which +
                                 " has a negative eigenvalue");
  }
}

// Boundary classification shared by both ends. `finite_boundary` selects
// the integrability rule: near a finite edge the local exponent must
// exceed -1; toward infinity it must fall below -1.
// Exponent -1 exactly still diverges (logarithmically) at either kind of
// edge, and a noise-free grid fits a pure power law only to rounding, so
// the conclusive tests carry a small absolute allowance around -1. Inside
// that band no finite tail correction is meaningful anyway: the integrable
// correction would scale like 1/|s + 1|.
constexpr double kBoundarySlack = 1e-9;

void classify_tail(TailFit& fit, bool finite_boundary, double edge_density,
                   double edge_coord) {
  fit.integrable = false;
  fit.inconclusive = true;
  if (!fit.usable || fit.exponent_se > kMaxUsableSe) return;
  const double s = fit.exponent, se = fit.exponent_se;
  if (finite_boundary) {
    if (s + 3.0 * se <= -1.0 + kBoundarySlack) {
      fit.inconclusive = false;  // divergent edge
    } else if (s - 3.0 * se > -1.0 + kBoundarySlack) {
      fit.integrable = true;
      fit.inconclusive = false;
      fit.correction = edge_density * edge_coord / (s + 1.0);
    }
  } else {
    if (s - 3.0 * se >= -1.0 - kBoundarySlack) {
      fit.inconclusive = false;  // tail too fat to integrate
    } else if (s + 3.0 * se < -1.0 - kBoundarySlack) {
      fit.integrable = true;
      fit.inconclusive = false;
      fit.correction = edge_density * edge_coord / (-s - 1.0);
    }
  }
}

}  // namespace

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = spec.find(':', pos);
    parts.push_back(spec.substr(pos, next - pos));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  if (parts.size() < 3 || parts.size() > 4) {
    throw ConfigError("grid spec must be min:max:count[:log], got '" + spec + "'");
  }
  bool log_spacing = false;
  if (parts.size() == 4) {
    if (parts[3] != "log") {
      throw ConfigError("grid spec suffix must be 'log', got '" + parts[3] + "'");
    }
    log_spacing = true;
  }
  double lo, hi;
  long count;
  try {
    std::size_t used = 0;
    lo = std::stod(parts[0], &used);
    if (used != parts[0].size()) throw std::invalid_argument(parts[0]);
    hi = std::stod(parts[1], &used);
    if (used != parts[1].size()) throw std::invalid_argument(parts[1]);
    count = std::stol(parts[2], &used);
    if (used != parts[2].size()) throw std::invalid_argument(parts[2]);
  } catch (const std::exception&) {
    throw ConfigError("grid spec must be numeric min:max:count[:log], got '" + spec +
                      "'");
  }
  if (!(lo < hi)) throw ConfigError("grid spec needs min < max");
  if (count < 2 || count > 2000000) throw ConfigError("grid count must be in [2, 2e6]");
  if (log_spacing && !(lo > 0.0)) throw ConfigError("log grids need min > 0");

  std::vector<double> out(static_cast<std::size_t>(count));
  if (log_spacing) {
    const double ratio = std::log(hi / lo);
    for (long i = 0; i < count; ++i) {
      out[i] = lo * std::exp(ratio * double(i) / double(count - 1));
    }
  } else {
    for (long i = 0; i < count; ++i) {
      out[i] = lo + (hi - lo) * double(i) / double(count - 1);
    }
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

std::vector<VectorXd> simplex_interior_grid(int p, int n) {
  if (p < 1) throw ConfigError("simplex grid needs p >= 1");
  if (n < p + 2) throw ConfigError("simplex grid needs depth n >= p + 2");
  std::vector<VectorXd> out;
  VectorXd cur(p);
  // Depth-first over compositions with every part >= 1 and sum <= n - 1.
  std::function<void(int, int)> walk = [&](int j, int used) {
    if (j == p) {
      out.push_back(cur / double(n));
      return;
    }
    const int remaining_min = p - j - 1;  // parts still needing >= 1 each
    for (int i = 1; used + i + remaining_min <= n - 1; ++i) {
      cur[j] = i;
      walk(j + 1, used + i);
    }
  };
  walk(0, 0);
  return out;
}

PriorGrid jeffreys_grid(const HierarchicalModel& m, const std::vector<VectorXd>& thetas,
                        const EstimatorConfig& cfg, int n_threads) {
  cfg.validate();
  if (thetas.empty()) throw ConfigError("jeffreys_grid: empty grid");
  if (n_threads < 1) throw ConfigError("jeffreys_grid: n_threads must be >= 1");

  PriorGrid grid;
  grid.points.reserve(thetas.size());
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    grid.points.emplace_back(m.theta_dim);
  }

  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;

  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= thetas.size()) return;
      try {
        EstimatorConfig c = cfg;
        c.seed = per_point_seed(cfg.seed, i);
        DecompositionReport rep = decompose_two_level(m, m.param(thetas[i]), c);
        PriorPoint& pt = grid.points[i];
        pt.theta = thetas[i];
        pt.jeffreys = rep.i_marginal.sqrt_det();
        pt.jeffreys_stderr = rep.i_marginal.sqrt_det_stderr();
        pt.upper_bound = rep.i_complete.sqrt_det();
        pt.upper_bound_stderr = rep.i_complete.sqrt_det_stderr();
        pt.report = std::move(rep);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(thetas.size());
        return;
      }
    }
  };

  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const int spawn = static_cast<int>(
        std::min<std::size_t>(static_cast<std::size_t>(n_threads), thetas.size()));
    pool.reserve(spawn);
    for (int t = 0; t < spawn; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return grid;
}

MinkowskiReport minkowski_check(const MatrixXd& a, const MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ConfigError("minkowski check needs equally sized matrices");
  }
  const int n = static_cast<int>(a.rows());
  if (n < 2) throw ConfigError("minkowski check is stated for n >= 2");
  require_psd_symmetric(a, "A");
  require_psd_symmetric(b, "B");

  const double det_a = std::max(a.determinant(), 0.0);
  const double det_b = std::max(b.determinant(), 0.0);
  const double det_ab = std::max((a + b).determinant(), 0.0);

  MinkowskiReport rep;
  rep.lhs_root_n = std::pow(det_ab, 1.0 / n);
  rep.rhs_root_n = std::pow(det_a, 1.0 / n) + std::pow(det_b, 1.0 / n);
  rep.slack_root_n = rep.lhs_root_n - rep.rhs_root_n;
  rep.lhs_sqrt = std::sqrt(det_ab);
  rep.rhs_sqrt = std::sqrt(det_a) + std::sqrt(det_b);
  rep.slack_sqrt = rep.lhs_sqrt - rep.rhs_sqrt;
  rep.holds_root_n = rep.lhs_root_n >= rep.rhs_root_n;
  rep.holds_sqrt = rep.lhs_sqrt >= rep.rhs_sqrt;
  return rep;
}

DominanceReport envelope_properness_check(const PriorGrid& grid) {
  DominanceReport rep;
  for (const PriorPoint& pt : grid.points) {
    const double allowance =
        3.0 * std::hypot(pt.jeffreys_stderr, pt.upper_bound_stderr) +
        1e-12 * std::max(1.0, pt.upper_bound);
    const double viol = pt.jeffreys - pt.upper_bound - allowance;
    if (viol > rep.max_violation) rep.max_violation = viol;
    if (viol > 0.0) rep.holds = false;
  }
  return rep;
}

TailFit fit_power_tail(const std::vector<double>& x, const std::vector<double>& y) {
  TailFit fit;
  if (x.size() != y.size()) throw ConfigError("tail fit needs equal length vectors");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(x[i]) && std::isfinite(y[i])) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  const std::size_t n = lx.size();
  if (n < 4) return fit;

  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= double(n);
  my /= double(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) return fit;
  const double slope = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ly[i] - my - slope * (lx[i] - mx);
    rss += r * r;
  }
  fit.exponent = slope;
  fit.exponent_se = std::sqrt(std::max(rss, 0.0) / double(n - 2) / sxx);
  fit.usable = true;
  return fit;
}

PropernessReport properness_diagnostic(const std::vector<double>& theta,
                                       const std::vector<double>& density,
                                       const Domain& domain, bool diag_lower,
                                       bool diag_upper) {
  const std::size_t n = theta.size();
  if (density.size() != n) throw ConfigError("properness: mismatched grid");
  if (n < 16) throw ConfigError("properness: need at least 16 grid points");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(theta[i]) || !std::isfinite(density[i]) || density[i] < 0.0) {
      throw ConfigError("properness: grid values must be finite and nonnegative");
    }
    if (i > 0 && !(theta[i] > theta[i - 1])) {
      throw ConfigError("properness: theta grid must be strictly ascending");
    }
  }

  // Boundary geometry of the scalar domain.
  double lo_edge = 0.0, hi_edge = 0.0;
  bool upper_finite = false;
  switch (domain.kind) {
    case Domain::Kind::Positive:
      lo_edge = 0.0;
      upper_finite = false;
      break;
    case Domain::Kind::Interval:
      lo_edge = domain.lo;
      hi_edge = domain.hi;
      upper_finite = true;
      break;
    case Domain::Kind::SimplexFree:  // scalar free weight lives in (0, 1)
      lo_edge = 0.0;
      hi_edge = 1.0;
      upper_finite = true;
      break;
  }

  PropernessReport rep;
  rep.grid_mass = trapezoid(theta, density);
  rep.total_mass = rep.grid_mass;

  const std::size_t k = std::min<std::size_t>(
      n, std::max<std::size_t>(kMinTailPoints,
                               static_cast<std::size_t>(kTailFraction * double(n))));

  if (diag_lower) {
    rep.lower_diagnosed = true;
    std::vector<double> u(k), d(k);
    for (std::size_t i = 0; i < k; ++i) {
      u[i] = theta[i] - lo_edge;
      d[i] = density[i];
    }
    rep.lower = fit_power_tail(u, d);
    classify_tail(rep.lower, /*finite_boundary=*/true, density[0],
                  theta[0] - lo_edge);
    if (rep.lower.integrable) rep.total_mass += rep.lower.correction;
  }
  if (diag_upper) {
    rep.upper_diagnosed = true;
    std::vector<double> u(k), d(k);
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = n - k + i;
      u[i] = upper_finite ? hi_edge - theta[j] : theta[j];
      d[i] = density[j];
    }
    rep.upper = fit_power_tail(u, d);
    classify_tail(rep.upper, upper_finite, density[n - 1],
                  upper_finite ? hi_edge - theta[n - 1] : theta[n - 1]);
    if (rep.upper.integrable) rep.total_mass += rep.upper.correction;
  }

  const bool improper =
      (rep.lower_diagnosed && !rep.lower.inconclusive && !rep.lower.integrable) ||
      (rep.upper_diagnosed && !rep.upper.inconclusive && !rep.upper.integrable);
  const bool inconclusive = (rep.lower_diagnosed && rep.lower.inconclusive) ||
                            (rep.upper_diagnosed && rep.upper.inconclusive);
  rep.verdict = improper ? "improper" : (inconclusive ? "inconclusive" : "proper");
  return rep;
}

}  // namespace hifisher
