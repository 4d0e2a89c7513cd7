#pragma once

#include <Eigen/Dense>
#include <string>

#include "hifisher/errors.hpp"

namespace hifisher {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Constraint on a parameter vector. All boundaries are open: evaluating
// anything *at* a boundary is a caller error, rejected up front rather
// than deep inside an estimator.
struct Domain {
  enum class Kind { Interval, Positive, SimplexFree };

  Kind kind = Kind::Positive;
  double lo = 0.0;  // Interval only
  double hi = 1.0;

  static Domain positive() { return {Kind::Positive, 0.0, 0.0}; }
  static Domain interval(double lo, double hi) { return {Kind::Interval, lo, hi}; }
  // Free coordinates (theta_1..theta_p) of a probability vector whose
  // zeroth weight is 1 - sum. Interior: every weight strictly positive.
  static Domain simplex_free() { return {Kind::SimplexFree, 0.0, 0.0}; }

  bool contains(const VectorXd& v) const;
  // Human-readable description, used in error messages.
  std::string describe() const;
};

// Parameter point: values plus the domain they must lie in. Construction
// validates membership, so a ParamPoint in hand is always usable.
struct ParamPoint {
  VectorXd values;
  Domain domain;

  ParamPoint(VectorXd v, Domain d);
  static ParamPoint scalar(double v, Domain d) {
    VectorXd x(1);
    x[0] = v;
    return ParamPoint(std::move(x), d);
  }

  int dim() const { return int(values.size()); }
};

enum class EstimateMethod { Analytic, MonteCarlo, Quadrature, FiniteDifference };

const char* method_name(EstimateMethod m);

// Symmetric positive semidefinite matrix estimate with entrywise standard
// errors (all zero for exact values). Construction symmetrizes, requires
// the raw asymmetry to stay within 1e-10 relative, and requires every
// eigenvalue to clear -1e-8 times the largest eigenvalue magnitude.
class FisherMatrix {
 public:
  FisherMatrix(MatrixXd raw, EstimateMethod method);
  FisherMatrix(MatrixXd raw, EstimateMethod method, MatrixXd stderrs);

  static FisherMatrix zero(int dim, EstimateMethod method);

  const MatrixXd& entries() const { return m_; }
  const MatrixXd& stderr_entries() const { return se_; }
  EstimateMethod method() const { return method_; }
  int dim() const { return int(m_.rows()); }

  bool exact() const { return se_.isZero(0.0); }
  double scalar() const { return m_(0, 0); }
  double scalar_stderr() const { return se_(0, 0); }

  double min_eigenvalue() const;
  // sqrt(det) together with its first-order standard error propagated
  // from the entrywise errors (entries treated as independent).
  double sqrt_det() const;
  double sqrt_det_stderr() const;

 private:
  MatrixXd m_;
  MatrixXd se_;
  EstimateMethod method_;
};

// a + b with standard errors combined in quadrature.
FisherMatrix add(const FisherMatrix& a, const FisherMatrix& b);

}  // namespace hifisher
