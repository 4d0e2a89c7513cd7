#include "hifisher/types.hpp"

#include <cmath>
#include <sstream>

namespace hifisher {

bool Domain::contains(const VectorXd& v) const {
  if (v.size() == 0) return false;
  switch (kind) {
    case Kind::Positive:
      return (v.array() > 0.0).all();
    case Kind::Interval:
      return (v.array() > lo).all() && (v.array() < hi).all();
    case Kind::SimplexFree: {
      if (!(v.array() > 0.0).all()) return false;
      return v.sum() < 1.0;  // implied weight_0 = 1 - sum stays positive
    }
  }
  return false;
}

std::string Domain::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::Positive: os << "(0, inf) per coordinate"; break;
    case Kind::Interval: os << "(" << lo << ", " << hi << ") per coordinate"; break;
    case Kind::SimplexFree: os << "interior simplex free coordinates"; break;
  }
  return os.str();
}

ParamPoint::ParamPoint(VectorXd v, Domain d) : values(std::move(v)), domain(d) {
  if (!values.allFinite()) throw DomainError("parameter vector has non-finite entries");
  if (!domain.contains(values)) {
    std::ostringstream os;
    os << "parameter [";
    for (int i = 0; i < values.size(); ++i) os << (i ? "," : "") << values[i];
    os << "] outside open domain " << domain.describe();
    throw DomainError(os.str());
  }
}

const char* method_name(EstimateMethod m) {
  switch (m) {
    case EstimateMethod::Analytic: return "analytic";
    case EstimateMethod::MonteCarlo: return "monte_carlo";
    case EstimateMethod::Quadrature: return "quadrature";
    case EstimateMethod::FiniteDifference: return "finite_difference";
  }
  return "?";
}

namespace {

constexpr double kSymTol = 1e-10;
constexpr double kEigTol = 1e-8;

MatrixXd symmetrize_checked(MatrixXd raw) {
  if (raw.rows() != raw.cols() || raw.rows() == 0)
    throw Error("information matrix must be square and non-empty");
  if (!raw.allFinite()) throw Error("information matrix has non-finite entries");
  double scale = raw.cwiseAbs().maxCoeff();
  double asym = (raw - raw.transpose()).cwiseAbs().maxCoeff();
  if (scale > 0.0 && asym > kSymTol * scale)
    throw Error("information matrix asymmetry " + std::to_string(asym / scale) +
                " exceeds relative tolerance 1e-10");
  return 0.5 * (raw + raw.transpose());
}

void check_psd(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
  double lo = es.eigenvalues().minCoeff();
  double top = es.eigenvalues().cwiseAbs().maxCoeff();
  if (lo < -kEigTol * top)
    throw NonPositiveInformation("eigenvalue " + std::to_string(lo) +
                                 " below PSD tolerance for scale " + std::to_string(top));
}

}  // namespace

FisherMatrix::FisherMatrix(MatrixXd raw, EstimateMethod method)
    : FisherMatrix(std::move(raw), method, MatrixXd()) {}

FisherMatrix::FisherMatrix(MatrixXd raw, EstimateMethod method, MatrixXd stderrs)
    : m_(symmetrize_checked(std::move(raw))), method_(method) {
  if (stderrs.size() == 0) {
    se_ = MatrixXd::Zero(m_.rows(), m_.cols());
  } else {
    if (stderrs.rows() != m_.rows() || stderrs.cols() != m_.cols())
      throw Error("stderr matrix shape mismatch");
    if (!stderrs.allFinite() || (stderrs.array() < 0.0).any())
      throw Error("stderr matrix must be finite and nonnegative");
    se_ = 0.5 * (stderrs + stderrs.transpose());
  }
  check_psd(m_);
}

FisherMatrix FisherMatrix::zero(int dim, EstimateMethod method) {
  return FisherMatrix(MatrixXd::Zero(dim, dim), method);
}

double FisherMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m_, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double FisherMatrix::sqrt_det() const {
  double det = m_.determinant();
  return det <= 0.0 ? 0.0 : std::sqrt(det);
}

double FisherMatrix::sqrt_det_stderr() const {
  if (exact()) return 0.0;
  double det = m_.determinant();
  if (det <= 0.0) {
    // Degenerate point: fall back to the norm of the errors so the
    // caller still sees a nonzero uncertainty.
    return se_.norm();
  }
  // d sqrt(det A) = 0.5 sqrt(det A) tr(A^{-1} dA); entries independent.
  MatrixXd inv = m_.inverse();
  double var = 0.0;
  for (int i = 0; i < m_.rows(); ++i)
    for (int j = 0; j < m_.cols(); ++j) {
      double g = 0.5 * std::sqrt(det) * inv(j, i);
      var += g * g * se_(i, j) * se_(i, j);
    }
  return std::sqrt(var);
}

FisherMatrix add(const FisherMatrix& a, const FisherMatrix& b) {
  if (a.dim() != b.dim()) throw Error("information matrix dimension mismatch");
  MatrixXd se = (a.stderr_entries().array().square() + b.stderr_entries().array().square()).sqrt();
  EstimateMethod m = a.exact() && b.exact() ? EstimateMethod::Analytic : EstimateMethod::MonteCarlo;
  if (a.method() == b.method()) m = a.method();
  return FisherMatrix(a.entries() + b.entries(), m, se);
}

}  // namespace hifisher
