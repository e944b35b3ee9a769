#include "entangled/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>
#include <string>

namespace entangled {

double op_norm(const OperatorMatrix& m) {
  if (m.size() == 0) return 0.0;
  const double frob = m.norm();
  if (frob == 0.0) return 0.0;
  // Scale first so that the Gram matrix stays far from overflow/underflow.
  const OperatorMatrix scaled = m / frob;
  const OperatorMatrix gram = scaled.adjoint() * scaled;
  Eigen::SelfAdjointEigenSolver<OperatorMatrix> eig(gram, Eigen::EigenvaluesOnly);
  return frob * std::sqrt(std::max(eig.eigenvalues().maxCoeff(), 0.0));
}

double unitarity_residual(const OperatorMatrix& u) {
  const OperatorMatrix r = u.adjoint() * u - OperatorMatrix::Identity(u.rows(), u.cols());
  return op_norm(r);
}

bool all_finite(const OperatorMatrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
    }
  }
  return true;
}

OperatorMatrix matrix_power(const OperatorMatrix& m, std::int64_t n) {
  if (n < 0) throw std::invalid_argument("matrix_power: negative exponent");
  OperatorMatrix result = OperatorMatrix::Identity(m.rows(), m.cols());
  OperatorMatrix base = m;
  OperatorMatrix tmp(m.rows(), m.cols());
  while (n > 0) {
    if (n & 1) {
      tmp.noalias() = result * base;
      result.swap(tmp);
    }
    n >>= 1;
    if (n > 0) {
      tmp.noalias() = base * base;
      base.swap(tmp);
    }
  }
  return result;
}

void require_square(const OperatorMatrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw std::invalid_argument(std::string(what) + ": expected a nonempty square matrix");
  }
  if (!all_finite(m)) throw std::invalid_argument(std::string(what) + ": non-finite entries");
}

}  // namespace entangled
