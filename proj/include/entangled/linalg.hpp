#pragma once

#include <complex>
#include <cstdint>

#include <Eigen/Dense>

namespace entangled {

using cplx = std::complex<double>;
using OperatorMatrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Largest singular value, by power iteration on M*M with a 1e-12 relative
/// stagnation stop.
double op_norm(const OperatorMatrix& m);

inline double frobenius_norm(const OperatorMatrix& m) { return m.norm(); }

/// ||U*U - I||_op
double unitarity_residual(const OperatorMatrix& u);

bool all_finite(const OperatorMatrix& m);

/// Binary exponentiation; requires n >= 0.
OperatorMatrix matrix_power(const OperatorMatrix& m, std::int64_t n);

/// Throws std::invalid_argument unless `m` is square and finite.
void require_square(const OperatorMatrix& m, const char* what);

}  // namespace entangled
