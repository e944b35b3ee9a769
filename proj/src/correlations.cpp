#include "entangled/correlations.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

namespace entangled {

namespace {

constexpr double kStateTol = 1e-10;

void check_spec(const DynamicalSystem& sys, const CorrelationSpec& spec) {
  if (!spec.partition.is_pair()) {
    throw std::invalid_argument("correlations: " + spec.partition.to_string() +
                                " is not a pair partition");
  }
  if (static_cast<int>(spec.ops.size()) != spec.partition.size() + 1) {
    throw std::invalid_argument(fmt::format("correlations: need {} operators A_0..A_{}, got {}",
                                            spec.partition.size() + 1, spec.partition.size(),
                                            spec.ops.size()));
  }
  for (const auto& a : spec.ops) {
    if (a.rows() != sys.dim() || a.cols() != sys.dim()) {
      throw std::invalid_argument("correlations: operator dimension mismatch");
    }
  }
}

void check_indices(const CorrelationSpec& spec, std::span<const std::int64_t> n) {
  if (static_cast<int>(n.size()) != spec.partition.classes()) {
    throw std::invalid_argument("correlation_term: one index per class required");
  }
  for (auto v : n) {
    if (v < 0) throw std::invalid_argument("correlation_term: negative index");
  }
}

// omega as a weighted sum of vector functionals: omega(X) = sum_i w_i <X psi_i, psi_i>.
struct Purification {
  std::vector<double> weights;
  std::vector<Vector> vectors;
};

Purification purify(const StateSpec& state) {
  Purification out;
  if (const auto* v = std::get_if<VectorState>(&state)) {
    out.weights.push_back(1.0);
    out.vectors.push_back(v->omega);
    return out;
  }
  const auto& t = std::get<TraceState>(state).density;
  Eigen::SelfAdjointEigenSolver<OperatorMatrix> eig(t);
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    const double w = eig.eigenvalues()[i];
    if (w > 0.0) {
      out.weights.push_back(w);
      out.vectors.push_back(eig.eigenvectors().col(i));
    }
  }
  return out;
}

}  // namespace

cplx DynamicalSystem::expectation(const OperatorMatrix& a) const {
  if (const auto* v = std::get_if<VectorState>(&state_)) return v->omega.dot(a * v->omega);
  return (std::get<TraceState>(state_).density * a).trace();
}

OperatorMatrix DynamicalSystem::evolve(const OperatorMatrix& a, std::int64_t steps) const {
  const OperatorMatrix p = matrix_power(u_, steps);
  return p * a * p.adjoint();
}

double DynamicalSystem::invariance_residual() const {
  double worst = 0.0;
  const int d = dim();
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      OperatorMatrix e = OperatorMatrix::Zero(d, d);
      e(i, j) = 1.0;
      worst = std::max(worst, std::abs(expectation(u_ * e * u_.adjoint()) - expectation(e)));
    }
  }
  return worst;
}

DynamicalSystem make_system(const OperatorMatrix& u, const SpectralDecomposition& dec,
                            StateSpec state, const ToleranceSet& tol) {
  require_square(u, "make_system");
  if (u.rows() != dec.dim()) throw std::invalid_argument("make_system: decomposition dimension mismatch");
  if (unitarity_residual(u) > tol.unitarity) throw std::invalid_argument("make_system: U is not unitary");
  const Eigen::Index d = u.rows();

  if (const auto* v = std::get_if<VectorState>(&state)) {
    if (v->omega.size() != d) throw std::invalid_argument("make_system: state vector dimension mismatch");
    if (std::abs(v->omega.norm() - 1.0) > kStateTol) {
      throw std::invalid_argument("make_system: state vector is not a unit vector");
    }
    const double drift = (u * v->omega - v->omega).norm();
    if (drift > kStateTol) {
      throw std::invalid_argument(fmt::format("make_system: U Omega != Omega (residual {:.3e})", drift));
    }
  } else {
    const auto& t = std::get<TraceState>(state).density;
    if (t.rows() != d || t.cols() != d) throw std::invalid_argument("make_system: density dimension mismatch");
    if (op_norm(t - t.adjoint()) > kStateTol) throw std::invalid_argument("make_system: density not Hermitian");
    Eigen::SelfAdjointEigenSolver<OperatorMatrix> eig(t);
    if (eig.eigenvalues().minCoeff() < -kStateTol) throw std::invalid_argument("make_system: density not positive");
    if (std::abs(t.trace() - 1.0) > kStateTol) throw std::invalid_argument("make_system: density trace != 1");
    const OperatorMatrix outside = OperatorMatrix::Identity(d, d) - invariant_projection(dec);
    if (op_norm(outside * t) > kStateTol) {
      throw std::invalid_argument("make_system: density support not contained in E_1");
    }
    if (op_norm(u * t - t) > kStateTol || op_norm(t * u - t) > kStateTol) {
      throw std::invalid_argument("make_system: UT = T = TU violated");
    }
  }

  DynamicalSystem sys(u, dec, std::move(state));
  const double inv = sys.invariance_residual();
  if (inv > kStateTol) {
    throw std::invalid_argument(fmt::format("make_system: state not invariant (residual {:.3e})", inv));
  }
  return sys;
}

DynamicalSystem make_system(const OperatorMatrix& u, StateSpec state, const ToleranceSet& tol) {
  return make_system(u, decompose(u, tol), std::move(state), tol);
}

cplx correlation_term_gamma(const DynamicalSystem& sys, const CorrelationSpec& spec,
                            std::span<const std::int64_t> n) {
  check_spec(sys, spec);
  check_indices(spec, n);
  const auto& labels = spec.partition.labels();
  OperatorMatrix product = spec.ops[0];
  std::int64_t cumulative = 0;
  for (std::size_t s = 0; s < labels.size(); ++s) {
    cumulative += n[labels[s] - 1];
    product = product * sys.evolve(spec.ops[s + 1], cumulative);
  }
  return sys.expectation(product);
}

cplx correlation_term_sandwich(const DynamicalSystem& sys, const CorrelationSpec& spec,
                               std::span<const std::int64_t> n) {
  check_spec(sys, spec);
  check_indices(spec, n);
  const auto& labels = spec.partition.labels();
  OperatorMatrix product = spec.ops[0];
  for (std::size_t s = 0; s < labels.size(); ++s) {
    product = product * matrix_power(sys.unitary(), n[labels[s] - 1]) * spec.ops[s + 1];
  }
  return sys.expectation(product);
}

cplx correlation_term(const DynamicalSystem& sys, const CorrelationSpec& spec,
                      std::span<const std::int64_t> n) {
  const cplx gamma = correlation_term_gamma(sys, spec, n);
  const cplx sandwich = correlation_term_sandwich(sys, spec, n);
  const double scale = std::max(1.0, product_norm(spec.ops));
  if (std::abs(gamma - sandwich) > 1e-10 * scale) {
    throw std::runtime_error(fmt::format("correlation_term: gamma and sandwich forms differ by {:.3e}",
                                         std::abs(gamma - sandwich)));
  }
  return gamma;
}

cplx cesaro_correlation(const DynamicalSystem& sys, const CorrelationSpec& spec, std::int64_t n,
                        const CorrelationOptions& opts) {
  check_spec(sys, spec);
  if (n < 1) throw std::invalid_argument("cesaro_correlation: N must be positive");
  const int k = spec.partition.classes();
  const double tuples = std::pow(double(n), k);

  CorrelationRoute route = opts.route;
  if (route == CorrelationRoute::automatic) {
    route = tuples <= opts.directBudget ? CorrelationRoute::direct : CorrelationRoute::engine;
  }
  if (route == CorrelationRoute::engine) {
    const auto m = cesaro_spectral(sys.decomposition(), spec.partition, spec.inner(), n, opts.engine);
    return sys.expectation(spec.front() * m.matrix * spec.back());
  }
  if (tuples > opts.directBudget) {
    throw BudgetExceeded(fmt::format("cesaro_correlation: {:.3g} tuples exceed the budget of {:.3g}",
                                     tuples, opts.directBudget));
  }

  const Eigen::Index d = sys.dim();
  std::vector<OperatorMatrix> powers(static_cast<std::size_t>(n));
  powers[0] = OperatorMatrix::Identity(d, d);
  for (std::int64_t i = 1; i < n; ++i) powers[i].noalias() = powers[i - 1] * sys.unitary();

  const auto pure = purify(sys.state());
  const auto& labels = spec.partition.labels();
  const int m = spec.partition.size();
  // Right factors A_2k psi_i do not depend on the indices.
  std::vector<Vector> tails;
  for (const auto& psi : pure.vectors) tails.push_back(spec.back() * psi);

  std::vector<std::int64_t> idx(k, 0);
  cplx total = 0.0;
  Vector v(d), w(d);
  while (true) {
    cplx term = 0.0;
    for (std::size_t i = 0; i < pure.vectors.size(); ++i) {
      v = tails[i];
      for (int s = m - 1; s >= 0; --s) {
        w.noalias() = powers[idx[labels[s] - 1]] * v;
        v.noalias() = spec.ops[s] * w;
      }
      term += pure.weights[i] * pure.vectors[i].dot(v);
    }
    total += term;
    int c = k - 1;
    while (c >= 0 && ++idx[c] == n) idx[c--] = 0;
    if (c < 0) break;
  }
  return total / tuples;
}

cplx correlation_limit(const DynamicalSystem& sys, const CorrelationSpec& spec,
                       const EngineOptions& opts) {
  check_spec(sys, spec);
  const OperatorMatrix s = limit_operator(sys.decomposition(), spec.partition, spec.inner(), opts);
  return sys.expectation(spec.front() * s * spec.back());
}

}  // namespace entangled
