#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "entangled/engines.hpp"
#include "entangled/linalg.hpp"
#include "entangled/partition.hpp"
#include "entangled/spectral.hpp"

namespace entangled {

/// omega(A) = <A Omega, Omega> with U Omega = Omega.
struct VectorState {
  Vector omega;
};

/// omega_T(A) = Tr(T A) with T >= 0, Tr T = 1 and supp T <= E_1.
struct TraceState {
  OperatorMatrix density;
};

using StateSpec = std::variant<VectorState, TraceState>;

/// A unitary, its spectral decomposition and a validated invariant state.
class DynamicalSystem {
 public:
  const OperatorMatrix& unitary() const noexcept { return u_; }
  const SpectralDecomposition& decomposition() const noexcept { return dec_; }
  const StateSpec& state() const noexcept { return state_; }
  int dim() const noexcept { return dec_.dim(); }

  /// The state applied to `a`.
  cplx expectation(const OperatorMatrix& a) const;

  /// gamma(A) = U A U*
  OperatorMatrix evolve(const OperatorMatrix& a, std::int64_t steps) const;

  /// max |omega(gamma(e_ij)) - omega(e_ij)| over matrix units.
  double invariance_residual() const;

 private:
  friend DynamicalSystem make_system(const OperatorMatrix&, const SpectralDecomposition&,
                                     StateSpec, const ToleranceSet&);
  DynamicalSystem(OperatorMatrix u, SpectralDecomposition dec, StateSpec state)
      : u_(std::move(u)), dec_(std::move(dec)), state_(std::move(state)) {}

  OperatorMatrix u_;
  SpectralDecomposition dec_;
  StateSpec state_;
};

/// Validates the state against the dynamics; throws std::invalid_argument on
/// a non-invariant vector, or a density that is not positive, normalized and
/// supported under E_1. All residual checks use 1e-10.
DynamicalSystem make_system(const OperatorMatrix& u, const SpectralDecomposition& dec,
                            StateSpec state, const ToleranceSet& tol = {});
DynamicalSystem make_system(const OperatorMatrix& u, StateSpec state, const ToleranceSet& tol = {});

/// Pair partition on 2k elements with operators A_0, A_1, ..., A_{2k}.
struct CorrelationSpec {
  Partition partition;
  std::vector<OperatorMatrix> ops;

  /// A_1 .. A_{2k-1}
  std::span<const OperatorMatrix> inner() const {
    return std::span<const OperatorMatrix>(ops).subspan(1, ops.size() - 2);
  }
  const OperatorMatrix& front() const { return ops.front(); }
  const OperatorMatrix& back() const { return ops.back(); }
};

/// omega(A_0 gamma^{c_1}(A_1) ... gamma^{c_2k}(A_2k)) with cumulative exponents
/// c_s = n_a(1) + ... + n_a(s). Also evaluates the U-sandwich form
/// omega(A_0 U^{n_a(1)} A_1 ... U^{n_a(2k)} A_2k) and throws std::runtime_error if
/// the two disagree by more than 1e-10 (relative to the operator norms).
cplx correlation_term(const DynamicalSystem& sys, const CorrelationSpec& spec,
                      std::span<const std::int64_t> n);

/// Only the gamma-form of correlation_term.
cplx correlation_term_gamma(const DynamicalSystem& sys, const CorrelationSpec& spec,
                            std::span<const std::int64_t> n);
/// Only the U-sandwich form of correlation_term.
cplx correlation_term_sandwich(const DynamicalSystem& sys, const CorrelationSpec& spec,
                               std::span<const std::int64_t> n);

enum class CorrelationRoute {
  automatic,  // brute force when N^k <= directBudget, else through the spectral engine
  direct,     // (1/N^k) sum of correlation terms
  engine,     // omega(A_0 M_N A_2k) with M_N from the spectral engine
};

struct CorrelationOptions {
  CorrelationRoute route = CorrelationRoute::automatic;
  double directBudget = 1e6;
  EngineOptions engine;
};

cplx cesaro_correlation(const DynamicalSystem& sys, const CorrelationSpec& spec, std::int64_t n,
                        const CorrelationOptions& opts = {});

/// omega(A_0 S A_2k)
cplx correlation_limit(const DynamicalSystem& sys, const CorrelationSpec& spec,
                       const EngineOptions& opts = {});

}  // namespace entangled
