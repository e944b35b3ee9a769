#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "entangled/kernel.hpp"
#include "entangled/linalg.hpp"
#include "entangled/partition.hpp"
#include "entangled/spectral.hpp"

namespace entangled {

enum class Engine { direct, spectral, nested };

std::string_view to_string(Engine e);
/// "direct" | "spectral" | "nested"
Engine parse_engine(std::string_view name);

class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EngineOptions {
  /// Cap on N^k summand tuples for the direct engine.
  double directBudget = 1e8;
  /// Cap on B^m block tuples for the spectral engine and the limit.
  double spectralBudget = 1e7;
  /// Cap on N * d^2 complex entries held by the direct power table.
  double powerTableBudget = 1ull << 26;
  /// |zw - 1| threshold for resonance of float phases in limit computations.
  double resonanceTol = 1e-8;
  /// Accept partitions with classes of any size (finite-dimensional
  /// extension; per-class kernel of the product of the class phases).
  bool allowGeneralPartitions = false;
  /// Worker threads; 0 reads ENTANGLED_THREADS, falling back to 1.
  int threads = 0;
};

struct CesaroResult {
  OperatorMatrix matrix;
  Engine engine = Engine::direct;
  std::int64_t N = 0;
  double elapsed = 0.0;  // seconds
};

/// (1/N) sum_{n<N} U^n by repeated multiplication.
OperatorMatrix mean_ergodic(const OperatorMatrix& u, std::int64_t n, double unitarityTol = 1e-10);

/// (1/N^k) sum over n_1..n_k < N of U^{n_a(1)} A_1 U^{n_a(2)} ... A_{m-1} U^{n_a(m)},
/// from a table of powers U^0..U^{N-1}. `ops` holds m-1 operators.
CesaroResult cesaro_direct(const OperatorMatrix& u, const Partition& p,
                           std::span<const OperatorMatrix> ops, std::int64_t n,
                           const EngineOptions& opts = {});

/// The same average expanded over block tuples (b_1..b_m): the product of
/// per-class kernels of the class phase sums times E_{b_1} A_1 ... E_{b_m}.
/// Cost does not depend on N.
CesaroResult cesaro_spectral(const SpectralDecomposition& dec, const Partition& p,
                             std::span<const OperatorMatrix> ops, std::int64_t n,
                             const EngineOptions& opts = {});

/// Non-crossing pair partitions only: repeatedly averages an innermost
/// adjacent pair U^n X U^n and folds it into its neighbours.
CesaroResult cesaro_nested(const SpectralDecomposition& dec, const Partition& p,
                           std::span<const OperatorMatrix> ops, std::int64_t n,
                           const EngineOptions& opts = {});

CesaroResult cesaro(Engine engine, const OperatorMatrix& u, const SpectralDecomposition& dec,
                    const Partition& p, std::span<const OperatorMatrix> ops, std::int64_t n,
                    const EngineOptions& opts = {});

/// S_alpha: sum over block tuples whose every class phase product equals 1.
OperatorMatrix limit_operator(const SpectralDecomposition& dec, const Partition& p,
                              std::span<const OperatorMatrix> ops, const EngineOptions& opts = {});

/// S^F: resonant tuples whose closing phase z_l lies in F for every class
/// (the opening slot carries conj(z_l)). F must be a subset of the
/// antidiagonal spectrum. Pair partitions only.
OperatorMatrix limit_truncated(const SpectralDecomposition& dec, const Partition& p,
                               std::span<const OperatorMatrix> ops, std::span<const Phase> subset,
                               const EngineOptions& opts = {});

/// <S^F x, y>
cplx form_value(const SpectralDecomposition& dec, const Partition& p,
                std::span<const OperatorMatrix> ops, const Vector& x, const Vector& y,
                std::span<const Phase> subset, const EngineOptions& opts = {});

/// Upper bound on ||M_N - S||_op built from the block-tuple expansion:
/// sum over tuples of |prod_l kernel(lambda_l, N) - [tuple resonant]| * ||tuple operator||.
/// Tuple operators and their norms are computed once; `at(N)` is cheap.
class CertifiedBound {
 public:
  CertifiedBound(const SpectralDecomposition& dec, const Partition& p,
                 std::span<const OperatorMatrix> ops, const EngineOptions& opts = {});

  double at(std::int64_t n) const;

  std::size_t tuples() const noexcept { return norms_.size(); }
  std::size_t nonresonant_tuples() const noexcept { return nonresonant_; }
  /// Smallest |1 - lambda| over non-resonant class products of nonzero tuples.
  double gap() const noexcept { return gap_; }
  /// C with at(N) <= C / N (exact phases): 2 * #non-resonant * max norm / gap.
  double rate_constant() const;

 private:
  int classes_ = 0;
  std::vector<Phase> distinct_;           // distinct class phase sums
  std::vector<std::uint32_t> sum_index_;  // classes_ entries per tuple
  std::vector<bool> resonant_;            // per tuple
  std::vector<double> norms_;             // per tuple
  std::size_t nonresonant_ = 0;
  double max_nonresonant_norm_ = 0.0;
  double gap_ = 0.0;
};

double error_bound(const SpectralDecomposition& dec, const Partition& p,
                   std::span<const OperatorMatrix> ops, std::int64_t n,
                   const EngineOptions& opts = {});

struct ConvergenceRow {
  std::int64_t N = 0;
  double errorOpNorm = 0.0;
  double errorFrobenius = 0.0;
  double certifiedBound = 0.0;
  Engine engine = Engine::spectral;
  double seconds = 0.0;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  double spectralGap = 0.0;
  double limitNorm = 0.0;
  double productNorm = 0.0;  // prod_j ||A_j||_op
};

/// Ns must be strictly increasing and positive.
ConvergenceReport convergence_report(const OperatorMatrix& u, const SpectralDecomposition& dec,
                                     const Partition& p, std::span<const OperatorMatrix> ops,
                                     std::span<const std::int64_t> ns, Engine engine,
                                     const EngineOptions& opts = {});

/// prod_j ||A_j||_op
double product_norm(std::span<const OperatorMatrix> ops);

}  // namespace entangled
