#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "entangled/linalg.hpp"
#include "entangled/phase.hpp"

namespace entangled {

struct ToleranceSet {
  double unitarity = 1e-10;       // ||U*U - I||
  double cluster = 1e-8;          // angular distance merging eigenvalues (radians)
  double resonance = 1e-8;        // |zw - 1| counted as resonant
  double projection = 1e-10;      // projector invariants
  double reconstruction = 1e-9;   // ||sum z E_z - U||
};

struct SpectralEntry {
  Phase phase;
  OperatorMatrix projection;
};

struct DecompositionResiduals {
  double idempotency = 0.0;    // max ||E^2 - E||
  double hermiticity = 0.0;    // max ||E* - E||
  double orthogonality = 0.0;  // max ||E_z E_w||, z != w
  double completeness = 0.0;   // ||sum E - I||
  double reconstruction = 0.0; // ||sum z E - U||, when U is known
  double min_separation = 0.0; // smallest angular gap between phases
};

/// Eigenphases of a unitary with their mutually orthogonal eigenprojections,
/// ordered by increasing turn value. Immutable after construction.
class SpectralDecomposition {
 public:
  /// Validates every invariant against `tol` and throws std::runtime_error
  /// when one fails. `unitary`, when given, is used for the reconstruction
  /// check and the recorded unitarity residual.
  SpectralDecomposition(std::vector<SpectralEntry> entries, const ToleranceSet& tol,
                        const OperatorMatrix* unitary = nullptr);

  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<SpectralEntry>& entries() const noexcept { return entries_; }
  const SpectralEntry& operator[](std::size_t i) const { return entries_[i]; }
  const Phase& phase(std::size_t i) const { return entries_[i].phase; }
  const OperatorMatrix& projection(std::size_t i) const { return entries_[i].projection; }

  double source_unitarity() const noexcept { return unitarity_; }
  const DecompositionResiduals& residuals() const noexcept { return residuals_; }
  const ToleranceSet& tolerances() const noexcept { return tol_; }

  /// Index of the entry whose phase matches `p` (exactly for two exact
  /// phases, within the clustering tolerance otherwise).
  std::optional<std::size_t> find(const Phase& p) const;

  static OperatorMatrix reconstruct_from(std::span<const SpectralEntry> entries);

 private:
  int dim_ = 0;
  std::vector<SpectralEntry> entries_;
  double unitarity_ = 0.0;
  DecompositionResiduals residuals_;
  ToleranceSet tol_;
};

DecompositionResiduals measure_residuals(std::span<const SpectralEntry> entries,
                                         const OperatorMatrix* unitary);

/// Complex Schur factorization of U; eigenvalues within tol.cluster are merged
/// and their Schur vectors re-orthonormalized into one projection.
SpectralDecomposition decompose(const OperatorMatrix& u, const ToleranceSet& tol = {});

/// Builds the decomposition of basis * diag(phases) * basis^* directly;
/// `basis` must be unitary. Equal phases are merged.
SpectralDecomposition from_eigenbasis(std::span<const Phase> phases, const OperatorMatrix& basis,
                                      const ToleranceSet& tol = {});

/// sum_z z E_z
OperatorMatrix reconstruct(const SpectralDecomposition& dec);

/// z * w == 1: exact when both phases are exact, else |zw - 1| <= tol.
bool resonant(const Phase& z, const Phase& w, double tol);

/// Phases z of the decomposition with zw = 1 for some phase w present.
std::vector<Phase> antidiagonal_spectrum(const SpectralDecomposition& dec, double tol);

/// Per-entry membership in the antidiagonal spectrum.
std::vector<bool> antidiagonal_mask(const SpectralDecomposition& dec, double tol);

/// E_1, or the zero matrix when 1 is not an eigenvalue.
OperatorMatrix invariant_projection(const SpectralDecomposition& dec);

/// min |1 - z_b z_b'| over pairs of phases whose product is not resonant;
/// +inf when every pair is resonant.
double spectral_gap(const SpectralDecomposition& dec, double tol);

enum class PhaseMode { haar, rational };

struct PhaseSpec {
  PhaseMode mode = PhaseMode::haar;
  int maxDenominator = 8;
};

struct RandomSystem {
  OperatorMatrix unitary;
  SpectralDecomposition dec;
};

/// Reproducible test unitary of dimension 1..64.
RandomSystem random_system(std::uint64_t seed, int d, PhaseSpec mode,
                           const ToleranceSet& tol = {});

/// QR of a complex Gaussian matrix with the phases of R's diagonal divided out.
OperatorMatrix haar_unitary(std::mt19937_64& rng, int d);

/// Complex Gaussian matrix scaled to unit operator norm.
OperatorMatrix random_operator(std::mt19937_64& rng, int d);

/// Complex Gaussian unit vector.
Vector random_unit_vector(std::mt19937_64& rng, int d);

}  // namespace entangled
