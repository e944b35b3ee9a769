#include "entangled/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "entangled/rng.hpp"

namespace entangled {

namespace {

struct Group {
  std::vector<Eigen::Index> columns;
  Phase phase;
};

Phase circular_mean(std::span<const Phase> phases) {
  if (phases.size() == 1 || phases.front().exact()) return phases.front();
  cplx acc = 0.0;
  for (const auto& p : phases) acc += p.value();
  return Phase::of(acc);
}

bool same_phase(const Phase& a, const Phase& b, double cluster) {
  if (a.exact() && b.exact()) return a == b;
  return a.angular_distance(b) <= cluster;
}

// Single-linkage clustering on the circle. `phases[i]` belongs to column i.
std::vector<Group> cluster_phases(std::span<const Phase> phases, double cluster) {
  std::vector<Eigen::Index> order(phases.size());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return phases[a].value_turns() < phases[b].value_turns();
  });

  std::vector<std::vector<Eigen::Index>> runs;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i > 0 && same_phase(phases[order[i - 1]], phases[order[i]], cluster)) {
      runs.back().push_back(order[i]);
    } else {
      runs.push_back({order[i]});
    }
  }
  // A cluster may straddle turn 0.
  if (runs.size() > 1 &&
      same_phase(phases[runs.back().back()], phases[runs.front().front()], cluster)) {
    auto& head = runs.front();
    head.insert(head.begin(), runs.back().begin(), runs.back().end());
    runs.pop_back();
  }

  std::vector<Group> groups;
  for (auto& run : runs) {
    std::vector<Phase> members;
    for (auto c : run) members.push_back(phases[c]);
    std::sort(run.begin(), run.end());
    groups.push_back({std::move(run), circular_mean(members)});
  }
  std::sort(groups.begin(), groups.end(), [](const Group& a, const Group& b) {
    return a.phase.value_turns() < b.phase.value_turns();
  });
  return groups;
}

OperatorMatrix group_projection(const OperatorMatrix& basis, const std::vector<Eigen::Index>& cols) {
  OperatorMatrix block(basis.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) block.col(j) = basis.col(cols[j]);
  if (cols.size() > 1) {
    Eigen::HouseholderQR<OperatorMatrix> qr(block);
    block = qr.householderQ() * OperatorMatrix::Identity(block.rows(), block.cols());
  }
  return block * block.adjoint();
}

std::vector<SpectralEntry> entries_from_groups(const OperatorMatrix& basis,
                                               const std::vector<Group>& groups) {
  std::vector<SpectralEntry> out;
  out.reserve(groups.size());
  for (const auto& g : groups) out.push_back({g.phase, group_projection(basis, g.columns)});
  return out;
}

}  // namespace

DecompositionResiduals measure_residuals(std::span<const SpectralEntry> entries,
                                         const OperatorMatrix* unitary) {
  DecompositionResiduals r;
  if (entries.empty()) return r;
  const Eigen::Index d = entries.front().projection.rows();
  OperatorMatrix sum = OperatorMatrix::Zero(d, d);
  OperatorMatrix rec = OperatorMatrix::Zero(d, d);
  r.min_separation = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i].projection;
    r.idempotency = std::max(r.idempotency, (e * e - e).norm());
    r.hermiticity = std::max(r.hermiticity, (e.adjoint() - e).norm());
    for (std::size_t j = i + 1; j < entries.size(); ++j) {
      r.orthogonality = std::max(r.orthogonality, (e * entries[j].projection).norm());
      r.min_separation =
          std::min(r.min_separation, entries[i].phase.angular_distance(entries[j].phase));
    }
    sum += e;
    rec += entries[i].phase.value() * e;
  }
  r.completeness = (sum - OperatorMatrix::Identity(d, d)).norm();
  if (unitary) r.reconstruction = (rec - *unitary).norm();
  return r;
}

SpectralDecomposition::SpectralDecomposition(std::vector<SpectralEntry> entries,
                                             const ToleranceSet& tol,
                                             const OperatorMatrix* unitary)
    : entries_(std::move(entries)), tol_(tol) {
  if (entries_.empty()) throw std::invalid_argument("spectral decomposition: no entries");
  dim_ = static_cast<int>(entries_.front().projection.rows());
  for (const auto& e : entries_) {
    if (e.projection.rows() != dim_ || e.projection.cols() != dim_) {
      throw std::invalid_argument("spectral decomposition: projection dimension mismatch");
    }
  }
  std::stable_sort(entries_.begin(), entries_.end(), [](const auto& a, const auto& b) {
    return a.phase.value_turns() < b.phase.value_turns();
  });
  if (unitary) {
    unitarity_ = unitarity_residual(*unitary);
  } else {
    unitarity_ = unitarity_residual(reconstruct_from(entries_));
  }
  residuals_ = measure_residuals(entries_, unitary);

  auto fail = [](const char* what, double value) {
    throw std::runtime_error(fmt::format("spectral decomposition: {} residual {:.3e}", what, value));
  };
  if (residuals_.idempotency > tol.projection) fail("idempotency", residuals_.idempotency);
  if (residuals_.hermiticity > tol.projection) fail("hermiticity", residuals_.hermiticity);
  if (residuals_.orthogonality > tol.projection) fail("orthogonality", residuals_.orthogonality);
  if (residuals_.completeness > tol.projection) fail("completeness", residuals_.completeness);
  if (residuals_.reconstruction > tol.reconstruction) fail("reconstruction", residuals_.reconstruction);
  for (std::size_t i = 0; i + 1 < entries_.size(); ++i) {
    for (std::size_t j = i + 1; j < entries_.size(); ++j) {
      if (same_phase(entries_[i].phase, entries_[j].phase, tol.cluster)) {
        throw std::runtime_error("spectral decomposition: phases not separated");
      }
    }
  }
}

OperatorMatrix SpectralDecomposition::reconstruct_from(std::span<const SpectralEntry> entries) {
  const Eigen::Index d = entries.front().projection.rows();
  OperatorMatrix u = OperatorMatrix::Zero(d, d);
  for (const auto& e : entries) u += e.phase.value() * e.projection;
  return u;
}

std::optional<std::size_t> SpectralDecomposition::find(const Phase& p) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (same_phase(entries_[i].phase, p, tol_.cluster)) return i;
  }
  return std::nullopt;
}

SpectralDecomposition decompose(const OperatorMatrix& u, const ToleranceSet& tol) {
  require_square(u, "decompose");
  const double residual = unitarity_residual(u);
  if (residual > tol.unitarity) {
    throw std::invalid_argument(
        fmt::format("decompose: not unitary (||U*U - I|| = {:.3e})", residual));
  }
  Eigen::ComplexSchur<OperatorMatrix> schur(u);
  if (schur.info() != Eigen::Success) throw std::runtime_error("decompose: Schur iteration failed");
  const OperatorMatrix& t = schur.matrixT();
  const OperatorMatrix& q = schur.matrixU();

  std::vector<Phase> phases;
  phases.reserve(static_cast<std::size_t>(t.rows()));
  for (Eigen::Index i = 0; i < t.rows(); ++i) phases.push_back(Phase::of(t(i, i)));
  return SpectralDecomposition(entries_from_groups(q, cluster_phases(phases, tol.cluster)), tol, &u);
}

SpectralDecomposition from_eigenbasis(std::span<const Phase> phases, const OperatorMatrix& basis,
                                      const ToleranceSet& tol) {
  require_square(basis, "from_eigenbasis");
  if (static_cast<Eigen::Index>(phases.size()) != basis.cols()) {
    throw std::invalid_argument("from_eigenbasis: one phase per basis column required");
  }
  if (unitarity_residual(basis) > tol.unitarity) {
    throw std::invalid_argument("from_eigenbasis: basis is not unitary");
  }
  Eigen::VectorXcd diag(basis.cols());
  for (Eigen::Index i = 0; i < basis.cols(); ++i) diag[i] = phases[i].value();
  const OperatorMatrix u = basis * diag.asDiagonal() * basis.adjoint();
  return SpectralDecomposition(entries_from_groups(basis, cluster_phases(phases, tol.cluster)), tol, &u);
}

OperatorMatrix reconstruct(const SpectralDecomposition& dec) {
  return SpectralDecomposition::reconstruct_from(dec.entries());
}

bool resonant(const Phase& z, const Phase& w, double tol) { return (z + w).is_one(tol); }

std::vector<bool> antidiagonal_mask(const SpectralDecomposition& dec, double tol) {
  std::vector<bool> mask(dec.size(), false);
  for (std::size_t i = 0; i < dec.size(); ++i) {
    for (std::size_t j = 0; j < dec.size() && !mask[i]; ++j) {
      mask[i] = resonant(dec.phase(i), dec.phase(j), tol);
    }
  }
  return mask;
}

std::vector<Phase> antidiagonal_spectrum(const SpectralDecomposition& dec, double tol) {
  const auto mask = antidiagonal_mask(dec, tol);
  std::vector<Phase> out;
  for (std::size_t i = 0; i < dec.size(); ++i) {
    if (mask[i]) out.push_back(dec.phase(i));
  }
  return out;
}

OperatorMatrix invariant_projection(const SpectralDecomposition& dec) {
  if (auto i = dec.find(Phase::rational(0, 1))) return dec.projection(*i);
  return OperatorMatrix::Zero(dec.dim(), dec.dim());
}

double spectral_gap(const SpectralDecomposition& dec, double tol) {
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < dec.size(); ++i) {
    for (std::size_t j = 0; j < dec.size(); ++j) {
      const Phase product = dec.phase(i) + dec.phase(j);
      if (!product.is_one(tol)) gap = std::min(gap, product.distance_to_one());
    }
  }
  return gap;
}

OperatorMatrix haar_unitary(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> normal(0.0, 1.0);
  OperatorMatrix g(d, d);
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < d; ++i) g(i, j) = cplx(normal(rng), normal(rng));
  }
  Eigen::HouseholderQR<OperatorMatrix> qr(g);
  OperatorMatrix q = qr.householderQ() * OperatorMatrix::Identity(d, d);
  const OperatorMatrix& r = qr.matrixQR();
  for (int j = 0; j < d; ++j) {
    const cplx rjj = r(j, j);
    if (std::abs(rjj) > 0.0) q.col(j) *= rjj / std::abs(rjj);
  }
  return q;
}

OperatorMatrix random_operator(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> normal(0.0, 1.0);
  OperatorMatrix a(d, d);
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < d; ++i) a(i, j) = cplx(normal(rng), normal(rng));
  }
  return a / op_norm(a);
}

Vector random_unit_vector(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(d);
  for (int i = 0; i < d; ++i) v[i] = cplx(normal(rng), normal(rng));
  return v.normalized();
}

RandomSystem random_system(std::uint64_t seed, int d, PhaseSpec mode, const ToleranceSet& tol) {
  if (d < 1 || d > 64) throw std::invalid_argument("random_system: dimension must be in 1..64");
  auto rng = SeedSequence(seed).engine();
  if (mode.mode == PhaseMode::haar) {
    OperatorMatrix u = haar_unitary(rng, d);
    auto dec = decompose(u, tol);
    return {std::move(u), std::move(dec)};
  }
  if (mode.maxDenominator < 1) throw std::invalid_argument("random_system: maxDenominator must be >= 1");
  std::vector<Phase> phases;
  phases.reserve(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    std::uniform_int_distribution<int> qdist(1, mode.maxDenominator);
    const int q = qdist(rng);
    std::uniform_int_distribution<int> pdist(0, q - 1);
    phases.push_back(Phase::rational(pdist(rng), q));
  }
  const OperatorMatrix basis = haar_unitary(rng, d);
  auto dec = from_eigenbasis(phases, basis, tol);
  Eigen::VectorXcd diag(d);
  for (int i = 0; i < d; ++i) diag[i] = phases[i].value();
  OperatorMatrix u = basis * diag.asDiagonal() * basis.adjoint();
  return {std::move(u), std::move(dec)};
}

}  // namespace entangled
