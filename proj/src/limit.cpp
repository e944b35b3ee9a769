#include <algorithm>
#include <chrono>
#include <cstring>
#include <limits>
#include <unordered_map>

#include <fmt/format.h>

#include "block_tuples.hpp"
#include "entangled/engines.hpp"
#include "parallel.hpp"

namespace entangled {

namespace {

// closingMask[b] == false forbids block b at the closing slot of a class.
OperatorMatrix resonant_sum(const SpectralDecomposition& dec, const Partition& p,
                            std::span<const OperatorMatrix> ops, const std::vector<bool>& closingMask,
                            const EngineOptions& opts, const char* who) {
  detail::check_operands(p, ops, dec.dim(), opts, who);
  detail::check_tuple_budget(dec.size(), p.size(), opts.spectralBudget, who);
  const auto layout = detail::layout_of(p);
  const detail::BlockCache cache(dec, ops);
  const Eigen::Index d = dec.dim();
  const double tol = opts.resonanceTol;
  std::vector<OperatorMatrix> partial(dec.size());

  detail::for_each_index(dec.size(), detail::resolve_threads(opts.threads), [&](std::size_t b0) {
    OperatorMatrix acc = OperatorMatrix::Zero(d, d);
    detail::visit_tuples(
        dec, cache, layout, static_cast<int>(b0),
        [&](int, const Phase& sum, int block) {
          return (closingMask[block] && sum.is_one(tol)) ? cplx(1.0) : cplx(0.0);
        },
        [&](cplx w, const OperatorMatrix& product, std::span<const Phase>) { acc += w * product; });
    partial[b0] = std::move(acc);
  });

  OperatorMatrix total = OperatorMatrix::Zero(d, d);
  for (const auto& part : partial) total += part;
  return total;
}

std::vector<bool> subset_mask(const SpectralDecomposition& dec, std::span<const Phase> subset,
                              double tol) {
  const auto anti = antidiagonal_mask(dec, tol);
  std::vector<bool> mask(dec.size(), false);
  for (const auto& z : subset) {
    const auto i = dec.find(z);
    if (!i || !anti[*i]) {
      throw std::invalid_argument("limit_truncated: phase " + z.to_string() +
                                  " is not in the antidiagonal spectrum");
    }
    mask[*i] = true;
  }
  return mask;
}

struct PhaseKey {
  bool exact;
  std::int64_t num;
  std::int64_t den;
  std::uint64_t bits;
  bool operator==(const PhaseKey&) const = default;
};

struct PhaseKeyHash {
  std::size_t operator()(const PhaseKey& k) const noexcept {
    std::size_t h = std::hash<std::int64_t>{}(k.num);
    h = h * 1000003u ^ std::hash<std::int64_t>{}(k.den);
    h = h * 1000003u ^ std::hash<std::uint64_t>{}(k.bits);
    return h ^ (k.exact ? 0x9e37u : 0u);
  }
};

PhaseKey key_of(const Phase& p) {
  PhaseKey k{p.exact(), p.numerator(), p.denominator(), 0};
  if (!p.exact()) {
    const double t = p.value_turns();
    std::memcpy(&k.bits, &t, sizeof t);
  }
  return k;
}

}  // namespace

OperatorMatrix limit_operator(const SpectralDecomposition& dec, const Partition& p,
                              std::span<const OperatorMatrix> ops, const EngineOptions& opts) {
  const std::vector<bool> all(dec.size(), true);
  return resonant_sum(dec, p, ops, all, opts, "limit_operator");
}

OperatorMatrix limit_truncated(const SpectralDecomposition& dec, const Partition& p,
                               std::span<const OperatorMatrix> ops, std::span<const Phase> subset,
                               const EngineOptions& opts) {
  if (!p.is_pair()) throw std::invalid_argument("limit_truncated: pair partitions only");
  const auto mask = subset_mask(dec, subset, opts.resonanceTol);
  if (std::none_of(mask.begin(), mask.end(), [](bool b) { return b; })) {
    detail::check_operands(p, ops, dec.dim(), opts, "limit_truncated");
    return OperatorMatrix::Zero(dec.dim(), dec.dim());
  }
  // Within a resonant pair the closing phase lies in the antidiagonal
  // spectrum, so the full subset selects exactly the tuples of the limit.
  const auto anti = antidiagonal_mask(dec, opts.resonanceTol);
  if (mask == anti) return limit_operator(dec, p, ops, opts);
  return resonant_sum(dec, p, ops, mask, opts, "limit_truncated");
}

cplx form_value(const SpectralDecomposition& dec, const Partition& p,
                std::span<const OperatorMatrix> ops, const Vector& x, const Vector& y,
                std::span<const Phase> subset, const EngineOptions& opts) {
  if (x.size() != dec.dim() || y.size() != dec.dim()) {
    throw std::invalid_argument("form_value: vector dimension mismatch");
  }
  const OperatorMatrix s = limit_truncated(dec, p, ops, subset, opts);
  return y.dot(s * x);
}

CertifiedBound::CertifiedBound(const SpectralDecomposition& dec, const Partition& p,
                               std::span<const OperatorMatrix> ops, const EngineOptions& opts)
    : classes_(p.classes()) {
  detail::check_operands(p, ops, dec.dim(), opts, "error_bound");
  detail::check_tuple_budget(dec.size(), p.size(), opts.spectralBudget, "error_bound");
  const auto layout = detail::layout_of(p);
  const detail::BlockCache cache(dec, ops);
  const double tol = opts.resonanceTol;

  struct Leaf {
    std::vector<Phase> sums;
    double norm;
  };
  std::vector<std::vector<Leaf>> partial(dec.size());
  detail::for_each_index(dec.size(), detail::resolve_threads(opts.threads), [&](std::size_t b0) {
    auto& out = partial[b0];
    detail::visit_tuples(
        dec, cache, layout, static_cast<int>(b0), [](int, const Phase&, int) { return cplx(1.0); },
        [&](cplx, const OperatorMatrix& product, std::span<const Phase> sums) {
          const double norm = op_norm(product);
          if (norm == 0.0) return;
          out.push_back({std::vector<Phase>(sums.begin(), sums.end()), norm});
        });
  });

  std::unordered_map<PhaseKey, std::uint32_t, PhaseKeyHash> lookup;
  gap_ = std::numeric_limits<double>::infinity();
  for (const auto& leaves : partial) {
    for (const auto& leaf : leaves) {
      bool all_resonant = true;
      double leaf_gap = std::numeric_limits<double>::infinity();
      for (const auto& s : leaf.sums) {
        auto [it, inserted] = lookup.try_emplace(key_of(s), static_cast<std::uint32_t>(distinct_.size()));
        if (inserted) distinct_.push_back(s);
        sum_index_.push_back(it->second);
        if (!s.is_one(tol)) {
          all_resonant = false;
          leaf_gap = std::min(leaf_gap, s.distance_to_one());
        }
      }
      resonant_.push_back(all_resonant);
      norms_.push_back(leaf.norm);
      if (!all_resonant) {
        ++nonresonant_;
        max_nonresonant_norm_ = std::max(max_nonresonant_norm_, leaf.norm);
        gap_ = std::min(gap_, leaf_gap);
      }
    }
  }
}

double CertifiedBound::at(std::int64_t n) const {
  if (n < 1) throw std::invalid_argument("error_bound: N must be positive");
  std::vector<cplx> kern(distinct_.size());
  for (std::size_t i = 0; i < distinct_.size(); ++i) kern[i] = kernel(distinct_[i], n);
  double total = 0.0;
  for (std::size_t t = 0; t < norms_.size(); ++t) {
    cplx w = 1.0;
    for (int c = 0; c < classes_; ++c) w *= kern[sum_index_[t * classes_ + c]];
    total += std::abs(w - (resonant_[t] ? 1.0 : 0.0)) * norms_[t];
  }
  return total;
}

double CertifiedBound::rate_constant() const {
  if (nonresonant_ == 0) return 0.0;
  return 2.0 * double(nonresonant_) * max_nonresonant_norm_ / gap_;
}

double error_bound(const SpectralDecomposition& dec, const Partition& p,
                   std::span<const OperatorMatrix> ops, std::int64_t n, const EngineOptions& opts) {
  return CertifiedBound(dec, p, ops, opts).at(n);
}

ConvergenceReport convergence_report(const OperatorMatrix& u, const SpectralDecomposition& dec,
                                     const Partition& p, std::span<const OperatorMatrix> ops,
                                     std::span<const std::int64_t> ns, Engine engine,
                                     const EngineOptions& opts) {
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (ns[i] < 1 || (i > 0 && ns[i] <= ns[i - 1])) {
      throw std::invalid_argument("convergence_report: Ns must be positive and strictly increasing");
    }
  }
  ConvergenceReport report;
  const OperatorMatrix limit = limit_operator(dec, p, ops, opts);
  const CertifiedBound bound(dec, p, ops, opts);
  report.spectralGap = spectral_gap(dec, opts.resonanceTol);
  report.limitNorm = op_norm(limit);
  report.productNorm = product_norm(ops);
  for (const auto n : ns) {
    const CesaroResult r = cesaro(engine, u, dec, p, ops, n, opts);
    const OperatorMatrix diff = r.matrix - limit;
    report.rows.push_back({n, op_norm(diff), frobenius_norm(diff), bound.at(n), engine, r.elapsed});
  }
  return report;
}

}  // namespace entangled
