#pragma once

// Shared machinery for everything expanded over eigenprojection tuples:
// the spectral engine, the limit operators and the certified bound.

#include <span>
#include <vector>

#include "entangled/engines.hpp"

namespace entangled::detail {

struct SlotLayout {
  int m = 0;
  int k = 0;
  std::vector<int> cls;         // 0-based class of each slot
  std::vector<bool> opens;      // first slot of its class
  std::vector<bool> closes;     // last slot of its class
  std::vector<int> first_slot;  // per class
};

SlotLayout layout_of(const Partition& p);

/// Validates partition kind, operator count and dimensions.
void check_operands(const Partition& p, std::span<const OperatorMatrix> ops, Eigen::Index d,
                    const EngineOptions& opts, const char* who);

/// B^m, with a BudgetExceeded when it passes `budget`.
double check_tuple_budget(std::size_t blocks, int m, double budget, const char* who);

/// Compressed operators E_b A_j E_b', computed once.
class BlockCache {
 public:
  BlockCache(const SpectralDecomposition& dec, std::span<const OperatorMatrix> ops);

  int blocks() const noexcept { return blocks_; }
  const OperatorMatrix& block(int j, int b, int bp) const {
    return cache_[index(j, b, bp)];
  }
  bool zero(int j, int b, int bp) const { return zero_[index(j, b, bp)]; }

 private:
  std::size_t index(int j, int b, int bp) const {
    return (static_cast<std::size_t>(j) * blocks_ + b) * blocks_ + bp;
  }
  int blocks_ = 0;
  std::vector<OperatorMatrix> cache_;
  std::vector<bool> zero_;
};

/// Depth-first walk over tuples (b0, b_1, ..., b_{m-1}) with b0 fixed, in
/// lexicographic order. `closure(cls, classSum, block)` is called when a slot
/// closes its class and returns the weight factor for that class; a zero
/// factor prunes the subtree. `leaf(weight, product, classSums)` receives the
/// tuple operator E_{b0} A_1 E_{b1} ... E_{b_{m-1}}.
template <class Closure, class Leaf>
void visit_tuples(const SpectralDecomposition& dec, const BlockCache& cache,
                  const SlotLayout& layout, int b0, Closure&& closure, Leaf&& leaf) {
  const int m = layout.m;
  const int nb = cache.blocks();
  std::vector<Phase> sums(layout.k);
  std::vector<int> chosen(m, 0);
  std::vector<OperatorMatrix> prefix(m);
  std::vector<cplx> weight(m, cplx(1.0));

  chosen[0] = b0;
  sums[layout.cls[0]] = dec.phase(b0);
  if (layout.closes[0]) {
    const cplx f = closure(layout.cls[0], sums[layout.cls[0]], b0);
    if (f == cplx(0.0)) return;
    weight[0] = f;
  }
  if (m == 1) {
    leaf(weight[0], dec.projection(b0), std::span<const Phase>(sums));
    return;
  }

  auto recurse = [&](auto& self, int s) -> void {
    const int c = layout.cls[s];
    const int prev = chosen[s - 1];
    for (int b = 0; b < nb; ++b) {
      if (cache.zero(s - 1, prev, b)) continue;
      const Phase saved = sums[c];
      sums[c] = layout.opens[s] ? dec.phase(b) : saved + dec.phase(b);
      cplx w = weight[s - 1];
      if (layout.closes[s]) {
        const cplx f = closure(c, sums[c], b);
        if (f == cplx(0.0)) {
          sums[c] = saved;
          continue;
        }
        w *= f;
      }
      chosen[s] = b;
      weight[s] = w;
      if (s == 1) {
        prefix[s] = cache.block(0, prev, b);
      } else {
        prefix[s].noalias() = prefix[s - 1] * cache.block(s - 1, prev, b);
      }
      if (s == m - 1) {
        leaf(w, prefix[s], std::span<const Phase>(sums));
      } else {
        self(self, s + 1);
      }
      sums[c] = saved;
    }
  };
  recurse(recurse, 1);
}

}  // namespace entangled::detail
