#include <chrono>
#include <cmath>
#include <cstdlib>
#include <string>

#include <fmt/format.h>

#include "block_tuples.hpp"
#include "entangled/engines.hpp"
#include "parallel.hpp"

namespace entangled {

namespace detail {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("ENTANGLED_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

SlotLayout layout_of(const Partition& p) {
  SlotLayout l;
  l.m = p.size();
  l.k = p.classes();
  l.cls.resize(l.m);
  l.opens.assign(l.m, false);
  l.closes.assign(l.m, false);
  l.first_slot.assign(l.k, -1);
  std::vector<int> last(l.k, -1);
  for (int s = 0; s < l.m; ++s) {
    const int c = p.labels()[s] - 1;
    l.cls[s] = c;
    if (l.first_slot[c] < 0) {
      l.first_slot[c] = s;
      l.opens[s] = true;
    }
    last[c] = s;
  }
  for (int c = 0; c < l.k; ++c) l.closes[last[c]] = true;
  return l;
}

void check_operands(const Partition& p, std::span<const OperatorMatrix> ops, Eigen::Index d,
                    const EngineOptions& opts, const char* who) {
  if (!p.is_pair() && !opts.allowGeneralPartitions) {
    throw std::invalid_argument(fmt::format("{}: {} is not a pair partition", who, p.to_string()));
  }
  if (static_cast<int>(ops.size()) != p.size() - 1) {
    throw std::invalid_argument(fmt::format("{}: partition of {} elements needs {} operators, got {}",
                                            who, p.size(), p.size() - 1, ops.size()));
  }
  for (const auto& a : ops) {
    if (a.rows() != d || a.cols() != d) {
      throw std::invalid_argument(fmt::format("{}: operator dimension mismatch", who));
    }
  }
}

double check_tuple_budget(std::size_t blocks, int m, double budget, const char* who) {
  const double tuples = std::pow(double(blocks), m);
  if (tuples > budget) {
    throw BudgetExceeded(fmt::format("{}: {:.3g} block tuples exceed the budget of {:.3g}", who,
                                     tuples, budget));
  }
  return tuples;
}

BlockCache::BlockCache(const SpectralDecomposition& dec, std::span<const OperatorMatrix> ops)
    : blocks_(static_cast<int>(dec.size())) {
  const std::size_t count = ops.size() * dec.size() * dec.size();
  cache_.resize(count);
  zero_.resize(count);
  for (std::size_t j = 0; j < ops.size(); ++j) {
    for (int b = 0; b < blocks_; ++b) {
      const OperatorMatrix left = dec.projection(b) * ops[j];
      for (int bp = 0; bp < blocks_; ++bp) {
        const auto i = index(static_cast<int>(j), b, bp);
        cache_[i] = left * dec.projection(bp);
        zero_[i] = cache_[i].isZero(0.0);
      }
    }
  }
}

}  // namespace detail

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Chunk width over the outermost summation index of the direct engine; fixed
// so that the reduction tree does not depend on the thread count.
constexpr std::int64_t kDirectChunk = 16;

}  // namespace

std::string_view to_string(Engine e) {
  switch (e) {
    case Engine::direct: return "direct";
    case Engine::spectral: return "spectral";
    case Engine::nested: return "nested";
  }
  return "unknown";
}

Engine parse_engine(std::string_view name) {
  if (name == "direct") return Engine::direct;
  if (name == "spectral") return Engine::spectral;
  if (name == "nested") return Engine::nested;
  throw std::invalid_argument("unknown engine '" + std::string(name) + "'");
}

double product_norm(std::span<const OperatorMatrix> ops) {
  double prod = 1.0;
  for (const auto& a : ops) prod *= op_norm(a);
  return prod;
}

OperatorMatrix mean_ergodic(const OperatorMatrix& u, std::int64_t n, double unitarityTol) {
  require_square(u, "mean_ergodic");
  if (n < 1) throw std::invalid_argument("mean_ergodic: N must be positive");
  if (unitarity_residual(u) > unitarityTol) throw std::invalid_argument("mean_ergodic: not unitary");
  const Eigen::Index d = u.rows();
  OperatorMatrix power = OperatorMatrix::Identity(d, d);
  OperatorMatrix sum = OperatorMatrix::Zero(d, d);
  OperatorMatrix tmp(d, d);
  for (std::int64_t i = 0; i < n; ++i) {
    sum += power;
    tmp.noalias() = power * u;
    power.swap(tmp);
  }
  return sum / double(n);
}

CesaroResult cesaro_direct(const OperatorMatrix& u, const Partition& p,
                           std::span<const OperatorMatrix> ops, std::int64_t n,
                           const EngineOptions& opts) {
  const auto start = Clock::now();
  require_square(u, "cesaro_direct");
  if (n < 1) throw std::invalid_argument("cesaro_direct: N must be positive");
  detail::check_operands(p, ops, u.rows(), opts, "cesaro_direct");
  const int k = p.classes();
  const double tuples = std::pow(double(n), k);
  if (tuples > opts.directBudget) {
    throw BudgetExceeded(fmt::format("cesaro_direct: {:.3g} tuples exceed the budget of {:.3g}",
                                     tuples, opts.directBudget));
  }
  const Eigen::Index d = u.rows();
  if (double(n) * double(d * d) > opts.powerTableBudget) {
    throw BudgetExceeded("cesaro_direct: power table exceeds the memory budget");
  }

  std::vector<OperatorMatrix> powers(static_cast<std::size_t>(n));
  powers[0] = OperatorMatrix::Identity(d, d);
  for (std::int64_t i = 1; i < n; ++i) powers[i].noalias() = powers[i - 1] * u;

  const auto layout = detail::layout_of(p);
  const int m = layout.m;
  // Level c fixes n_c and multiplies the slots from the first occurrence of
  // class c up to (excluding) the first occurrence of class c+1; every slot
  // in that range belongs to a class <= c.
  std::vector<int> seg_begin(k + 1);
  for (int c = 0; c < k; ++c) seg_begin[c] = layout.first_slot[c];
  seg_begin[k] = m;

  const std::int64_t chunks = (n + kDirectChunk - 1) / kDirectChunk;
  std::vector<OperatorMatrix> partial(static_cast<std::size_t>(chunks));

  detail::for_each_index(static_cast<std::size_t>(chunks), detail::resolve_threads(opts.threads),
                         [&](std::size_t chunk) {
    std::vector<std::int64_t> idx(k, 0);
    std::vector<OperatorMatrix> prefix(k + 1, OperatorMatrix::Identity(d, d));
    OperatorMatrix tmp(d, d);
    OperatorMatrix acc = OperatorMatrix::Zero(d, d);

    auto apply_segment = [&](int c) {
      OperatorMatrix& cur = prefix[c + 1];
      cur = prefix[c];
      for (int s = seg_begin[c]; s < seg_begin[c + 1]; ++s) {
        tmp.noalias() = cur * powers[idx[layout.cls[s]]];
        cur.swap(tmp);
        if (s < m - 1) {
          tmp.noalias() = cur * ops[s];
          cur.swap(tmp);
        }
      }
    };
    auto level = [&](auto& self, int c) -> void {
      for (std::int64_t v = 0; v < n; ++v) {
        idx[c] = v;
        apply_segment(c);
        if (c == k - 1) {
          acc += prefix[k];
        } else {
          self(self, c + 1);
        }
      }
    };

    const std::int64_t lo = static_cast<std::int64_t>(chunk) * kDirectChunk;
    const std::int64_t hi = std::min(n, lo + kDirectChunk);
    for (std::int64_t v = lo; v < hi; ++v) {
      idx[0] = v;
      apply_segment(0);
      if (k == 1) {
        acc += prefix[1];
      } else {
        level(level, 1);
      }
    }
    partial[chunk] = std::move(acc);
  });

  OperatorMatrix total = OperatorMatrix::Zero(d, d);
  for (const auto& part : partial) total += part;
  total /= tuples;
  return {std::move(total), Engine::direct, n, seconds_since(start)};
}

CesaroResult cesaro_spectral(const SpectralDecomposition& dec, const Partition& p,
                             std::span<const OperatorMatrix> ops, std::int64_t n,
                             const EngineOptions& opts) {
  const auto start = Clock::now();
  if (n < 1) throw std::invalid_argument("cesaro_spectral: N must be positive");
  detail::check_operands(p, ops, dec.dim(), opts, "cesaro_spectral");
  detail::check_tuple_budget(dec.size(), p.size(), opts.spectralBudget, "cesaro_spectral");

  const auto layout = detail::layout_of(p);
  const detail::BlockCache cache(dec, ops);
  const Eigen::Index d = dec.dim();
  std::vector<OperatorMatrix> partial(dec.size());

  detail::for_each_index(dec.size(), detail::resolve_threads(opts.threads), [&](std::size_t b0) {
    OperatorMatrix acc = OperatorMatrix::Zero(d, d);
    detail::visit_tuples(
        dec, cache, layout, static_cast<int>(b0),
        [&](int, const Phase& sum, int) { return kernel(sum, n); },
        [&](cplx w, const OperatorMatrix& product, std::span<const Phase>) { acc += w * product; });
    partial[b0] = std::move(acc);
  });

  OperatorMatrix total = OperatorMatrix::Zero(d, d);
  for (const auto& part : partial) total += part;
  return {std::move(total), Engine::spectral, n, seconds_since(start)};
}

CesaroResult cesaro_nested(const SpectralDecomposition& dec, const Partition& p,
                           std::span<const OperatorMatrix> ops, std::int64_t n,
                           const EngineOptions& opts) {
  const auto start = Clock::now();
  if (n < 1) throw std::invalid_argument("cesaro_nested: N must be positive");
  EngineOptions pairOnly = opts;
  pairOnly.allowGeneralPartitions = false;
  detail::check_operands(p, ops, dec.dim(), pairOnly, "cesaro_nested");
  if (is_crossing(p)) {
    throw std::invalid_argument("cesaro_nested: " + p.to_string() + " is crossing");
  }
  const Eigen::Index d = dec.dim();
  const std::size_t nb = dec.size();

  // (1/N) sum_n U^n X U^n = sum_{b,b'} kernel(z_b z_b', N) E_b X E_b'
  std::vector<cplx> kern(nb * nb);
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t bp = 0; bp < nb; ++bp) kern[b * nb + bp] = kernel(dec.phase(b) + dec.phase(bp), n);
  }
  auto average = [&](const OperatorMatrix& x) {
    OperatorMatrix out = OperatorMatrix::Zero(d, d);
    for (std::size_t b = 0; b < nb; ++b) {
      const OperatorMatrix left = dec.projection(b) * x;
      for (std::size_t bp = 0; bp < nb; ++bp) {
        out.noalias() += kern[b * nb + bp] * (left * dec.projection(bp));
      }
    }
    return out;
  };

  // X_0 U^{s_0} X_1 U^{s_1} ... U^{s_{m-1}} X_m with X_0 = X_m = I.
  std::vector<OperatorMatrix> factors;
  factors.push_back(OperatorMatrix::Identity(d, d));
  for (const auto& a : ops) factors.push_back(a);
  factors.push_back(OperatorMatrix::Identity(d, d));
  std::vector<int> slots = p.labels();

  while (!slots.empty()) {
    std::size_t j = 0;
    while (j + 1 < slots.size() && slots[j] != slots[j + 1]) ++j;
    if (j + 1 >= slots.size()) throw std::logic_error("cesaro_nested: no adjacent pair");
    OperatorMatrix folded = factors[j] * average(factors[j + 1]) * factors[j + 2];
    factors.erase(factors.begin() + static_cast<std::ptrdiff_t>(j),
                  factors.begin() + static_cast<std::ptrdiff_t>(j + 3));
    factors.insert(factors.begin() + static_cast<std::ptrdiff_t>(j), std::move(folded));
    slots.erase(slots.begin() + static_cast<std::ptrdiff_t>(j),
                slots.begin() + static_cast<std::ptrdiff_t>(j + 2));
  }
  return {std::move(factors.front()), Engine::nested, n, seconds_since(start)};
}

CesaroResult cesaro(Engine engine, const OperatorMatrix& u, const SpectralDecomposition& dec,
                    const Partition& p, std::span<const OperatorMatrix> ops, std::int64_t n,
                    const EngineOptions& opts) {
  switch (engine) {
    case Engine::direct: return cesaro_direct(u, p, ops, n, opts);
    case Engine::spectral: return cesaro_spectral(dec, p, ops, n, opts);
    case Engine::nested: return cesaro_nested(dec, p, ops, n, opts);
  }
  throw std::invalid_argument("cesaro: unknown engine");
}

}  // namespace entangled
