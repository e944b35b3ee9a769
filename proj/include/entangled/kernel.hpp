#pragma once

#include <complex>
#include <cstdint>

#include "entangled/phase.hpp"

namespace entangled {

/// Cesaro kernel (1/N) sum_{n<N} lambda^n for lambda = exp(2 pi i t).
///
/// Evaluated in closed form as (1 - lambda^N) / (N (1 - lambda)) with
/// both differences written through sin(pi u), so there is no cancellation
/// near lambda = 1. Exact phases reduce lambda^N exactly.
std::complex<double> kernel(const Phase& lambda, std::int64_t n);

/// min(1, 2 / (N |1 - lambda|)), an upper bound for |kernel(lambda, N)|.
double kernel_bound(const Phase& lambda, std::int64_t n);

}  // namespace entangled
