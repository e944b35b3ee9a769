#include "entangled/kernel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace entangled {

std::complex<double> kernel(const Phase& lambda, std::int64_t n) {
  if (n < 1) throw std::invalid_argument("kernel: N must be positive");
  const double u = lambda.signed_turns();
  if (u == 0.0) return {1.0, 0.0};
  const double un = lambda.scaled(n).signed_turns();
  if (un == 0.0) return {0.0, 0.0};
  // 1 - exp(2 pi i v) = -2i sin(pi v) exp(i pi v)
  const double ratio = std::sin(std::numbers::pi * un) / (double(n) * std::sin(std::numbers::pi * u));
  return ratio * unit_from_turns(0.5 * (un - u));
}

double kernel_bound(const Phase& lambda, std::int64_t n) {
  if (n < 1) throw std::invalid_argument("kernel_bound: N must be positive");
  const double dist = lambda.distance_to_one();
  if (dist == 0.0) return 1.0;
  return std::min(1.0, 2.0 / (double(n) * dist));
}

}  // namespace entangled
