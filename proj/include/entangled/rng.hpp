#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace entangled {

/// Named, splittable seed source. Every random quantity in a run derives
/// from one root seed through a path of stream names, so adding a stream
/// never perturbs the others.
class SeedSequence {
 public:
  explicit SeedSequence(std::uint64_t root) : state_(mix(root)) {}

  SeedSequence derive(std::string_view name) const;
  SeedSequence derive(std::uint64_t index) const;

  std::uint64_t value() const noexcept { return state_; }
  std::mt19937_64 engine() const { return std::mt19937_64(state_); }

  static std::uint64_t mix(std::uint64_t x);

 private:
  struct Raw {};
  SeedSequence(Raw, std::uint64_t s) : state_(s) {}
  std::uint64_t state_;
};

}  // namespace entangled
