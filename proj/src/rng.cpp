#include "entangled/rng.hpp"

namespace entangled {

// splitmix64 finalizer.
std::uint64_t SeedSequence::mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

SeedSequence SeedSequence::derive(std::string_view name) const {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return {Raw{}, mix(state_ ^ mix(h))};
}

SeedSequence SeedSequence::derive(std::uint64_t index) const {
  return {Raw{}, mix(state_ ^ mix(index + 0x632be59bd9b4e019ULL))};
}

}  // namespace entangled
