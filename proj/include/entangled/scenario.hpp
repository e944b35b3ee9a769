#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "entangled/correlations.hpp"
#include "entangled/engines.hpp"
#include "entangled/partition.hpp"
#include "entangled/spectral.hpp"

namespace entangled {

/// Anything wrong with a scenario file: syntax, schema, or inconsistent dimensions.
class ScenarioError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A fully materialized run description. Random pieces are drawn from
/// `seed` through named streams ("unitary", "operator/<i>").
struct Scenario {
  std::uint64_t seed = 0;
  OperatorMatrix unitary;
  std::optional<SpectralDecomposition> decomposition;
  std::optional<Partition> partition;
  /// Either A_1..A_{m-1} or A_0..A_m (the correlation form).
  std::vector<OperatorMatrix> operators;
  std::optional<StateSpec> state;
  Engine engine = Engine::spectral;
  std::vector<std::int64_t> Ns = {10, 100, 1000};
  ToleranceSet tolerances;
  std::string output;

  int dim() const { return static_cast<int>(unitary.rows()); }
  const SpectralDecomposition& dec() const { return *decomposition; }
  bool has_outer_operators() const;
  /// The operators between the unitary slots.
  std::span<const OperatorMatrix> inner_operators() const;
  EngineOptions engine_options() const;
};

/// Parses scenario JSON. `seedOverride` replaces the file's "seed".
Scenario parse_scenario(std::string_view json, std::optional<std::uint64_t> seedOverride = {});
Scenario load_scenario(const std::filesystem::path& path, std::optional<std::uint64_t> seedOverride = {});

}  // namespace entangled
