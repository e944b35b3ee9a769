#include "entangled/scenario.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "entangled/rng.hpp"

namespace entangled {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) { throw ScenarioError("scenario: " + what); }

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) fail(where + " is missing \"" + key + "\"");
  return obj.at(key);
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) fail(where + " must be a number");
  return v.get<double>();
}

std::string text(const json& v, const std::string& where) {
  if (!v.is_string()) fail(where + " must be a string");
  return v.get<std::string>();
}

// A number, or a [re, im] pair.
cplx complex_entry(const json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    return {v[0].get<double>(), v[1].get<double>()};
  }
  fail(where + " must be a number or an [re, im] pair");
}

OperatorMatrix real_matrix(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) fail(where + " must be a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(v.size());
  if (!v[0].is_array()) fail(where + " must be an array of rows");
  const auto cols = static_cast<Eigen::Index>(v[0].size());
  OperatorMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = v[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) fail(where + " has ragged rows");
    for (Eigen::Index j = 0; j < cols; ++j) {
      m(i, j) = number(row[static_cast<std::size_t>(j)], fmt::format("{}[{}][{}]", where, i, j));
    }
  }
  return m;
}

// {"re": [[...]], "im": [[...]]}, "im" optional.
OperatorMatrix complex_matrix(const json& spec, const std::string& where) {
  OperatorMatrix m = real_matrix(field(spec, "re", where), where + ".re");
  if (spec.contains("im")) {
    const OperatorMatrix im = real_matrix(spec.at("im"), where + ".im");
    if (im.rows() != m.rows() || im.cols() != m.cols()) fail(where + ": re and im shapes differ");
    m += cplx(0.0, 1.0) * im;
  }
  if (m.rows() != m.cols()) fail(where + " must be square");
  return m;
}

int dimension(const json& spec, const std::string& where) {
  const double d = number(field(spec, "dim", where), where + ".dim");
  if (d != std::floor(d) || d < 1 || d > 64) fail(where + ".dim must be an integer in 1..64");
  return static_cast<int>(d);
}

ToleranceSet parse_tolerances(const json& v) {
  ToleranceSet tol;
  if (!v.is_object()) fail("\"tolerances\" must be an object");
  for (const auto& [key, value] : v.items()) {
    const double x = number(value, "tolerances." + key);
    if (!(x > 0.0)) fail("tolerances." + key + " must be positive");
    if (key == "unitarity") tol.unitarity = x;
    else if (key == "cluster") tol.cluster = x;
    else if (key == "resonance") tol.resonance = x;
    else if (key == "projection") tol.projection = x;
    else if (key == "reconstruction") tol.reconstruction = x;
    else fail("unknown tolerance \"" + key + "\"");
  }
  return tol;
}

void parse_unitary(const json& spec, const SeedSequence& seeds, Scenario& s) {
  const std::string kind = text(field(spec, "kind", "unitary"), "unitary.kind");
  const auto& tol = s.tolerances;
  try {
    if (kind == "identity") {
      const int d = dimension(spec, "unitary");
      const std::vector<Phase> ph(static_cast<std::size_t>(d), Phase::rational(0, 1));
      s.decomposition = from_eigenbasis(ph, OperatorMatrix::Identity(d, d), tol);
    } else if (kind == "diagonal-rational") {
      const auto& list = field(spec, "phases", "unitary");
      if (!list.is_array() || list.empty()) fail("unitary.phases must be a non-empty array");
      std::vector<Phase> ph;
      for (const auto& p : list) {
        const std::string t = text(p, "unitary.phases[]");
        if (t.find('/') == std::string::npos) fail("unitary.phases entries must look like \"p/q\"");
        ph.push_back(Phase::parse(t));
      }
      const auto d = static_cast<Eigen::Index>(ph.size());
      s.decomposition = from_eigenbasis(ph, OperatorMatrix::Identity(d, d), tol);
    } else if (kind == "diagonal-turns") {
      const auto& list = field(spec, "turns", "unitary");
      if (!list.is_array() || list.empty()) fail("unitary.turns must be a non-empty array");
      Vector diag(static_cast<Eigen::Index>(list.size()));
      for (std::size_t i = 0; i < list.size(); ++i) diag[i] = unit_from_turns(number(list[i], "unitary.turns[]"));
      s.unitary = diag.asDiagonal();
      s.decomposition = decompose(s.unitary, tol);
    } else if (kind == "matrix") {
      s.unitary = complex_matrix(spec, "unitary");
      s.decomposition = decompose(s.unitary, tol);
    } else if (kind == "random") {
      const int d = dimension(spec, "unitary");
      PhaseSpec mode;
      const std::string phases = spec.contains("phases") ? text(spec.at("phases"), "unitary.phases") : "haar";
      if (phases == "haar") {
        mode.mode = PhaseMode::haar;
      } else if (phases == "rational") {
        mode.mode = PhaseMode::rational;
        if (spec.contains("maxDenominator")) {
          const double q = number(spec.at("maxDenominator"), "unitary.maxDenominator");
          if (q != std::floor(q) || q < 1 || q > 1e6) fail("unitary.maxDenominator must be a positive integer");
          mode.maxDenominator = static_cast<int>(q);
        }
      } else {
        fail("unitary.phases must be \"haar\" or \"rational\"");
      }
      auto sys = random_system(seeds.derive("unitary").value(), d, mode, tol);
      s.unitary = std::move(sys.unitary);
      s.decomposition = std::move(sys.dec);
    } else {
      fail("unknown unitary kind \"" + kind + "\"");
    }
  } catch (const ScenarioError&) {
    throw;
  } catch (const std::exception& e) {
    fail(std::string("unitary: ") + e.what());
  }
  if (s.unitary.size() == 0) s.unitary = reconstruct(*s.decomposition);
}

Partition parse_partition(const json& v) {
  try {
    if (v.is_string()) return Partition::parse(v.get<std::string>());
    if (v.is_array()) {
      std::vector<int> labels;
      for (const auto& x : v) {
        if (!x.is_number_integer()) fail("partition labels must be integers");
        labels.push_back(x.get<int>());
      }
      return Partition(labels);
    }
  } catch (const ScenarioError&) {
    throw;
  } catch (const std::exception& e) {
    fail(std::string("partition: ") + e.what());
  }
  fail("partition must be a string like \"1,2,1,2\" or an integer array");
}

OperatorMatrix parse_operator(const json& spec, std::size_t index, int d, const SeedSequence& seeds) {
  const std::string where = fmt::format("operators[{}]", index);
  const std::string kind = text(field(spec, "kind", where), where + ".kind");
  OperatorMatrix a;
  if (kind == "identity") {
    a = OperatorMatrix::Identity(d, d);
  } else if (kind == "random") {
    auto rng = seeds.derive("operator").derive(static_cast<std::uint64_t>(index)).engine();
    a = random_operator(rng, d);
  } else if (kind == "matrix") {
    a = complex_matrix(spec, where);
  } else {
    fail("unknown operator kind \"" + kind + "\" at " + where);
  }
  if (a.rows() != d) fail(fmt::format("{} has dimension {}, unitary has {}", where, a.rows(), d));
  if (spec.contains("scale")) a *= number(spec.at("scale"), where + ".scale");
  if (!all_finite(a)) fail(where + " has non-finite entries");
  return a;
}

StateSpec parse_state(const json& spec, int d) {
  const std::string kind = text(field(spec, "kind", "state"), "state.kind");
  if (kind == "vector") {
    const auto& list = field(spec, "omega", "state");
    if (!list.is_array() || static_cast<int>(list.size()) != d) {
      fail(fmt::format("state.omega must have {} entries", d));
    }
    Vector omega(d);
    for (int i = 0; i < d; ++i) omega[i] = complex_entry(list[static_cast<std::size_t>(i)], "state.omega[]");
    return VectorState{omega};
  }
  if (kind == "trace") {
    OperatorMatrix t;
    if (spec.contains("diag")) {
      const auto& list = spec.at("diag");
      if (!list.is_array() || static_cast<int>(list.size()) != d) {
        fail(fmt::format("state.diag must have {} entries", d));
      }
      Vector diag(d);
      for (int i = 0; i < d; ++i) diag[i] = number(list[static_cast<std::size_t>(i)], "state.diag[]");
      t = diag.asDiagonal();
    } else {
      t = complex_matrix(spec, "state");
    }
    if (t.rows() != d) fail("state density dimension mismatch");
    return TraceState{t};
  }
  fail("unknown state kind \"" + kind + "\"");
}

}  // namespace

bool Scenario::has_outer_operators() const {
  return partition && static_cast<int>(operators.size()) == partition->size() + 1;
}

std::span<const OperatorMatrix> Scenario::inner_operators() const {
  std::span<const OperatorMatrix> all(operators);
  return has_outer_operators() ? all.subspan(1, all.size() - 2) : all;
}

EngineOptions Scenario::engine_options() const {
  EngineOptions opts;
  opts.resonanceTol = tolerances.resonance;
  return opts;
}

Scenario parse_scenario(std::string_view input, std::optional<std::uint64_t> seedOverride) {
  json doc;
  try {
    doc = json::parse(input);
  } catch (const json::parse_error& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail("top level must be an object");

  static const char* known[] = {"seed", "unitary", "partition", "operators", "state", "engine",
                                "Ns", "tolerances", "output", "description"};
  for (const auto& [key, _] : doc.items()) {
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) fail("unknown field \"" + key + "\"");
  }

  Scenario s;
  if (doc.contains("seed")) {
    const auto& v = doc.at("seed");
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      fail("seed must be a non-negative integer");
    }
    s.seed = v.get<std::uint64_t>();
  }
  if (seedOverride) s.seed = *seedOverride;
  const SeedSequence seeds(s.seed);

  if (doc.contains("tolerances")) s.tolerances = parse_tolerances(doc.at("tolerances"));
  parse_unitary(field(doc, "unitary", "scenario"), seeds, s);
  const int d = s.dim();

  if (doc.contains("partition")) s.partition = parse_partition(doc.at("partition"));
  if (doc.contains("operators")) {
    const auto& list = doc.at("operators");
    if (!list.is_array()) fail("operators must be an array");
    if (!s.partition) fail("operators given without a partition");
    for (std::size_t i = 0; i < list.size(); ++i) s.operators.push_back(parse_operator(list[i], i, d, seeds));
  }
  if (s.partition) {
    const auto m = static_cast<std::size_t>(s.partition->size());
    if (!doc.contains("operators")) {
      s.operators.assign(m - 1, OperatorMatrix::Identity(d, d));
    } else if (s.operators.size() != m - 1 && s.operators.size() != m + 1) {
      fail(fmt::format("partition {} needs {} or {} operators, got {}", s.partition->to_string(), m - 1, m + 1,
                       s.operators.size()));
    }
  }
  if (doc.contains("state")) s.state = parse_state(doc.at("state"), d);

  if (doc.contains("engine")) {
    try {
      s.engine = parse_engine(text(doc.at("engine"), "engine"));
    } catch (const ScenarioError&) {
      throw;
    } catch (const std::exception& e) {
      fail(e.what());
    }
  }
  if (doc.contains("Ns")) {
    const auto& list = doc.at("Ns");
    if (!list.is_array() || list.empty()) fail("Ns must be a non-empty array");
    s.Ns.clear();
    for (const auto& v : list) {
      if (!v.is_number_integer() || v.get<std::int64_t>() < 1) fail("Ns entries must be positive integers");
      const auto n = v.get<std::int64_t>();
      if (!s.Ns.empty() && n <= s.Ns.back()) fail("Ns must be strictly increasing");
      s.Ns.push_back(n);
    }
  }
  if (doc.contains("output")) s.output = text(doc.at("output"), "output");
  return s;
}

Scenario load_scenario(const std::filesystem::path& path, std::optional<std::uint64_t> seedOverride) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), seedOverride);
}

}  // namespace entangled
