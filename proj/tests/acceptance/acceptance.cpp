// End-to-end acceptance run: one PASS/FAIL line per criterion, exit status 1
// if any criterion fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "entangled/cli.hpp"
#include "entangled/correlations.hpp"
#include "entangled/engines.hpp"
#include "entangled/rng.hpp"
#include "entangled/scenario.hpp"
#include "../support/oracles.hpp"

using namespace entangled;

namespace {

const SeedSequence kRoot(20261014);

struct Verdict {
  bool pass;
  std::string detail;
};

std::vector<OperatorMatrix> unit_ops(std::mt19937_64& rng, int count, int d) {
  std::vector<OperatorMatrix> ops;
  for (int i = 0; i < count; ++i) ops.push_back(random_operator(rng, d));
  return ops;
}

std::vector<Partition> pair_partitions_upto(int k) {
  std::vector<Partition> all;
  for (int j = 1; j <= k; ++j)
    for (auto& p : enumerate_pair_partitions(j)) all.push_back(p);
  return all;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

Verdict oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto parts = pair_partitions_upto(3);
  const auto seeds = kRoot.derive("oracle-equivalence");
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    auto rng = seeds.derive(static_cast<std::uint64_t>(i)).engine();
    const auto& p = parts[static_cast<std::size_t>(i) % parts.size()];
    const int d = std::uniform_int_distribution<int>(1, 5)(rng);
    const std::int64_t n = std::uniform_int_distribution<std::int64_t>(1, 40)(rng);
    const PhaseSpec mode{i % 2 ? PhaseMode::rational : PhaseMode::haar, 8};
    const auto sys = random_system(rng(), d, mode);
    const auto ops = unit_ops(rng, p.size() - 1, d);
    double scale = 1.0;
    for (const auto& a : ops) scale *= frobenius_norm(a);
    const auto direct = cesaro_direct(sys.unitary, p, ops, n).matrix;
    const auto spectral = cesaro_spectral(sys.dec, p, ops, n).matrix;
    worst = std::max(worst, frobenius_norm(direct - spectral) / scale);
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-9 && t <= 60.0,
          fmt::format("max ||direct - spectral||_F / prod ||A_j||_F = {:.3e} (<= 1e-9), {:.1f} s (<= 60 s)", worst, t)};
}

Verdict convergence_witness() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto parts = pair_partitions_upto(3);
  const auto seeds = kRoot.derive("convergence-witness");
  const std::vector<std::int64_t> ns = {1000, 10000, 100000};
  int systems = 0, violations = 0;
  double worst_ratio = 0.0, worst_excess = -1.0;
  for (std::uint64_t attempt = 0; systems < 50; ++attempt) {
    auto rng = seeds.derive(attempt).engine();
    const int d = std::uniform_int_distribution<int>(2, 4)(rng);
    const auto sys = random_system(rng(), d, {PhaseMode::rational, 6});
    if (spectral_gap(sys.dec, 1e-8) < 0.1) continue;
    ++systems;
    const auto& p = parts[static_cast<std::size_t>(systems) % parts.size()];
    const auto ops = unit_ops(rng, p.size() - 1, d);
    const auto rep = convergence_report(sys.unitary, sys.dec, p, ops, ns, Engine::spectral);
    for (const auto& row : rep.rows) {
      worst_excess = std::max(worst_excess, row.errorOpNorm - row.certifiedBound);
      if (!(row.errorOpNorm <= row.certifiedBound + 1e-9)) ++violations;
    }
    const double b3 = rep.rows[0].certifiedBound, b5 = rep.rows[2].certifiedBound;
    if (!(b5 <= 1.1e-2 * b3)) ++violations;
    if (b3 > 0.0) worst_ratio = std::max(worst_ratio, b5 / b3);
  }
  const double t = seconds_since(t0);
  return {violations == 0 && t <= 120.0,
          fmt::format("{} systems, max(error - bound) = {:.3e}, max bound(1e5)/bound(1e3) = {:.4e} (<= 1.1e-2), "
                      "{} violations, {:.1f} s (<= 120 s)",
                      systems, worst_excess, worst_ratio, violations, t)};
}

// Eigenphases with explicit conjugate pairs as float turns, so resonance is
// decided by tolerance rather than exact arithmetic.
SpectralDecomposition paired_float_system(std::mt19937_64& rng, int d) {
  std::uniform_real_distribution<double> turn(0.0, 1.0);
  std::vector<Phase> ph;
  while (static_cast<int>(ph.size()) < d) {
    const double u = turn(rng);
    if (u < 0.2) {
      ph.push_back(Phase::turns(0.0));
    } else {
      ph.push_back(Phase::turns(u));
      if (static_cast<int>(ph.size()) < d && turn(rng) < 0.7) ph.push_back(Phase::turns(1.0 - u));
    }
  }
  return from_eigenbasis(ph, haar_unitary(rng, d));
}

Verdict limit_is_contractive() {
  const auto seeds = kRoot.derive("limit-contractive");
  double worst_form = 0.0, worst_norm = 0.0;
  for (int i = 0; i < 500; ++i) {
    auto rng = seeds.derive(static_cast<std::uint64_t>(i)).engine();
    const int k = std::uniform_int_distribution<int>(1, 3)(rng);
    const auto parts = enumerate_pair_partitions(k);
    const auto& p = parts[std::uniform_int_distribution<std::size_t>(0, parts.size() - 1)(rng)];
    const int d = std::uniform_int_distribution<int>(1, 5)(rng);
    const auto dec = i % 3 == 2 ? paired_float_system(rng, d) : random_system(rng(), d, {PhaseMode::rational, 6}).dec;
    const auto ops = unit_ops(rng, p.size() - 1, d);
    const auto sigma = antidiagonal_spectrum(dec, 1e-8);
    std::vector<Phase> subset;
    for (const auto& z : sigma)
      if (i % 4 == 0 || rng() % 2) subset.push_back(z);
    const Vector x = random_unit_vector(rng, d), y = random_unit_vector(rng, d);
    worst_form = std::max(worst_form, std::abs(form_value(dec, p, ops, x, y, subset)));
    worst_norm = std::max(worst_norm, op_norm(limit_operator(dec, p, ops)) - product_norm(ops));
  }
  return {worst_form <= 1.0 + 1e-10 && worst_norm <= 1e-10,
          fmt::format("500 draws, max |<S^F x, y>| = {:.12f} (<= 1 + 1e-10), max ||S|| - prod ||A_j|| = {:.3e} "
                      "(<= 1e-10)",
                      worst_form, worst_norm)};
}

Verdict mean_ergodic_rate() {
  const auto seeds = kRoot.derive("mean-ergodic");
  const std::int64_t n = 10000;
  int count = 0;
  double worst = -1.0;
  bool pass = true;
  for (std::uint64_t attempt = 0; count < 20; ++attempt) {
    auto rng = seeds.derive(attempt).engine();
    const int d = std::uniform_int_distribution<int>(1, 5)(rng);
    const auto sys = random_system(rng(), d, {attempt % 2 ? PhaseMode::haar : PhaseMode::rational, 8});
    double g = std::numeric_limits<double>::infinity();
    for (const auto& e : sys.dec.entries())
      if (!e.phase.is_one(1e-8)) g = std::min(g, e.phase.distance_to_one());
    if (g < 0.1) continue;
    ++count;
    const double err = op_norm(mean_ergodic(sys.unitary, n) - invariant_projection(sys.dec));
    const double bound = std::isinf(g) ? 0.0 : 2.0 / (double(n) * g);
    pass &= err <= bound + 1e-9;
    worst = std::max(worst, err - bound);
  }
  return {pass, fmt::format("20 unitaries at N = 1e4, max(error - 2/(N g)) = {:.3e} (<= 1e-9)", worst)};
}

const char* kDemoScenario = R"({
  "seed": 6,
  "unitary": {"kind": "random", "dim": 4, "phases": "rational", "maxDenominator": 6},
  "partition": "1,2,1,3,2,3",
  "operators": [{"kind": "random"}, {"kind": "random"}, {"kind": "random"}, {"kind": "random"}, {"kind": "random"}],
  "Ns": [10000]
})";

Verdict demo_regression() {
  const auto s = parse_scenario(kDemoScenario);
  const auto& p = *s.partition;
  const auto ops = s.inner_operators();
  const double agree = op_norm(cesaro_direct(s.unitary, p, ops, 30).matrix - cesaro_spectral(s.dec(), p, ops, 30).matrix);
  const auto rep = convergence_report(s.unitary, s.dec(), p, ops, s.Ns, Engine::spectral);
  const auto& row = rep.rows.front();

  std::ostringstream out, err;
  const int code = cli::run({"demo-appendix"}, out, err);
  // the demo's last row is the same system at N = 1e4
  std::string last;
  std::istringstream csv(out.str());
  for (std::string line; std::getline(csv, line);)
    if (!line.empty()) last = line;
  const bool same = last.rfind("10000,spectral,", 0) == 0 &&
                    last.find(fmt::format(",{:.17g},", row.errorOpNorm)) != std::string::npos;
  const bool pass = agree <= 1e-10 && row.errorOpNorm <= row.certifiedBound && code == 0 && same;
  return {pass, fmt::format("direct vs spectral at N=30 {:.3e} (<= 1e-10), error(1e4) {:.3e} <= bound {:.3e}, "
                            "demo-appendix exit {}, demo row matches: {}",
                            agree, row.errorOpNorm, row.certifiedBound, code, same ? "yes" : "no")};
}

// U with an invariant subspace of dimension `fixed`; returns the basis too.
std::pair<SpectralDecomposition, OperatorMatrix> system_with_fixed_space(std::mt19937_64& rng, int d, int fixed) {
  std::vector<Phase> ph(static_cast<std::size_t>(fixed), Phase::rational(0, 1));
  std::uniform_int_distribution<int> den(2, 6);
  while (static_cast<int>(ph.size()) < d) {
    const int q = den(rng);
    ph.push_back(Phase::rational(std::uniform_int_distribution<int>(1, q - 1)(rng), q));
  }
  const OperatorMatrix v = haar_unitary(rng, d);
  return {from_eigenbasis(ph, v), v};
}

Verdict correlation_limits() {
  const auto seeds = kRoot.derive("correlations");
  const std::int64_t n = 10000;
  double worst = -1.0, worst_small = -1.0, worst_identity = 0.0;
  bool pass = true;
  for (int i = 0; i < 20; ++i) {
    auto rng = seeds.derive(static_cast<std::uint64_t>(i)).engine();
    const bool vector_state = i < 10;
    const int d = std::uniform_int_distribution<int>(2, 4)(rng);
    const int fixed = vector_state ? 1 : std::uniform_int_distribution<int>(1, d - 1)(rng);
    auto [dec, v] = system_with_fixed_space(rng, d, fixed);
    const OperatorMatrix u = reconstruct(dec);
    const OperatorMatrix v0 = v.leftCols(fixed);
    StateSpec state;
    if (vector_state) {
      state = VectorState{v0.col(0)};
    } else {
      std::normal_distribution<double> g;
      OperatorMatrix r(fixed, fixed);
      for (Eigen::Index a = 0; a < fixed; ++a)
        for (Eigen::Index b = 0; b < fixed; ++b) r(a, b) = cplx(g(rng), g(rng));
      OperatorMatrix rho = r * r.adjoint();
      rho /= rho.trace().real();
      OperatorMatrix t = v0 * rho * v0.adjoint();
      t = (t + t.adjoint()) / 2.0;
      state = TraceState{t};
    }
    const auto sys = make_system(u, dec, state);
    const int k = 1 + i % 2;
    const auto parts = enumerate_pair_partitions(k);
    const auto& p = parts[static_cast<std::size_t>(i / 2) % parts.size()];
    auto ops = unit_ops(rng, p.size() + 1, d);
    ops.front() *= 2.0;
    ops.back() *= 0.5 + static_cast<double>(i);
    const CorrelationSpec spec{p, ops};
    const double outer = op_norm(ops.front()) * op_norm(ops.back());

    const cplx lim = correlation_limit(sys, spec);
    const double gap = std::abs(cesaro_correlation(sys, spec, n) - lim) -
                       error_bound(dec, p, spec.inner(), n) * outer;
    worst = std::max(worst, gap);
    pass &= gap <= 1e-9;
    // independent brute-force sum at a smaller N, checked against the same bound
    CorrelationOptions direct;
    direct.route = CorrelationRoute::direct;
    const std::int64_t small = k == 1 ? 2000 : 150;
    const double gap_small = std::abs(cesaro_correlation(sys, spec, small, direct) - lim) -
                             error_bound(dec, p, spec.inner(), small) * outer;
    worst_small = std::max(worst_small, gap_small);
    pass &= gap_small <= 1e-9;

    std::uniform_int_distribution<std::int64_t> nd(0, 1000);
    for (int t = 0; t < 100; ++t) {
      std::vector<std::int64_t> idx(static_cast<std::size_t>(k));
      for (auto& x : idx) x = nd(rng);
      const double diff = std::abs(correlation_term_gamma(sys, spec, idx) - correlation_term_sandwich(sys, spec, idx));
      worst_identity = std::max(worst_identity, diff);
    }
  }
  pass &= worst_identity <= 1e-10;
  return {pass, fmt::format("20 systems, max(|corr(1e4) - limit| - bound) = {:.3e} (<= 1e-9), brute force at small N "
                            "{:.3e}, max |gamma - sandwich| = {:.3e} (<= 1e-10)",
                            worst, worst_small, worst_identity)};
}

Verdict partition_suite() {
  const long long expected[] = {1, 3, 15, 105, 945};
  bool pass = true;
  std::string counts;
  for (int k = 1; k <= 5; ++k) {
    const auto all = enumerate_pair_partitions(k);
    pass &= static_cast<long long>(all.size()) == expected[k - 1];
    counts += (k > 1 ? "," : "") + std::to_string(all.size());
  }
  int mismatches = 0, crossing = 0, chains = 0;
  for (const auto& p : enumerate_pair_partitions(5)) {
    const bool c = is_crossing(p);
    crossing += c;
    mismatches += c != oracle::crossing_brute_force(p.labels());
    Partition cur = p;
    while (cur.classes() > 1) cur = remove_last_class(cur).reduced;
    chains += cur == Partition::parse("1,1");
  }
  pass &= mismatches == 0 && chains == 945;
  return {pass, fmt::format("counts {} (1,3,15,105,945), crossing mismatches {} of 945 ({} crossing), chains ending "
                            "at 1,1: {}/945",
                            counts, mismatches, crossing, chains)};
}

Verdict determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "entangled_acceptance";
  fs::create_directories(dir);
  const std::vector<std::pair<std::string, std::string>> scenarios = {
      {"direct.json", R"({"seed": 3, "unitary": {"kind": "random", "dim": 3, "phases": "haar"},
         "partition": "1,2,1,2", "operators": [{"kind": "random"}, {"kind": "random"}, {"kind": "random"}],
         "engine": "direct", "Ns": [10, 100, 700]})"},
      {"spectral.json", R"({"seed": 6, "unitary": {"kind": "random", "dim": 4, "phases": "rational"},
         "partition": "1,2,1,3,2,3", "operators": [{"kind": "random"}, {"kind": "random"}, {"kind": "random"},
         {"kind": "random"}, {"kind": "random"}], "engine": "spectral", "Ns": [10, 1000, 100000]})"},
      {"nested.json", R"({"seed": 8, "unitary": {"kind": "random", "dim": 5, "phases": "haar"},
         "partition": "1,2,3,3,2,1", "operators": [{"kind": "random"}, {"kind": "random"}, {"kind": "random"},
         {"kind": "random"}, {"kind": "random"}], "engine": "nested", "Ns": [7, 70, 7000]})"},
  };
  int identical = 0, runs = 0;
  for (const auto& [name, body] : scenarios) {
    const fs::path path = dir / name;
    std::ofstream(path) << body;
    std::vector<std::string> outputs;
    for (const char* threads : {"1", "1", "3"}) {
      setenv("ENTANGLED_THREADS", threads, 1);
      std::ostringstream out, err;
      const int code = cli::run({"converge", "--scenario", path.string()}, out, err);
      outputs.push_back(code == 0 ? out.str() : "exit " + std::to_string(code) + err.str());
    }
    unsetenv("ENTANGLED_THREADS");
    runs += 2;
    identical += (outputs[0] == outputs[1]) + (outputs[0] == outputs[2]);
    if (outputs[0].rfind("N,engine,", 0) != 0) identical -= 2;
  }
  fs::remove_all(dir);
  return {identical == runs,
          fmt::format("{}/{} repeated converge runs byte-identical (1 vs 1 and 1 vs 3 threads; direct, spectral, "
                      "nested)",
                      identical, runs)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"oracle equivalence", oracle_equivalence},
      {"convergence witness", convergence_witness},
      {"limit operator contractive", limit_is_contractive},
      {"mean ergodic rate", mean_ergodic_rate},
      {"crossing demo regression", demo_regression},
      {"correlation limits", correlation_limits},
      {"partition suite", partition_suite},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s criterion %zu %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed ? 1 : 0;
}
