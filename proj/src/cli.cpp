#include "entangled/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <random>

#include <fmt/format.h>

#include "entangled/correlations.hpp"
#include "entangled/rng.hpp"
#include "entangled/scenario.hpp"

namespace entangled::cli {

namespace {

struct Flags {
  std::string command;
  std::string scenario;
  std::string engine;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> n;
  bool timing = false;
};

constexpr double kRowSlack = 1e-9;

std::string num(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  return fmt::format("{:.17g}", x);
}

std::string cnum(cplx z) { return fmt::format("{:.12g}{:+.12g}i", z.real(), z.imag()); }

std::string matrix_text(const OperatorMatrix& m) {
  std::string s;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    s += "  [";
    for (Eigen::Index j = 0; j < m.cols(); ++j) s += (j ? "  " : "") + cnum(m(i, j));
    s += "]\n";
  }
  return s;
}

// Writes to a sibling temp file and renames it into place.
void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty()) {
    out << content;
    return;
  }
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << content;
    f.close();
    if (!f) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

const Partition& need_partition(const Scenario& s) {
  if (!s.partition) throw ScenarioError("scenario: this command needs a \"partition\"");
  return *s.partition;
}

std::string output_path(const Flags& f, const Scenario& s) { return f.out.empty() ? s.output : f.out; }

// ---------------------------------------------------------------- commands

int cmd_decompose(const Scenario& s, const Flags& f, std::ostream& out) {
  const auto& dec = s.dec();
  const auto& r = dec.residuals();
  std::string t = fmt::format("dimension {}\neigenphases (turns, multiplicity)\n", dec.dim());
  for (const auto& e : dec.entries()) {
    t += fmt::format("  {:<22} {}\n", e.phase.to_string(), std::lround(e.projection.trace().real()));
  }
  t += "antidiagonal spectrum\n";
  for (const auto& z : antidiagonal_spectrum(dec, s.tolerances.resonance)) t += "  " + z.to_string() + "\n";
  const OperatorMatrix e1 = invariant_projection(dec);
  t += fmt::format("invariant projection rank {}\n", std::lround(e1.trace().real()));
  t += fmt::format("residuals\n  unitarity      {:.3e}\n  idempotency    {:.3e}\n  hermiticity    {:.3e}\n"
                   "  orthogonality  {:.3e}\n  completeness   {:.3e}\n  reconstruction {:.3e}\n"
                   "  |U E_1 - E_1|  {:.3e}\n",
                   dec.source_unitarity(), r.idempotency, r.hermiticity, r.orthogonality, r.completeness,
                   r.reconstruction, op_norm(s.unitary * e1 - e1));
  t += fmt::format("spectral gap {}\n", num(spectral_gap(dec, s.tolerances.resonance)));
  emit(output_path(f, s), t, out);
  return ok;
}

int cmd_mean(const Scenario& s, const Flags& f, std::ostream& out) {
  const auto& p = need_partition(s);
  const std::int64_t n = f.n.value_or(s.Ns.back());
  const auto r = cesaro(s.engine, s.unitary, s.dec(), p, s.inner_operators(), n, s.engine_options());
  std::string t = fmt::format("partition {}  N {}  engine {}\n", p.to_string(), n, to_string(r.engine));
  t += matrix_text(r.matrix);
  t += fmt::format("op norm {}\n", num(op_norm(r.matrix)));
  if (f.timing) t += fmt::format("seconds {:.6f}\n", r.elapsed);
  emit(output_path(f, s), t, out);
  return ok;
}

int cmd_limit(const Scenario& s, const Flags& f, std::ostream& out) {
  const auto& p = need_partition(s);
  const auto ops = s.inner_operators();
  const OperatorMatrix lim = limit_operator(s.dec(), p, ops, s.engine_options());
  std::string t = fmt::format("partition {}\nlimit operator S\n", p.to_string());
  t += matrix_text(lim);
  t += fmt::format("||S|| {}\nprod ||A_j|| {}\n", num(op_norm(lim)), num(product_norm(ops)));
  emit(output_path(f, s), t, out);
  return ok;
}

int cmd_converge(const Scenario& s, const Flags& f, std::ostream& out) {
  const auto& p = need_partition(s);
  const auto rep = convergence_report(s.unitary, s.dec(), p, s.inner_operators(), s.Ns, s.engine,
                                      s.engine_options());
  emit(output_path(f, s), convergence_csv(rep, f.timing), out);
  for (const auto& row : rep.rows) {
    if (!(row.errorOpNorm <= row.certifiedBound + kRowSlack)) return verification_failed;
  }
  return ok;
}

struct Check {
  std::string name;
  double value;
  double limit;
  bool pass() const { return value <= limit; }
};

int cmd_verify(const Scenario& s, const Flags& f, std::ostream& out) {
  std::vector<Check> checks;
  std::string notes;
  const auto& dec = s.dec();
  const auto& tol = s.tolerances;
  const auto& r = measure_residuals(dec.entries(), &s.unitary);
  checks.push_back({"unitarity", unitarity_residual(s.unitary), tol.unitarity});
  checks.push_back({"idempotency", r.idempotency, tol.projection});
  checks.push_back({"hermiticity", r.hermiticity, tol.projection});
  checks.push_back({"orthogonality", r.orthogonality, tol.projection});
  checks.push_back({"completeness", r.completeness, tol.projection});
  checks.push_back({"reconstruction", r.reconstruction, tol.reconstruction});

  const auto sigma = antidiagonal_spectrum(dec, tol.resonance);
  double unpaired = 0.0;
  for (const auto& z : sigma) {
    bool found = false;
    for (const auto& w : sigma) found |= resonant(z, w, tol.resonance);
    unpaired += found ? 0.0 : 1.0;
  }
  checks.push_back({"antidiagonal closure", unpaired, 0.0});

  const OperatorMatrix e1 = invariant_projection(dec);
  checks.push_back({"U E_1 = E_1", op_norm(s.unitary * e1 - e1), tol.projection});
  double g1 = std::numeric_limits<double>::infinity();
  for (const auto& e : dec.entries())
    if (!e.phase.is_one(tol.resonance)) g1 = std::min(g1, e.phase.distance_to_one());
  for (auto n : s.Ns) {
    if (n > 100000) continue;
    const double err = op_norm(mean_ergodic(s.unitary, n, tol.unitarity) - e1);
    const double bound = std::isinf(g1) ? 0.0 : 2.0 / (double(n) * g1);
    checks.push_back({fmt::format("mean ergodic N={}", n), err, bound + kRowSlack});
  }

  if (s.partition) {
    const auto& p = *s.partition;
    const auto ops = s.inner_operators();
    const auto opts = s.engine_options();
    const double scale = std::max(1e-300, product_norm(ops));
    // Small N keeps the direct sum cheap.
    std::int64_t n0 = std::min<std::int64_t>(s.Ns.front(), 12);
    while (n0 > 1 && std::pow(double(n0), p.classes()) > 1e5) --n0;
    const auto direct = cesaro_direct(s.unitary, p, ops, n0, opts).matrix;
    const auto spectral = cesaro_spectral(dec, p, ops, n0, opts).matrix;
    checks.push_back({fmt::format("direct vs spectral N={}", n0), op_norm(direct - spectral) / scale, 1e-9});
    if (p.is_pair() && !is_crossing(p)) {
      const auto nested = cesaro_nested(dec, p, ops, n0, opts).matrix;
      checks.push_back({fmt::format("nested vs direct N={}", n0), op_norm(direct - nested) / scale, 1e-9});
    }
    if (p.is_pair()) {
      const OperatorMatrix lim = limit_operator(dec, p, ops, opts);
      checks.push_back({"||S|| <= prod ||A_j||", op_norm(lim) - product_norm(ops), 1e-10});
      const auto rep = convergence_report(s.unitary, dec, p, ops, s.Ns, Engine::spectral, opts);
      for (const auto& row : rep.rows) {
        checks.push_back({fmt::format("error <= bound N={}", row.N), row.errorOpNorm - row.certifiedBound, kRowSlack});
      }
    }
  }

  if (s.state) {
    std::optional<DynamicalSystem> sys;
    try {
      sys.emplace(make_system(s.unitary, dec, *s.state, tol));
      checks.push_back({"state invariance", sys->invariance_residual(), 1e-10});
    } catch (const std::invalid_argument& e) {
      notes += fmt::format("state rejected: {}\n", e.what());
      checks.push_back({"state admissible", 1.0, 0.0});
    }
    if (sys && s.has_outer_operators() && s.partition->is_pair()) {
      const CorrelationSpec spec{*s.partition, s.operators};
      const int k = s.partition->classes();
      std::mt19937_64 rng(SeedSequence(s.seed).derive("verify/tuples").value());
      std::uniform_int_distribution<std::int64_t> nd(0, 50);
      double worst = 0.0;
      for (int t = 0; t < 20; ++t) {
        std::vector<std::int64_t> idx(k);
        for (auto& v : idx) v = nd(rng);
        worst = std::max(worst, std::abs(correlation_term_gamma(*sys, spec, idx) -
                                         correlation_term_sandwich(*sys, spec, idx)));
      }
      checks.push_back({"gamma form = sandwich form", worst, 1e-10 * std::max(1.0, product_norm(s.operators))});
      const cplx lim = correlation_limit(*sys, spec, s.engine_options());
      const double outer = op_norm(spec.front()) * op_norm(spec.back());
      for (auto n : s.Ns) {
        const cplx c = cesaro_correlation(*sys, spec, n, {CorrelationRoute::automatic, 1e6, s.engine_options()});
        const double bound = error_bound(dec, *s.partition, spec.inner(), n, s.engine_options()) * outer;
        checks.push_back({fmt::format("correlation N={}", n), std::abs(c - lim) - bound, kRowSlack});
      }
    }
  }

  bool all = true;
  std::string t = notes;
  for (const auto& c : checks) {
    all &= c.pass();
    t += fmt::format("{:<4} {:<32} {:>12.3e}  (limit {:.1e})\n", c.pass() ? "PASS" : "FAIL", c.name, c.value,
                     c.limit);
  }
  t += all ? "all checks passed\n" : "verification FAILED\n";
  emit(output_path(f, s), t, out);
  return all ? ok : verification_failed;
}

int cmd_bench(const Scenario& s, const Flags& f, std::ostream& out) {
  const auto& p = need_partition(s);
  const auto ops = s.inner_operators();
  const auto opts = s.engine_options();
  const bool nested_ok = p.is_pair() && !is_crossing(p);
  std::string t = fmt::format("{:>10}  {:>12}  {:>12}  {:>12}\n", "N", "direct", "spectral", "nested");
  auto timed = [&](const std::function<CesaroResult()>& fn) -> std::string {
    try {
      return fmt::format("{:>12.6f}", fn().elapsed);
    } catch (const BudgetExceeded&) {
      return fmt::format("{:>12}", "over-budget");
    }
  };
  for (auto n : s.Ns) {
    t += fmt::format("{:>10}  {}  {}  {}\n", n, timed([&] { return cesaro_direct(s.unitary, p, ops, n, opts); }),
                     timed([&] { return cesaro_spectral(s.dec(), p, ops, n, opts); }),
                     nested_ok ? timed([&] { return cesaro_nested(s.dec(), p, ops, n, opts); })
                               : fmt::format("{:>12}", "n/a"));
  }
  emit(output_path(f, s), t, out);
  return ok;
}

int cmd_correlate(const Scenario& s, const Flags& f, std::ostream& out) {
  const auto& p = need_partition(s);
  if (!s.state) throw ScenarioError("scenario: correlate needs a \"state\"");
  if (!s.has_outer_operators()) {
    throw ScenarioError(fmt::format("scenario: correlate needs {} operators A_0..A_{}", p.size() + 1, p.size()));
  }
  const auto sys = make_system(s.unitary, s.dec(), *s.state, s.tolerances);
  const CorrelationSpec spec{p, s.operators};
  const cplx lim = correlation_limit(sys, spec, s.engine_options());
  const double outer = op_norm(spec.front()) * op_norm(spec.back());
  std::string t = "N,correlation_re,correlation_im,limit_re,limit_im,abs_diff,bound\n";
  bool within = true;
  for (auto n : s.Ns) {
    const cplx c = cesaro_correlation(sys, spec, n, {CorrelationRoute::automatic, 1e6, s.engine_options()});
    const double bound = error_bound(s.dec(), p, spec.inner(), n, s.engine_options()) * outer;
    const double d = std::abs(c - lim);
    within &= d <= bound + kRowSlack;
    t += fmt::format("{},{},{},{},{},{},{}\n", n, num(c.real()), num(c.imag()), num(lim.real()), num(lim.imag()),
                     num(d), num(bound));
  }
  emit(output_path(f, s), t, out);
  return within ? ok : verification_failed;
}

constexpr std::uint64_t kDemoSeed = 6;

int cmd_demo_appendix(const Flags& f, std::ostream& out, std::ostream& err) {
  const std::string json = R"({
    "unitary": {"kind": "random", "dim": 4, "phases": "rational", "maxDenominator": 6},
    "partition": "1,2,1,3,2,3",
    "operators": [{"kind": "random"}, {"kind": "random"}, {"kind": "random"}, {"kind": "random"},
                  {"kind": "random"}],
    "Ns": [10, 100, 1000, 10000]
  })";
  Scenario s = parse_scenario(json, f.seed.value_or(kDemoSeed));
  if (!f.engine.empty()) s.engine = parse_engine(f.engine);
  const auto& p = *s.partition;
  const auto ops = s.inner_operators();
  const auto opts = s.engine_options();

  err << fmt::format("partition {} (crossing: {}), d = 4, seed {}\n", p.to_string(), is_crossing(p) ? "yes" : "no",
                     s.seed);
  err << "eigenphases:";
  for (const auto& e : s.dec().entries()) err << " " << e.phase.to_string();
  err << "\n";
  const double agree = op_norm(cesaro_direct(s.unitary, p, ops, 30, opts).matrix -
                               cesaro_spectral(s.dec(), p, ops, 30, opts).matrix);
  err << fmt::format("direct vs spectral at N=30: {:.3e}\n", agree);

  const auto rep = convergence_report(s.unitary, s.dec(), p, ops, s.Ns, s.engine, opts);
  bool bounded = true;
  for (const auto& row : rep.rows) {
    bounded &= row.errorOpNorm <= row.certifiedBound + kRowSlack;
    err << fmt::format("N={:<6} error {:.6e}  certified bound {:.6e}\n", row.N, row.errorOpNorm,
                       row.certifiedBound);
  }
  emit(f.out, convergence_csv(rep, f.timing), out);
  return agree <= 1e-10 && bounded ? ok : verification_failed;
}

}  // namespace

std::string convergence_csv(const ConvergenceReport& report, bool timing) {
  std::string csv = "N,engine,error_op,error_frob,certified_bound,spectral_gap,seconds\n";
  for (const auto& row : report.rows) {
    csv += fmt::format("{},{},{},{},{},{},{}\n", row.N, to_string(row.engine), num(row.errorOpNorm),
                       num(row.errorFrobenius), num(row.certifiedBound), num(report.spectralGap),
                       timing ? fmt::format("{:.6f}", row.seconds) : "");
  }
  return csv;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  static const std::map<std::string, std::function<int(const Scenario&, const Flags&, std::ostream&)>> commands = {
      {"decompose", cmd_decompose}, {"mean", cmd_mean},   {"limit", cmd_limit},         {"converge", cmd_converge},
      {"verify", cmd_verify},       {"bench", cmd_bench}, {"correlate", cmd_correlate},
  };

  Flags f;
  CLI::App app{"Entangled Cesaro means of unitary dynamics over pair partitions."};
  app.add_option("command", f.command,
                 "decompose | mean | limit | converge | verify | bench | correlate | demo-appendix")
      ->required();
  app.add_option("--scenario", f.scenario, "scenario JSON file");
  app.add_option("--engine", f.engine, "direct | spectral | nested");
  app.add_option("--out", f.out, "write the result here instead of stdout");
  app.add_option("--seed", f.seed, "override the scenario seed");
  app.add_option("--n", f.n, "N for the mean command (default: last of Ns)");
  app.add_flag("--timing", f.timing, "fill the seconds column (breaks byte-identical output)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return bad_input;
  }

  try {
    if (f.command == "demo-appendix") return cmd_demo_appendix(f, out, err);
    const auto it = commands.find(f.command);
    if (it == commands.end()) {
      err << "error: unknown command \"" << f.command << "\"\n";
      return bad_input;
    }
    if (f.scenario.empty()) {
      err << "error: " << f.command << " needs --scenario\n";
      return bad_input;
    }
    Scenario s = load_scenario(f.scenario, f.seed);
    if (!f.engine.empty()) s.engine = parse_engine(f.engine);
    return it->second(s, f, out);
  } catch (const BudgetExceeded& e) {
    err << "budget exceeded: " << e.what() << "\n";
    return bad_input;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return bad_input;
  } catch (const std::exception& e) {
    err << "failed: " << e.what() << "\n";
    return bad_input;
  }
}

}  // namespace entangled::cli
