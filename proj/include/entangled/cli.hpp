#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "entangled/engines.hpp"

namespace entangled::cli {

enum ExitCode : int { ok = 0, verification_failed = 1, bad_input = 2 };

/// Runs one command. `args` excludes the program name, e.g.
/// {"converge", "--scenario", "s.json", "--out", "r.csv"}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// N,engine,error_op,error_frob,certified_bound,spectral_gap,seconds
/// The seconds column is left empty unless `timing` is set.
std::string convergence_csv(const ConvergenceReport& report, bool timing);

}  // namespace entangled::cli
