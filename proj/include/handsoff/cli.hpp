#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "handsoff/solver.hpp"

namespace handsoff::cli {

inline constexpr int kSchemaVersion = 1;

enum ExitCode : int {
  kExitOk = 0,
  kExitError = 1,
  kExitInfeasible = 2,
  kExitDisagree = 3,
};

struct RunConfig {
  std::string subcommand;
  std::string input;
  std::string out;  // empty: result document goes to stdout
  std::string csv;
  SolveOptions solve;
  std::vector<double> sweep_T;
  std::vector<double> sweep_scale;
  int substeps = 10;
};

struct CommandResult {
  int exit_code = kExitError;
  nlohmann::json document;
  std::string csv;           // primary trajectory CSV (may be empty)
  std::string baseline_csv;  // compare only
};

CommandResult cmd_solve(const RunConfig& cfg);
CommandResult cmd_compare(const RunConfig& cfg);
CommandResult cmd_sweep(const RunConfig& cfg);
CommandResult cmd_verify_equivalence(const RunConfig& cfg);
CommandResult cmd_simulate(const RunConfig& cfg);

/// Serialized result document (2-space indented, trailing newline).
std::string render(const nlohmann::json& doc);

/// Copy of `doc` without the wall-time field, for comparisons.
nlohmann::json strip_timing(nlohmann::json doc);

/// Parses "a,b,c" into numbers; throws Error(kParseError) on junk.
std::vector<double> parse_list(const std::string& text);

/// Full command-line entry point: parses args, runs, writes --out / --csv
/// files (or the document to `out`), reports errors on `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace handsoff::cli
