// Report-producing commands behind the ualg executable.
#pragma once

#include <optional>
#include <string>

#include "ualg/core.hpp"

namespace ualg::cli {

enum ExitCode { kOk = 0, kMismatch = 1, kInputError = 2, kResourceLimit = 3 };

struct RunConfig {
  std::string command;  // analyze, radical, boxmaps, flat, check-unary, interpret
  std::string algebra;
  std::string congruence;
  std::string graph;
  std::string flat;  // sorted algebra dump read by check-unary
  std::string out;   // dump written by flat
  std::optional<int> arity_bound;
  std::optional<int> ceiling;
  Limits limits;
  std::string report;  // copy of the report, if set
};

struct CommandResult {
  int exit_code = kOk;
  std::string report;  // human-readable text, then a KEY=VALUE block
};

int exit_code_for(Errc c);

// Never throws for library errors; they become an error report.
CommandResult run(const RunConfig& cfg);

}  // namespace ualg::cli
