#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "config.hpp"

namespace difflab::cli {

struct RunOverrides {
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> format;  // "json" or "csv"
};

// Exit codes: 0 all checks pass, 1 any check fails, 2 configuration error.
int run_command(const std::string& config_path, const RunOverrides& o, std::ostream& out, std::ostream& err);

// Reads every *.json report in dir (read-only) and prints an aligned table,
// or CSV with format == "csv". Exit 0 iff at least one report was found and
// all are readable and passing.
int report_command(const std::string& dir, const std::string& format, std::ostream& out, std::ostream& err);

}  // namespace difflab::cli
