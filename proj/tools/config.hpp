#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "difflab/harness.hpp"

namespace difflab::cli {

// Configuration errors carry the source line (1-based, 0 when unknown).
struct ConfigError : std::runtime_error {
  ConfigError(const std::string& file, int line, const std::string& msg)
      : std::runtime_error(file + (line > 0 ? ":" + std::to_string(line) : "") + ": " + msg), line(line) {}
  int line;
};

struct CheckEntry {
  std::string id;  // file stem of the report
  CheckSpec spec;
};

struct RunConfig {
  std::uint64_t seed = 0;
  int workers = 0;
  std::vector<CheckEntry> checks;
  std::string output_dir = "difflab_out";
  bool csv = false;
  bool timing = false;
};

// Parses and validates a YAML run configuration. Unknown keys, type errors and
// guard violations raise ConfigError with the offending line.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");

}  // namespace difflab::cli
