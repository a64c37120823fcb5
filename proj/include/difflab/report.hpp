#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace difflab {

// Outcome of one verification. fitted_constants is ordered so serialisation is
// byte-stable.
struct CheckReport {
  std::string name;
  std::size_t trials = 0;
  std::size_t violations = 0;              // structural: failures not explained by noise
  std::size_t statistical_violations = 0;  // within their per-trial 3 sigma margin
  std::size_t inconclusive = 0;
  std::size_t skipped = 0;
  std::map<std::string, double> fitted_constants;
  std::vector<double> confidence;  // per-trial margins (units depend on the check)
  std::vector<std::string> notes;
  bool pass = false;
  std::optional<double> runtime_ms;

  // Per-trial table for CSV output.
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void note(std::string s) { notes.push_back(std::move(s)); }
};

// Combines sub-reports: pass iff all pass; constants are prefixed with the
// sub-report name.
CheckReport merge_reports(std::string name, const std::vector<CheckReport>& parts);

std::string to_json(const CheckReport& r);
std::string to_csv(const CheckReport& r);
// Throws std::runtime_error on malformed input.
CheckReport report_from_json(const std::string& text);

}  // namespace difflab
