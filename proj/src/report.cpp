#include "difflab/report.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace difflab {

namespace {

using nlohmann::ordered_json;

// Non-finite doubles are not JSON; they are written as strings so they survive
// a round trip and remain visible in reports.
ordered_json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double parse_number(const ordered_json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
  }
  throw std::runtime_error("expected a number");
}

std::string csv_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

CheckReport merge_reports(std::string name, const std::vector<CheckReport>& parts) {
  CheckReport r;
  r.name = std::move(name);
  r.pass = !parts.empty();
  for (const auto& p : parts) {
    r.trials += p.trials;
    r.violations += p.violations;
    r.statistical_violations += p.statistical_violations;
    r.inconclusive += p.inconclusive;
    r.skipped += p.skipped;
    for (const auto& [k, v] : p.fitted_constants) r.fitted_constants[p.name + "." + k] = v;
    r.confidence.insert(r.confidence.end(), p.confidence.begin(), p.confidence.end());
    for (const auto& n : p.notes) r.notes.push_back(p.name + ": " + n);
    r.pass = r.pass && p.pass;
  }
  return r;
}

std::string to_json(const CheckReport& r) {
  ordered_json j;
  j["name"] = r.name;
  j["trials"] = r.trials;
  j["violations"] = r.violations;
  j["statistical_violations"] = r.statistical_violations;
  j["inconclusive"] = r.inconclusive;
  j["skipped"] = r.skipped;
  ordered_json fc = ordered_json::object();
  for (const auto& [k, v] : r.fitted_constants) fc[k] = number(v);
  j["fitted_constants"] = fc;
  ordered_json conf = ordered_json::array();
  for (double v : r.confidence) conf.push_back(number(v));
  j["confidence"] = conf;
  j["notes"] = r.notes;
  j["pass"] = r.pass;
  j["runtime_ms"] = r.runtime_ms ? ordered_json(*r.runtime_ms) : ordered_json(nullptr);
  return j.dump(2) + "\n";
}

std::string to_csv(const CheckReport& r) {
  std::string out;
  for (std::size_t i = 0; i < r.columns.size(); ++i) out += (i ? "," : "") + r.columns[i];
  out += "\n";
  for (const auto& row : r.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_number(row[i]);
    out += "\n";
  }
  return out;
}

CheckReport report_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("invalid JSON: ") + e.what());
  }
  try {
    CheckReport r;
    r.name = j.at("name").get<std::string>();
    r.trials = j.at("trials").get<std::size_t>();
    r.violations = j.at("violations").get<std::size_t>();
    r.statistical_violations = j.value("statistical_violations", std::size_t{0});
    r.inconclusive = j.value("inconclusive", std::size_t{0});
    r.skipped = j.value("skipped", std::size_t{0});
    for (const auto& [k, v] : j.at("fitted_constants").items()) r.fitted_constants[k] = parse_number(v);
    if (j.contains("confidence"))
      for (const auto& v : j["confidence"]) r.confidence.push_back(parse_number(v));
    if (j.contains("notes")) r.notes = j["notes"].get<std::vector<std::string>>();
    r.pass = j.at("pass").get<bool>();
    if (j.contains("runtime_ms") && !j["runtime_ms"].is_null()) r.runtime_ms = j["runtime_ms"].get<double>();
    return r;
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("malformed report: ") + e.what());
  }
}

}  // namespace difflab
