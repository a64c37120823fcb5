#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <vector>

#include "difflab/report.hpp"

namespace difflab::cli {

namespace fs = std::filesystem;

namespace {

struct Row {
  std::string file, name, trials, violations, constants, status;
  bool ok = false;
};

std::string short_number(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

std::string constants_cell(const CheckReport& r) {
  std::string s;
  for (const auto& [k, v] : r.fitted_constants) s += (s.empty() ? "" : " ") + k + "=" + short_number(v);
  return s;
}

Row row_of(const std::string& file, const CheckReport& r) {
  return {file, r.name, std::to_string(r.trials), std::to_string(r.violations), constants_cell(r),
          r.pass ? "PASS" : "FAIL", r.pass};
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

void print_table(const std::vector<Row>& rows, std::ostream& out) {
  const std::vector<std::string> head = {"report", "check", "trials", "violations", "pass", "fitted constants"};
  std::vector<std::size_t> w(head.size());
  for (std::size_t i = 0; i < head.size(); ++i) w[i] = head[i].size();
  const auto cells = [](const Row& r) {
    return std::vector<std::string>{r.file, r.name, r.trials, r.violations, r.status, r.constants};
  };
  for (const auto& r : rows) {
    const auto c = cells(r);
    for (std::size_t i = 0; i + 1 < c.size(); ++i) w[i] = std::max(w[i], c[i].size());
  }
  const auto line = [&](const std::vector<std::string>& c) {
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (i + 1 < c.size())
        out << std::left << std::setw(static_cast<int>(w[i])) << c[i] << "  ";
      else
        out << c[i];
    }
    out << "\n";
  };
  line(head);
  for (const auto& r : rows) line(cells(r));
}

void print_csv(const std::vector<Row>& rows, std::ostream& out) {
  out << "report,check,trials,violations,pass,fitted_constants\n";
  for (const auto& r : rows)
    out << csv_cell(r.file) << "," << csv_cell(r.name) << "," << r.trials << "," << r.violations << "," << r.status
        << "," << csv_cell(r.constants) << "\n";
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << content;
}

}  // namespace

int run_command(const std::string& config_path, const RunOverrides& o, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  }
  if (o.format) {
    if (*o.format != "json" && *o.format != "csv") {
      err << "config error: --format must be json or csv\n";
      return 2;
    }
    cfg.csv = *o.format == "csv";
  }
  if (o.workers) cfg.workers = *o.workers;
  for (auto& c : cfg.checks) {
    c.spec.workers = cfg.workers;
    if (o.seed) c.spec.seed = *o.seed;
  }

  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) {
    err << "config error: cannot create output directory " << cfg.output_dir << ": " << ec.message() << "\n";
    return 2;
  }
  std::vector<Row> rows;
  bool all_pass = true;
  for (const auto& c : cfg.checks) {
    CheckReport r;
    try {
      r = run_check(c.spec);
    } catch (const std::invalid_argument& e) {
      err << "config error: check '" << c.id << "': " << e.what() << "\n";
      return 2;
    }
    write_file(fs::path(cfg.output_dir) / (c.id + ".json"), to_json(r));
    if (cfg.csv) write_file(fs::path(cfg.output_dir) / (c.id + ".csv"), to_csv(r));
    rows.push_back(row_of(c.id + ".json", r));
    all_pass = all_pass && r.pass;
    out << (r.pass ? "PASS " : "FAIL ") << c.id << "\n";
  }
  std::ostringstream summary;
  print_table(rows, summary);
  write_file(fs::path(cfg.output_dir) / "summary.txt", summary.str());
  out << summary.str();
  return all_pass ? 0 : 1;
}

int report_command(const std::string& dir, const std::string& format, std::ostream& out, std::ostream& err) {
  if (format != "json" && format != "csv") {
    err << "--format must be json or csv\n";
    return 2;
  }
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    err << "not a directory: " << dir << "\n";
    return 1;
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    out << "no reports found\n";
    return 1;
  }
  std::vector<Row> rows;
  bool ok = true;
  for (const auto& p : files) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      rows.push_back(row_of(p.filename().string(), report_from_json(ss.str())));
    } catch (const std::exception&) {
      rows.push_back({p.filename().string(), "?", "-", "-", "", "UNREADABLE", false});
    }
    ok = ok && rows.back().ok;
  }
  if (format == "csv")
    print_csv(rows, out);
  else
    print_table(rows, out);
  return ok ? 0 : 1;
}

}  // namespace difflab::cli
