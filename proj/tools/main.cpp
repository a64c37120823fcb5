#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"difflab: diffusion semigroup verification laboratory"};
  app.require_subcommand(1);

  int workers = -1;
  std::uint64_t seed = 0;
  std::string format;
  app.add_option("--workers", workers, "worker threads (0: OpenMP default)")->check(CLI::NonNegativeNumber);
  auto* seed_opt = app.add_option("--seed", seed, "override the master seed");
  app.add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

  std::string config_path, report_dir;
  auto* run = app.add_subcommand("run", "run the checks of a configuration file");
  run->add_option("config", config_path, "YAML configuration")->required();
  auto* report = app.add_subcommand("report", "tabulate the reports in a directory");
  report->add_option("dir", report_dir, "directory with check reports")->required();

  // Global flags are accepted before or after the subcommand.
  for (auto* sub : {run, report}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*run) {
    difflab::cli::RunOverrides o;
    if (workers >= 0) o.workers = workers;
    if (*seed_opt) o.seed = seed;
    if (!format.empty()) o.format = format;
    return difflab::cli::run_command(config_path, o, std::cout, std::cerr);
  }
  return difflab::cli::report_command(report_dir, format.empty() ? "json" : format, std::cout, std::cerr);
}
