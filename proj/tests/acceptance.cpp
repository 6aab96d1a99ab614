// Acceptance run: one PASS/FAIL line per criterion.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "phi4/checks.hpp"

int main(int argc, char** argv) {
  CLI::App app{"phi4 acceptance checks"};
  phi4::CheckOptions options;
  std::vector<int> only;
  std::string json_path;
  app.add_flag("--quick", options.quick, "smaller replica counts");
  app.add_option("--seed", options.seed, "global RNG seed");
  app.add_option("--only", only, "check numbers to run (default: all)")->check(CLI::Range(1, 11));
  app.add_option("--json", json_path, "write the per-check statistics here");
  CLI11_PARSE(app, argc, argv);
  if (only.empty()) only = phi4::suite_checks("all");

  bool all = true;
  nlohmann::json out = nlohmann::json::array();
  for (int id : only) {
    phi4::CheckResult r;
    try {
      r = phi4::run_check(id, options);
    } catch (const std::exception& e) {
      r.id = id;
      r.name = "check " + std::to_string(id);
      r.summary = std::string("error: ") + e.what();
    }
    all = all && r.pass;
    std::printf("[%s] %2d %s: %s (%.1f s)\n", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(),
                r.summary.c_str(), r.seconds);
    std::fflush(stdout);
    out.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"summary", r.summary},
                   {"stats", r.stats}});
  }
  if (!json_path.empty()) std::ofstream(json_path) << out.dump(2) << '\n';
  return all ? 0 : 1;
}
