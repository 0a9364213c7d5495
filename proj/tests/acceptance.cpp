// Acceptance runner: one PASS/FAIL line per criterion.
//   acceptance               all criteria
//   acceptance --criterion 5 a single one

#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "../tools/suites.hpp"

int main(int argc, char** argv) {
  CLI::App app{"twaves acceptance criteria"};
  int only = 0;
  bool verbose = false;
  app.add_option("--criterion", only, "run a single criterion (1-8)")->check(CLI::Range(1, 8));
  app.add_flag("-v,--verbose", verbose, "print every check");
  CLI11_PARSE(app, argc, argv);

  bool all = true;
  for (int c = 1; c <= 8; ++c) {
    if (only && c != only) continue;
    twaves::suites::Report rep;
    rep.log = [](const std::string& s) { std::cout << s << '\n' << std::flush; };
    if (!verbose) rep.log = nullptr;
    const auto t0 = std::chrono::steady_clock::now();
    std::string error;
    try {
      twaves::suites::run_criterion(c, rep);
    } catch (const std::exception& e) {
      error = e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool ok = error.empty() && rep.passed(c);
    all = all && ok;
    std::string detail;
    int failed = 0;
    for (const auto& k : rep.checks)
      if (!k.pass) {
        if (failed++ < 3) detail += (detail.empty() ? "" : "; ") + k.name + " = " + std::to_string(k.value);
      }
    if (!error.empty()) detail = "error: " + error;
    std::printf("criterion %d: %s (%zu checks, %d failed, %.1f s)%s%s\n", c, ok ? "PASS" : "FAIL", rep.checks.size(), failed, secs, detail.empty() ? "" : " ",
                detail.c_str());
    // every check on failure, so the log carries the measurements
    if (!ok && !verbose)
      for (const auto& k : rep.checks) std::printf("  %-44s %-4s value %.6e limit %.3e\n", k.name.c_str(), k.pass ? "ok" : "FAIL", k.value, k.limit);
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
