// Acceptance suite: runs every config under configs/acceptance in name
// order and prints one PASS/FAIL line per criterion, preceded by the checks
// behind it. The mass-conservation criterion additionally covers every
// density-solver run made anywhere in the suite.

#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include "pdmp_app/config.hpp"
#include "pdmp_app/experiments.hpp"

namespace fs = std::filesystem;
using pdmp::app::AuditRecord;
using pdmp::app::Check;
using pdmp::app::ExperimentReport;

namespace {

constexpr double kMassTolerance = 1e-10;

struct Outcome {
  fs::path config;
  ExperimentReport report;
  std::string error;
};

Outcome run_one(const fs::path& path, const fs::path& out_root) {
  Outcome o;
  o.config = path;
  try {
    pdmp::app::ExperimentConfig c = pdmp::app::load_config(path);
    c.output = (out_root / path.stem()).string();
    o.report = pdmp::app::run_experiment(c);
  } catch (const std::exception& e) {
    o.error = e.what();
  }
  return o;
}

void add_suite_audit(ExperimentReport& r, const std::vector<AuditRecord>& all) {
  double worst = 0.0, lowest = 0.0;
  for (const auto& a : all) {
    worst = std::max(worst, a.max_defect);
    lowest = std::min(lowest, a.min_value);
  }
  const std::string n = std::to_string(all.size());
  r.checks.push_back(pdmp::app::check_less("suite-wide max mass defect over " + n + " solver runs", worst,
                                           kMassTolerance));
  r.checks.push_back(pdmp::app::check_true("suite-wide nonnegativity over " + n + " solver runs", lowest >= 0.0));
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path dir = argc > 1 ? fs::path(argv[1]) : fs::path(PDMP_ACCEPTANCE_DIR);
  const fs::path out_root = argc > 2 ? fs::path(argv[2]) : fs::temp_directory_path() / "pdmp_acceptance";

  std::vector<fs::path> configs;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".yaml") configs.push_back(e.path());
  std::sort(configs.begin(), configs.end());

  std::vector<Outcome> outcomes;
  std::vector<AuditRecord> audits;
  for (const auto& p : configs) {
    outcomes.push_back(run_one(p, out_root));
    const auto& a = outcomes.back().report.audits;
    audits.insert(audits.end(), a.begin(), a.end());
  }

  int failed = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    Outcome& o = outcomes[i];
    if (o.error.empty() && o.report.name == "mass_conservation") add_suite_audit(o.report, audits);
    const bool pass = o.error.empty() && o.report.pass();
    for (const Check& c : o.report.checks)
      std::printf("    %s %s\n", c.pass ? "ok  " : "MISS", pdmp::app::describe(c).c_str());
    if (!o.error.empty()) std::printf("    error: %s\n", o.error.c_str());
    const std::string title = o.error.empty() ? o.report.title : o.config.stem().string();
    std::printf("%s [%zu] %s (%.1f s)\n", pass ? "PASS" : "FAIL", i + 1, title.c_str(), o.report.seconds);
    std::fflush(stdout);
    if (!pass) ++failed;
  }
  std::printf("%zu criteria, %d failed\n", outcomes.size(), failed);
  return failed == 0 ? 0 : 1;
}
