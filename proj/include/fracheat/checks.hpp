#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "fracheat/config.hpp"

namespace fracheat {

enum class CheckStatus { pass, fail, vacuous };

struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::fail;
  // named measured constants with their asserted bounds, in emission order
  std::vector<std::pair<std::string, double>> measured;
  std::string detail;       // human summary of tolerances and outcomes
  double runtime_sec = 0.0; // excluded from the deterministic outputs

  bool passed() const { return status != CheckStatus::fail; }
};

// One registered verification; every function is safe to run standalone.
using CheckFn = std::function<CheckResult(const ScenarioConfig&)>;

const std::map<std::string, CheckFn>& check_registry();

struct SuiteResult {
  std::vector<CheckResult> results;
  int exit_code = 0;  // 0 all pass, 1 any fail, 2 config error, 3 internal
  std::string results_csv;  // deterministic machine-readable table
  std::string summary;      // human summary (includes runtimes)
};

// Runs the configured checks (all when the list is empty) in registry
// order. Exceptions inside a check become fail results.
SuiteResult run_suite(const ScenarioConfig& cfg);

}  // namespace fracheat
