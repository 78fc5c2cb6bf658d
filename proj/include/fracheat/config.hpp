#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fracheat/functions.hpp"
#include "fracheat/geometry.hpp"
#include "fracheat/picard.hpp"

namespace fracheat {

// Scenario configuration parsed from a JSON file. Unknown keys are errors;
// out-of-range parameters are errors; alpha outside (1,2) only warns when
// still inside (0,2), since the boundary index has closed-form oracles.
struct ScenarioConfig {
  Domain domain{DomainKind::torus, 1, 2.0};
  double alpha = 1.5;
  GridSpec grid{64, 16, 0.0};
  DriftField b = DriftField::make_zero();
  ScalarField c = ScalarField::make_zero();
  bool analytic_divergence = true;
  SolveConfig solve;
  std::vector<std::string> checks;  // empty: all
  int samples = 512;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::vector<std::string> warnings;
};

// Throws std::runtime_error with a path-qualified message on schema errors.
ScenarioConfig parse_config_file(const std::string& path);
ScenarioConfig parse_config_text(const std::string& json_text);

// Names of all registered checks in dependency order.
std::vector<std::string> all_check_names();

}  // namespace fracheat
