#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hetrdme/scenario.hpp"

namespace hetrdme {

/// One asserted property of the check command.
struct CheckRow {
  std::string check;
  int level = 0;
  std::string species;  // empty when the check covers all species
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

/// Self-adjointness, drift identity, contraction, mass and (for gamma * phi
/// networks) relative-energy monotonicity and decay, on every schedule level.
std::vector<CheckRow> run_checks(const Scenario& s);

std::string check_csv(const std::vector<CheckRow>& rows);

/// --threads, then HETRDME_THREADS, then the processor count.
int resolve_threads(int requested);

/// Entry point of the hetrdme tool; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace hetrdme
