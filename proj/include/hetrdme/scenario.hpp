#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hetrdme/analysis.hpp"
#include "hetrdme/network.hpp"

namespace hetrdme {

/// Parsed scenario file with every knob resolved.
struct Scenario {
  int schema_version = 1;
  std::string name;
  NetworkDescription network;
  std::vector<SpatialField> initial;
  ScalingSchedule schedule;
  double t_end = 0.2;
  double dt_record = 0.01;
  std::vector<double> checkpoints{0.05, 0.1, 0.2};
  int ensemble = 200;
  std::uint64_t seed = 1;
  RateConvention convention = RateConvention::Interface;
  GhostCoefficient ghost = GhostCoefficient::Clamp;
  InitialMode initial_mode = InitialMode::Round;
  Scheme scheme = Scheme::CrankNicolson;
  double rho_factor = 2.0;
  std::vector<double> deltas;  // empty: automatic
  double delta_factor = 0.5;
  double pde_dt = 0.0;         // 0: automatic
  int validation_grid = 64;
  int martingale_level = 0;
  int martingale_replicates = 1000;
  double martingale_t = 1.0;
};

/// Parses the key = value format. Throws ParseError(line, message) on malformed
/// input and NetworkValidationError when the network violates its bounds.
Scenario parse_scenario_text(const std::string& text);
Scenario parse_scenario(const std::string& path);

/// Canonical text with every default written out; parses back to an equal scenario.
std::string serialize_scenario(const Scenario& s);

/// FNV-1a 64 of the canonical text, as 16 hex digits.
std::string scenario_hash(const Scenario& s);

Experiment make_experiment(const Scenario& s);

std::string to_string(RateConvention c);
std::string to_string(GhostCoefficient g);
std::string to_string(InitialMode m);

}  // namespace hetrdme
