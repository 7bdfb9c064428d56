#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hetrdme/analysis.hpp"
#include "hetrdme/pde.hpp"
#include "hetrdme/rdme.hpp"
#include "hetrdme/scenario.hpp"

namespace hetrdme {

/// Provenance lines written as '#' comments at the top of every output file.
struct OutputHeader {
  std::string version;
  std::string scenario_name;
  std::string scenario_hash;
  std::uint64_t seed = 0;
  RateConvention convention = RateConvention::Interface;
  GhostCoefficient ghost = GhostCoefficient::Clamp;
  Scheme scheme = Scheme::CrankNicolson;
  std::vector<std::pair<std::string, std::string>> extra;

  static OutputHeader from(const Scenario& s, std::uint64_t seed);
  std::string render() const;
};

/// 1-based voxel coordinates joined by commas, e.g. "3" or "2,5".
std::string voxel_label(const Lattice& lat, Index j);

inline constexpr const char* kFieldColumns = "scale,replicate,t,species,voxel_index,value";

std::string trajectory_csv(const OutputHeader& h, const Trajectory& tr, const Lattice& lat,
                           const std::vector<std::string>& species);
std::string pde_csv(const OutputHeader& h, const PdeSolution& sol, const std::vector<std::string>& species);
std::string convergence_csv(const OutputHeader& h, const ConvergenceReport& rep);
/// Long format: level,t,delta,phat,lo,hi.
std::string convergence_plot_csv(const OutputHeader& h, const ConvergenceReport& rep);

/// Writes bytes exactly (no newline translation).
void write_text_file(const std::string& path, const std::string& content);

}  // namespace hetrdme
