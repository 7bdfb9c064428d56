#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hetrdme/lattice.hpp"
#include "hetrdme/network.hpp"
#include "hetrdme/pde.hpp"
#include "hetrdme/rdme.hpp"

namespace hetrdme {

struct ScalingLevel {
  int N;
  double w;
};

/// Lattice levels with N and w growing and N^2 / w^n shrinking.
struct ScalingSchedule {
  int dimension = 1;
  std::vector<ScalingLevel> levels;

  double ratio(std::size_t i) const;
};

/// Throws InvalidSchedule when any monotonicity requirement fails.
void validate_schedule(const ScalingSchedule& s);
/// N doubles per level starting at base_N; w = N^w_exponent.
ScalingSchedule make_schedule(int base_N, int levels, double w_exponent, int dim = 1);

struct WilsonInterval {
  double lo = 0.0;
  double hi = 1.0;
};
WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

/// Everything needed to run the stochastic and deterministic models side by side.
struct Experiment {
  ReactionNetwork network;
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
  /// Explicit thresholds; empty means delta_factor times the level-0 median distance.
  std::vector<double> deltas;
  double delta_factor = 0.5;
  double pde_dt = 0.0;
};

/// Runs f(i) for i in [0, count) on up to `threads` workers. Results must be
/// written by index so that the outcome does not depend on scheduling.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& f);

Lattice level_lattice(const Experiment& exp, int level);

/// Deterministic reference on the lattice of a level, recorded at `times`.
PdeSolution reference_solution(const Experiment& exp, const VoxelCoefficients& coef, std::vector<double> times);

/// rho_factor times the largest voxel total of the reference over [0, t_max].
double stopping_level(const Experiment& exp, const VoxelCoefficients& coef, double t_max);

/// Raw per-replicate outcome of one level.
struct LevelRun {
  int level = 0;
  int N = 0;
  double w = 0.0;
  double rho = 0.0;
  std::vector<double> checkpoints;
  /// M x C: L2 distance between SSA and reference at each checkpoint.
  Eigen::MatrixXd distances;
  /// M x C: squared norm of the martingale residual at each checkpoint.
  Eigen::MatrixXd residual_sq;
  std::vector<char> exited;
  std::uint64_t events = 0;
  double seconds = 0.0;
};

LevelRun run_level(const Experiment& exp, int level, int replicates, int threads, bool track_residual = true);

struct CheckpointStats {
  double t = 0.0;
  double mean = 0.0;
  double median = 0.0;
  double max = 0.0;
  double residual_sq_mean = 0.0;
  std::vector<double> deltas;
  std::vector<std::size_t> exceed;
  std::vector<double> phat;
  std::vector<WilsonInterval> interval;
};

struct LevelReport {
  int level = 0;
  int N = 0;
  double w = 0.0;
  double ratio = 0.0;
  double rho = 0.0;
  std::size_t M = 0;
  double exit_fraction = 0.0;
  std::uint64_t events = 0;
  std::vector<CheckpointStats> checkpoints;
  /// Per delta index: fraction of replicates exceeding their delta at some checkpoint.
  std::vector<std::size_t> any_exceed;
  std::vector<double> any_phat;
  std::vector<WilsonInterval> any_interval;
};

/// Per-checkpoint statistics of one level against fixed thresholds (deltas[c] per checkpoint).
LevelReport summarize_level(const LevelRun& run, const std::vector<std::vector<double>>& deltas, int dimension);

LevelReport ensemble_vs_pde(const Experiment& exp, int level, int replicates, const std::vector<double>& checkpoints,
                            const std::vector<double>& deltas, std::uint64_t seed, int threads);

struct ConvergenceReport {
  std::vector<std::vector<double>> deltas;  // per checkpoint
  std::vector<LevelReport> levels;
};

ConvergenceReport converge(const Experiment& exp, int threads);

/// (t rho / w^n) (K^2 lambda* + 4 K n D* N^2)
double martingale_bound(double t, double rho, const Lattice& lat, int K, double lambda_upper, double d_upper);

struct MartingaleReport {
  int N = 0;
  double w = 0.0;
  double t = 0.0;
  double rho = 0.0;
  std::size_t M = 0;
  double projection_mean = 0.0;
  double projection_std_error = 0.0;
  double residual_sq_mean = 0.0;
  double residual_sq_std_error = 0.0;
  double bound = 0.0;
  double exit_fraction = 0.0;
};

MartingaleReport martingale_suite(const Experiment& exp, int level, int replicates, double t, std::uint64_t seed,
                                  int threads);

struct DecayReport {
  std::vector<double> times;
  std::vector<double> norms;
  DecayFit fit;
  Eigen::VectorXd equilibrium;
  std::vector<double> energy;
  double energy_max_increase = 0.0;
  double mass_max_increase = 0.0;
  double spectral_gap = 0.0;
};

/// Decay of the reference solution for a gamma * phi network. Throws StructureMismatch
/// when the network has no such structure or is not weakly reversible.
DecayReport decay_study(const Experiment& exp, int level, const std::vector<double>& t_grid);

}  // namespace hetrdme
