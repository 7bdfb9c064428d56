#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "hetrdme/lattice.hpp"
#include "hetrdme/rng.hpp"

namespace hetrdme {

/// Molecule counts, stored voxel-major: counts[j * K + l].
struct CountState {
  Lattice lattice;
  int K = 0;
  std::vector<std::int64_t> counts;
  double t = 0.0;

  CountState(Lattice lat, int species);
  std::int64_t& at(Index j, int l) { return counts[static_cast<std::size_t>(j * K + l)]; }
  std::int64_t at(Index j, int l) const { return counts[static_cast<std::size_t>(j * K + l)]; }
  /// counts / w^n as a K x V table.
  Eigen::MatrixXd concentration() const;
  std::int64_t total() const;
};

enum class InitialMode { Round, Poisson };

CountState initial_counts(const std::vector<SpatialField>& u0, const Lattice& lat, InitialMode mode, Rng& rng);

/// One enabled transition with its rate.
struct Event {
  enum class Kind { Reaction, Hop };
  Kind kind = Kind::Reaction;
  Index voxel = 0;
  int species = 0;
  int target_species = 0;  // reactions
  int axis = 0;            // hops
  int dir = 0;             // hops, +1 or -1
  Index destination = 0;   // hops, -1 for a ghost (absorbed)
  double rate = 0.0;
};

/// Rates of every transition out of the current state, with cached per-voxel and
/// per-block partial sums for two-level inverse-CDF selection. Owns the state.
class EventTable {
 public:
  EventTable(const VoxelCoefficients& coef, CountState state,
             RateConvention convention = RateConvention::Interface);

  const CountState& state() const { return state_; }
  double total_rate() const { return total_; }
  double voxel_rate(Index j) const { return voxel_rate_[static_cast<std::size_t>(j)]; }
  /// Enabled events (rate > 0) in a fixed enumeration order.
  std::vector<Event> events() const;

  struct Choice {
    Index voxel;
    int species;
    int channel;
  };
  /// Event whose cumulative-rate interval contains `target` in [0, total).
  Choice select(double target) const;
  Choice sample(Rng& rng) const;
  Event describe(const Choice& c) const;

  /// Applies the event and refreshes the touched voxels. Returns the voxel that
  /// gained a molecule, or -1 when nothing gained (absorption).
  Index fire(const Choice& c);

  /// Recomputes every cached sum from the counts.
  void rebuild();
  double recomputed_total() const;
  bool consistent(double rel_tol = 1e-9) const;

  // Lazy time integral of the counts, advanced only when a count changes.
  void enable_integrals();
  bool integrals_enabled() const { return !integral_.empty(); }
  /// Integral of the counts over [0, t] as a K x V table (state assumed constant since the last change).
  Eigen::MatrixXd count_integral(double t) const;
  void set_time(double t) { state_.t = t; }

 private:
  double compute_voxel_rate(Index j) const;
  void refresh_voxel(Index j);
  void touch(Index j, int l);

  const VoxelCoefficients* coef_;
  CountState state_;
  int channels_;
  std::vector<double> channel_coef_;  // [(j*K + l) * channels_ + c]
  std::vector<double> out_coef_;      // [j*K + l]
  std::vector<Index> hop_dest_;       // [j * 2n + 2*axis + (dir > 0)], -1 for a ghost
  std::vector<double> voxel_rate_;
  Index block_size_;
  std::vector<double> block_sum_;
  double total_ = 0.0;
  std::vector<double> integral_;
  std::vector<double> last_change_;
};

struct SsaOptions {
  std::vector<double> record_times;
  /// Exit threshold on sup_x sum_l C_l(x); infinity disables stopping.
  double rho = std::numeric_limits<double>::infinity();
  RateConvention convention = RateConvention::Interface;
  std::uint64_t rebuild_interval = std::uint64_t{1} << 20;
  /// Accumulate the exact time integral of the concentration at every record time.
  bool track_integrals = false;
};

struct Trajectory {
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> snapshots;       // concentrations
  std::vector<Eigen::MatrixXd> drift_integrals; // integral of the concentration up to each record time
  std::uint64_t events = 0;
  bool exited = false;
  double exit_time = std::numeric_limits<double>::infinity();
};

/// Record times 0, dt, 2dt, ..., t_end.
std::vector<double> uniform_times(double t_end, double dt);

/// Direct-method simulation of the stopped jump process.
Trajectory ssa_run(const CountState& initial, const VoxelCoefficients& coef, const SsaOptions& opt, Rng& rng);

enum class IntegralMode { Exact, Grid };

/// z(t) = C(t) - C(0) - F(int_0^t C ds) at every record time, using linearity of F.
std::vector<Eigen::MatrixXd> martingale_residual(const Trajectory& traj, const VoxelCoefficients& coef,
                                                 IntegralMode mode = IntegralMode::Exact,
                                                 RateConvention convention = RateConvention::Interface);

/// sum over events of rate * (state change) / w^n, by direct enumeration of the table.
Eigen::MatrixXd mean_drift_check(const CountState& state, const VoxelCoefficients& coef,
                                 RateConvention convention = RateConvention::Interface);

/// max |table drift - (L_N + R_N) c| / max (|G| c), with |G| the entrywise absolute generator.
double drift_identity_error(const CountState& state, const VoxelCoefficients& coef,
                            RateConvention convention = RateConvention::Interface);

}  // namespace hetrdme
