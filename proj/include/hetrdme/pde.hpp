#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hetrdme/lattice.hpp"
#include "hetrdme/rng.hpp"

namespace hetrdme {

enum class Scheme { CrankNicolson, ImplicitEuler, Expm };

std::string to_string(Scheme s);
Scheme parse_scheme(const std::string& s);

struct IntegrateOptions {
  std::vector<double> record_times;
  /// Upper bound on the internal step; 0 selects min(1e-3, 0.1 / ||A||_inf).
  double dt = 0.0;
  Scheme scheme = Scheme::CrankNicolson;
  bool include_reaction = true;
  /// Also record the state after every internal step (for monotonicity checks).
  bool record_steps = false;
  /// Largest K*V for which the expm scheme is allowed.
  Index expm_limit = 4096;
};

struct PdeSolution {
  Lattice lattice;
  int K = 0;
  std::vector<double> times;
  /// Unclamped states, K x V.
  std::vector<Eigen::MatrixXd> states;
  Scheme scheme = Scheme::CrankNicolson;
  double dt = 0.0;
  long steps = 0;
  /// Largest relative residual ||M x - b|| / ||b|| over the implicit solves.
  double max_residual = 0.0;
  /// Entries below -1e-12 that were clamped to zero in `snapshot`.
  long negative_clamps = 0;

  /// State at record index i with negative entries clamped to zero.
  ConcField snapshot(std::size_t i) const;
};

double default_dt(const Eigen::SparseMatrix<double>& A);

/// Integrates u' = (L_N + R_N) u from `u0` at time 0 and records at `record_times`
/// (plus every step when requested). Throws SolverFailure on factorisation breakdown.
PdeSolution integrate(const ConcField& u0, const VoxelCoefficients& coef, const IntegrateOptions& opt);

double total_mass(const Lattice& lat, const Eigen::MatrixXd& u);
inline double total_mass(const ConcField& u) { return total_mass(u.lattice(), u.values()); }
std::vector<double> mass_series(const PdeSolution& sol);

double relative_energy(const Lattice& lat, const Eigen::MatrixXd& u, const Eigen::VectorXd& u_inf);
inline double relative_energy(const ConcField& u, const Eigen::VectorXd& u_inf) {
  return relative_energy(u.lattice(), u.values(), u_inf);
}
std::vector<double> energy_series(const PdeSolution& sol, const Eigen::VectorXd& u_inf);

/// Largest relative increase (s_i - s_{i-1}) / |s_{i-1}| along a series; <= 0 when non-increasing.
double max_relative_increase(const std::vector<double>& series);

struct DecayFit {
  double alpha = 0.0;
  double intercept = 0.0;
  /// Root-mean-square residual of log(value) about the fitted line.
  double rms_residual = 0.0;
};

/// Least-squares slope of log(value) against t; alpha is minus the slope.
DecayFit fit_decay_rate(const std::vector<double>& t, const std::vector<double>& values);

enum class BoundaryTreatment { Dirichlet, Neumann };

/// Max over random field pairs of |<Lu,v> - <u,Lv>| / (||u|| ||v|| ||D||_sup N^2) for one species.
double check_self_adjoint(const VoxelCoefficients& coef, int species, int trials, Rng& rng,
                          BoundaryTreatment boundary = BoundaryTreatment::Dirichlet);

struct ContractionReport {
  double max_ratio = 0.0;
  /// max_t log(max_ratio(t)) / t over t > 0: the measured growth exponent.
  double omega = 0.0;
};

/// exp(tA) u for random u and each t, with A the diffusion (or full) generator.
ContractionReport check_contraction(const VoxelCoefficients& coef, const std::vector<double>& t_list, int trials,
                                    Rng& rng, OperatorPart part = OperatorPart::Diffusion);

/// min over eigenvalues of -Re(lambda) of the assembled generator (dense).
double spectral_gap(const VoxelCoefficients& coef, OperatorPart part = OperatorPart::Full);

}  // namespace hetrdme
