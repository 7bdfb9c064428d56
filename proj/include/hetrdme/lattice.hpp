#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "hetrdme/errors.hpp"
#include "hetrdme/field.hpp"
#include "hetrdme/network.hpp"

namespace hetrdme {

using Index = Eigen::Index;

/// Uniform partition of [0,1]^n into N^n voxels. Voxels are numbered with axis 0
/// fastest; coordinates are 0-based. Ghost voxels are implicit (index -1).
class Lattice {
 public:
  Lattice(int dim, int N, double w);

  int dimension() const { return dim_; }
  int cells_per_axis() const { return N_; }
  double w() const { return w_; }
  double h() const { return 1.0 / N_; }
  /// Molecules per unit concentration per voxel: w^n.
  double density() const { return density_; }
  /// h^n, the volume of one voxel.
  double cell_volume() const { return cell_volume_; }
  Index voxels() const { return voxels_; }

  std::array<int, 3> coords(Index j) const;
  Index index(const std::array<int, 3>& c) const;
  Index stride(int axis) const { return strides_[static_cast<std::size_t>(axis)]; }
  /// Neighbour along `axis` in direction +1/-1, or -1 when that neighbour is a ghost.
  Index neighbor(Index j, int axis, int dir) const;
  void cell_bounds(Index j, std::vector<double>& lo, std::vector<double>& hi) const;

  bool operator==(const Lattice& o) const { return dim_ == o.dim_ && N_ == o.N_ && w_ == o.w_; }
  bool same_geometry(const Lattice& o) const { return dim_ == o.dim_ && N_ == o.N_; }

 private:
  int dim_;
  int N_;
  double w_;
  double density_;
  double cell_volume_;
  Index voxels_;
  std::array<Index, 3> strides_{1, 1, 1};
};

/// Coefficient used for the face between the last voxel and the ghost beyond it.
enum class GhostCoefficient { Clamp, Mirror };
/// Interface: hops across a face use the coefficient of the voxel above the face.
/// SourceVoxel: hops use the coefficient of the voxel they leave.
enum class RateConvention { Interface, SourceVoxel };

/// Per-voxel cell averages shared by the stochastic and deterministic models.
struct VoxelCoefficients {
  Lattice lattice;
  int K = 0;
  GhostCoefficient ghost = GhostCoefficient::Clamp;
  /// K x V cell averages of the diffusion fields.
  Eigen::MatrixXd diffusion;
  /// Per axis, K x V: coefficient on the upper face of each voxel (the next voxel's
  /// value, or the ghost extension at the top boundary).
  std::vector<Eigen::MatrixXd> upper_face;
  /// (K*K) x V, row to + K*from. Diagonal rows are zero.
  Eigen::MatrixXd rates;

  int species_count() const { return K; }
  double rate(int to, int from, Index j) const { return rates(to + K * from, j); }
  /// Total outflow coefficient of species `from` at voxel j.
  double outflow(int from, Index j) const;
};

/// Builds coefficients from raw per-voxel tables (upper faces are derived).
VoxelCoefficients make_coefficients(const Lattice& lat, Eigen::MatrixXd diffusion, Eigen::MatrixXd rates,
                                    GhostCoefficient ghost = GhostCoefficient::Clamp);
VoxelCoefficients make_coefficients(const ReactionNetwork& net, const Lattice& lat,
                                    GhostCoefficient ghost = GhostCoefficient::Clamp);

/// Exact cell means of `field` over every voxel.
Eigen::VectorXd cell_average(const SpatialField& field, const Lattice& lat);

/// Piecewise-constant concentration on a lattice: K x V, non-negative and finite.
class ConcField {
 public:
  ConcField(Lattice lat, Eigen::MatrixXd values);
  static ConcField zero(const Lattice& lat, int K);

  const Lattice& lattice() const { return lat_; }
  const Eigen::MatrixXd& values() const { return values_; }
  int species_count() const { return static_cast<int>(values_.rows()); }

 private:
  Lattice lat_;
  Eigen::MatrixXd values_;
};

ConcField project_to_lattice(const std::vector<SpatialField>& fields, const Lattice& lat);
/// Block average of a finer field; the target N must divide the source N.
ConcField project_to_lattice(const ConcField& fine, const Lattice& lat);

enum class OperatorPart { Diffusion, Reaction, Full };

/// Sparse generator acting on the flattened K x V state (index j*K + l).
Eigen::SparseMatrix<double> assemble_generator(const VoxelCoefficients& coef, OperatorPart part = OperatorPart::Full,
                                               RateConvention convention = RateConvention::Interface);

/// Diffusion with reflecting ghosts u_0 := u_2, u_{N+1} := u_{N-1}; only used as a
/// control showing that this boundary treatment breaks symmetry.
Eigen::SparseMatrix<double> assemble_neumann_diffusion(const VoxelCoefficients& coef);

}  // namespace hetrdme
