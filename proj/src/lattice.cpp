#include "hetrdme/lattice.hpp"

#include <cmath>

namespace hetrdme {

Lattice::Lattice(int dim, int N, double w) : dim_(dim), N_(N), w_(w) {
  if (dim < 1 || dim > 3) throw DimensionMismatch("lattice dimension must be 1, 2 or 3");
  if (N < 1) throw std::invalid_argument("lattice needs at least one voxel per axis");
  if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("density scale w must be positive and finite");
  density_ = std::pow(w, dim);
  cell_volume_ = std::pow(1.0 / N, dim);
  voxels_ = 1;
  for (int a = 0; a < dim; ++a) {
    strides_[static_cast<std::size_t>(a)] = voxels_;
    voxels_ *= N;
  }
}

std::array<int, 3> Lattice::coords(Index j) const {
  std::array<int, 3> c{0, 0, 0};
  for (int a = 0; a < dim_; ++a) {
    c[static_cast<std::size_t>(a)] = static_cast<int>(j % N_);
    j /= N_;
  }
  return c;
}

Index Lattice::index(const std::array<int, 3>& c) const {
  Index j = 0;
  for (int a = 0; a < dim_; ++a) j += c[static_cast<std::size_t>(a)] * strides_[static_cast<std::size_t>(a)];
  return j;
}

Index Lattice::neighbor(Index j, int axis, int dir) const {
  const Index s = strides_[static_cast<std::size_t>(axis)];
  const Index c = (j / s) % N_;
  if (dir > 0) return c + 1 < N_ ? j + s : -1;
  return c > 0 ? j - s : -1;
}

void Lattice::cell_bounds(Index j, std::vector<double>& lo, std::vector<double>& hi) const {
  lo.resize(static_cast<std::size_t>(dim_));
  hi.resize(static_cast<std::size_t>(dim_));
  const auto c = coords(j);
  for (int a = 0; a < dim_; ++a) {
    const auto ua = static_cast<std::size_t>(a);
    lo[ua] = static_cast<double>(c[ua]) / N_;
    hi[ua] = static_cast<double>(c[ua] + 1) / N_;
  }
}

double VoxelCoefficients::outflow(int from, Index j) const {
  double out = 0.0;
  for (int to = 0; to < K; ++to)
    if (to != from) out += rate(to, from, j);
  return out;
}

VoxelCoefficients make_coefficients(const Lattice& lat, Eigen::MatrixXd diffusion, Eigen::MatrixXd rates,
                                    GhostCoefficient ghost) {
  const auto K = diffusion.rows();
  if (K < 1) throw DimensionMismatch("need at least one species");
  if (diffusion.cols() != lat.voxels()) throw DimensionMismatch("diffusion table has wrong voxel count");
  if (rates.size() == 0) rates = Eigen::MatrixXd::Zero(K * K, lat.voxels());
  if (rates.rows() != K * K || rates.cols() != lat.voxels()) throw DimensionMismatch("rate table has wrong shape");
  for (Index l = 0; l < K; ++l) rates.row(l + K * l).setZero();

  VoxelCoefficients c{lat, static_cast<int>(K), ghost, std::move(diffusion), {}, std::move(rates)};
  for (int a = 0; a < lat.dimension(); ++a) {
    Eigen::MatrixXd up(K, lat.voxels());
    for (Index j = 0; j < lat.voxels(); ++j) {
      Index src = lat.neighbor(j, a, +1);
      if (src < 0) {
        src = j;
        if (ghost == GhostCoefficient::Mirror) {
          const Index down = lat.neighbor(j, a, -1);
          if (down >= 0) src = down;
        }
      }
      up.col(j) = c.diffusion.col(src);
    }
    c.upper_face.push_back(std::move(up));
  }
  return c;
}

VoxelCoefficients make_coefficients(const ReactionNetwork& net, const Lattice& lat, GhostCoefficient ghost) {
  if (net.dimension() != lat.dimension()) throw DimensionMismatch("network and lattice dimensions differ");
  const int K = net.species_count();
  Eigen::MatrixXd diffusion(K, lat.voxels());
  for (int l = 0; l < K; ++l) diffusion.row(l) = cell_average(net.diffusion(l), lat).transpose();
  Eigen::MatrixXd rates = Eigen::MatrixXd::Zero(K * K, lat.voxels());
  for (int to = 0; to < K; ++to)
    for (int from = 0; from < K; ++from)
      if (to != from) rates.row(to + K * from) = cell_average(net.rate(to, from), lat).transpose();
  return make_coefficients(lat, std::move(diffusion), std::move(rates), ghost);
}

Eigen::VectorXd cell_average(const SpatialField& field, const Lattice& lat) {
  if (field.dimension() != lat.dimension())
    throw DimensionMismatch("field has dimension " + std::to_string(field.dimension()) + ", lattice " +
                            std::to_string(lat.dimension()));
  Eigen::VectorXd out(lat.voxels());
  std::vector<double> lo, hi;
  for (Index j = 0; j < lat.voxels(); ++j) {
    lat.cell_bounds(j, lo, hi);
    out(j) = field.mean_over(lo, hi);
  }
  return out;
}

ConcField::ConcField(Lattice lat, Eigen::MatrixXd values) : lat_(std::move(lat)), values_(std::move(values)) {
  if (values_.cols() != lat_.voxels()) throw LatticeMismatch("concentration has wrong voxel count");
  if (!values_.allFinite()) throw std::invalid_argument("concentration must be finite");
  if ((values_.array() < 0.0).any()) throw std::invalid_argument("concentration must be non-negative");
}

ConcField ConcField::zero(const Lattice& lat, int K) { return ConcField(lat, Eigen::MatrixXd::Zero(K, lat.voxels())); }

ConcField project_to_lattice(const std::vector<SpatialField>& fields, const Lattice& lat) {
  Eigen::MatrixXd v(static_cast<Index>(fields.size()), lat.voxels());
  for (std::size_t l = 0; l < fields.size(); ++l) v.row(static_cast<Index>(l)) = cell_average(fields[l], lat).transpose();
  return ConcField(lat, std::move(v));
}

ConcField project_to_lattice(const ConcField& fine, const Lattice& lat) {
  const Lattice& src = fine.lattice();
  if (src.dimension() != lat.dimension() || src.cells_per_axis() % lat.cells_per_axis() != 0)
    throw IncompatibleLattices("cannot project N=" + std::to_string(src.cells_per_axis()) + " onto N=" +
                               std::to_string(lat.cells_per_axis()));
  const int ratio = src.cells_per_axis() / lat.cells_per_axis();
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(fine.species_count(), lat.voxels());
  for (Index j = 0; j < src.voxels(); ++j) {
    auto c = src.coords(j);
    for (auto& x : c) x /= ratio;
    v.col(lat.index(c)) += fine.values().col(j);
  }
  v /= std::pow(static_cast<double>(ratio), lat.dimension());
  return ConcField(lat, std::move(v));
}

Eigen::SparseMatrix<double> assemble_generator(const VoxelCoefficients& coef, OperatorPart part,
                                               RateConvention convention) {
  const Lattice& lat = coef.lattice;
  const Index K = coef.K;
  const Index n = K * lat.voxels();
  const double N2 = static_cast<double>(lat.cells_per_axis()) * lat.cells_per_axis();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(n * (1 + 2 * lat.dimension() + K)));
  for (Index j = 0; j < lat.voxels(); ++j) {
    if (part != OperatorPart::Reaction) {
      for (int a = 0; a < lat.dimension(); ++a) {
        const Index up = lat.neighbor(j, a, +1);
        const Index down = lat.neighbor(j, a, -1);
        for (Index l = 0; l < K; ++l) {
          const Index r = j * K + l;
          const double dj = coef.diffusion(l, j);
          if (convention == RateConvention::Interface) {
            const double u = coef.upper_face[static_cast<std::size_t>(a)](l, j);
            t.emplace_back(r, r, -N2 * (u + dj));
            if (up >= 0) t.emplace_back(r, up * K + l, N2 * u);
            if (down >= 0) t.emplace_back(r, down * K + l, N2 * dj);
          } else {
            t.emplace_back(r, r, -2.0 * N2 * dj);
            if (up >= 0) t.emplace_back(r, up * K + l, N2 * coef.diffusion(l, up));
            if (down >= 0) t.emplace_back(r, down * K + l, N2 * coef.diffusion(l, down));
          }
        }
      }
    }
    if (part != OperatorPart::Diffusion) {
      for (Index from = 0; from < K; ++from)
        for (Index to = 0; to < K; ++to) {
          if (to == from) continue;
          const double k = coef.rates(to + K * from, j);
          if (k == 0.0) continue;
          t.emplace_back(j * K + to, j * K + from, k);
          t.emplace_back(j * K + from, j * K + from, -k);
        }
    }
  }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(t.begin(), t.end());
  return A;
}

Eigen::SparseMatrix<double> assemble_neumann_diffusion(const VoxelCoefficients& coef) {
  const Lattice& lat = coef.lattice;
  const Index K = coef.K;
  const Index n = K * lat.voxels();
  const double N2 = static_cast<double>(lat.cells_per_axis()) * lat.cells_per_axis();
  std::vector<Eigen::Triplet<double>> t;
  for (Index j = 0; j < lat.voxels(); ++j)
    for (int a = 0; a < lat.dimension(); ++a) {
      Index up = lat.neighbor(j, a, +1);
      Index down = lat.neighbor(j, a, -1);
      // Reflect through the boundary voxel.
      if (up < 0) up = down >= 0 ? down : j;
      if (down < 0) down = lat.neighbor(j, a, +1) >= 0 ? lat.neighbor(j, a, +1) : j;
      for (Index l = 0; l < K; ++l) {
        const Index r = j * K + l;
        const double u = coef.upper_face[static_cast<std::size_t>(a)](l, j);
        const double dj = coef.diffusion(l, j);
        t.emplace_back(r, r, -N2 * (u + dj));
        t.emplace_back(r, up * K + l, N2 * u);
        t.emplace_back(r, down * K + l, N2 * dj);
      }
    }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(t.begin(), t.end());
  return A;
}

}  // namespace hetrdme
