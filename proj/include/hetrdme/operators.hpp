#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "hetrdme/lattice.hpp"

namespace hetrdme {

template <class Scalar>
using Table = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

namespace detail {

template <class Derived>
void check_shape(const VoxelCoefficients& coef, const Eigen::MatrixBase<Derived>& u) {
  if (u.rows() != coef.K || u.cols() != coef.lattice.voxels())
    throw LatticeMismatch("field is " + std::to_string(u.rows()) + "x" + std::to_string(u.cols()) + ", expected " +
                          std::to_string(coef.K) + "x" + std::to_string(coef.lattice.voxels()));
}

template <class Derived>
typename Derived::Scalar diffusion_at(const VoxelCoefficients& coef, const Eigen::MatrixBase<Derived>& u, Index l,
                                      Index j) {
  using Scalar = typename Derived::Scalar;
  const Lattice& lat = coef.lattice;
  const Scalar N2 = Scalar(lat.cells_per_axis()) * Scalar(lat.cells_per_axis());
  Scalar acc(0);
  for (int a = 0; a < lat.dimension(); ++a) {
    const Index up = lat.neighbor(j, a, +1);
    const Index down = lat.neighbor(j, a, -1);
    const Scalar uu = up >= 0 ? u(l, up) : Scalar(0);
    const Scalar ud = down >= 0 ? u(l, down) : Scalar(0);
    const Scalar fu = coef.upper_face[static_cast<std::size_t>(a)](l, j);
    const Scalar fd = coef.diffusion(l, j);
    acc += N2 * (fu * uu - (fu + fd) * u(l, j) + fd * ud);
  }
  return acc;
}

}  // namespace detail

/// Heterogeneous three-term stencil with Dirichlet ghosts, summed over axes, one species.
template <class Derived>
Eigen::Matrix<typename Derived::Scalar, 1, Eigen::Dynamic> apply_discrete_diffusion(
    const VoxelCoefficients& coef, const Eigen::MatrixBase<Derived>& u, int species) {
  detail::check_shape(coef, u);
  Eigen::Matrix<typename Derived::Scalar, 1, Eigen::Dynamic> out(coef.lattice.voxels());
  for (Index j = 0; j < coef.lattice.voxels(); ++j) out(j) = detail::diffusion_at(coef, u, species, j);
  return out;
}

template <class Derived>
Table<typename Derived::Scalar> apply_discrete_diffusion(const VoxelCoefficients& coef,
                                                          const Eigen::MatrixBase<Derived>& u) {
  detail::check_shape(coef, u);
  Table<typename Derived::Scalar> out(u.rows(), u.cols());
  for (Index j = 0; j < u.cols(); ++j)
    for (Index l = 0; l < u.rows(); ++l) out(l, j) = detail::diffusion_at(coef, u, l, j);
  return out;
}

/// (R u)^l_j = sum_{l' != l} lam^{l l'}_j u^{l'}_j - (sum_{l' != l} lam^{l' l}_j) u^l_j
template <class Derived>
Table<typename Derived::Scalar> apply_discrete_reaction(const VoxelCoefficients& coef,
                                                         const Eigen::MatrixBase<Derived>& u) {
  using Scalar = typename Derived::Scalar;
  detail::check_shape(coef, u);
  const int K = coef.K;
  Table<Scalar> out(u.rows(), u.cols());
  for (Index j = 0; j < u.cols(); ++j)
    for (int l = 0; l < K; ++l) {
      Scalar gain(0), loss(0);
      for (int m = 0; m < K; ++m) {
        if (m == l) continue;
        gain += Scalar(coef.rate(l, m, j)) * u(m, j);
        loss += Scalar(coef.rate(m, l, j));
      }
      out(l, j) = gain - loss * u(l, j);
    }
  return out;
}

/// F(u) = L_N u + R_N u, evaluated as the sum of the two operators above.
template <class Derived>
Table<typename Derived::Scalar> drift(const VoxelCoefficients& coef, const Eigen::MatrixBase<Derived>& u) {
  Table<typename Derived::Scalar> out = apply_discrete_diffusion(coef, u);
  out += apply_discrete_reaction(coef, u);
  return out;
}

/// h^n sum_l sum_j u^l_j v^l_j, the L2 product of the piecewise-constant embeddings.
template <class A, class B>
typename A::Scalar inner_product(const Lattice& lat, const Eigen::MatrixBase<A>& u, const Eigen::MatrixBase<B>& v) {
  if (u.rows() != v.rows() || u.cols() != v.cols() || u.cols() != lat.voxels())
    throw LatticeMismatch("fields live on different lattices");
  return typename A::Scalar(lat.cell_volume()) * u.cwiseProduct(v).sum();
}

template <class A>
typename A::Scalar norm(const Lattice& lat, const Eigen::MatrixBase<A>& u) {
  using std::sqrt;
  return sqrt(inner_product(lat, u, u));
}

inline double inner_product(const ConcField& u, const ConcField& v) {
  if (!(u.lattice() == v.lattice())) throw LatticeMismatch("fields live on different lattices");
  return inner_product(u.lattice(), u.values(), v.values());
}

inline double norm(const ConcField& u) { return norm(u.lattice(), u.values()); }

}  // namespace hetrdme
