#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hetrdme/expm.hpp"
#include "hetrdme/operators.hpp"
#include "hetrdme/pde.hpp"
#include "hetrdme/rdme.hpp"

using namespace hetrdme;
using std::numbers::pi;

namespace {

VoxelCoefficients scalar_coefficients(const Lattice& lat, const SpatialField& d) {
  return make_coefficients(lat, cell_average(d, lat).transpose(), Eigen::MatrixXd::Zero(1, lat.voxels()));
}

// Lowest Dirichlet eigenvector of the constant-coefficient stencil with ghosts at 0 and N+1.
Eigen::MatrixXd discrete_sine(int N) {
  Eigen::MatrixXd u(1, N);
  for (int j = 0; j < N; ++j) u(0, j) = std::sin(pi * (j + 1) / (N + 1));
  return u;
}

double lowest_eigenvalue(int N, double D) {
  const double s = std::sin(pi / (2.0 * (N + 1)));
  return 4.0 * N * N * D * s * s;
}

}  // namespace

TEST_CASE("zero data stays zero") {
  const Lattice lat(1, 8, 1);
  const auto coef = scalar_coefficients(lat, SpatialField::constant(1, 1.0));
  for (auto scheme : {Scheme::CrankNicolson, Scheme::ImplicitEuler, Scheme::Expm}) {
    IntegrateOptions opt;
    opt.record_times = {0.1, 0.2};
    opt.scheme = scheme;
    const auto sol = integrate(ConcField::zero(lat, 1), coef, opt);
    for (const auto& s : sol.states) CHECK(s.isZero());
  }
}

TEST_CASE("discrete eigenmode decays at the discrete eigenvalue") {
  for (int N : {4, 8, 16}) {
    const Lattice lat(1, N, 1);
    const double D = 0.7;
    const auto coef = scalar_coefficients(lat, SpatialField::constant(1, D));
    IntegrateOptions opt;
    opt.record_times = {0.1};
    opt.scheme = Scheme::Expm;
    const Eigen::MatrixXd u0 = discrete_sine(N);
    const auto sol = integrate(ConcField(lat, u0), coef, opt);
    const Eigen::MatrixXd expected = u0 * std::exp(-lowest_eigenvalue(N, D) * 0.1);
    const double rel = (sol.states.back() - expected).cwiseAbs().maxCoeff() / expected.cwiseAbs().maxCoeff();
    CHECK(rel <= 1e-10);
  }
}

TEST_CASE("temporal orders against expm") {
  const Lattice lat(1, 16, 1);
  const auto coef = scalar_coefficients(lat, parse_field("sin offset=0.5 scale=0.25 k=2", 1));
  const ConcField u0 = project_to_lattice({parse_field("sin k=1", 1)}, lat);
  IntegrateOptions ref_opt;
  ref_opt.record_times = {0.2};
  ref_opt.scheme = Scheme::Expm;
  const auto ref = integrate(u0, coef, ref_opt).states.back();
  auto error = [&](Scheme scheme, double dt) {
    IntegrateOptions opt;
    opt.record_times = {0.2};
    opt.scheme = scheme;
    opt.dt = dt;
    return norm(lat, integrate(u0, coef, opt).states.back() - ref);
  };
  const double cn = std::log2(error(Scheme::CrankNicolson, 0.01) / error(Scheme::CrankNicolson, 0.005));
  CHECK(cn == doctest::Approx(2.0).epsilon(0.15));
  const double ie = std::log2(error(Scheme::ImplicitEuler, 0.01) / error(Scheme::ImplicitEuler, 0.005));
  CHECK(ie == doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("spatial convergence is first order with ghost-cell Dirichlet data") {
  const auto d = parse_field("sin offset=0.5 scale=0.25 k=2", 1);
  const auto init = parse_field("sin k=1", 1);
  auto solve = [&](int N) {
    const Lattice lat(1, N, 1);
    IntegrateOptions opt;
    opt.record_times = {0.1};
    opt.scheme = Scheme::Expm;
    return integrate(project_to_lattice({init}, lat), scalar_coefficients(lat, d), opt).states.back();
  };
  const Lattice fine(1, 512, 1);
  const ConcField ref(fine, solve(512));
  std::vector<double> err;
  for (int N : {16, 32, 64}) {
    const Lattice lat(1, N, 1);
    err.push_back(norm(lat, solve(N) - project_to_lattice(ref, lat).values()));
  }
  for (std::size_t i = 0; i + 1 < err.size(); ++i) {
    const double order = std::log2(err[i] / err[i + 1]);
    CHECK(order > 0.8);
    CHECK(order < 1.3);
  }
}

TEST_CASE("homogeneous two-species system separates into reaction times diffusion") {
  const Lattice lat(1, 8, 1);
  const double D = 0.3, a = 2.0, b = 0.5;  // S1 -> S2 at a, S2 -> S1 at b
  Eigen::MatrixXd rates = Eigen::MatrixXd::Zero(4, 8);
  rates.row(1).setConstant(a);
  rates.row(2).setConstant(b);
  const auto coef = make_coefficients(lat, Eigen::MatrixXd::Constant(2, 8, D), rates);
  Eigen::MatrixXd u0(2, 8);
  u0.row(0).setConstant(1.0);
  u0.row(1).setConstant(0.25);
  IntegrateOptions opt;
  opt.record_times = {0.3};
  opt.scheme = Scheme::Expm;
  const auto sol = integrate(ConcField(lat, u0), coef, opt);

  const auto dcoef = make_coefficients(lat, Eigen::MatrixXd::Constant(1, 8, D), Eigen::MatrixXd::Zero(1, 8));
  const Eigen::MatrixXd heat = expm(0.3 * Eigen::MatrixXd(assemble_generator(dcoef))) * Eigen::VectorXd::Ones(8);
  // Closed-form 2x2 ODE: r1(t) = r1_inf + (r1(0) - r1_inf) e^{-(a+b)t}.
  const double total = 1.25, r1_inf = total * b / (a + b);
  const double r1 = r1_inf + (1.0 - r1_inf) * std::exp(-(a + b) * 0.3);
  const double r2 = total - r1;
  for (int j = 0; j < 8; ++j) {
    CHECK(sol.states.back()(0, j) == doctest::Approx(r1 * heat(j)).epsilon(1e-11));
    CHECK(sol.states.back()(1, j) == doctest::Approx(r2 * heat(j)).epsilon(1e-11));
  }
}

TEST_CASE("mass and energy") {
  const Lattice one(1, 1, 1);
  Eigen::MatrixXd rates = Eigen::MatrixXd::Zero(4, 1);
  rates(1, 0) = 1.0;
  rates(2, 0) = 3.0;
  const auto coef = make_coefficients(one, Eigen::MatrixXd::Zero(2, 1), rates);
  Eigen::MatrixXd u0(2, 1);
  u0 << 0.7, 0.2;
  IntegrateOptions opt;
  opt.record_times = uniform_times(1.0, 0.1);
  const auto sol = integrate(ConcField(one, u0), coef, opt);
  for (double m : mass_series(sol)) CHECK(m == doctest::Approx(0.9).epsilon(1e-13));

  CHECK(total_mass(ConcField::zero(Lattice(1, 4, 1), 2)) == 0.0);
  Eigen::VectorXd half(2);
  half << 0.5, 0.5;
  const Lattice lat(1, 5, 1);
  CHECK(relative_energy(lat, Eigen::MatrixXd::Ones(2, 5), half) == doctest::Approx(4.0));
  CHECK(relative_energy(lat, Eigen::MatrixXd::Zero(2, 5), half) == 0.0);
  Eigen::VectorXd bad(2);
  bad << 1.0, 0.0;
  CHECK_THROWS_AS(relative_energy(lat, Eigen::MatrixXd::Ones(2, 5), bad), NonPositiveEquilibrium);

  CHECK(max_relative_increase({3, 2, 2, 1}) <= 0.0);
  CHECK(max_relative_increase({1, 2}) == doctest::Approx(1.0));
}

TEST_CASE("decay fits") {
  std::vector<double> t, v, flat;
  for (int i = 0; i < 10; ++i) {
    t.push_back(0.1 * i);
    v.push_back(std::exp(-2.0 * t.back()));
    flat.push_back(3.0);
  }
  CHECK(fit_decay_rate(t, v).alpha == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(std::abs(fit_decay_rate(t, flat).alpha) < 1e-12);
  v[3] = 0.0;
  CHECK_THROWS_AS(fit_decay_rate(t, v), NonPositiveSeries);
  CHECK_THROWS(fit_decay_rate({0, 1}, {1, 0.5}));
}

TEST_CASE("self-adjointness") {
  Rng rng = make_stream(1, 0, 0);
  const Lattice lat(1, 64, 1);
  const auto constant = scalar_coefficients(lat, SpatialField::constant(1, 2.0));
  CHECK(check_self_adjoint(constant, 0, 20, rng) <= 1e-14);
  const auto jump = scalar_coefficients(lat, parse_field("piecewise breaks=0.5 values=1,10", 1));
  CHECK(check_self_adjoint(jump, 0, 20, rng) <= 1e-12);
  CHECK(check_self_adjoint(jump, 0, 20, rng, BoundaryTreatment::Neumann) > 1e-6);
}

TEST_CASE("contraction") {
  Rng rng = make_stream(2, 0, 0);
  const int N = 12;
  const Lattice lat(1, N, 1);
  const auto coef = scalar_coefficients(lat, parse_field("piecewise breaks=0.5 values=1,10", 1));
  const auto rep = check_contraction(coef, {0.0}, 4, rng);
  CHECK(rep.max_ratio == doctest::Approx(1.0));
  CHECK(check_contraction(coef, {0.01, 0.1, 1.0}, 50, rng).max_ratio <= 1.0 + 1e-10);

  const double D = 0.5;
  const auto flat = scalar_coefficients(lat, SpatialField::constant(1, D));
  const Eigen::MatrixXd A = Eigen::MatrixXd(assemble_generator(flat));
  const Eigen::VectorXd e = discrete_sine(N).transpose();
  for (double t : {0.01, 0.1, 1.0}) {
    const double ratio = (expm(t * A) * e).norm() / e.norm();
    CHECK(ratio == doctest::Approx(std::exp(-lowest_eigenvalue(N, D) * t)).epsilon(1e-10));
  }
  CHECK(spectral_gap(flat, OperatorPart::Diffusion) == doctest::Approx(lowest_eigenvalue(N, D)).epsilon(1e-10));
}

TEST_CASE("expm action matches the dense exponential") {
  const Lattice lat(1, 20, 1);
  const auto coef = scalar_coefficients(lat, parse_field("cos offset=1 scale=0.5 k=3", 1));
  const Eigen::SparseMatrix<double> A = assemble_generator(coef);
  const Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(20, 0.0, 1.0);
  const Eigen::VectorXd dense = expm(0.05 * Eigen::MatrixXd(A)) * v;
  CHECK((expm_action(A, 0.05, v) - dense).norm() <= 1e-12 * dense.norm());
}

TEST_CASE("scheme names") {
  for (auto s : {Scheme::CrankNicolson, Scheme::ImplicitEuler, Scheme::Expm}) CHECK(parse_scheme(to_string(s)) == s);
  CHECK_THROWS(parse_scheme("rk4"));
}
