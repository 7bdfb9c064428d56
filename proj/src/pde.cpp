#include "hetrdme/pde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include "hetrdme/expm.hpp"
#include "hetrdme/operators.hpp"

namespace hetrdme {

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::CrankNicolson: return "crank-nicolson";
    case Scheme::ImplicitEuler: return "implicit-euler";
    case Scheme::Expm: return "expm";
  }
  return {};
}

Scheme parse_scheme(const std::string& s) {
  if (s == "crank-nicolson") return Scheme::CrankNicolson;
  if (s == "implicit-euler") return Scheme::ImplicitEuler;
  if (s == "expm") return Scheme::Expm;
  throw std::invalid_argument("unknown scheme '" + s + "'");
}

ConcField PdeSolution::snapshot(std::size_t i) const { return ConcField(lattice, states.at(i).cwiseMax(0.0)); }

double default_dt(const Eigen::SparseMatrix<double>& A) {
  Eigen::VectorXd rows = Eigen::VectorXd::Zero(A.rows());
  for (Index k = 0; k < A.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it) rows(it.row()) += std::abs(it.value());
  const double norm_inf = rows.size() ? rows.maxCoeff() : 0.0;
  return norm_inf > 0.0 ? std::min(1e-3, 0.1 / norm_inf) : 1e-3;
}

namespace {

class StepSolver {
 public:
  StepSolver(const Eigen::SparseMatrix<double>& A, Scheme scheme) : A_(A), scheme_(scheme) {}

  // Advances x by one step of size h.
  void step(Eigen::VectorXd& x, double h, double& max_residual) {
    if (!lu_ || std::abs(h - h_) > 1e-12 * h) factor(h);
    Eigen::VectorXd rhs = x;
    if (scheme_ == Scheme::CrankNicolson) rhs.noalias() += (0.5 * h_) * (A_ * x);
    Eigen::VectorXd next = lu_->solve(rhs);
    if (lu_->info() != Eigen::Success) throw SolverFailure("triangular solve failed");
    const double rn = rhs.norm();
    if (rn > 0.0) max_residual = std::max(max_residual, (M_ * next - rhs).norm() / rn);
    x.swap(next);
  }

 private:
  void factor(double h) {
    h_ = h;
    const double theta = scheme_ == Scheme::CrankNicolson ? 0.5 : 1.0;
    Eigen::SparseMatrix<double> I(A_.rows(), A_.cols());
    I.setIdentity();
    M_ = I - (theta * h) * A_;
    M_.makeCompressed();
    lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    lu_->analyzePattern(M_);
    lu_->factorize(M_);
    if (lu_->info() != Eigen::Success) throw SolverFailure("sparse LU factorisation failed: " + lu_->lastErrorMessage());
  }

  const Eigen::SparseMatrix<double>& A_;
  Scheme scheme_;
  double h_ = 0.0;
  Eigen::SparseMatrix<double> M_;
  std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
};

}  // namespace

PdeSolution integrate(const ConcField& u0, const VoxelCoefficients& coef, const IntegrateOptions& opt) {
  const Lattice& lat = coef.lattice;
  if (!u0.lattice().same_geometry(lat) || u0.species_count() != coef.K)
    throw LatticeMismatch("initial data and coefficients live on different lattices");
  if (opt.record_times.empty()) throw std::invalid_argument("no record times");
  for (std::size_t i = 0; i < opt.record_times.size(); ++i) {
    if (opt.record_times[i] < 0.0 || (i > 0 && !(opt.record_times[i] > opt.record_times[i - 1])))
      throw std::invalid_argument("record times must be non-negative and strictly increasing");
  }
  const Index K = coef.K;
  const Index n = K * lat.voxels();
  const Eigen::SparseMatrix<double> A =
      assemble_generator(coef, opt.include_reaction ? OperatorPart::Full : OperatorPart::Diffusion);
  const double dt_max = opt.dt > 0.0 ? opt.dt : default_dt(A);
  if (opt.scheme == Scheme::Expm && n > opt.expm_limit)
    throw std::invalid_argument("expm scheme limited to K*V <= " + std::to_string(opt.expm_limit));

  PdeSolution sol{lat, static_cast<int>(K), {}, {}, opt.scheme, 0.0, 0, 0.0, 0};
  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(u0.values().data(), n);
  auto push = [&](double t) {
    sol.times.push_back(t);
    sol.states.push_back(Eigen::Map<const Eigen::MatrixXd>(x.data(), K, lat.voxels()));
  };

  StepSolver solver(A, opt.scheme);
  Eigen::MatrixXd dense;
  Eigen::MatrixXd propagator;
  double propagator_span = -1.0;
  constexpr Index kDenseLimit = 1024;

  double t = 0.0;
  for (double target : opt.record_times) {
    const double span = target - t;
    if (span > 0.0) {
      if (opt.scheme == Scheme::Expm) {
        if (n <= kDenseLimit) {
          if (dense.size() == 0) dense = Eigen::MatrixXd(A);
          if (std::abs(span - propagator_span) > 1e-12 * span) {
            propagator = expm(span * dense);
            propagator_span = span;
          }
          x = propagator * x;
        } else {
          x = expm_action(A, span, x);
        }
        sol.dt = std::max(sol.dt, span);
        ++sol.steps;
      } else {
        const auto m = std::max<long>(1, static_cast<long>(std::ceil(span / dt_max - 1e-9)));
        const double h = span / static_cast<double>(m);
        sol.dt = std::max(sol.dt, h);
        for (long k = 1; k <= m; ++k) {
          solver.step(x, h, sol.max_residual);
          ++sol.steps;
          if (opt.record_steps && k < m) push(t + static_cast<double>(k) * h);
        }
      }
    }
    t = target;
    push(t);
  }
  for (const auto& s : sol.states) sol.negative_clamps += (s.array() < -1e-12).count();
  return sol;
}

double total_mass(const Lattice& lat, const Eigen::MatrixXd& u) { return lat.cell_volume() * u.sum(); }

std::vector<double> mass_series(const PdeSolution& sol) {
  std::vector<double> out;
  for (const auto& s : sol.states) out.push_back(total_mass(sol.lattice, s));
  return out;
}

double relative_energy(const Lattice& lat, const Eigen::MatrixXd& u, const Eigen::VectorXd& u_inf) {
  if (u_inf.size() != u.rows()) throw DimensionMismatch("equilibrium vector has wrong length");
  if ((u_inf.array() <= 0.0).any()) throw NonPositiveEquilibrium("equilibrium entries must be strictly positive");
  return lat.cell_volume() * (u.array().square().colwise() / u_inf.array()).sum();
}

std::vector<double> energy_series(const PdeSolution& sol, const Eigen::VectorXd& u_inf) {
  std::vector<double> out;
  for (const auto& s : sol.states) out.push_back(relative_energy(sol.lattice, s, u_inf));
  return out;
}

double max_relative_increase(const std::vector<double>& series) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < series.size(); ++i) {
    const double prev = series[i - 1];
    const double inc = series[i] - prev;
    const double rel = prev != 0.0 ? inc / std::abs(prev) : (inc > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    worst = std::max(worst, rel);
  }
  return series.size() < 2 ? 0.0 : worst;
}

DecayFit fit_decay_rate(const std::vector<double>& t, const std::vector<double>& values) {
  if (t.size() != values.size()) throw std::invalid_argument("time and value series differ in length");
  if (t.size() < 3) throw std::invalid_argument("decay fit needs at least 3 points");
  const auto n = static_cast<double>(t.size());
  double st = 0, sy = 0;
  std::vector<double> y(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0) || !std::isfinite(values[i]))
      throw NonPositiveSeries("value " + format_double(values[i]) + " at t=" + format_double(t[i]));
    y[i] = std::log(values[i]);
    st += t[i];
    sy += y[i];
  }
  const double tm = st / n, ym = sy / n;
  double stt = 0, sty = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    stt += (t[i] - tm) * (t[i] - tm);
    sty += (t[i] - tm) * (y[i] - ym);
  }
  if (stt == 0.0) throw std::invalid_argument("decay fit needs distinct times");
  DecayFit fit;
  const double slope = sty / stt;
  fit.alpha = -slope;
  fit.intercept = ym - slope * tm;
  double ss = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = y[i] - (fit.intercept + slope * t[i]);
    ss += r * r;
  }
  fit.rms_residual = std::sqrt(ss / n);
  return fit;
}

double check_self_adjoint(const VoxelCoefficients& coef, int species, int trials, Rng& rng, BoundaryTreatment boundary) {
  const Lattice& lat = coef.lattice;
  const Index K = coef.K;
  const Index V = lat.voxels();
  const Eigen::SparseMatrix<double> A = boundary == BoundaryTreatment::Dirichlet
                                            ? assemble_generator(coef, OperatorPart::Diffusion)
                                            : assemble_neumann_diffusion(coef);
  const double N2 = static_cast<double>(lat.cells_per_axis()) * lat.cells_per_axis();
  const double dsup = coef.diffusion.row(species).cwiseAbs().maxCoeff();
  std::normal_distribution<double> gauss;
  double worst = 0.0;
  Eigen::VectorXd u(K * V), v(K * V);
  for (int trial = 0; trial < trials; ++trial) {
    u.setZero();
    v.setZero();
    for (Index j = 0; j < V; ++j) {
      u(j * K + species) = gauss(rng);
      v(j * K + species) = gauss(rng);
    }
    const double h = lat.cell_volume();
    const double lhs = h * (A * u).dot(v);
    const double rhs = h * u.dot(A * v);
    const double scale = std::sqrt(h * u.squaredNorm()) * std::sqrt(h * v.squaredNorm()) * dsup * N2;
    if (scale > 0.0) worst = std::max(worst, std::abs(lhs - rhs) / scale);
  }
  return worst;
}

ContractionReport check_contraction(const VoxelCoefficients& coef, const std::vector<double>& t_list, int trials,
                                    Rng& rng, OperatorPart part) {
  const Eigen::MatrixXd A = Eigen::MatrixXd(assemble_generator(coef, part));
  const Index n = A.rows();
  if (n > 4096) throw std::invalid_argument("contraction check limited to K*V <= 4096");
  std::normal_distribution<double> gauss;
  ContractionReport rep;
  rep.omega = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd u(n);
  for (double t : t_list) {
    const Eigen::MatrixXd E = t == 0.0 ? Eigen::MatrixXd::Identity(n, n) : expm(t * A);
    double worst = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
      // Alternate signed and non-negative inputs.
      for (Index i = 0; i < n; ++i) u(i) = trial % 2 == 0 ? gauss(rng) : uniform01(rng);
      const double nu = u.norm();
      if (nu == 0.0) continue;
      worst = std::max(worst, (E * u).norm() / nu);
    }
    rep.max_ratio = std::max(rep.max_ratio, worst);
    if (t > 0.0 && worst > 0.0) rep.omega = std::max(rep.omega, std::log(worst) / t);
  }
  if (!std::isfinite(rep.omega)) rep.omega = 0.0;
  return rep;
}

double spectral_gap(const VoxelCoefficients& coef, OperatorPart part) {
  const Eigen::MatrixXd A = Eigen::MatrixXd(assemble_generator(coef, part));
  if ((A - A.transpose()).norm() <= 1e-14 * A.norm()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
    return -es.eigenvalues().maxCoeff();
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  return -es.eigenvalues().real().maxCoeff();
}

}  // namespace hetrdme
