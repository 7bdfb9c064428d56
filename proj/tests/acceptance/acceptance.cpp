// Acceptance suite. Each criterion prints one line "criterion <k> PASS|FAIL: <details>".
// Usage: acceptance [--criterion k] [--threads n]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "hetrdme/analysis.hpp"
#include "hetrdme/cli.hpp"
#include "hetrdme/expm.hpp"
#include "hetrdme/operators.hpp"
#include "hetrdme/pde.hpp"
#include "hetrdme/rdme.hpp"
#include "hetrdme/scenario.hpp"

using namespace hetrdme;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string details;
};

std::string scenario_path(const std::string& name) { return std::string(HETRDME_SCENARIO_DIR) + "/" + name + ".scn"; }

const std::vector<std::string> kShipped{"flagship", "homogeneous", "degenerate_region", "plane2d", "single_species",
                                        "quick"};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

// Random heterogeneous coefficients: smooth, discontinuous or rough per-voxel values.
VoxelCoefficients random_coefficients(const Lattice& lat, int K, std::mt19937_64& gen, GhostCoefficient ghost) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Eigen::MatrixXd d(K, lat.voxels());
  for (int l = 0; l < K; ++l) {
    const int style = static_cast<int>(U(gen) * 3);
    const double base = 0.1 + 2.0 * U(gen), jump = 0.1 + 5.0 * U(gen), k = 1 + std::floor(4 * U(gen));
    for (Index j = 0; j < lat.voxels(); ++j) {
      const double x = (lat.coords(j)[0] + 0.5) * lat.h();
      if (style == 0) d(l, j) = base * (1.0 + 0.5 * std::sin(k * std::numbers::pi * x));
      else if (style == 1) d(l, j) = x < 0.5 ? base : jump;
      else d(l, j) = 0.05 + 3.0 * U(gen);
    }
  }
  Eigen::MatrixXd rates = Eigen::MatrixXd::Zero(K * K, lat.voxels());
  for (int to = 0; to < K; ++to)
    for (int from = 0; from < K; ++from)
      if (to != from)
        for (Index j = 0; j < lat.voxels(); ++j) rates(to + K * from, j) = U(gen) < 0.2 ? 0.0 : 4.0 * U(gen);
  return make_coefficients(lat, d, rates, ghost);
}

Outcome drift_identity() {
  std::mt19937_64 gen(101);
  std::uniform_int_distribution<int> pickN(1, 16), pickK(1, 3), pickW(1, 2000);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int n = 1 + i % 2;
    const Lattice lat(n, pickN(gen), pickW(gen));
    const int K = pickK(gen);
    const auto coef = random_coefficients(lat, K, gen, i % 3 == 0 ? GhostCoefficient::Mirror : GhostCoefficient::Clamp);
    CountState s(lat, K);
    std::uniform_int_distribution<int> count(0, static_cast<int>(3 * lat.density()));
    for (auto& c : s.counts) c = count(gen);
    worst = std::max(worst, drift_identity_error(s, coef));
  }
  return {worst <= 1e-12, "1000 instances, max relative discrepancy " + fmt(worst) + " (tol 1e-12)"};
}

Outcome self_adjointness() {
  Rng rng = make_stream(202, 0, 0);
  double worst = 0.0, neumann = std::numeric_limits<double>::infinity();
  for (int N : {2, 4, 16, 64, 256}) {
    const Lattice lat(1, N, 1);
    for (const char* d : {"constant 1.5", "piecewise breaks=0.5 values=1,10", "sin offset=0.5 scale=0.25 k=2"}) {
      const auto field = parse_field(d, 1);
      const auto coef =
          make_coefficients(lat, cell_average(field, lat).transpose(), Eigen::MatrixXd::Zero(1, N));
      worst = std::max(worst, check_self_adjoint(coef, 0, 20, rng));
      if (field.kind() != SpatialField::Kind::Constant && N >= 4)
        neumann = std::min(neumann, check_self_adjoint(coef, 0, 20, rng, BoundaryTreatment::Neumann));
    }
  }
  return {worst <= 1e-12 && neumann > 1e-6,
          "max asymmetry " + fmt(worst) + " (tol 1e-12); smallest Neumann-control asymmetry " + fmt(neumann) +
              " (must exceed 1e-6)"};
}

Outcome contraction() {
  Rng rng = make_stream(303, 0, 0);
  const auto flagship = make_experiment(parse_scenario(scenario_path("flagship")));
  double worst = 0.0;
  for (int N : {4, 16, 64}) {
    const Lattice lat(1, N, 1);
    const auto coef = make_coefficients(flagship.network, lat, flagship.ghost);
    for (int l = 0; l < coef.K; ++l) {
      const auto single = make_coefficients(lat, coef.diffusion.row(l), Eigen::MatrixXd::Zero(1, N));
      worst = std::max(worst, check_contraction(single, {0.01, 0.1, 1.0}, 1000, rng).max_ratio);
    }
    const auto jump = make_coefficients(
        lat, cell_average(parse_field("piecewise breaks=0.5 values=1,10", 1), lat).transpose(),
        Eigen::MatrixXd::Zero(1, N));
    worst = std::max(worst, check_contraction(jump, {0.01, 0.1, 1.0}, 1000, rng).max_ratio);
  }
  return {worst <= 1.0 + 1e-10, "max ||T(t)u|| / ||u|| = " + fmt(worst) + " (tol 1 + 1e-10)"};
}

Outcome dissipation() {
  double mass = -1.0, energy = -1.0;
  int energy_cases = 0;
  std::string worst_case;
  for (const auto& name : kShipped) {
    const Scenario s = parse_scenario(scenario_path(name));
    const Experiment exp = make_experiment(s);
    for (std::size_t i = 0; i < exp.schedule.levels.size(); ++i) {
      const Lattice lat = level_lattice(exp, static_cast<int>(i));
      const auto coef = make_coefficients(exp.network, lat, exp.ghost);
      IntegrateOptions opt;
      opt.record_times = uniform_times(exp.t_end, std::min(exp.dt_record, exp.t_end));
      opt.dt = exp.pde_dt;
      opt.scheme = exp.scheme;
      opt.record_steps = true;
      const auto sol = integrate(project_to_lattice(exp.initial, lat), coef, opt);
      const double m = max_relative_increase(mass_series(sol));
      if (m > mass) {
        mass = m;
        worst_case = name;
      }
      const auto& st = exp.network.structure();
      if (st && is_weakly_reversible(HomogeneousGenerator(st->gamma))) {
        energy = std::max(energy, max_relative_increase(energy_series(sol, equilibrium_state(HomogeneousGenerator(st->gamma)))));
        ++energy_cases;
      }
    }
  }
  return {mass <= 1e-10 && energy <= 1e-10 && energy_cases > 0,
          "max per-step relative mass increase " + fmt(mass) + " (" + worst_case + "), energy " + fmt(energy) +
              " over " + std::to_string(energy_cases) + " structured runs (tol 1e-10)"};
}

Outcome martingale(int threads) {
  const Scenario s = parse_scenario(scenario_path("flagship"));
  const Experiment exp = make_experiment(s);
  const auto rep = martingale_suite(exp, s.martingale_level, 1000, 1.0, s.seed, threads);
  const double plug_in = martingale_bound(1.0, 2.0, Lattice(1, 8, 512), 2, 1.0, 1.0);
  const bool mean_ok = std::abs(rep.projection_mean) <= 3.0 * rep.projection_std_error;
  const bool bound_ok = rep.residual_sq_mean <= rep.bound && rep.bound <= plug_in;
  return {mean_ok && bound_ok,
          "(N,w)=(" + std::to_string(rep.N) + "," + fmt(rep.w) + ") M=1000 t=1: mean <z,e> = " +
              fmt(rep.projection_mean) + " (3 SE = " + fmt(3 * rep.projection_std_error) + "); E||z||^2 = " +
              fmt(rep.residual_sq_mean) + " <= bound " + fmt(rep.bound) + " (rho=" + fmt(rep.rho) +
              ", reference plug-in " + fmt(plug_in) + ")"};
}

Outcome convergence(int threads) {
  const Scenario s = parse_scenario(scenario_path("flagship"));
  const Experiment exp = make_experiment(s);
  const auto start = std::chrono::steady_clock::now();
  const auto rep = converge(exp, threads);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  bool decreasing = true;
  std::ostringstream table;
  const std::size_t C = rep.deltas.size();
  for (std::size_t c = 0; c < C; ++c) {
    table << " t=" << fmt(rep.levels[0].checkpoints[c].t) << " delta=" << fmt(rep.deltas[c][0]) << " phat:";
    for (std::size_t i = 0; i < rep.levels.size(); ++i) {
      const double p = rep.levels[i].checkpoints[c].phat[0];
      table << ' ' << fmt(p);
      if (i > 0 && !(p < rep.levels[i - 1].checkpoints[c].phat[0])) decreasing = false;
    }
    table << ';';
  }
  bool last_small = true;
  for (const auto& c : rep.levels.back().checkpoints) last_small = last_small && c.phat[0] <= 0.05;
  std::ostringstream exits;
  for (const auto& lv : rep.levels) exits << ' ' << fmt(lv.exit_fraction);
  return {decreasing && last_small, "M=" + std::to_string(exp.ensemble) + table.str() +
                                        " exit fractions:" + exits.str() + "; " + fmt(secs) + " s"};
}

Outcome orders() {
  const auto d = parse_field("sin offset=0.5 scale=0.25 k=2", 1);
  const Lattice lat(1, 32, 1);
  const auto coef = make_coefficients(lat, cell_average(d, lat).transpose(), Eigen::MatrixXd::Zero(1, 32));
  const ConcField u0 = project_to_lattice({parse_field("sin k=1", 1)}, lat);
  IntegrateOptions ref_opt;
  ref_opt.record_times = {0.2};
  ref_opt.scheme = Scheme::Expm;
  const Eigen::MatrixXd ref = integrate(u0, coef, ref_opt).states.back();
  std::vector<double> err;
  for (double dt : {0.004, 0.002, 0.001}) {
    IntegrateOptions opt;
    opt.record_times = {0.2};
    opt.dt = dt;
    err.push_back(norm(lat, integrate(u0, coef, opt).states.back() - ref));
  }
  const double p1 = std::log2(err[0] / err[1]), p2 = std::log2(err[1] / err[2]);

  // Lowest discrete Dirichlet mode: exact decay rate 4 N^2 D sin^2(pi / (2(N+1))).
  double eig = 0.0;
  for (int N : {8, 16, 32}) {
    const double D = 0.7;
    const Lattice l(1, N, 1);
    const auto c = make_coefficients(l, Eigen::MatrixXd::Constant(1, N, D), Eigen::MatrixXd::Zero(1, N));
    Eigen::MatrixXd v(1, N);
    for (int j = 0; j < N; ++j) v(0, j) = std::sin(std::numbers::pi * (j + 1) / (N + 1));
    const double s = std::sin(std::numbers::pi / (2.0 * (N + 1)));
    IntegrateOptions opt;
    opt.record_times = {0.1};
    opt.scheme = Scheme::Expm;
    const Eigen::MatrixXd expected = v * std::exp(-4.0 * N * N * D * s * s * 0.1);
    const Eigen::MatrixXd got = integrate(ConcField(l, v), c, opt).states.back();
    eig = std::max(eig, (got - expected).cwiseAbs().maxCoeff() / expected.cwiseAbs().maxCoeff());
  }
  const bool ok = std::abs(p1 - 2.0) <= 0.3 && std::abs(p2 - 2.0) <= 0.3 && eig <= 1e-10;
  return {ok, "crank-nicolson orders " + fmt(p1) + ", " + fmt(p2) + " (2 +- 0.3); eigen-decay relative error " +
                  fmt(eig) + " (tol 1e-10)"};
}

Outcome decay() {
  std::vector<double> grid;
  for (int i = 0; i <= 30; ++i) grid.push_back(0.5 + 0.05 * i);
  std::ostringstream out;
  bool ok = true;
  int checked = 0;
  for (const auto& name : kShipped) {
    const Experiment exp = make_experiment(parse_scenario(scenario_path(name)));
    if (!is_weakly_reversible(exp.network)) continue;
    const auto coef = make_coefficients(exp.network, level_lattice(exp, 0), exp.ghost);
    const auto sol = reference_solution(exp, coef, grid);
    std::vector<double> norms;
    for (const auto& s : sol.states) norms.push_back(norm(coef.lattice, s));
    const DecayFit fit = fit_decay_rate(sol.times, norms);
    ok = ok && fit.alpha > 0.0;
    ++checked;
    out << ' ' << name << " alpha=" << fmt(fit.alpha);
    if (name == "homogeneous") {
      const auto rep = decay_study(exp, 0, grid);
      const double rel = std::abs(rep.fit.alpha - rep.spectral_gap) / rep.spectral_gap;
      ok = ok && rel <= 0.2;
      out << " (generator gap " << fmt(rep.spectral_gap) << ", rel diff " << fmt(rel) << ")";
    }
    out << ';';
  }
  return {ok && checked > 0, std::to_string(checked) + " weakly reversible scenarios:" + out.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "hetrdme");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

Outcome determinism(int threads) {
  const fs::path root = fs::temp_directory_path() / "hetrdme_acceptance_determinism";
  fs::remove_all(root);
  const std::string quick = scenario_path("quick");
  for (const char* run : {"a", "b"}) {
    const std::string dir = (root / run).string();
    // Different worker counts on the two runs: output must not depend on scheduling.
    const std::string t = std::to_string(std::string(run) == "a" ? threads : 1);
    if (invoke({"simulate", "--scenario", quick, "--level", "1", "--replicate", "2", "--out", dir}) != 0 ||
        invoke({"converge", "--scenario", quick, "--threads", t, "--out", dir}) != 0)
      return {false, "command failed"};
  }
  int files = 0;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    const auto other = root / "b" / entry.path().filename();
    if (!fs::exists(other) || slurp(entry.path()) != slurp(other))
      return {false, entry.path().filename().string() + " differs"};
    ++files;
  }
  return {files >= 4, std::to_string(files) + " files byte-identical across simulate and converge re-runs"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int only = 0;
  int threads = 0;
  app.add_option("--criterion", only, "Run a single criterion (1-9)")->check(CLI::Range(0, 9));
  app.add_option("--threads", threads, "Worker threads for ensemble criteria");
  CLI11_PARSE(app, argc, argv);
  threads = resolve_threads(threads);

  const std::vector<std::function<Outcome()>> criteria{
      drift_identity,
      self_adjointness,
      contraction,
      dissipation,
      [&] { return martingale(threads); },
      [&] { return convergence(threads); },
      orders,
      decay,
      [&] { return determinism(threads); },
  };
  int failures = 0;
  for (std::size_t k = 1; k <= criteria.size(); ++k) {
    if (only && static_cast<std::size_t>(only) != k) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k - 1]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "criterion " << k << (o.pass ? " PASS: " : " FAIL: ") << o.details << " [" << fmt(secs) << " s]"
              << std::endl;
    failures += o.pass ? 0 : 1;
  }
  return failures ? 1 : 0;
}
