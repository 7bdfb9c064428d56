#include "hetrdme/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "hetrdme/csv.hpp"
#include "hetrdme/errors.hpp"
#include "hetrdme/operators.hpp"

namespace hetrdme {

namespace {

// Stream index reserved for the check suite, far from any replicate index.
constexpr std::uint64_t kCheckStream = 0xC0FFEE0000000000ULL;

constexpr double kSymmetryTol = 1e-12;
constexpr double kDriftTol = 1e-12;
constexpr double kContractionTol = 1e-10;
constexpr double kMonotoneTol = 1e-10;
constexpr Index kContractionLimit = 1024;

CheckRow row(std::string name, int level, std::string species, double value, double threshold, bool pass) {
  return CheckRow{std::move(name), level, std::move(species), value, threshold, pass};
}

CountState random_counts(const Lattice& lat, int K, Rng& rng) {
  CountState s(lat, K);
  const double top = 3.0 * lat.density();
  for (auto& c : s.counts) c = static_cast<std::int64_t>(uniform01(rng) * top);
  return s;
}

}  // namespace

std::vector<CheckRow> run_checks(const Scenario& s) {
  const Experiment exp = make_experiment(s);
  const int K = exp.network.species_count();
  const auto& names = exp.network.species();
  std::vector<CheckRow> rows;
  for (std::size_t i = 0; i < exp.schedule.levels.size(); ++i) {
    const int level = static_cast<int>(i);
    const Lattice lat = level_lattice(exp, level);
    const VoxelCoefficients coef = make_coefficients(exp.network, lat, exp.ghost);
    Rng rng = make_stream(exp.seed, i, kCheckStream);

    for (int l = 0; l < K; ++l) {
      const double a = check_self_adjoint(coef, l, 20, rng);
      rows.push_back(row("self_adjoint", level, names[static_cast<std::size_t>(l)], a, kSymmetryTol, a <= kSymmetryTol));
    }

    double drift_err = 0.0;
    for (int trial = 0; trial < 3; ++trial)
      drift_err = std::max(drift_err, drift_identity_error(random_counts(lat, K, rng), coef, exp.convention));
    rows.push_back(row("drift_identity", level, "", drift_err, kDriftTol, drift_err <= kDriftTol));

    if (static_cast<Index>(K) * lat.voxels() <= kContractionLimit) {
      const ContractionReport c = check_contraction(coef, {0.01, 0.1, 1.0}, 20, rng);
      rows.push_back(
          row("contraction", level, "", c.max_ratio, 1.0 + kContractionTol, c.max_ratio <= 1.0 + kContractionTol));
    }

    IntegrateOptions opt;
    opt.record_times = uniform_times(exp.t_end, std::min(exp.dt_record, exp.t_end));
    opt.dt = exp.pde_dt;
    opt.scheme = exp.scheme;
    opt.record_steps = true;
    const PdeSolution sol = integrate(project_to_lattice(exp.initial, lat), coef, opt);
    const double mass = max_relative_increase(mass_series(sol));
    rows.push_back(row("mass_monotone", level, "", mass, kMonotoneTol, mass <= kMonotoneTol));

    const auto& structure = exp.network.structure();
    if (structure && is_weakly_reversible(HomogeneousGenerator(structure->gamma))) {
      const Eigen::VectorXd u_inf = equilibrium_state(HomogeneousGenerator(structure->gamma));
      const double energy = max_relative_increase(energy_series(sol, u_inf));
      rows.push_back(row("energy_monotone", level, "", energy, kMonotoneTol, energy <= kMonotoneTol));
      std::vector<double> norms;
      for (const auto& st : sol.states) norms.push_back(norm(lat, st));
      bool positive = true;
      for (double v : norms) positive = positive && v > 0.0;
      if (positive && norms.size() >= 3) {
        const DecayFit fit = fit_decay_rate(sol.times, norms);
        rows.push_back(row("decay_rate", level, "", fit.alpha, 0.0, fit.alpha > 0.0));
      }
    }
  }
  return rows;
}

std::string check_csv(const std::vector<CheckRow>& rows) {
  std::ostringstream out;
  out << "check,level,species,value,threshold,status\n";
  for (const auto& r : rows)
    out << r.check << ',' << r.level << ',' << r.species << ',' << format_double(r.value) << ','
        << format_double(r.threshold) << ',' << (r.pass ? "pass" : "fail") << '\n';
  return out.str();
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("HETRDME_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
    throw std::invalid_argument(std::string("HETRDME_THREADS must be a positive integer, got '") + env + "'");
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

namespace {

struct Common {
  std::string scenario;
  std::string out = ".";
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 0;
};

Scenario load(const Common& c) {
  Scenario s = parse_scenario(c.scenario);
  if (c.seed_given) s.seed = c.seed;
  std::filesystem::create_directories(c.out);
  write_text_file((std::filesystem::path(c.out) / "scenario_resolved.scn").string(), serialize_scenario(s));
  return s;
}

std::string out_path(const Common& c, const std::string& file) {
  return (std::filesystem::path(c.out) / file).string();
}

void check_level(const Scenario& s, int level) {
  if (level < 0 || static_cast<std::size_t>(level) >= s.schedule.levels.size())
    throw std::out_of_range("level " + std::to_string(level) + " not in schedule (0.." +
                            std::to_string(static_cast<int>(s.schedule.levels.size()) - 1) + ")");
}

int cmd_simulate(const Common& c, int level, std::uint64_t replicate) {
  const Scenario s = load(c);
  check_level(s, level);
  const Experiment exp = make_experiment(s);
  const Lattice lat = level_lattice(exp, level);
  const VoxelCoefficients coef = make_coefficients(exp.network, lat, exp.ghost);

  SsaOptions opt;
  opt.record_times = uniform_times(exp.t_end, std::min(exp.dt_record, exp.t_end));
  double horizon = exp.t_end;
  for (double t : exp.checkpoints) horizon = std::max(horizon, t);
  opt.rho = stopping_level(exp, coef, horizon);
  opt.convention = exp.convention;
  CountState init(lat, exp.network.species_count());
  Rng rng = make_stream(exp.seed, static_cast<std::uint64_t>(level), replicate);
  if (exp.initial_mode == InitialMode::Round) {
    Rng unused = make_stream(exp.seed, static_cast<std::uint64_t>(level), 0);
    init = initial_counts(exp.initial, lat, InitialMode::Round, unused);
  } else {
    init = initial_counts(exp.initial, lat, exp.initial_mode, rng);
  }
  Trajectory tr = ssa_run(init, coef, opt, rng);
  tr.seed = exp.seed;
  tr.replicate = replicate;

  OutputHeader h = OutputHeader::from(s, exp.seed);
  h.extra = {{"level", std::to_string(level)},
             {"N", std::to_string(lat.cells_per_axis())},
             {"w", format_double(lat.w())},
             {"rho", format_double(opt.rho)}};
  const std::string file =
      "trajectory_level" + std::to_string(level) + "_rep" + std::to_string(replicate) + ".csv";
  write_text_file(out_path(c, file), trajectory_csv(h, tr, lat, exp.network.species()));
  return 0;
}

int cmd_solve(const Common& c, int level) {
  const Scenario s = load(c);
  check_level(s, level);
  const Experiment exp = make_experiment(s);
  const Lattice lat = level_lattice(exp, level);
  const VoxelCoefficients coef = make_coefficients(exp.network, lat, exp.ghost);
  IntegrateOptions opt;
  opt.record_times = uniform_times(exp.t_end, std::min(exp.dt_record, exp.t_end));
  opt.dt = exp.pde_dt;
  opt.scheme = exp.scheme;
  const PdeSolution sol = integrate(project_to_lattice(exp.initial, lat), coef, opt);
  OutputHeader h = OutputHeader::from(s, exp.seed);
  h.extra = {{"level", std::to_string(level)},
             {"N", std::to_string(lat.cells_per_axis())},
             {"w", format_double(lat.w())}};
  write_text_file(out_path(c, "pde_level" + std::to_string(level) + ".csv"),
                  pde_csv(h, sol, exp.network.species()));
  return 0;
}

int cmd_converge(const Common& c) {
  const Scenario s = load(c);
  const Experiment exp = make_experiment(s);
  const int threads = resolve_threads(c.threads);
  const auto start = std::chrono::steady_clock::now();
  const ConvergenceReport rep = converge(exp, threads);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const OutputHeader h = OutputHeader::from(s, exp.seed);
  write_text_file(out_path(c, "convergence.csv"), convergence_csv(h, rep));
  write_text_file(out_path(c, "convergence_plot.csv"), convergence_plot_csv(h, rep));
  std::cerr << "converge: " << rep.levels.size() << " levels, " << threads << " threads, " << secs << " s\n";
  return 0;
}

int cmd_check(const Common& c) {
  const Scenario s = load(c);
  const auto rows = run_checks(s);
  const OutputHeader h = OutputHeader::from(s, s.seed);
  write_text_file(out_path(c, "check.csv"), h.render() + check_csv(rows));
  int failed = 0;
  for (const auto& r : rows)
    if (!r.pass) {
      ++failed;
      std::cerr << "FAIL " << r.check << " level=" << r.level << (r.species.empty() ? "" : " species=" + r.species)
                << " value=" << format_double(r.value) << " threshold=" << format_double(r.threshold) << '\n';
    }
  std::cerr << "check: " << rows.size() - static_cast<std::size_t>(failed) << "/" << rows.size() << " passed\n";
  return failed ? 1 : 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Heterogeneous reaction-diffusion master equation: simulation and convergence diagnostics"};
  app.set_version_flag("--version", std::string(HETRDME_VERSION));
  app.require_subcommand(1);

  Common common;
  int level = 0;
  std::uint64_t replicate = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", common.scenario, "Scenario file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", common.out, "Output directory");
    sub->add_option("--seed", common.seed, "Master seed (overrides the scenario)");
  };

  auto* simulate = app.add_subcommand("simulate", "One SSA trajectory at a schedule level");
  add_common(simulate);
  simulate->add_option("--level", level, "Schedule level index");
  simulate->add_option("--replicate", replicate, "Replicate index (selects the random stream)");

  auto* solve = app.add_subcommand("solve", "Deterministic solution at a schedule level");
  add_common(solve);
  solve->add_option("--level", level, "Schedule level index");

  auto* conv = app.add_subcommand("converge", "Ensemble-versus-PDE study over the schedule");
  add_common(conv);
  conv->add_option("--threads", common.threads, "Worker threads");

  auto* check = app.add_subcommand("check", "Invariant suite");
  add_common(check);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  common.seed_given = false;
  for (auto* sub : {simulate, solve, conv, check})
    if (sub->parsed() && sub->count("--seed")) common.seed_given = true;

  try {
    if (simulate->parsed()) return cmd_simulate(common, level, replicate);
    if (solve->parsed()) return cmd_solve(common, level);
    if (conv->parsed()) return cmd_converge(common);
    return cmd_check(common);
  } catch (const std::exception& e) {
    std::cerr << "error: " << common.scenario << ": " << e.what() << '\n';
  }
  return 2;
}

}  // namespace hetrdme
