#include "hetrdme/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

#include "hetrdme/operators.hpp"

namespace hetrdme {

double ScalingSchedule::ratio(std::size_t i) const {
  const auto& l = levels.at(i);
  return static_cast<double>(l.N) * l.N / std::pow(l.w, dimension);
}

void validate_schedule(const ScalingSchedule& s) {
  if (s.levels.empty()) throw InvalidSchedule("schedule has no levels");
  if (s.dimension < 1 || s.dimension > 3) throw InvalidSchedule("dimension must be 1, 2 or 3");
  for (std::size_t i = 0; i < s.levels.size(); ++i) {
    const auto& l = s.levels[i];
    if (l.N < 1 || !(l.w > 0.0)) throw InvalidSchedule("level " + std::to_string(i) + " needs N >= 1 and w > 0");
    if (i == 0) continue;
    const auto& p = s.levels[i - 1];
    if (!(l.N > p.N)) throw InvalidSchedule("N must increase strictly (level " + std::to_string(i) + ")");
    if (!(l.w > p.w)) throw InvalidSchedule("w must increase strictly (level " + std::to_string(i) + ")");
    if (!(s.ratio(i) < s.ratio(i - 1)))
      throw InvalidSchedule("N^2/w^n must decrease strictly: " + format_double(s.ratio(i - 1)) + " -> " +
                            format_double(s.ratio(i)) + " at level " + std::to_string(i));
  }
}

ScalingSchedule make_schedule(int base_N, int levels, double w_exponent, int dim) {
  if (base_N < 1 || levels < 1) throw InvalidSchedule("need base_N >= 1 and at least one level");
  ScalingSchedule s;
  s.dimension = dim;
  int N = base_N;
  for (int i = 0; i < levels; ++i, N *= 2) s.levels.push_back({N, std::pow(static_cast<double>(N), w_exponent)});
  validate_schedule(s);
  return s;
}

WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  WilsonInterval w{std::clamp(centre - half, 0.0, 1.0), std::clamp(centre + half, 0.0, 1.0)};
  w.lo = std::min(w.lo, p);
  w.hi = std::max(w.hi, p);
  return w;
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& f) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex m;
  std::size_t failed_index = count;
  std::exception_ptr failure;
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        f(i);
      } catch (...) {
        std::lock_guard lock(m);
        // Keep the failure with the lowest index so the reported error does not depend on timing.
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t k = 0; k < std::min(workers, count); ++k) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

Lattice level_lattice(const Experiment& exp, int level) {
  if (level < 0 || static_cast<std::size_t>(level) >= exp.schedule.levels.size())
    throw std::out_of_range("level " + std::to_string(level) + " not in schedule");
  const auto& l = exp.schedule.levels[static_cast<std::size_t>(level)];
  return Lattice(exp.network.dimension(), l.N, l.w);
}

PdeSolution reference_solution(const Experiment& exp, const VoxelCoefficients& coef, std::vector<double> times) {
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  IntegrateOptions opt;
  opt.record_times = std::move(times);
  opt.dt = exp.pde_dt;
  const Index n = static_cast<Index>(coef.K) * coef.lattice.voxels();
  opt.scheme = n <= opt.expm_limit ? Scheme::Expm : exp.scheme;
  return integrate(project_to_lattice(exp.initial, coef.lattice), coef, opt);
}

double stopping_level(const Experiment& exp, const VoxelCoefficients& coef, double t_max) {
  const auto grid = uniform_times(t_max, std::min(exp.dt_record, t_max));
  const PdeSolution ref = reference_solution(exp, coef, grid);
  double sup = 0.0;
  for (const auto& s : ref.states) sup = std::max(sup, s.colwise().sum().maxCoeff());
  if (!(sup > 0.0)) sup = 1.0 / coef.lattice.density();  // zero data: any positive level works
  return exp.rho_factor * sup;
}

namespace {

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  for (double t : v)
    if (!(t > 0.0)) throw std::invalid_argument("checkpoints must be positive");
  if (v.empty()) throw std::invalid_argument("no checkpoints");
  return v;
}

double median_of_sorted(const std::vector<double>& s) {
  const std::size_t m = s.size();
  if (m == 0) return 0.0;
  return m % 2 ? s[m / 2] : 0.5 * (s[m / 2 - 1] + s[m / 2]);
}

double sum_sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

LevelRun run_level(const Experiment& exp, int level, int replicates, int threads, bool track_residual) {
  if (replicates < 1) throw std::invalid_argument("ensemble needs at least one replicate");
  const auto start = std::chrono::steady_clock::now();
  const Lattice lat = level_lattice(exp, level);
  const VoxelCoefficients coef = make_coefficients(exp.network, lat, exp.ghost);
  LevelRun run;
  run.level = level;
  run.N = lat.cells_per_axis();
  run.w = lat.w();
  run.checkpoints = sorted_unique(exp.checkpoints);
  const std::size_t C = run.checkpoints.size();
  run.rho = stopping_level(exp, coef, std::max(exp.t_end, run.checkpoints.back()));
  const PdeSolution ref = reference_solution(exp, coef, run.checkpoints);

  SsaOptions opt;
  opt.record_times.push_back(0.0);
  opt.record_times.insert(opt.record_times.end(), run.checkpoints.begin(), run.checkpoints.end());
  opt.rho = run.rho;
  opt.convention = exp.convention;
  opt.track_integrals = track_residual;

  const auto M = static_cast<std::size_t>(replicates);
  run.distances = Eigen::MatrixXd::Zero(static_cast<Index>(M), static_cast<Index>(C));
  run.residual_sq = Eigen::MatrixXd::Zero(static_cast<Index>(M), static_cast<Index>(C));
  run.exited.assign(M, 0);
  std::vector<std::uint64_t> events(M, 0);

  std::optional<CountState> shared_initial;
  if (exp.initial_mode == InitialMode::Round) {
    Rng unused = make_stream(exp.seed, static_cast<std::uint64_t>(level), 0);
    shared_initial = initial_counts(exp.initial, lat, InitialMode::Round, unused);
  }

  parallel_for(M, threads, [&](std::size_t r) {
    Rng rng = make_stream(exp.seed, static_cast<std::uint64_t>(level), r);
    const CountState init = shared_initial ? *shared_initial : initial_counts(exp.initial, lat, exp.initial_mode, rng);
    const Trajectory tr = ssa_run(init, coef, opt, rng);
    std::vector<Eigen::MatrixXd> z;
    if (track_residual) z = martingale_residual(tr, coef, IntegralMode::Exact, exp.convention);
    for (std::size_t c = 0; c < C; ++c) {
      run.distances(static_cast<Index>(r), static_cast<Index>(c)) = norm(lat, tr.snapshots[c + 1] - ref.states[c]);
      if (track_residual)
        run.residual_sq(static_cast<Index>(r), static_cast<Index>(c)) = inner_product(lat, z[c + 1], z[c + 1]);
    }
    run.exited[r] = tr.exited ? 1 : 0;
    events[r] = tr.events;
  });
  for (auto e : events) run.events += e;
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

LevelReport summarize_level(const LevelRun& run, const std::vector<std::vector<double>>& deltas, int dimension) {
  const auto M = static_cast<std::size_t>(run.distances.rows());
  const std::size_t C = run.checkpoints.size();
  if (deltas.size() != C) throw std::invalid_argument("need one delta list per checkpoint");
  LevelReport rep;
  rep.level = run.level;
  rep.N = run.N;
  rep.w = run.w;
  rep.ratio = static_cast<double>(run.N) * run.N / std::pow(run.w, dimension);
  rep.rho = run.rho;
  rep.M = M;
  rep.events = run.events;
  rep.exit_fraction = static_cast<double>(std::count(run.exited.begin(), run.exited.end(), 1)) / static_cast<double>(M);
  for (std::size_t c = 0; c < C; ++c) {
    CheckpointStats s;
    s.t = run.checkpoints[c];
    std::vector<double> d(M), z(M);
    for (std::size_t r = 0; r < M; ++r) {
      d[r] = run.distances(static_cast<Index>(r), static_cast<Index>(c));
      z[r] = run.residual_sq(static_cast<Index>(r), static_cast<Index>(c));
    }
    s.residual_sq_mean = sum_sorted(z) / static_cast<double>(M);
    std::sort(d.begin(), d.end());
    s.median = median_of_sorted(d);
    s.max = d.empty() ? 0.0 : d.back();
    s.mean = sum_sorted(d) / static_cast<double>(M);
    s.deltas = deltas[c];
    for (double delta : s.deltas) {
      const auto k = static_cast<std::size_t>(d.end() - std::upper_bound(d.begin(), d.end(), delta));
      s.exceed.push_back(k);
      s.phat.push_back(static_cast<double>(k) / static_cast<double>(M));
      s.interval.push_back(wilson_interval(k, M));
    }
    rep.checkpoints.push_back(std::move(s));
  }
  const std::size_t nd = C ? deltas.front().size() : 0;
  for (std::size_t k = 0; k < nd; ++k) {
    std::size_t count = 0;
    for (std::size_t r = 0; r < M; ++r) {
      bool any = false;
      for (std::size_t c = 0; c < C; ++c)
        if (k < deltas[c].size() && run.distances(static_cast<Index>(r), static_cast<Index>(c)) > deltas[c][k]) any = true;
      count += any ? 1 : 0;
    }
    rep.any_exceed.push_back(count);
    rep.any_phat.push_back(static_cast<double>(count) / static_cast<double>(M));
    rep.any_interval.push_back(wilson_interval(count, M));
  }
  return rep;
}

LevelReport ensemble_vs_pde(const Experiment& exp, int level, int replicates, const std::vector<double>& checkpoints,
                            const std::vector<double>& deltas, std::uint64_t seed, int threads) {
  Experiment e = exp;
  e.seed = seed;
  e.checkpoints = checkpoints;
  const LevelRun run = run_level(e, level, replicates, threads, false);
  return summarize_level(run, std::vector<std::vector<double>>(run.checkpoints.size(), deltas),
                         exp.schedule.dimension);
}

ConvergenceReport converge(const Experiment& exp, int threads) {
  validate_schedule(exp.schedule);
  std::vector<LevelRun> runs;
  for (std::size_t i = 0; i < exp.schedule.levels.size(); ++i)
    runs.push_back(run_level(exp, static_cast<int>(i), exp.ensemble, threads));
  ConvergenceReport rep;
  const std::size_t C = runs.front().checkpoints.size();
  for (std::size_t c = 0; c < C; ++c) {
    if (!exp.deltas.empty()) {
      rep.deltas.push_back(exp.deltas);
      continue;
    }
    std::vector<double> d(static_cast<std::size_t>(runs.front().distances.rows()));
    for (std::size_t r = 0; r < d.size(); ++r) d[r] = runs.front().distances(static_cast<Index>(r), static_cast<Index>(c));
    std::sort(d.begin(), d.end());
    rep.deltas.push_back({exp.delta_factor * median_of_sorted(d)});
  }
  for (const auto& run : runs) rep.levels.push_back(summarize_level(run, rep.deltas, exp.schedule.dimension));
  return rep;
}

double martingale_bound(double t, double rho, const Lattice& lat, int K, double lambda_upper, double d_upper) {
  const double N = lat.cells_per_axis();
  const double k = K;
  return t * rho / lat.density() * (k * k * lambda_upper + 4.0 * k * lat.dimension() * d_upper * N * N);
}

MartingaleReport martingale_suite(const Experiment& exp, int level, int replicates, double t, std::uint64_t seed,
                                  int threads) {
  if (!(t > 0.0)) throw std::invalid_argument("martingale time must be positive");
  const Lattice lat = level_lattice(exp, level);
  const VoxelCoefficients coef = make_coefficients(exp.network, lat, exp.ghost);
  const int K = coef.K;
  MartingaleReport rep;
  rep.N = lat.cells_per_axis();
  rep.w = lat.w();
  rep.t = t;
  rep.M = static_cast<std::size_t>(replicates);
  rep.rho = stopping_level(exp, coef, t);
  rep.bound = martingale_bound(t, rep.rho, lat, K, exp.network.lambda_upper(), exp.network.D_upper());

  // Test field: sin(pi x_0) per species, scaled by (1 + l).
  const SpatialField bump = SpatialField::trig(lat.dimension(), SpatialField::Kind::Sin, 0.0, 1.0, 1.0, 0.0, {0});
  const Eigen::VectorXd profile = cell_average(bump, lat);
  Eigen::MatrixXd test(K, lat.voxels());
  for (int l = 0; l < K; ++l) test.row(l) = (1.0 + l) * profile.transpose();

  SsaOptions opt;
  opt.record_times = {0.0, t};
  opt.rho = rep.rho;
  opt.convention = exp.convention;
  opt.track_integrals = true;
  std::optional<CountState> shared_initial;
  if (exp.initial_mode == InitialMode::Round) {
    Rng unused = make_stream(seed, static_cast<std::uint64_t>(level), 0);
    shared_initial = initial_counts(exp.initial, lat, InitialMode::Round, unused);
  }
  std::vector<double> proj(rep.M), sq(rep.M);
  std::vector<char> exited(rep.M, 0);
  parallel_for(rep.M, threads, [&](std::size_t r) {
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(level), r);
    const CountState init = shared_initial ? *shared_initial : initial_counts(exp.initial, lat, exp.initial_mode, rng);
    const Trajectory tr = ssa_run(init, coef, opt, rng);
    const auto z = martingale_residual(tr, coef, IntegralMode::Exact, exp.convention);
    proj[r] = inner_product(lat, z[1], test);
    sq[r] = inner_product(lat, z[1], z[1]);
    exited[r] = tr.exited ? 1 : 0;
  });
  auto mean_and_error = [&](const std::vector<double>& v, double& mean, double& err) {
    const double n = static_cast<double>(v.size());
    mean = sum_sorted(v) / n;
    std::vector<double> dev(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) dev[i] = (v[i] - mean) * (v[i] - mean);
    const double var = v.size() > 1 ? sum_sorted(dev) / (n - 1.0) : 0.0;
    err = std::sqrt(var / n);
  };
  mean_and_error(proj, rep.projection_mean, rep.projection_std_error);
  mean_and_error(sq, rep.residual_sq_mean, rep.residual_sq_std_error);
  rep.exit_fraction = static_cast<double>(std::count(exited.begin(), exited.end(), 1)) / static_cast<double>(rep.M);
  return rep;
}

DecayReport decay_study(const Experiment& exp, int level, const std::vector<double>& t_grid) {
  const auto& structure = exp.network.structure();
  if (!structure) throw StructureMismatch("network rates are not declared in gamma * phi form");
  const HomogeneousGenerator gen(structure->gamma);
  if (!is_weakly_reversible(gen)) throw StructureMismatch("gamma is not weakly reversible");
  const Lattice lat = level_lattice(exp, level);
  const VoxelCoefficients coef = make_coefficients(exp.network, lat, exp.ghost);
  DecayReport rep;
  rep.equilibrium = equilibrium_state(gen);
  const PdeSolution sol = reference_solution(exp, coef, t_grid);
  rep.times = sol.times;
  for (const auto& s : sol.states) rep.norms.push_back(norm(lat, s));
  rep.fit = fit_decay_rate(rep.times, rep.norms);
  rep.energy = energy_series(sol, rep.equilibrium);
  rep.energy_max_increase = max_relative_increase(rep.energy);
  rep.mass_max_increase = max_relative_increase(mass_series(sol));
  rep.spectral_gap = spectral_gap(coef, OperatorPart::Full);
  return rep;
}

}  // namespace hetrdme
