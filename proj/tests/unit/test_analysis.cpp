#include <doctest.h>

#include <atomic>
#include <numeric>

#include "hetrdme/analysis.hpp"
#include "hetrdme/scenario.hpp"

using namespace hetrdme;

namespace {

Experiment from_text(const std::string& body) {
  return make_experiment(parse_scenario_text("schema_version = 1\n" + body));
}

const char* kHomogeneous =
    "species = A, B\n"
    "diffusion.A = constant 0.5\n"
    "diffusion.B = constant 0.5\n"
    "structure.gamma = 0, 1; 1, 0\n"
    "structure.phi = constant 1\n"
    "initial.A = sin k=1\n"
    "schedule = 8:512\n";

}  // namespace

TEST_CASE("schedule construction and validation") {
  const auto s = make_schedule(8, 3, 3.0);
  REQUIRE(s.levels.size() == 3);
  CHECK(s.levels[0].N == 8);
  CHECK(s.levels[0].w == 512);
  CHECK(s.levels[1].N == 16);
  CHECK(s.levels[1].w == 4096);
  CHECK(s.levels[2].N == 32);
  CHECK(s.levels[2].w == 32768);
  CHECK(s.ratio(0) == doctest::Approx(1.0 / 8));
  CHECK(s.ratio(1) == doctest::Approx(1.0 / 16));
  CHECK(s.ratio(2) == doctest::Approx(1.0 / 32));
  CHECK_NOTHROW(validate_schedule(s));
  CHECK_THROWS_AS(validate_schedule(make_schedule(8, 3, 1.0)), InvalidSchedule);
  CHECK_NOTHROW(validate_schedule(make_schedule(4, 3, 2.0, 2)));
  CHECK_THROWS_AS(validate_schedule(ScalingSchedule{1, {{8, 512}, {8, 4096}}}), InvalidSchedule);
  CHECK_THROWS_AS(validate_schedule(ScalingSchedule{1, {}}), InvalidSchedule);
}

TEST_CASE("wilson intervals") {
  const auto zero = wilson_interval(0, 200);
  CHECK(zero.lo == 0.0);
  CHECK(zero.hi == doctest::Approx(3.841458820694124 / 203.841458820694124).epsilon(1e-12));
  const auto half = wilson_interval(100, 200);
  CHECK(half.lo + half.hi == doctest::Approx(1.0));
  CHECK(half.lo < 0.5);
  const auto all = wilson_interval(200, 200);
  CHECK(all.hi == doctest::Approx(1.0));
}

TEST_CASE("martingale bound plug-in value") {
  CHECK(martingale_bound(1.0, 2.0, Lattice(1, 8, 512), 2, 1.0, 1.0) == doctest::Approx(2.015625).epsilon(1e-15));
}

TEST_CASE("parallel_for fills every index and rethrows") {
  std::vector<int> out(100, 0);
  parallel_for(out.size(), 4, [&](std::size_t i) { out[i] = static_cast<int>(i); });
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == static_cast<int>(i));
  CHECK_THROWS_AS(parallel_for(10, 3,
                               [](std::size_t i) {
                                 if (i == 7) throw std::runtime_error("seven");
                               }),
                  std::runtime_error);
}

TEST_CASE("zero initial data gives zero distances") {
  const auto exp = from_text(
      "species = A\n"
      "diffusion.A = constant 1\n"
      "schedule = 4:64\n"
      "checkpoints = 0.05, 0.1\n");
  const auto rep = ensemble_vs_pde(exp, 0, 8, {0.05, 0.1}, {1e-6}, 1, 2);
  for (const auto& c : rep.checkpoints) {
    CHECK(c.max == 0.0);
    CHECK(c.phat[0] == 0.0);
  }
}

TEST_CASE("single-voxel conversion has fluctuations of order w^-1/2") {
  const auto exp = from_text(
      "species = A, B\n"
      "diffusion.A = constant 1\n"
      "diffusion.B = constant 1\n"
      "rate.B.A = constant 1\n"
      "rate.A.B = constant 1\n"
      "initial.A = constant 1\n"
      "schedule = 1:400\n"
      "checkpoints = 0.001\n");
  // Hops out of the single voxel are absorbed too quickly for a long horizon; a short one keeps counts large.
  const auto rep = ensemble_vs_pde(exp, 0, 64, {0.001}, {5.0 / 20.0}, 3, 2);
  CHECK(rep.checkpoints[0].mean < 0.25);
  CHECK(rep.checkpoints[0].phat[0] <= 0.05);
}

TEST_CASE("statistics do not depend on replicate order") {
  LevelRun run;
  run.level = 0;
  run.N = 8;
  run.w = 512;
  run.checkpoints = {0.1, 0.2};
  run.distances = Eigen::MatrixXd::Random(50, 2).cwiseAbs();
  run.residual_sq = Eigen::MatrixXd::Random(50, 2).cwiseAbs();
  run.exited.assign(50, 0);
  run.exited[3] = 1;
  LevelRun rev = run;
  rev.distances = run.distances.colwise().reverse();
  rev.residual_sq = run.residual_sq.colwise().reverse();
  std::reverse(rev.exited.begin(), rev.exited.end());
  const std::vector<std::vector<double>> deltas{{0.3, 0.6}, {0.5}};
  const auto a = summarize_level(run, deltas, 1);
  const auto b = summarize_level(rev, deltas, 1);
  for (std::size_t c = 0; c < 2; ++c) {
    CHECK(a.checkpoints[c].mean == b.checkpoints[c].mean);
    CHECK(a.checkpoints[c].median == b.checkpoints[c].median);
    CHECK(a.checkpoints[c].residual_sq_mean == b.checkpoints[c].residual_sq_mean);
    CHECK(a.checkpoints[c].exceed == b.checkpoints[c].exceed);
  }
  CHECK(a.any_exceed == b.any_exceed);
  CHECK(a.exit_fraction == b.exit_fraction);
}

TEST_CASE("decay study on the homogeneous network") {
  const auto exp = from_text(kHomogeneous);
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(0.5 + 0.05 * i);
  const auto rep = decay_study(exp, 0, grid);
  CHECK(rep.fit.alpha > 0.0);
  CHECK(rep.fit.alpha == doctest::Approx(rep.spectral_gap).epsilon(0.2));
  CHECK(rep.energy_max_increase <= 1e-10);
  CHECK(rep.mass_max_increase <= 1e-10);
  CHECK(rep.equilibrium(0) == doctest::Approx(0.5));
}

TEST_CASE("decay study refuses networks without gamma * phi structure") {
  const auto flagship = from_text(
      "species = A, B\n"
      "diffusion.A = constant 0.5\n"
      "diffusion.B = constant 0.5\n"
      "rate.B.A = constant 1\n"
      "schedule = 8:512\n");
  CHECK_THROWS_AS(decay_study(flagship, 0, {0.1, 0.2, 0.3}), StructureMismatch);
  const auto one_way = from_text(
      "species = A, B\n"
      "diffusion.A = constant 0.5\n"
      "diffusion.B = constant 0.5\n"
      "structure.gamma = 0, 0; 1, 0\n"
      "structure.phi = constant 1\n"
      "schedule = 8:512\n");
  CHECK_THROWS_AS(decay_study(one_way, 0, {0.1, 0.2, 0.3}), StructureMismatch);
}

TEST_CASE("deterministic scenario gives zero martingale diagnostics") {
  const auto exp = from_text(
      "species = A\n"
      "diffusion.A = constant 1\n"
      "schedule = 4:64\n");
  const auto rep = martingale_suite(exp, 0, 10, 0.5, 1, 2);
  CHECK(rep.projection_mean == 0.0);
  CHECK(rep.residual_sq_mean == 0.0);
  CHECK(rep.exit_fraction == 0.0);
}
