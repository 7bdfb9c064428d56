#include "hetrdme/csv.hpp"

#include <fstream>
#include <sstream>

namespace hetrdme {

OutputHeader OutputHeader::from(const Scenario& s, std::uint64_t seed) {
  OutputHeader h;
  h.version = HETRDME_VERSION;
  h.scenario_name = s.name;
  h.scenario_hash = hetrdme::scenario_hash(s);
  h.seed = seed;
  h.convention = s.convention;
  h.ghost = s.ghost;
  h.scheme = s.scheme;
  return h;
}

std::string OutputHeader::render() const {
  std::ostringstream out;
  out << "# tool: hetrdme " << version << '\n';
  out << "# scenario: " << scenario_name << '\n';
  out << "# scenario_hash: " << scenario_hash << '\n';
  out << "# seed: " << seed << '\n';
  out << "# rate_convention: " << to_string(convention) << '\n';
  out << "# ghost_coeff: " << to_string(ghost) << '\n';
  out << "# scheme: " << to_string(scheme) << '\n';
  for (const auto& [k, v] : extra) out << "# " << k << ": " << v << '\n';
  return out.str();
}

std::string voxel_label(const Lattice& lat, Index j) {
  const auto c = lat.coords(j);
  std::string out;
  for (int a = 0; a < lat.dimension(); ++a) {
    if (a) out += ',';
    out += std::to_string(c[static_cast<std::size_t>(a)] + 1);
  }
  return out;
}

namespace {

void field_rows(std::ostringstream& out, const char* scale, const std::string& replicate, double t, const Lattice& lat,
                const Eigen::MatrixXd& values, const std::vector<std::string>& species) {
  const std::string tt = format_double(t);
  for (Index l = 0; l < values.rows(); ++l)
    for (Index j = 0; j < values.cols(); ++j) {
      std::string label = voxel_label(lat, j);
      if (lat.dimension() > 1) label = '"' + label + '"';
      out << scale << ',' << replicate << ',' << tt << ',' << species[static_cast<std::size_t>(l)] << ',' << label << ','
          << format_double(values(l, j)) << '\n';
    }
}

}  // namespace

std::string trajectory_csv(const OutputHeader& h, const Trajectory& tr, const Lattice& lat,
                           const std::vector<std::string>& species) {
  std::ostringstream out;
  out << h.render();
  out << "# events: " << tr.events << '\n';
  out << "# exited: " << (tr.exited ? "true" : "false") << '\n';
  if (tr.exited) out << "# exit_time: " << format_double(tr.exit_time) << '\n';
  out << kFieldColumns << '\n';
  const std::string rep = std::to_string(tr.replicate);
  for (std::size_t i = 0; i < tr.snapshots.size(); ++i) field_rows(out, "ssa", rep, tr.times[i], lat, tr.snapshots[i], species);
  return out.str();
}

std::string pde_csv(const OutputHeader& h, const PdeSolution& sol, const std::vector<std::string>& species) {
  std::ostringstream out;
  out << h.render();
  out << "# dt: " << format_double(sol.dt) << '\n';
  out << "# steps: " << sol.steps << '\n';
  out << "# max_residual: " << format_double(sol.max_residual) << '\n';
  out << "# negative_clamps: " << sol.negative_clamps << '\n';
  out << kFieldColumns << '\n';
  for (std::size_t i = 0; i < sol.states.size(); ++i)
    field_rows(out, "pde", "0", sol.times[i], sol.lattice, sol.snapshot(i).values(), species);
  return out.str();
}

std::string convergence_csv(const OutputHeader& h, const ConvergenceReport& rep) {
  std::ostringstream out;
  out << h.render();
  out << "level,N,w,ratio,M,rho,exit_fraction,events,t,delta,exceed,phat,lo,hi,mean_distance,median_distance,"
         "max_distance,residual_sq_mean\n";
  for (const auto& lv : rep.levels) {
    const std::string prefix = std::to_string(lv.level) + ',' + std::to_string(lv.N) + ',' + format_double(lv.w) + ',' +
                               format_double(lv.ratio) + ',' + std::to_string(lv.M) + ',' + format_double(lv.rho) + ',' +
                               format_double(lv.exit_fraction) + ',' + std::to_string(lv.events) + ',';
    for (const auto& c : lv.checkpoints)
      for (std::size_t k = 0; k < c.deltas.size(); ++k)
        out << prefix << format_double(c.t) << ',' << format_double(c.deltas[k]) << ',' << c.exceed[k] << ','
            << format_double(c.phat[k]) << ',' << format_double(c.interval[k].lo) << ','
            << format_double(c.interval[k].hi) << ',' << format_double(c.mean) << ',' << format_double(c.median) << ','
            << format_double(c.max) << ',' << format_double(c.residual_sq_mean) << '\n';
    // Exceedance at any checkpoint; delta is then per checkpoint, so the column is left empty.
    for (std::size_t k = 0; k < lv.any_phat.size(); ++k)
      out << prefix << "max,," << lv.any_exceed[k] << ','
          << format_double(lv.any_phat[k]) << ',' << format_double(lv.any_interval[k].lo) << ','
          << format_double(lv.any_interval[k].hi) << ",,,,\n";
  }
  return out.str();
}

std::string convergence_plot_csv(const OutputHeader& h, const ConvergenceReport& rep) {
  std::ostringstream out;
  out << h.render();
  out << "level,t,delta,phat,lo,hi\n";
  for (const auto& lv : rep.levels)
    for (const auto& c : lv.checkpoints)
      for (std::size_t k = 0; k < c.deltas.size(); ++k)
        out << lv.level << ',' << format_double(c.t) << ',' << format_double(c.deltas[k]) << ','
            << format_double(c.phat[k]) << ',' << format_double(c.interval[k].lo) << ','
            << format_double(c.interval[k].hi) << '\n';
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace hetrdme
