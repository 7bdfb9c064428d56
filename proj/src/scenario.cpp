#include "hetrdme/scenario.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace hetrdme {

std::string to_string(RateConvention c) { return c == RateConvention::Interface ? "interface" : "source-voxel"; }
std::string to_string(GhostCoefficient g) { return g == GhostCoefficient::Clamp ? "clamp" : "mirror"; }
std::string to_string(InitialMode m) { return m == InitialMode::Round ? "round" : "poisson"; }

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(std::string_view(s).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

struct Entry {
  std::string value;
  int line;
  bool used = false;
};

class Reader {
 public:
  explicit Reader(const std::string& text) {
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      const std::string t = trim(raw);
      if (t.empty() || t.front() == '#') continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos) throw ParseError(line, "expected 'key = value'");
      const std::string key = trim(std::string_view(t).substr(0, eq));
      if (key.empty()) throw ParseError(line, "empty key");
      if (entries_.count(key)) throw ParseError(line, "duplicate key '" + key + "'");
      entries_[key] = {trim(std::string_view(t).substr(eq + 1)), line};
      order_.push_back(key);
    }
    last_line_ = line;
  }

  std::optional<Entry> take(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    it->second.used = true;
    return it->second;
  }

  Entry require(const std::string& key) {
    auto e = take(key);
    if (!e) throw ParseError(last_line_ + 1, "missing required key '" + key + "'");
    return *e;
  }

  bool has_prefix(const std::string& prefix) const {
    for (const auto& [k, e] : entries_)
      if (k.rfind(prefix, 0) == 0) return true;
    return false;
  }

  void finish() const {
    for (const auto& key : order_) {
      const auto& e = entries_.at(key);
      if (!e.used) throw ParseError(e.line, "unknown key '" + key + "'");
    }
  }

 private:
  std::map<std::string, Entry> entries_;
  std::vector<std::string> order_;
  int last_line_ = 0;
};

double to_double(const Entry& e, const std::string& text) {
  double v = 0.0;
  const char* first = text.data();
  if (!text.empty() && text.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v))
    throw ParseError(e.line, "expected a number, got '" + text + "'");
  return v;
}

double to_double(const Entry& e) { return to_double(e, e.value); }

std::uint64_t to_u64(const Entry& e) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
  if (e.value.empty() || ec != std::errc() || ptr != e.value.data() + e.value.size())
    throw ParseError(e.line, "expected an unsigned integer, got '" + e.value + "'");
  return v;
}

int to_int(const Entry& e) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
  if (e.value.empty() || ec != std::errc() || ptr != e.value.data() + e.value.size())
    throw ParseError(e.line, "expected an integer, got '" + e.value + "'");
  return v;
}

std::vector<double> to_list(const Entry& e) {
  std::vector<double> out;
  for (const auto& item : split(e.value, ',')) out.push_back(to_double(e, item));
  return out;
}

SpatialField to_field(const Entry& e, int dim) {
  try {
    return parse_field(e.value, dim);
  } catch (const std::invalid_argument& ex) {
    throw ParseError(e.line, ex.what());
  }
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  return true;
}

std::string join(const std::vector<double>& v, const char* sep = ", ") {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += format_double(v[i]);
  }
  return out;
}

}  // namespace

Scenario parse_scenario_text(const std::string& text) {
  Reader r(text);
  Scenario s;
  const Entry version = r.require("schema_version");
  s.schema_version = to_int(version);
  if (s.schema_version != 1) throw ParseError(version.line, "unsupported schema_version " + version.value);
  if (auto e = r.take("name")) s.name = e->value;
  if (auto e = r.take("dimension")) {
    s.network.dimension = to_int(*e);
    if (s.network.dimension < 1 || s.network.dimension > 3) throw ParseError(e->line, "dimension must be 1, 2 or 3");
  }
  const int dim = s.network.dimension;

  const Entry species = r.require("species");
  std::set<std::string> seen;
  for (const auto& name : split(species.value, ',')) {
    if (!valid_name(name)) throw ParseError(species.line, "invalid species name '" + name + "'");
    if (!seen.insert(name).second) throw ParseError(species.line, "repeated species '" + name + "'");
    s.network.species.push_back(name);
  }
  const int K = static_cast<int>(s.network.species.size());

  for (const auto& sp : s.network.species) {
    s.network.diffusion.push_back(to_field(r.require("diffusion." + sp), dim));
    const auto init = r.take("initial." + sp);
    s.initial.push_back(init ? to_field(*init, dim) : SpatialField::constant(dim, 0.0));
  }

  const auto gamma = r.take("structure.gamma");
  const auto phi = r.take("structure.phi");
  if (gamma || phi) {
    if (!gamma || !phi) throw ParseError((gamma ? gamma : phi)->line, "structure.gamma and structure.phi go together");
    if (r.has_prefix("rate.")) throw ParseError(gamma->line, "rate.* keys cannot be combined with structure.*");
    const auto rows = split(gamma->value, ';');
    if (static_cast<int>(rows.size()) != K) throw ParseError(gamma->line, "gamma needs " + std::to_string(K) + " rows");
    RateStructure st{Eigen::MatrixXd::Zero(K, K), to_field(*phi, dim)};
    for (int i = 0; i < K; ++i) {
      const auto cols = split(rows[static_cast<std::size_t>(i)], ',');
      if (static_cast<int>(cols.size()) != K) throw ParseError(gamma->line, "gamma needs " + std::to_string(K) + " columns");
      for (int j = 0; j < K; ++j) st.gamma(i, j) = i == j ? 0.0 : to_double(*gamma, cols[static_cast<std::size_t>(j)]);
    }
    s.network.structure = std::move(st);
  } else {
    s.network.rates.assign(static_cast<std::size_t>(K * K), SpatialField::constant(dim, 0.0));
    for (int to = 0; to < K; ++to)
      for (int from = 0; from < K; ++from) {
        if (to == from) continue;
        const auto e = r.take("rate." + s.network.species[static_cast<std::size_t>(to)] + "." +
                              s.network.species[static_cast<std::size_t>(from)]);
        if (e) s.network.rates[static_cast<std::size_t>(to * K + from)] = to_field(*e, dim);
      }
  }

  const Entry schedule = r.require("schedule");
  s.schedule.dimension = dim;
  for (const auto& item : split(schedule.value, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ParseError(schedule.line, "schedule entries are N:w, got '" + item + "'");
    Entry n_part{trim(std::string_view(item).substr(0, colon)), schedule.line};
    Entry w_part{trim(std::string_view(item).substr(colon + 1)), schedule.line};
    const int N = to_int(n_part);
    const double w = to_double(w_part);
    if (N < 1 || !(w > 0.0)) throw ParseError(schedule.line, "schedule needs N >= 1 and w > 0");
    s.schedule.levels.push_back({N, w});
  }

  auto positive = [](const Entry& e, double v) {
    if (!(v > 0.0)) throw ParseError(e.line, "value must be positive");
    return v;
  };
  if (auto e = r.take("t_end")) s.t_end = positive(*e, to_double(*e));
  if (auto e = r.take("dt_record")) s.dt_record = positive(*e, to_double(*e));
  if (auto e = r.take("checkpoints")) {
    s.checkpoints = to_list(*e);
    for (double t : s.checkpoints) positive(*e, t);
  }
  if (auto e = r.take("ensemble")) s.ensemble = static_cast<int>(positive(*e, to_int(*e)));
  if (auto e = r.take("seed")) s.seed = to_u64(*e);
  if (auto e = r.take("rate_convention")) {
    if (e->value == "interface") s.convention = RateConvention::Interface;
    else if (e->value == "source-voxel") s.convention = RateConvention::SourceVoxel;
    else throw ParseError(e->line, "rate_convention is interface or source-voxel");
  }
  if (auto e = r.take("ghost_coeff")) {
    if (e->value == "clamp") s.ghost = GhostCoefficient::Clamp;
    else if (e->value == "mirror") s.ghost = GhostCoefficient::Mirror;
    else throw ParseError(e->line, "ghost_coeff is clamp or mirror");
  }
  if (auto e = r.take("initial_mode")) {
    if (e->value == "round") s.initial_mode = InitialMode::Round;
    else if (e->value == "poisson") s.initial_mode = InitialMode::Poisson;
    else throw ParseError(e->line, "initial_mode is round or poisson");
  }
  if (auto e = r.take("scheme")) {
    try {
      s.scheme = parse_scheme(e->value);
    } catch (const std::invalid_argument& ex) {
      throw ParseError(e->line, ex.what());
    }
  }
  if (auto e = r.take("rho_factor")) s.rho_factor = positive(*e, to_double(*e));
  if (auto e = r.take("deltas")) {
    if (e->value != "auto") {
      s.deltas = to_list(*e);
      for (double d : s.deltas) positive(*e, d);
    }
  }
  if (auto e = r.take("delta_factor")) s.delta_factor = positive(*e, to_double(*e));
  if (auto e = r.take("pde_dt")) s.pde_dt = e->value == "auto" ? 0.0 : positive(*e, to_double(*e));
  if (auto e = r.take("validation_grid")) {
    s.validation_grid = to_int(*e);
    if (s.validation_grid < 64) throw ParseError(e->line, "validation_grid must be at least 64");
  }
  if (auto e = r.take("martingale_level")) {
    s.martingale_level = to_int(*e);
    if (s.martingale_level < 0 || static_cast<std::size_t>(s.martingale_level) >= s.schedule.levels.size())
      throw ParseError(e->line, "martingale_level outside the schedule");
  }
  if (auto e = r.take("martingale_replicates")) s.martingale_replicates = static_cast<int>(positive(*e, to_int(*e)));
  if (auto e = r.take("martingale_t")) s.martingale_t = positive(*e, to_double(*e));
  r.finish();

  validate_network(s.network, s.validation_grid);
  return s;
}

Scenario parse_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(0, "cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str());
}

std::string serialize_scenario(const Scenario& s) {
  std::ostringstream out;
  const auto& net = s.network;
  const int K = net.species_count();
  out << "schema_version = " << s.schema_version << '\n';
  out << "name = " << s.name << '\n';
  out << "dimension = " << net.dimension << '\n';
  out << "species = ";
  for (int l = 0; l < K; ++l) out << (l ? ", " : "") << net.species[static_cast<std::size_t>(l)];
  out << '\n';
  for (int l = 0; l < K; ++l)
    out << "diffusion." << net.species[static_cast<std::size_t>(l)] << " = "
        << net.diffusion[static_cast<std::size_t>(l)].describe() << '\n';
  if (net.structure) {
    out << "structure.gamma = ";
    for (int i = 0; i < K; ++i) {
      if (i) out << "; ";
      for (int j = 0; j < K; ++j) out << (j ? ", " : "") << format_double(i == j ? 0.0 : net.structure->gamma(i, j));
    }
    out << '\n';
    out << "structure.phi = " << net.structure->phi.describe() << '\n';
  } else {
    for (int to = 0; to < K; ++to)
      for (int from = 0; from < K; ++from) {
        if (to == from) continue;
        const auto idx = static_cast<std::size_t>(to * K + from);
        const std::string f = idx < net.rates.size() ? net.rates[idx].describe()
                                                     : SpatialField::constant(net.dimension, 0.0).describe();
        out << "rate." << net.species[static_cast<std::size_t>(to)] << "." << net.species[static_cast<std::size_t>(from)]
            << " = " << f << '\n';
      }
  }
  for (int l = 0; l < K; ++l)
    out << "initial." << net.species[static_cast<std::size_t>(l)] << " = "
        << s.initial[static_cast<std::size_t>(l)].describe() << '\n';
  out << "schedule = ";
  for (std::size_t i = 0; i < s.schedule.levels.size(); ++i)
    out << (i ? ", " : "") << s.schedule.levels[i].N << ":" << format_double(s.schedule.levels[i].w);
  out << '\n';
  out << "t_end = " << format_double(s.t_end) << '\n';
  out << "dt_record = " << format_double(s.dt_record) << '\n';
  out << "checkpoints = " << join(s.checkpoints) << '\n';
  out << "ensemble = " << s.ensemble << '\n';
  out << "seed = " << s.seed << '\n';
  out << "rate_convention = " << to_string(s.convention) << '\n';
  out << "ghost_coeff = " << to_string(s.ghost) << '\n';
  out << "initial_mode = " << to_string(s.initial_mode) << '\n';
  out << "scheme = " << to_string(s.scheme) << '\n';
  out << "rho_factor = " << format_double(s.rho_factor) << '\n';
  out << "deltas = " << (s.deltas.empty() ? std::string("auto") : join(s.deltas)) << '\n';
  out << "delta_factor = " << format_double(s.delta_factor) << '\n';
  out << "pde_dt = " << (s.pde_dt > 0.0 ? format_double(s.pde_dt) : std::string("auto")) << '\n';
  out << "validation_grid = " << s.validation_grid << '\n';
  out << "martingale_level = " << s.martingale_level << '\n';
  out << "martingale_replicates = " << s.martingale_replicates << '\n';
  out << "martingale_t = " << format_double(s.martingale_t) << '\n';
  return out.str();
}

std::string scenario_hash(const Scenario& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : serialize_scenario(s)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Experiment make_experiment(const Scenario& s) {
  return Experiment{validate_network(s.network, s.validation_grid),
                    s.initial,
                    s.schedule,
                    s.t_end,
                    s.dt_record,
                    s.checkpoints,
                    s.ensemble,
                    s.seed,
                    s.convention,
                    s.ghost,
                    s.initial_mode,
                    s.scheme,
                    s.rho_factor,
                    s.deltas,
                    s.delta_factor,
                    s.pde_dt};
}

}  // namespace hetrdme
