#include "hetrdme/rdme.hpp"

#include <algorithm>
#include <cmath>

#include "hetrdme/operators.hpp"

namespace hetrdme {

CountState::CountState(Lattice lat, int species)
    : lattice(std::move(lat)), K(species), counts(static_cast<std::size_t>(lattice.voxels() * species), 0) {
  if (species < 1) throw DimensionMismatch("count state needs at least one species");
}

Eigen::MatrixXd CountState::concentration() const {
  Eigen::MatrixXd c(K, lattice.voxels());
  const double inv = 1.0 / lattice.density();
  for (Index j = 0; j < lattice.voxels(); ++j)
    for (int l = 0; l < K; ++l) c(l, j) = static_cast<double>(at(j, l)) * inv;
  return c;
}

std::int64_t CountState::total() const {
  std::int64_t s = 0;
  for (auto k : counts) s += k;
  return s;
}

CountState initial_counts(const std::vector<SpatialField>& u0, const Lattice& lat, InitialMode mode, Rng& rng) {
  CountState state(lat, static_cast<int>(u0.size()));
  for (std::size_t l = 0; l < u0.size(); ++l) {
    const auto r = u0[l].range();
    if (r.min < 0.0) throw NegativeInitialData("initial field " + std::to_string(l) + " takes the value " + format_double(r.min));
    const Eigen::VectorXd avg = cell_average(u0[l], lat);
    for (Index j = 0; j < lat.voxels(); ++j) {
      const double mean = lat.density() * avg(j);
      if (mean < 0.0) throw NegativeInitialData("negative cell average in initial field " + std::to_string(l));
      std::int64_t k = 0;
      if (mode == InitialMode::Round) {
        k = std::llround(mean);
      } else if (mean > 0.0) {
        std::poisson_distribution<std::int64_t> pois(mean);
        k = pois(rng);
      }
      state.at(j, static_cast<int>(l)) = k;
    }
  }
  return state;
}

EventTable::EventTable(const VoxelCoefficients& coef, CountState state, RateConvention convention)
    : coef_(&coef), state_(std::move(state)) {
  const Lattice& lat = coef.lattice;
  if (!state_.lattice.same_geometry(lat) || state_.K != coef.K)
    throw LatticeMismatch("count state and coefficients live on different lattices");
  const int K = coef.K;
  const int dim = lat.dimension();
  const Index V = lat.voxels();
  const double N2 = static_cast<double>(lat.cells_per_axis()) * lat.cells_per_axis();
  channels_ = (K - 1) + 2 * dim;
  channel_coef_.assign(static_cast<std::size_t>(V * K * channels_), 0.0);
  out_coef_.assign(static_cast<std::size_t>(V * K), 0.0);
  hop_dest_.assign(static_cast<std::size_t>(V * 2 * dim), -1);
  for (Index j = 0; j < V; ++j) {
    for (int a = 0; a < dim; ++a)
      for (int s = 0; s < 2; ++s)
        hop_dest_[static_cast<std::size_t>(j * 2 * dim + 2 * a + s)] = lat.neighbor(j, a, s == 1 ? +1 : -1);
    for (int l = 0; l < K; ++l) {
      double* cc = &channel_coef_[static_cast<std::size_t>((j * K + l) * channels_)];
      for (int c = 0; c < K - 1; ++c) cc[c] = coef.rate(c < l ? c : c + 1, l, j);
      const double dj = coef.diffusion(l, j);
      for (int a = 0; a < dim; ++a) {
        const double up = convention == RateConvention::Interface ? coef.upper_face[static_cast<std::size_t>(a)](l, j) : dj;
        cc[K - 1 + 2 * a] = N2 * dj;
        cc[K - 1 + 2 * a + 1] = N2 * up;
      }
      double out = 0.0;
      for (int c = 0; c < channels_; ++c) out += cc[c];
      out_coef_[static_cast<std::size_t>(j * K + l)] = out;
    }
  }
  block_size_ = std::max<Index>(1, static_cast<Index>(std::ceil(std::sqrt(static_cast<double>(V)))));
  block_sum_.assign(static_cast<std::size_t>((V + block_size_ - 1) / block_size_), 0.0);
  voxel_rate_.assign(static_cast<std::size_t>(V), 0.0);
  rebuild();
}

double EventTable::compute_voxel_rate(Index j) const {
  const int K = state_.K;
  double r = 0.0;
  for (int l = 0; l < K; ++l)
    r += static_cast<double>(state_.counts[static_cast<std::size_t>(j * K + l)]) * out_coef_[static_cast<std::size_t>(j * K + l)];
  return r;
}

void EventTable::rebuild() {
  std::fill(block_sum_.begin(), block_sum_.end(), 0.0);
  for (Index j = 0; j < state_.lattice.voxels(); ++j) {
    const double r = compute_voxel_rate(j);
    voxel_rate_[static_cast<std::size_t>(j)] = r;
    block_sum_[static_cast<std::size_t>(j / block_size_)] += r;
  }
  total_ = 0.0;
  for (double b : block_sum_) total_ += b;
}

void EventTable::refresh_voxel(Index j) {
  const double r = compute_voxel_rate(j);
  const double delta = r - voxel_rate_[static_cast<std::size_t>(j)];
  voxel_rate_[static_cast<std::size_t>(j)] = r;
  block_sum_[static_cast<std::size_t>(j / block_size_)] += delta;
  total_ += delta;
  if (total_ < 0.0) rebuild();
}

double EventTable::recomputed_total() const {
  const int K = state_.K;
  double total = 0.0;
  for (Index j = 0; j < state_.lattice.voxels(); ++j)
    for (int l = 0; l < K; ++l) {
      const double k = static_cast<double>(state_.at(j, l));
      const double* cc = &channel_coef_[static_cast<std::size_t>((j * K + l) * channels_)];
      for (int c = 0; c < channels_; ++c) total += k * cc[c];
    }
  return total;
}

bool EventTable::consistent(double rel_tol) const {
  const double fresh = recomputed_total();
  if (std::abs(fresh - total_) > rel_tol * std::max(fresh, 1e-300)) return fresh == total_;
  for (Index j = 0; j < state_.lattice.voxels(); ++j) {
    const double r = compute_voxel_rate(j);
    if (std::abs(r - voxel_rate_[static_cast<std::size_t>(j)]) > rel_tol * std::max(r, 1e-300) &&
        r != voxel_rate_[static_cast<std::size_t>(j)])
      return false;
  }
  return true;
}

EventTable::Choice EventTable::select(double target) const {
  const int K = state_.K;
  const Index V = state_.lattice.voxels();
  auto last_enabled = [&]() -> Choice {
    for (Index j = V; j-- > 0;)
      for (int l = K; l-- > 0;) {
        if (state_.at(j, l) <= 0) continue;
        const double* cc = &channel_coef_[static_cast<std::size_t>((j * K + l) * channels_)];
        for (int c = channels_; c-- > 0;)
          if (cc[c] > 0.0) return {j, l, c};
      }
    return {-1, -1, -1};
  };

  double acc = 0.0;
  std::size_t b = 0;
  for (; b < block_sum_.size(); ++b) {
    if (target < acc + block_sum_[b]) break;
    acc += block_sum_[b];
  }
  if (b == block_sum_.size()) return last_enabled();
  const Index end = std::min<Index>(V, static_cast<Index>(b + 1) * block_size_);
  Index j = static_cast<Index>(b) * block_size_;
  for (; j < end; ++j) {
    const double r = voxel_rate_[static_cast<std::size_t>(j)];
    if (target < acc + r) break;
    acc += r;
  }
  if (j == end) {
    // Rounding between block and voxel sums; take the last active voxel of the block.
    for (j = end; j-- > static_cast<Index>(b) * block_size_;)
      if (voxel_rate_[static_cast<std::size_t>(j)] > 0.0) break;
    if (j < static_cast<Index>(b) * block_size_) return last_enabled();
    acc = target - voxel_rate_[static_cast<std::size_t>(j)] * (1.0 - 0x1.0p-52);
  }
  double rest = target - acc;
  int last_l = -1;
  for (int l = 0; l < K; ++l) {
    const double k = static_cast<double>(state_.at(j, l));
    if (k <= 0.0) continue;
    const double* cc = &channel_coef_[static_cast<std::size_t>((j * K + l) * channels_)];
    const double w = k * out_coef_[static_cast<std::size_t>(j * K + l)];
    if (w <= 0.0) continue;
    last_l = l;
    if (rest < w) {
      int last_c = -1;
      for (int c = 0; c < channels_; ++c) {
        const double wc = k * cc[c];
        if (wc <= 0.0) continue;
        last_c = c;
        if (rest < wc) return {j, l, c};
        rest -= wc;
      }
      return {j, l, last_c};
    }
    rest -= w;
  }
  if (last_l < 0) return last_enabled();
  const double* cc = &channel_coef_[static_cast<std::size_t>((j * K + last_l) * channels_)];
  for (int c = channels_; c-- > 0;)
    if (cc[c] > 0.0) return {j, last_l, c};
  return last_enabled();
}

EventTable::Choice EventTable::sample(Rng& rng) const {
  if (!(total_ > 0.0)) throw NoEventEnabled("total rate is zero");
  const Choice c = select(uniform01(rng) * total_);
  if (c.voxel < 0) throw NoEventEnabled("no enabled event");
  return c;
}

Event EventTable::describe(const Choice& c) const {
  const int K = state_.K;
  const int dim = state_.lattice.dimension();
  Event e;
  e.voxel = c.voxel;
  e.species = c.species;
  e.rate = static_cast<double>(state_.at(c.voxel, c.species)) *
           channel_coef_[static_cast<std::size_t>((c.voxel * K + c.species) * channels_ + c.channel)];
  if (c.channel < K - 1) {
    e.kind = Event::Kind::Reaction;
    e.target_species = c.channel < c.species ? c.channel : c.channel + 1;
  } else {
    const int h = c.channel - (K - 1);
    e.kind = Event::Kind::Hop;
    e.target_species = c.species;
    e.axis = h / 2;
    e.dir = h % 2 == 1 ? +1 : -1;
    e.destination = hop_dest_[static_cast<std::size_t>(c.voxel * 2 * dim + h)];
  }
  return e;
}

std::vector<Event> EventTable::events() const {
  std::vector<Event> out;
  const int K = state_.K;
  for (Index j = 0; j < state_.lattice.voxels(); ++j)
    for (int l = 0; l < K; ++l)
      for (int c = 0; c < channels_; ++c) {
        Event e = describe({j, l, c});
        if (e.rate > 0.0) out.push_back(e);
      }
  return out;
}

void EventTable::touch(Index j, int l) {
  if (integral_.empty()) return;
  const auto i = static_cast<std::size_t>(j * state_.K + l);
  integral_[i] += static_cast<double>(state_.counts[i]) * (state_.t - last_change_[i]);
  last_change_[i] = state_.t;
}

Index EventTable::fire(const Choice& c) {
  const int K = state_.K;
  const Index j = c.voxel;
  const int l = c.species;
  touch(j, l);
  --state_.counts[static_cast<std::size_t>(j * K + l)];
  if (c.channel < K - 1) {
    const int to = c.channel < l ? c.channel : c.channel + 1;
    touch(j, to);
    ++state_.counts[static_cast<std::size_t>(j * K + to)];
    refresh_voxel(j);
    return j;
  }
  const Index dest = hop_dest_[static_cast<std::size_t>(j * 2 * state_.lattice.dimension() + c.channel - (K - 1))];
  refresh_voxel(j);
  if (dest >= 0) {
    touch(dest, l);
    ++state_.counts[static_cast<std::size_t>(dest * K + l)];
    refresh_voxel(dest);
  }
  return dest;
}

void EventTable::enable_integrals() {
  integral_.assign(state_.counts.size(), 0.0);
  last_change_.assign(state_.counts.size(), state_.t);
}

Eigen::MatrixXd EventTable::count_integral(double t) const {
  const int K = state_.K;
  Eigen::MatrixXd out(K, state_.lattice.voxels());
  for (Index j = 0; j < state_.lattice.voxels(); ++j)
    for (int l = 0; l < K; ++l) {
      const auto i = static_cast<std::size_t>(j * K + l);
      out(l, j) = integral_[i] + static_cast<double>(state_.counts[i]) * (t - last_change_[i]);
    }
  return out;
}

std::vector<double> uniform_times(double t_end, double dt) {
  if (!(t_end > 0.0) || !(dt > 0.0)) throw std::invalid_argument("t_end and dt must be positive");
  const auto n = static_cast<long>(std::llround(t_end / dt));
  std::vector<double> times;
  for (long i = 0; i < n; ++i) times.push_back(static_cast<double>(i) * dt);
  times.push_back(t_end);
  return times;
}

Trajectory ssa_run(const CountState& initial, const VoxelCoefficients& coef, const SsaOptions& opt, Rng& rng) {
  for (std::size_t i = 1; i < opt.record_times.size(); ++i)
    if (!(opt.record_times[i] > opt.record_times[i - 1])) throw std::invalid_argument("record times must increase strictly");
  if (!opt.record_times.empty() && opt.record_times.front() < initial.t) throw std::invalid_argument("record time before start");
  if (!(opt.rho > 0.0)) throw std::invalid_argument("rho must be positive");

  EventTable table(coef, initial, opt.convention);
  if (opt.track_integrals) table.enable_integrals();
  const Lattice& lat = coef.lattice;
  const int K = coef.K;
  const double inv_density = 1.0 / lat.density();
  const double threshold = opt.rho * lat.density();

  Trajectory tr;
  tr.times = opt.record_times;
  tr.snapshots.reserve(tr.times.size());
  const std::size_t n = tr.times.size();
  std::size_t s = 0;

  auto voxel_total = [&](Index j) {
    std::int64_t sum = 0;
    for (int l = 0; l < K; ++l) sum += table.state().at(j, l);
    return static_cast<double>(sum);
  };
  auto record = [&](double ts) {
    tr.snapshots.push_back(table.state().concentration());
    if (opt.track_integrals) tr.drift_integrals.push_back(table.count_integral(ts) * inv_density);
  };

  double t = initial.t;
  for (Index j = 0; j < lat.voxels(); ++j)
    if (voxel_total(j) > threshold) {
      tr.exited = true;
      tr.exit_time = t;
      break;
    }

  while (!tr.exited && s < n) {
    const double total = table.total_rate();
    if (!(total > 0.0)) break;
    const double t_next = t - std::log(uniform_open_closed(rng)) / total;
    while (s < n && tr.times[s] < t_next) record(tr.times[s++]);
    if (s == n) break;
    table.set_time(t_next);
    t = t_next;
    const auto choice = table.select(uniform01(rng) * total);
    if (choice.voxel < 0) {
      table.rebuild();
      continue;
    }
    const Index gained = table.fire(choice);
    ++tr.events;
    if (gained >= 0 && voxel_total(gained) > threshold) {
      tr.exited = true;
      tr.exit_time = t;
    }
    if (opt.rebuild_interval > 0 && tr.events % opt.rebuild_interval == 0) table.rebuild();
  }
  // Frozen (stopped or absorbed) state for the remaining record times.
  for (; s < n; ++s) {
    tr.snapshots.push_back(table.state().concentration());
    if (opt.track_integrals) {
      const double until = tr.exited ? std::min(tr.exit_time, tr.times[s]) : tr.times[s];
      tr.drift_integrals.push_back(table.count_integral(std::max(until, t)) * inv_density);
    }
  }
  return tr;
}

std::vector<Eigen::MatrixXd> martingale_residual(const Trajectory& traj, const VoxelCoefficients& coef,
                                                 IntegralMode mode, RateConvention convention) {
  std::vector<Eigen::MatrixXd> z;
  if (traj.snapshots.empty()) return z;
  const Index K = coef.K;
  const Index V = coef.lattice.voxels();
  const Eigen::SparseMatrix<double> G =
      convention == RateConvention::Interface ? Eigen::SparseMatrix<double>() : assemble_generator(coef, OperatorPart::Full, convention);
  auto apply_drift = [&](const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
    if (convention == RateConvention::Interface) return drift(coef, x);
    Eigen::VectorXd y = G * Eigen::Map<const Eigen::VectorXd>(x.data(), K * V);
    return Eigen::Map<Eigen::MatrixXd>(y.data(), K, V);
  };
  if (mode == IntegralMode::Exact && traj.drift_integrals.size() != traj.snapshots.size())
    throw std::invalid_argument("trajectory was recorded without exact drift integrals");

  const Eigen::MatrixXd& c0 = traj.snapshots.front();
  Eigen::MatrixXd integral = Eigen::MatrixXd::Zero(K, V);
  for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
    if (mode == IntegralMode::Exact) {
      integral = traj.drift_integrals[i] - traj.drift_integrals.front();
    } else if (i > 0) {
      const double a = std::min(traj.times[i - 1], traj.exit_time);
      const double b = std::min(traj.times[i], traj.exit_time);
      integral += (b - a) * traj.snapshots[i - 1];
    }
    z.push_back(traj.snapshots[i] - c0 - apply_drift(integral));
  }
  return z;
}

Eigen::MatrixXd mean_drift_check(const CountState& state, const VoxelCoefficients& coef, RateConvention convention) {
  EventTable table(coef, state, convention);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(coef.K, coef.lattice.voxels());
  for (const auto& e : table.events()) {
    out(e.species, e.voxel) -= e.rate;
    if (e.kind == Event::Kind::Reaction)
      out(e.target_species, e.voxel) += e.rate;
    else if (e.destination >= 0)
      out(e.species, e.destination) += e.rate;
  }
  return out / coef.lattice.density();
}

}  // namespace hetrdme

namespace hetrdme {

double drift_identity_error(const CountState& state, const VoxelCoefficients& coef, RateConvention convention) {
  const Eigen::MatrixXd table_drift = mean_drift_check(state, coef, convention);
  const Eigen::MatrixXd c = state.concentration();
  Eigen::MatrixXd field_drift;
  const Eigen::SparseMatrix<double> G = assemble_generator(coef, OperatorPart::Full, convention);
  const Eigen::Map<const Eigen::VectorXd> flat(c.data(), c.size());
  if (convention == RateConvention::Interface) {
    field_drift = drift(coef, c);
  } else {
    const Eigen::VectorXd g = G * flat;
    field_drift = Eigen::Map<const Eigen::MatrixXd>(g.data(), c.rows(), c.cols());
  }
  const Eigen::VectorXd scale = G.cwiseAbs() * flat;
  const double denom = scale.size() ? scale.maxCoeff() : 0.0;
  const double diff = (table_drift - field_drift).cwiseAbs().maxCoeff();
  if (denom == 0.0) return diff;
  return diff / denom;
}

}  // namespace hetrdme
