#include "hetrdme/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

#include <Eigen/LU>

namespace hetrdme {

namespace {

std::string point_text(const std::vector<double>& p) {
  std::string out = "(";
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) out += ", ";
    out += format_double(p[i]);
  }
  return out + ")";
}

struct Scan {
  double min, max;
  std::vector<double> argmin, argmax;
  bool finite = true;
  std::vector<double> bad_point;
};

// Sampled extremes on a uniform grid including the boundary, merged with the
// representation's own range when that range is exact.
Scan scan_field(const SpatialField& f, int grid) {
  const int dim = f.dimension();
  Scan s{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(), {}, {}, true, {}};
  std::vector<int> idx(static_cast<std::size_t>(dim), 0);
  std::vector<double> x(static_cast<std::size_t>(dim));
  const double step = grid > 1 ? 1.0 / (grid - 1) : 0.0;
  while (true) {
    for (int a = 0; a < dim; ++a) x[static_cast<std::size_t>(a)] = grid > 1 ? idx[static_cast<std::size_t>(a)] * step : 0.5;
    const double v = f(x);
    if (!std::isfinite(v)) {
      if (s.finite) s.bad_point = x;
      s.finite = false;
    } else {
      if (v < s.min) { s.min = v; s.argmin = x; }
      if (v > s.max) { s.max = v; s.argmax = x; }
    }
    int a = 0;
    while (a < dim && ++idx[static_cast<std::size_t>(a)] == grid) idx[static_cast<std::size_t>(a++)] = 0;
    if (a == dim) break;
  }
  if (f.kind() != SpatialField::Kind::Sum) {
    const auto r = f.range();
    if (!std::isfinite(r.min) || !std::isfinite(r.max)) {
      if (s.finite) s.bad_point = std::isfinite(r.min) ? r.argmax : r.argmin;
      s.finite = false;
    } else {
      if (r.min < s.min) { s.min = r.min; s.argmin = r.argmin; }
      if (r.max > s.max) { s.max = r.max; s.argmax = r.argmax; }
    }
  }
  return s;
}

}  // namespace

std::vector<SpatialField> structured_rates(const RateStructure& s) {
  const auto K = s.gamma.rows();
  if (s.gamma.cols() != K) throw DimensionMismatch("structure gamma must be square");
  std::vector<SpatialField> rates;
  rates.reserve(static_cast<std::size_t>(K * K));
  for (Eigen::Index to = 0; to < K; ++to)
    for (Eigen::Index from = 0; from < K; ++from) {
      const double g = to == from ? 0.0 : s.gamma(to, from);
      if (g == 0.0)
        rates.push_back(SpatialField::constant(s.phi.dimension(), 0.0));
      else
        rates.push_back(SpatialField::linear_combination({g}, {s.phi}));
    }
  return rates;
}

std::string Violation::describe() const {
  std::ostringstream out;
  switch (kind) {
    case Kind::NonPositiveDiffusion:
      out << "NonPositiveDiffusion(species " << to << ", field " << field << ", point " << point_text(point)
          << ", value " << format_double(value) << ")";
      break;
    case Kind::NegativeRate:
      out << "NegativeRate(" << to << ", " << from << ", field " << field << ", point " << point_text(point)
          << ", value " << format_double(value) << ")";
      break;
    case Kind::UnboundedField:
      out << "UnboundedField(" << field << ", point " << point_text(point) << ")";
      break;
  }
  return out.str();
}

namespace {
std::string join_violations(const std::vector<Violation>& v) {
  std::string out;
  for (const auto& x : v) {
    if (!out.empty()) out += "; ";
    out += x.describe();
  }
  return out;
}
}  // namespace

NetworkValidationError::NetworkValidationError(std::vector<Violation> violations)
    : Error("ValidationError", join_violations(violations)), violations_(std::move(violations)) {}

const SpatialField& ReactionNetwork::rate(int to, int from) const {
  const int K = species_count();
  return desc_.rates[static_cast<std::size_t>(to * K + from)];
}

ReactionNetwork validate_network(NetworkDescription desc, int grid) {
  const int K = desc.species_count();
  const int dim = desc.dimension;
  if (K < 1) throw DimensionMismatch("network needs at least one species");
  if (dim < 1 || dim > 3) throw DimensionMismatch("dimension must be 1, 2 or 3");
  if (grid < 2) throw std::invalid_argument("validation grid must have at least 2 points per axis");
  if (static_cast<int>(desc.diffusion.size()) != K)
    throw DimensionMismatch("expected " + std::to_string(K) + " diffusion fields");
  if (desc.structure) {
    if (desc.structure->gamma.rows() != K || desc.structure->gamma.cols() != K)
      throw DimensionMismatch("structure gamma must be " + std::to_string(K) + "x" + std::to_string(K));
    desc.rates = structured_rates(*desc.structure);
  }
  if (desc.rates.empty()) desc.rates.assign(static_cast<std::size_t>(K * K), SpatialField::constant(dim, 0.0));
  if (static_cast<int>(desc.rates.size()) != K * K)
    throw DimensionMismatch("expected " + std::to_string(K * K) + " rate fields");
  for (int l = 0; l < K; ++l) desc.rates[static_cast<std::size_t>(l * K + l)] = SpatialField::constant(dim, 0.0);
  for (const auto& f : desc.diffusion)
    if (f.dimension() != dim) throw DimensionMismatch("diffusion field dimension differs from network dimension");
  for (const auto& f : desc.rates)
    if (f.dimension() != dim) throw DimensionMismatch("rate field dimension differs from network dimension");

  std::vector<Violation> violations;
  ReactionNetwork net;
  net.d_lower_ = std::numeric_limits<double>::infinity();
  net.d_upper_ = 0.0;
  net.lambda_upper_ = 0.0;

  for (int l = 0; l < K; ++l) {
    const std::string id = "diffusion." + desc.species[static_cast<std::size_t>(l)];
    const Scan s = scan_field(desc.diffusion[static_cast<std::size_t>(l)], grid);
    if (!s.finite) {
      violations.push_back({Violation::Kind::UnboundedField, l, -1, id, s.bad_point, 0.0});
      continue;
    }
    if (!(s.min > 0.0)) violations.push_back({Violation::Kind::NonPositiveDiffusion, l, -1, id, s.argmin, s.min});
    net.d_lower_ = std::min(net.d_lower_, s.min);
    net.d_upper_ = std::max(net.d_upper_, s.max);
  }
  for (int to = 0; to < K; ++to)
    for (int from = 0; from < K; ++from) {
      if (to == from) continue;
      const std::string id = "rate." + desc.species[static_cast<std::size_t>(to)] + "." +
                             desc.species[static_cast<std::size_t>(from)];
      const Scan s = scan_field(desc.rates[static_cast<std::size_t>(to * K + from)], grid);
      if (!s.finite) {
        violations.push_back({Violation::Kind::UnboundedField, to, from, id, s.bad_point, 0.0});
        continue;
      }
      if (s.min < 0.0) violations.push_back({Violation::Kind::NegativeRate, to, from, id, s.argmin, s.min});
      net.lambda_upper_ = std::max({net.lambda_upper_, std::abs(s.min), std::abs(s.max)});
    }
  if (!violations.empty()) throw NetworkValidationError(std::move(violations));
  net.desc_ = std::move(desc);
  return net;
}

SpatialField diagonal_rate_field(const ReactionNetwork& net, int i) {
  const int K = net.species_count();
  std::vector<double> weights;
  std::vector<SpatialField> terms;
  for (int j = 0; j < K; ++j) {
    if (j == i) continue;
    weights.push_back(-1.0);
    terms.push_back(net.rate(j, i));
  }
  if (terms.empty()) return SpatialField::constant(net.dimension(), 0.0);
  return SpatialField::linear_combination(std::move(weights), std::move(terms));
}

HomogeneousGenerator::HomogeneousGenerator(const Eigen::MatrixXd& gamma) : matrix_(gamma) {
  if (gamma.rows() != gamma.cols() || gamma.rows() < 1) throw DimensionMismatch("generator must be square and non-empty");
  const auto K = gamma.rows();
  for (Eigen::Index from = 0; from < K; ++from) {
    double out = 0.0;
    for (Eigen::Index to = 0; to < K; ++to) {
      if (to == from) continue;
      const double g = gamma(to, from);
      if (!std::isfinite(g) || g < 0.0)
        throw std::invalid_argument("generator off-diagonal entries must be finite and non-negative");
      out += g;
    }
    matrix_(from, from) = -out;
  }
}

bool is_strongly_connected(const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& pattern) {
  const auto K = pattern.rows();
  if (K == 0 || pattern.cols() != K) return false;
  // Everything reachable from node 0 along edges and along reversed edges.
  auto reach_all = [&](bool reversed) {
    std::vector<bool> seen(static_cast<std::size_t>(K), false);
    std::queue<Eigen::Index> todo;
    todo.push(0);
    seen[0] = true;
    Eigen::Index count = 1;
    while (!todo.empty()) {
      const auto u = todo.front();
      todo.pop();
      for (Eigen::Index v = 0; v < K; ++v) {
        if (v == u || seen[static_cast<std::size_t>(v)]) continue;
        const bool edge = reversed ? pattern(u, v) : pattern(v, u);
        if (edge) {
          seen[static_cast<std::size_t>(v)] = true;
          ++count;
          todo.push(v);
        }
      }
    }
    return count == K;
  };
  return reach_all(false) && reach_all(true);
}

bool is_weakly_reversible(const HomogeneousGenerator& gen) {
  const auto& g = gen.matrix();
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> p = (g.array() > 0.0).matrix();
  return is_strongly_connected(p);
}

bool is_weakly_reversible(const ReactionNetwork& net) {
  const int K = net.species_count();
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> p(K, K);
  for (int to = 0; to < K; ++to)
    for (int from = 0; from < K; ++from) p(to, from) = to != from && !net.rate(to, from).identically_zero();
  return is_strongly_connected(p);
}

Eigen::VectorXd equilibrium_state(const HomogeneousGenerator& gen) {
  if (!is_weakly_reversible(gen)) throw NotWeaklyReversible("species graph is not strongly connected");
  const auto K = gen.species_count();
  const Eigen::MatrixXd& g = gen.matrix();
  if (K == 1) return Eigen::VectorXd::Ones(1);
  Eigen::FullPivLU<Eigen::MatrixXd> rank_check(g);
  rank_check.setThreshold(1e-12);
  if (rank_check.rank() != K - 1) throw SingularSystem("null space of the generator is not one-dimensional");
  // The rows of g sum to the zero row, so one of them is redundant; replace it by the normalisation.
  Eigen::MatrixXd a = g;
  a.row(K - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(K);
  rhs(K - 1) = 1.0;
  Eigen::VectorXd u = a.partialPivLu().solve(rhs);
  if (!u.allFinite() || (u.array() <= 0.0).any()) throw SingularSystem("equilibrium solve produced a non-positive state");
  return u;
}

}  // namespace hetrdme
