#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hetrdme/errors.hpp"
#include "hetrdme/field.hpp"

namespace hetrdme {

/// Rates of the form gamma(to, from) * phi(x).
struct RateStructure {
  Eigen::MatrixXd gamma;
  SpatialField phi;
};

/// Unvalidated network as read from a scenario.
struct NetworkDescription {
  int dimension = 1;
  std::vector<std::string> species;
  std::vector<SpatialField> diffusion;
  /// K*K entries, index to * K + from; diagonal entries are ignored. Empty means "all zero".
  std::vector<SpatialField> rates;
  /// When present, `rates` is derived from it.
  std::optional<RateStructure> structure;

  int species_count() const { return static_cast<int>(species.size()); }
};

/// Expands a gamma/phi structure into explicit rate fields.
std::vector<SpatialField> structured_rates(const RateStructure& s);

struct Violation {
  enum class Kind { NonPositiveDiffusion, NegativeRate, UnboundedField };
  Kind kind;
  int to = -1;    // species index (diffusion) or target species (rate)
  int from = -1;  // source species for rates
  std::string field;
  std::vector<double> point;
  double value = 0.0;

  std::string describe() const;
};

class NetworkValidationError : public Error {
 public:
  explicit NetworkValidationError(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  std::vector<Violation> violations_;
};

class ReactionNetwork {
 public:
  int species_count() const { return desc_.species_count(); }
  int dimension() const { return desc_.dimension; }
  const std::vector<std::string>& species() const { return desc_.species; }
  const SpatialField& diffusion(int l) const { return desc_.diffusion[static_cast<std::size_t>(l)]; }
  /// Rate field for S_from -> S_to (off-diagonal only).
  const SpatialField& rate(int to, int from) const;
  const std::optional<RateStructure>& structure() const { return desc_.structure; }
  const NetworkDescription& description() const { return desc_; }

  double D_lower() const { return d_lower_; }
  double D_upper() const { return d_upper_; }
  double lambda_upper() const { return lambda_upper_; }

 private:
  friend ReactionNetwork validate_network(NetworkDescription desc, int grid);
  ReactionNetwork() = default;

  NetworkDescription desc_;
  double d_lower_ = 0.0;
  double d_upper_ = 0.0;
  double lambda_upper_ = 0.0;
};

/// Checks every bound on a grid of `grid`^n points (plus the exact extremes the
/// field representation knows about) and throws NetworkValidationError listing
/// each violation with a witness point.
ReactionNetwork validate_network(NetworkDescription desc, int grid = 64);

/// lambda_ii(x) = -sum_{j != i} lambda_ji(x)
SpatialField diagonal_rate_field(const ReactionNetwork& net, int i);

/// Off-diagonal non-negative rates, diagonal equal to minus the column sums.
class HomogeneousGenerator {
 public:
  /// Diagonal entries of `gamma` are ignored and recomputed.
  explicit HomogeneousGenerator(const Eigen::MatrixXd& gamma);
  int species_count() const { return static_cast<int>(matrix_.rows()); }
  const Eigen::MatrixXd& matrix() const { return matrix_; }

 private:
  Eigen::MatrixXd matrix_;
};

/// Edge from -> to exists iff pattern(to, from) is true.
bool is_strongly_connected(const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& pattern);
bool is_weakly_reversible(const HomogeneousGenerator& gen);
bool is_weakly_reversible(const ReactionNetwork& net);

/// Positive null vector of the generator normalised to unit sum.
Eigen::VectorXd equilibrium_state(const HomogeneousGenerator& gen);

}  // namespace hetrdme
