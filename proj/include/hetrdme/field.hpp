#pragma once

#include <span>
#include <string>
#include <vector>

namespace hetrdme {

enum class Smoothness { LInfinity, C1 };

/// Extremes of a field over [0,1]^n together with points where they are attained.
struct FieldRange {
  double min = 0.0;
  double max = 0.0;
  std::vector<double> argmin;
  std::vector<double> argmax;
};

/// Scalar function on the unit hypercube [0,1]^n.
///
/// Supported representations:
///  - constant value,
///  - axis-aligned piecewise constant on a tensor grid of breakpoints,
///  - separable closed forms  offset + scale * prod_{a in axes} g(x_a)  with g one of
///    sin(k pi x + phase), cos(k pi x + phase) or a polynomial sum_i c_i x^i,
///  - finite linear combinations of the above (used for derived rate fields).
///
/// Every representation has an exact cell mean, which is what the lattice
/// coefficients are built from.
class SpatialField {
 public:
  enum class Kind { Constant, Piecewise, Sin, Cos, Poly, Sum };

  SpatialField() = default;

  static SpatialField constant(int dim, double value);

  /// `breaks[a]` are the interior breakpoints along axis a (strictly increasing, inside (0,1)).
  /// `values` is indexed with axis 0 fastest over the tensor product of intervals.
  static SpatialField piecewise(std::vector<std::vector<double>> breaks, std::vector<double> values);

  static SpatialField trig(int dim, Kind kind, double offset, double scale, double wavenumber,
                           double phase, std::vector<int> axes);
  static SpatialField poly(int dim, double offset, double scale, std::vector<double> coeffs,
                           std::vector<int> axes);

  /// sum_i weights[i] * terms[i]
  static SpatialField linear_combination(std::vector<double> weights, std::vector<SpatialField> terms);

  int dimension() const { return dim_; }
  Kind kind() const { return kind_; }
  Smoothness smoothness() const;

  double operator()(std::span<const double> x) const;

  /// Exact mean over the box [lo, hi].
  double mean_over(std::span<const double> lo, std::span<const double> hi) const;

  /// Exact range for constant, piecewise and trigonometric fields; polynomial factors are
  /// resolved on a 4097-point grid and linear combinations give an enclosing interval.
  FieldRange range() const;

  bool identically_zero() const;

  /// Canonical text form, parseable by `parse_field`.
  std::string describe() const;

  // Accessors used by serialization.
  double value() const { return offset_; }
  double offset() const { return offset_; }
  double scale() const { return scale_; }
  double wavenumber() const { return wavenumber_; }
  double phase() const { return phase_; }
  const std::vector<int>& axes() const { return axes_; }
  const std::vector<double>& coeffs() const { return coeffs_; }
  const std::vector<std::vector<double>>& breaks() const { return breaks_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<SpatialField>& terms() const { return terms_; }

  bool operator==(const SpatialField&) const = default;

 private:
  double factor(double x) const;
  double factor_mean(double lo, double hi) const;
  FieldRange factor_range() const;

  Kind kind_ = Kind::Constant;
  int dim_ = 1;
  double offset_ = 0.0;
  double scale_ = 0.0;
  double wavenumber_ = 0.0;
  double phase_ = 0.0;
  std::vector<int> axes_;
  std::vector<double> coeffs_;
  std::vector<std::vector<double>> breaks_;
  std::vector<double> values_;
  std::vector<double> weights_;
  std::vector<SpatialField> terms_;
};

/// Parses the text form produced by `SpatialField::describe`, e.g.
///   "constant 0.5"
///   "piecewise breaks=0.5 values=1,0"          (axes separated by ';')
///   "sin offset=0.5 scale=0.25 k=2 phase=0 axes=0"
///   "poly offset=0 scale=1 coeffs=0,1 axes=0"
/// Throws std::invalid_argument with a message on malformed input.
SpatialField parse_field(const std::string& text, int dim);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

}  // namespace hetrdme
