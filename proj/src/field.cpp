#include "hetrdme/field.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace hetrdme {

namespace {

constexpr double kPi = std::numbers::pi;

void check_dimension(int dim) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("field dimension must be 1, 2 or 3");
}

std::vector<int> all_axes(int dim) {
  std::vector<int> axes(static_cast<std::size_t>(dim));
  for (int a = 0; a < dim; ++a) axes[static_cast<std::size_t>(a)] = a;
  return axes;
}

void check_axes(const std::vector<int>& axes, int dim) {
  for (std::size_t i = 0; i < axes.size(); ++i) {
    if (axes[i] < 0 || axes[i] >= dim) throw std::invalid_argument("field axis out of range");
    for (std::size_t k = 0; k < i; ++k)
      if (axes[k] == axes[i]) throw std::invalid_argument("repeated field axis");
  }
}

double sinc(double theta) { return theta == 0.0 ? 1.0 : std::sin(theta) / theta; }

double poly_eval(const std::vector<double>& c, double x) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
  return acc;
}

double poly_antiderivative(const std::vector<double>& c, double x) {
  double acc = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) acc = acc * x + c[i] / static_cast<double>(i + 1);
  return acc * x;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  return out;
}

std::string join(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

double parse_number(std::string_view s) {
  double v = 0.0;
  auto first = s.data();
  if (!s.empty() && s.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw std::invalid_argument("malformed number '" + std::string(s) + "'");
  return v;
}

std::vector<double> parse_list(std::string_view s) {
  std::vector<double> out;
  if (s.empty()) return out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(',', start);
    out.push_back(parse_number(s.substr(start, pos == std::string_view::npos ? s.size() - start : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("double formatting failed");
  return std::string(buf, ptr);
}

SpatialField SpatialField::constant(int dim, double value) {
  check_dimension(dim);
  SpatialField f;
  f.kind_ = Kind::Constant;
  f.dim_ = dim;
  f.offset_ = value;
  return f;
}

SpatialField SpatialField::piecewise(std::vector<std::vector<double>> breaks, std::vector<double> values) {
  const int dim = static_cast<int>(breaks.size());
  check_dimension(dim);
  std::size_t regions = 1;
  for (const auto& axis : breaks) {
    for (std::size_t i = 0; i < axis.size(); ++i) {
      if (!(axis[i] > 0.0 && axis[i] < 1.0)) throw std::invalid_argument("breakpoints must lie in (0,1)");
      if (i > 0 && !(axis[i] > axis[i - 1])) throw std::invalid_argument("breakpoints must be strictly increasing");
    }
    regions *= axis.size() + 1;
  }
  if (values.size() != regions)
    throw std::invalid_argument("piecewise field expects " + std::to_string(regions) + " values, got " +
                                std::to_string(values.size()));
  SpatialField f;
  f.kind_ = Kind::Piecewise;
  f.dim_ = dim;
  f.breaks_ = std::move(breaks);
  f.values_ = std::move(values);
  return f;
}

SpatialField SpatialField::trig(int dim, Kind kind, double offset, double scale, double wavenumber, double phase,
                                std::vector<int> axes) {
  check_dimension(dim);
  if (kind != Kind::Sin && kind != Kind::Cos) throw std::invalid_argument("trig field must be sin or cos");
  check_axes(axes, dim);
  SpatialField f;
  f.kind_ = kind;
  f.dim_ = dim;
  f.offset_ = offset;
  f.scale_ = scale;
  f.wavenumber_ = wavenumber;
  f.phase_ = phase;
  f.axes_ = std::move(axes);
  return f;
}

SpatialField SpatialField::poly(int dim, double offset, double scale, std::vector<double> coeffs, std::vector<int> axes) {
  check_dimension(dim);
  check_axes(axes, dim);
  if (coeffs.empty()) throw std::invalid_argument("polynomial field needs at least one coefficient");
  SpatialField f;
  f.kind_ = Kind::Poly;
  f.dim_ = dim;
  f.offset_ = offset;
  f.scale_ = scale;
  f.coeffs_ = std::move(coeffs);
  f.axes_ = std::move(axes);
  return f;
}

SpatialField SpatialField::linear_combination(std::vector<double> weights, std::vector<SpatialField> terms) {
  if (weights.size() != terms.size()) throw std::invalid_argument("weights and terms differ in length");
  if (terms.empty()) throw std::invalid_argument("empty linear combination");
  const int dim = terms.front().dimension();
  for (const auto& t : terms)
    if (t.dimension() != dim) throw std::invalid_argument("linear combination of fields of different dimension");
  SpatialField f;
  f.kind_ = Kind::Sum;
  f.dim_ = dim;
  f.weights_ = std::move(weights);
  f.terms_ = std::move(terms);
  return f;
}

Smoothness SpatialField::smoothness() const {
  switch (kind_) {
    case Kind::Piecewise:
      return values_.size() == 1 ? Smoothness::C1 : Smoothness::LInfinity;
    case Kind::Sum:
      for (const auto& t : terms_)
        if (t.smoothness() == Smoothness::LInfinity) return Smoothness::LInfinity;
      return Smoothness::C1;
    default:
      return Smoothness::C1;
  }
}

double SpatialField::factor(double x) const {
  switch (kind_) {
    case Kind::Sin: return std::sin(wavenumber_ * kPi * x + phase_);
    case Kind::Cos: return std::cos(wavenumber_ * kPi * x + phase_);
    case Kind::Poly: return poly_eval(coeffs_, x);
    default: return 1.0;
  }
}

double SpatialField::factor_mean(double lo, double hi) const {
  if (hi <= lo) return factor(lo);
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * wavenumber_ * kPi * (hi - lo);
  switch (kind_) {
    case Kind::Sin: return std::sin(wavenumber_ * kPi * mid + phase_) * sinc(half);
    case Kind::Cos: return std::cos(wavenumber_ * kPi * mid + phase_) * sinc(half);
    case Kind::Poly: return (poly_antiderivative(coeffs_, hi) - poly_antiderivative(coeffs_, lo)) / (hi - lo);
    default: return 1.0;
  }
}

FieldRange SpatialField::factor_range() const {
  FieldRange r;
  r.min = std::numeric_limits<double>::infinity();
  r.max = -r.min;
  auto consider = [&](double x) {
    const double v = factor(x);
    if (v < r.min) { r.min = v; r.argmin = {x}; }
    if (v > r.max) { r.max = v; r.argmax = {x}; }
  };
  consider(0.0);
  consider(1.0);
  if (kind_ == Kind::Poly) {
    for (int i = 1; i < 4096; ++i) consider(i / 4096.0);
  } else if (wavenumber_ != 0.0) {
    // Critical points of sin/cos(k pi x + phase): argument at pi/2 + m pi (sin) or m pi (cos).
    const double shift = kind_ == Kind::Sin ? 0.5 * kPi : 0.0;
    const double a0 = phase_;
    const double a1 = wavenumber_ * kPi + phase_;
    const double lo = std::min(a0, a1), hi = std::max(a0, a1);
    for (double m = std::ceil((lo - shift) / kPi); m <= std::floor((hi - shift) / kPi); m += 1.0) {
      const double x = (shift + m * kPi - phase_) / (wavenumber_ * kPi);
      if (x >= 0.0 && x <= 1.0) consider(x);
    }
  }
  return r;
}

double SpatialField::operator()(std::span<const double> x) const {
  switch (kind_) {
    case Kind::Constant: return offset_;
    case Kind::Piecewise: {
      std::size_t flat = 0, stride = 1;
      for (int a = 0; a < dim_; ++a) {
        const auto& b = breaks_[static_cast<std::size_t>(a)];
        const auto idx = static_cast<std::size_t>(std::upper_bound(b.begin(), b.end(), x[static_cast<std::size_t>(a)]) - b.begin());
        flat += idx * stride;
        stride *= b.size() + 1;
      }
      return values_[flat];
    }
    case Kind::Sum: {
      double acc = 0.0;
      for (std::size_t i = 0; i < terms_.size(); ++i) acc += weights_[i] * terms_[i](x);
      return acc;
    }
    default: {
      double prod = 1.0;
      for (int a : axes_) prod *= factor(x[static_cast<std::size_t>(a)]);
      return offset_ + scale_ * prod;
    }
  }
}

double SpatialField::mean_over(std::span<const double> lo, std::span<const double> hi) const {
  switch (kind_) {
    case Kind::Constant: return offset_;
    case Kind::Piecewise: {
      // Measure-weighted intersection of the box with every region of the tensor grid.
      std::vector<std::vector<std::pair<std::size_t, double>>> overlaps(static_cast<std::size_t>(dim_));
      double volume = 1.0;
      for (int a = 0; a < dim_; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        const auto& b = breaks_[ua];
        const double width = hi[ua] - lo[ua];
        if (width <= 0.0) {
          const auto idx = static_cast<std::size_t>(std::upper_bound(b.begin(), b.end(), lo[ua]) - b.begin());
          overlaps[ua].emplace_back(idx, 1.0);
          continue;
        }
        volume *= width;
        for (std::size_t i = 0; i <= b.size(); ++i) {
          const double left = i == 0 ? 0.0 : b[i - 1];
          const double right = i == b.size() ? 1.0 : b[i];
          const double len = std::min(hi[ua], right) - std::max(lo[ua], left);
          if (len > 0.0) overlaps[ua].emplace_back(i, len);
        }
      }
      std::vector<std::size_t> strides(static_cast<std::size_t>(dim_), 1);
      for (std::size_t a = 1; a < strides.size(); ++a) strides[a] = strides[a - 1] * (breaks_[a - 1].size() + 1);
      double acc = 0.0;
      std::vector<std::size_t> pos(static_cast<std::size_t>(dim_), 0);
      while (true) {
        double weight = 1.0;
        std::size_t flat = 0;
        for (std::size_t a = 0; a < pos.size(); ++a) {
          weight *= overlaps[a][pos[a]].second;
          flat += overlaps[a][pos[a]].first * strides[a];
        }
        acc += weight * values_[flat];
        std::size_t a = 0;
        while (a < pos.size() && ++pos[a] == overlaps[a].size()) pos[a++] = 0;
        if (a == pos.size()) break;
      }
      return acc / volume;
    }
    case Kind::Sum: {
      double acc = 0.0;
      for (std::size_t i = 0; i < terms_.size(); ++i) acc += weights_[i] * terms_[i].mean_over(lo, hi);
      return acc;
    }
    default: {
      double prod = 1.0;
      for (int a : axes_) prod *= factor_mean(lo[static_cast<std::size_t>(a)], hi[static_cast<std::size_t>(a)]);
      return offset_ + scale_ * prod;
    }
  }
}

FieldRange SpatialField::range() const {
  const std::vector<double> centre(static_cast<std::size_t>(dim_), 0.5);
  FieldRange out;
  switch (kind_) {
    case Kind::Constant:
      return {offset_, offset_, centre, centre};
    case Kind::Piecewise: {
      const auto [mn, mx] = std::minmax_element(values_.begin(), values_.end());
      auto region_centre = [&](std::size_t flat) {
        std::vector<double> p(static_cast<std::size_t>(dim_));
        for (std::size_t a = 0; a < p.size(); ++a) {
          const auto& b = breaks_[a];
          const std::size_t i = flat % (b.size() + 1);
          flat /= b.size() + 1;
          const double left = i == 0 ? 0.0 : b[i - 1];
          const double right = i == b.size() ? 1.0 : b[i];
          p[a] = 0.5 * (left + right);
        }
        return p;
      };
      return {*mn, *mx, region_centre(static_cast<std::size_t>(mn - values_.begin())),
              region_centre(static_cast<std::size_t>(mx - values_.begin()))};
    }
    case Kind::Sum: {
      out.min = out.max = 0.0;
      for (std::size_t i = 0; i < terms_.size(); ++i) {
        const auto r = terms_[i].range();
        const double w = weights_[i];
        out.min += w >= 0.0 ? w * r.min : w * r.max;
        out.max += w >= 0.0 ? w * r.max : w * r.min;
        if (i == 0) {
          out.argmin = w >= 0.0 ? r.argmin : r.argmax;
          out.argmax = w >= 0.0 ? r.argmax : r.argmin;
        }
      }
      return out;
    }
    default: {
      // Range of the product of per-axis factors: extremes occur at products of factor extremes.
      double pmin = 1.0, pmax = 1.0;
      std::vector<double> xmin = centre, xmax = centre;
      const FieldRange fr = factor_range();
      for (int a : axes_) {
        const auto ua = static_cast<std::size_t>(a);
        struct Cand { double v; std::vector<double> p; };
        auto with = [](std::vector<double> p, std::size_t axis, double x) { p[axis] = x; return p; };
        const Cand cands[4] = {
            {pmin * fr.min, with(xmin, ua, fr.argmin[0])},
            {pmin * fr.max, with(xmin, ua, fr.argmax[0])},
            {pmax * fr.min, with(xmax, ua, fr.argmin[0])},
            {pmax * fr.max, with(xmax, ua, fr.argmax[0])},
        };
        const Cand* lo = &cands[0];
        const Cand* hi = &cands[0];
        for (const auto& c : cands) {
          if (c.v < lo->v) lo = &c;
          if (c.v > hi->v) hi = &c;
        }
        pmin = lo->v;
        pmax = hi->v;
        xmin = lo->p;
        xmax = hi->p;
      }
      if (scale_ >= 0.0) return {offset_ + scale_ * pmin, offset_ + scale_ * pmax, xmin, xmax};
      return {offset_ + scale_ * pmax, offset_ + scale_ * pmin, xmax, xmin};
    }
  }
}

bool SpatialField::identically_zero() const {
  const auto r = range();
  return r.min == 0.0 && r.max == 0.0;
}

std::string SpatialField::describe() const {
  switch (kind_) {
    case Kind::Constant: return "constant " + format_double(offset_);
    case Kind::Piecewise: {
      std::string b;
      for (std::size_t a = 0; a < breaks_.size(); ++a) {
        if (a) b += ';';
        b += join(breaks_[a]);
      }
      return "piecewise breaks=" + b + " values=" + join(values_);
    }
    case Kind::Sin:
    case Kind::Cos:
      return std::string(kind_ == Kind::Sin ? "sin" : "cos") + " offset=" + format_double(offset_) +
             " scale=" + format_double(scale_) + " k=" + format_double(wavenumber_) +
             " phase=" + format_double(phase_) + " axes=" + join(axes_);
    case Kind::Poly:
      return "poly offset=" + format_double(offset_) + " scale=" + format_double(scale_) +
             " coeffs=" + join(coeffs_) + " axes=" + join(axes_);
    case Kind::Sum: {
      std::string out = "sum(";
      for (std::size_t i = 0; i < terms_.size(); ++i) {
        if (i) out += " + ";
        out += format_double(weights_[i]) + " * [" + terms_[i].describe() + "]";
      }
      return out + ")";
    }
  }
  return {};
}

SpatialField parse_field(const std::string& text, int dim) {
  std::istringstream in(text);
  std::string kind;
  in >> kind;
  if (kind.empty()) throw std::invalid_argument("empty field description");
  std::vector<std::pair<std::string, std::string>> kv;
  std::string tok;
  std::vector<std::string> bare;
  while (in >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) {
      bare.push_back(tok);
    } else {
      kv.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
    }
  }
  auto take = [&](const std::string& key) -> std::optional<std::string> {
    for (auto it = kv.begin(); it != kv.end(); ++it) {
      if (it->first == key) {
        auto v = it->second;
        kv.erase(it);
        return v;
      }
    }
    return std::nullopt;
  };
  auto finish = [&] {
    if (!kv.empty()) throw std::invalid_argument("unknown field parameter '" + kv.front().first + "'");
  };

  if (kind == "constant") {
    if (bare.size() != 1 || !kv.empty()) throw std::invalid_argument("constant field expects exactly one value");
    return SpatialField::constant(dim, parse_number(bare.front()));
  }
  if (!bare.empty()) throw std::invalid_argument("unexpected token '" + bare.front() + "'");

  auto axes_or_all = [&]() {
    const auto a = take("axes");
    if (!a) return all_axes(dim);
    std::vector<int> axes;
    for (double v : parse_list(*a)) {
      if (v != std::floor(v)) throw std::invalid_argument("axes must be integers");
      axes.push_back(static_cast<int>(v));
    }
    return axes;
  };
  auto number_or = [&](const std::string& key, double fallback) {
    const auto v = take(key);
    return v ? parse_number(*v) : fallback;
  };

  if (kind == "piecewise") {
    const auto b = take("breaks");
    const auto v = take("values");
    if (!v) throw std::invalid_argument("piecewise field needs values=");
    std::vector<std::vector<double>> breaks;
    const std::string bs = b.value_or("");
    std::size_t start = 0;
    while (true) {
      const auto pos = bs.find(';', start);
      breaks.push_back(parse_list(std::string_view(bs).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    while (static_cast<int>(breaks.size()) < dim && !b) breaks.emplace_back();
    if (static_cast<int>(breaks.size()) != dim)
      throw std::invalid_argument("piecewise breaks list " + std::to_string(breaks.size()) + " axes, expected " +
                                  std::to_string(dim));
    finish();
    return SpatialField::piecewise(std::move(breaks), parse_list(*v));
  }
  if (kind == "sin" || kind == "cos") {
    const double offset = number_or("offset", 0.0);
    const double scale = number_or("scale", 1.0);
    const double k = number_or("k", 1.0);
    const double phase = number_or("phase", 0.0);
    auto axes = axes_or_all();
    finish();
    return SpatialField::trig(dim, kind == "sin" ? SpatialField::Kind::Sin : SpatialField::Kind::Cos, offset, scale, k, phase, std::move(axes));
  }
  if (kind == "poly") {
    const double offset = number_or("offset", 0.0);
    const double scale = number_or("scale", 1.0);
    const auto c = take("coeffs");
    if (!c) throw std::invalid_argument("poly field needs coeffs=");
    auto axes = axes_or_all();
    finish();
    return SpatialField::poly(dim, offset, scale, parse_list(*c), std::move(axes));
  }
  throw std::invalid_argument("unknown field kind '" + kind + "'");
}

}  // namespace hetrdme
