#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "hetrdme/field.hpp"

using namespace hetrdme;

namespace {

double midpoint_mean(const SpatialField& f, double lo, double hi, int n = 200000) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x[1] = {lo + (hi - lo) * (i + 0.5) / n};
    s += f(x);
  }
  return s / n;
}

}  // namespace

TEST_CASE("constant field mean and range") {
  const auto f = SpatialField::constant(2, 0.5);
  const double lo[2] = {0.1, 0.2}, hi[2] = {0.4, 0.9};
  CHECK(f.mean_over(lo, hi) == doctest::Approx(0.5));
  CHECK(f.range().min == 0.5);
  CHECK(f.range().max == 0.5);
  CHECK_FALSE(f.identically_zero());
  CHECK(SpatialField::constant(1, 0.0).identically_zero());
}

TEST_CASE("linear polynomial mean over halves") {
  const auto x = parse_field("poly coeffs=0,1", 1);
  const double a0[1] = {0.0}, a1[1] = {0.5}, a2[1] = {1.0};
  CHECK(x.mean_over(a0, a1) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(x.mean_over(a1, a2) == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("trig means agree with fine quadrature") {
  const auto d = parse_field("sin offset=0.5 scale=0.25 k=2", 1);
  for (double lo : {0.0, 0.13, 0.5})
    for (double hi : {0.6, 0.77, 1.0}) {
      const double a[1] = {lo}, b[1] = {hi};
      CHECK(d.mean_over(a, b) == doctest::Approx(midpoint_mean(d, lo, hi)).epsilon(1e-9));
    }
  const auto c = parse_field("cos k=3 phase=0.3", 1);
  const double a[1] = {0.2}, b[1] = {0.45};
  CHECK(c.mean_over(a, b) == doctest::Approx(midpoint_mean(c, 0.2, 0.45)).epsilon(1e-9));
}

TEST_CASE("trig range is exact") {
  const auto d = parse_field("sin offset=0.5 scale=0.25 k=2", 1);
  const auto r = d.range();
  CHECK(r.min == doctest::Approx(0.25));
  CHECK(r.max == doctest::Approx(0.75));
  const auto s = parse_field("sin k=1", 1).range();
  CHECK(s.min == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(s.max == doctest::Approx(1.0));
  CHECK(s.argmax[0] == doctest::Approx(0.5));
}

TEST_CASE("piecewise field straddling cells") {
  const auto f = parse_field("piecewise breaks=0.3 values=2,4", 1);
  const double lo[1] = {0.2}, hi[1] = {0.4};
  CHECK(f.mean_over(lo, hi) == doctest::Approx(3.0));
  CHECK(f.range().min == 2.0);
  CHECK(f.range().max == 4.0);
  CHECK(f.smoothness() == Smoothness::LInfinity);
}

TEST_CASE("two-dimensional piecewise uses axis 0 fastest") {
  const auto f = parse_field("piecewise breaks=0.5;0.5 values=1,2,3,4", 2);
  const double p[2] = {0.75, 0.25};
  CHECK(f(p) == 2.0);
  const double q[2] = {0.25, 0.75};
  CHECK(f(q) == 3.0);
  const double lo[2] = {0.0, 0.0}, hi[2] = {1.0, 1.0};
  CHECK(f.mean_over(lo, hi) == doctest::Approx(2.5));
}

TEST_CASE("separable field in two dimensions") {
  const auto f = parse_field("sin k=1", 2);
  const double lo[2] = {0.0, 0.0}, hi[2] = {1.0, 1.0};
  const double m = 2.0 / std::numbers::pi;
  CHECK(f.mean_over(lo, hi) == doctest::Approx(m * m).epsilon(1e-14));
}

TEST_CASE("linear combination") {
  const auto a = SpatialField::constant(1, 1.0);
  const auto b = parse_field("poly coeffs=0,1", 1);
  const auto f = SpatialField::linear_combination({2.0, -1.0}, {a, b});
  const double x[1] = {0.25};
  CHECK(f(x) == doctest::Approx(1.75));
  const double lo[1] = {0.0}, hi[1] = {1.0};
  CHECK(f.mean_over(lo, hi) == doctest::Approx(1.5));
  const auto r = f.range();
  CHECK(r.min <= 1.0);
  CHECK(r.max >= 2.0);
}

TEST_CASE("describe round-trips through the parser") {
  for (const char* text : {"constant 0.1", "piecewise breaks=0.3 values=0.5,1", "sin offset=0.5 scale=0.25 k=2",
                           "cos offset=0.5 scale=0.25 k=1 phase=0.1", "poly offset=1 scale=0.5 coeffs=0,1,-2"}) {
    const auto f = parse_field(text, 1);
    CHECK(parse_field(f.describe(), 1) == f);
  }
}

TEST_CASE("malformed field text") {
  CHECK_THROWS_AS(parse_field("", 1), std::invalid_argument);
  CHECK_THROWS_AS(parse_field("gauss 1", 1), std::invalid_argument);
  CHECK_THROWS_AS(parse_field("sin q=1", 1), std::invalid_argument);
  CHECK_THROWS_AS(parse_field("piecewise breaks=0.5 values=1", 1), std::invalid_argument);
  CHECK_THROWS_AS(parse_field("piecewise breaks=0.5 values=1,2", 2), std::invalid_argument);
  CHECK_THROWS_AS(parse_field("constant abc", 1), std::invalid_argument);
}

TEST_CASE("format_double is shortest round-trip") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(2.0) == "2");
  const double v = 1.0 / 3.0;
  CHECK(std::stod(format_double(v)) == v);
}
