#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "raschkit/quadrature.hpp"

using namespace raschkit;
using Catch::Matchers::WithinAbs;

namespace {
// E[x^d] under N(0,1): zero for odd d, (d-1)!! for even d.
double gaussian_moment(int d) {
  if (d % 2 == 1) return 0.0;
  double acc = 1.0;
  for (int k = d - 1; k > 1; k -= 2) acc *= k;
  return acc;
}

// high-resolution trapezoid integration against the Gaussian density, the
// independent oracle for the quadrature rules
double trapezoid_expectation(double (*f)(double), double mu, double sigma) {
  const int n = 400001;
  const double lo = mu - 12.0 * sigma, hi = mu + 12.0 * sigma;
  const double h = (hi - lo) / (n - 1);
  double acc = 0.0;
  for (int k = 0; k < n; ++k) {
    const double x = lo + k * h;
    const double z = (x - mu) / sigma;
    const double w =
        std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * 3.14159265358979323846));
    const double v = f(x) * w;
    acc += (k == 0 || k == n - 1) ? 0.5 * v : v;
  }
  return acc * h;
}
}  // namespace

TEST_CASE("argument validation", "[quad]") {
  CHECK_THROWS_AS(gauss_hermite(0, 0.0, 1.0), DomainError);
  CHECK_THROWS_AS(gauss_hermite(102, 0.0, 1.0), DomainError);
  CHECK_THROWS_AS(gauss_hermite(5, 0.0, 0.0), DomainError);
  CHECK_THROWS_AS(gauss_hermite(5, 0.0, -1.0), DomainError);
}

TEST_CASE("single-node rule sits at the mean", "[quad]") {
  const auto rule = gauss_hermite(1, 0.0, 1.0);
  REQUIRE(rule.nodes.size() == 1);
  CHECK_THAT(rule.nodes[0], WithinAbs(0.0, 1e-15));
  CHECK_THAT(rule.weights[0], WithinAbs(1.0, 1e-15));
  const auto shifted = gauss_hermite(1, 2.5, 3.0);
  CHECK_THAT(shifted.nodes[0], WithinAbs(2.5, 1e-15));
}

TEST_CASE("weights are normalized, positive, nodes strictly increasing", "[quad]") {
  for (int n : {1, 2, 5, 41, 101}) {
    const auto rule = gauss_hermite(n, 0.0, 1.0);
    double sum = 0.0;
    for (double w : rule.weights) {
      CHECK(w > 0.0);
      sum += w;
    }
    CHECK_THAT(sum, WithinAbs(1.0, 1e-12));
    for (std::size_t k = 1; k < rule.nodes.size(); ++k)
      CHECK(rule.nodes[k] > rule.nodes[k - 1]);
  }
}

TEST_CASE("five-point rule matches the reference table", "[quad]") {
  const auto rule = gauss_hermite(5, 0.0, 1.0);
  const double nodes[5] = {-2.8569700138728056, -1.355626179974266, 0.0,
                           1.355626179974266, 2.8569700138728056};
  const double weights[5] = {0.011257411327720693, 0.2220759220056126,
                             0.5333333333333333, 0.2220759220056126,
                             0.011257411327720693};
  for (int k = 0; k < 5; ++k) {
    CHECK_THAT(rule.nodes[k], WithinAbs(nodes[k], 1e-13));
    CHECK_THAT(rule.weights[k], WithinAbs(weights[k], 1e-13));
  }
}

TEST_CASE("basic expectations", "[quad]") {
  const auto rule = gauss_hermite(21, 0.0, 1.0);
  CHECK_THAT(expect(rule, [](double) { return 1.0; }), WithinAbs(1.0, 1e-14));
  CHECK_THAT(expect(rule, [](double) { return 7.0; }), WithinAbs(7.0, 1e-13));
  CHECK_THAT(expect(rule, [](double x) { return x; }), WithinAbs(0.0, 1e-12));
  CHECK_THAT(expect(rule, [](double x) { return x * x; }), WithinAbs(1.0, 1e-10));
  CHECK_THAT(expect(rule, [](double x) { return x * x * x * x; }), WithinAbs(3.0, 1e-9));
}

TEST_CASE("second moment agrees with trapezoid integration", "[quad]") {
  const auto rule = gauss_hermite(21, 0.0, 1.0);
  const double quad = expect(rule, [](double x) { return x * x; });
  const double trap = trapezoid_expectation([](double x) { return x * x; }, 0.0, 1.0);
  CHECK_THAT(quad, WithinAbs(trap, 1e-8));
  CHECK_THAT(trap, WithinAbs(1.0, 1e-8));
}

TEST_CASE("polynomial exactness up to degree 2n-1", "[quad]") {
  for (int n : {5, 11, 21}) {
    const auto rule = gauss_hermite(n, 0.0, 1.0);
    for (int d = 0; d <= 2 * n - 1; ++d) {
      const double got = expect(rule, [d](double x) { return std::pow(x, d); });
      const double want = gaussian_moment(d);
      // 1e-9 relative to the summation scale; odd moments cancel terms of
      // magnitude E|x|^d, so an absolute comparison against 0 is meaningless
      const double scale = expect(rule, [d](double x) { return std::pow(std::abs(x), d); });
      const double tol = 1e-9 * std::max(1.0, scale);
      CHECK_THAT(got, WithinAbs(want, tol));
    }
  }
}

TEST_CASE("nodes and weights are symmetric about the mean", "[quad]") {
  for (int n : {4, 5, 41}) {
    const auto rule = gauss_hermite(n, 2.0, 3.0);
    for (int k = 0; k < n; ++k) {
      CHECK_THAT(rule.nodes[k] + rule.nodes[n - 1 - k], WithinAbs(4.0, 1e-10));
      CHECK_THAT(rule.weights[k], WithinAbs(rule.weights[n - 1 - k], 1e-12));
    }
  }
}

TEST_CASE("scaled rules integrate their own Gaussian's moments", "[quad]") {
  const double mu = -1.5, sigma = 2.5;
  const auto rule = gauss_hermite(31, mu, sigma);
  CHECK_THAT(expect(rule, [](double x) { return x; }), WithinAbs(mu, 1e-10));
  CHECK_THAT(expect(rule, [&](double x) { return (x - mu) * (x - mu); }),
             WithinAbs(sigma * sigma, 1e-9));
}

TEST_CASE("non-finite integrand is reported", "[quad]") {
  const auto rule = gauss_hermite(5, 0.0, 1.0);
  CHECK_THROWS_AS(expect(rule, [](double x) { return 1.0 / (x * 0.0); }), NumericError);
}
