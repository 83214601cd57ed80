#include "doctest.h"

#include "gmdeb/errors.hpp"
#include "gmdeb/transform.hpp"

#include <cmath>
#include <limits>
#include <vector>

using namespace gmdeb;

namespace {

const std::vector<double> kLambdas{-1.0, -0.5, 0.0, 0.5, 1.0, 2.0};

std::vector<double> lower_grid() {
  std::vector<double> xs;
  for (double e = -4.0; e <= 4.0; e += 0.25) {
    xs.push_back(1.0 + std::pow(10.0, e / 2.0));
  }
  return xs;
}

std::vector<double> interval_grid() {
  std::vector<double> xs;
  for (int k = 1; k < 200; ++k) {
    xs.push_back(-2.0 + 5.0 * k / 200.0);
  }
  return xs;
}

}  // namespace

TEST_CASE("forward examples") {
  CHECK(forward(2.0, BoundSpec::lower_bound(0.0), 0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(forward(3.0, BoundSpec::lower_bound(1.0), 2.0) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(forward(0.5, BoundSpec::interval(0.0, 1.0), 0.0) == 0.0);
  CHECK(forward(0.75, BoundSpec::interval(0.0, 1.0), 1.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(forward(-7.5, BoundSpec::unbounded(), 0.3) == -7.5);
}

TEST_CASE("derivative examples") {
  CHECK(derivative(2.0, BoundSpec::lower_bound(0.0), 1.0) == doctest::Approx(1.0));
  CHECK(derivative(0.5, BoundSpec::interval(0.0, 1.0), 0.0) == doctest::Approx(4.0));
  CHECK(derivative(5.0, BoundSpec::lower_bound(1.0), 0.5) == doctest::Approx(0.5));
  CHECK(derivative(123.0, BoundSpec::unbounded(), -2.0) == 1.0);
}

TEST_CASE("inverse examples") {
  CHECK(inverse(0.0, BoundSpec::lower_bound(0.0), 0.0) == doctest::Approx(1.0));
  CHECK(inverse(2.0, BoundSpec::interval(0.0, 1.0), 1.0) == doctest::Approx(0.75));
  CHECK(inverse(1.5, BoundSpec::lower_bound(1.0), 2.0) == doctest::Approx(3.0));
  CHECK_THROWS_AS(inverse(-1.0, BoundSpec::lower_bound(0.0), 1.0), RangeError);
  CHECK_THROWS_AS(inverse(2.0, BoundSpec::lower_bound(0.0), -0.5), RangeError);
}

TEST_CASE("log_jacobian examples") {
  const TransformParams tp({1.0, 0.0}, {BoundSpec::lower_bound(0.0), BoundSpec::interval(0.0, 1.0)});
  const std::vector<double> x{2.0, 0.5};
  CHECK(log_jacobian(x, tp) == doctest::Approx(std::log(4.0)).epsilon(1e-14));

  const TransformParams un({0.7, -1.2}, {BoundSpec::unbounded(), BoundSpec::unbounded()});
  const std::vector<double> y{-3.0, 8.0};
  CHECK(log_jacobian(y, un) == 0.0);

  const TransformParams one({0.5}, {BoundSpec::lower_bound(1.0)});
  const std::vector<double> z{5.0};
  CHECK(log_jacobian(z, one) == doctest::Approx(std::log(0.5)));
}

TEST_CASE("domain errors carry the coordinate") {
  CHECK_THROWS_AS(forward(0.0, BoundSpec::lower_bound(0.0), 1.0), DomainError);
  CHECK_THROWS_AS(forward(1.0, BoundSpec::interval(0.0, 1.0), 1.0), DomainError);
  CHECK_THROWS_AS(forward(-0.1, BoundSpec::interval(0.0, 1.0), 1.0), DomainError);
  CHECK_THROWS_AS(forward(std::numeric_limits<double>::quiet_NaN(), BoundSpec::unbounded(), 1.0),
                  NonFinite);
  CHECK_THROWS_AS(forward(std::numeric_limits<double>::infinity(), BoundSpec::lower_bound(0.0), 1.0),
                  NonFinite);

  const TransformParams tp({1.0, 1.0}, {BoundSpec::unbounded(), BoundSpec::lower_bound(0.0)});
  const std::vector<double> x{1.0, -1.0};
  try {
    log_jacobian(x, tp);
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    REQUIRE(e.col().has_value());
    CHECK(*e.col() == 1);
  }

  Eigen::MatrixXd data(3, 2);
  data << 1, 1, 2, 2, 3, 0;
  try {
    check_support(data, tp.bounds);
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(e.row() == std::optional<std::size_t>(2));
    CHECK(e.col() == std::optional<std::size_t>(1));
  }
}

TEST_CASE("invalid bound specs are rejected") {
  CHECK_THROWS_AS(BoundSpec::interval(1.0, 1.0), InvalidParams);
  CHECK_THROWS_AS(BoundSpec::interval(2.0, 1.0), InvalidParams);
  CHECK_THROWS_AS(BoundSpec::lower_bound(std::numeric_limits<double>::infinity()), InvalidParams);
  CHECK_THROWS_AS(TransformParams({1.0}, {}), InvalidParams);
  CHECK_THROWS_AS(TransformParams({std::numeric_limits<double>::quiet_NaN()}, {BoundSpec::unbounded()}),
                  InvalidParams);
}

TEST_CASE("round trip") {
  const std::vector<std::pair<BoundSpec, std::vector<double>>> cases{
      {BoundSpec::lower_bound(1.0), lower_grid()},
      {BoundSpec::interval(-2.0, 3.0), interval_grid()},
      {BoundSpec::unbounded(), interval_grid()},
  };
  for (const auto& [b, xs] : cases) {
    for (double lam : kLambdas) {
      for (double x : xs) {
        const double back = inverse(forward(x, b, lam), b, lam);
        CHECK(std::abs(back - x) <= 1e-9 * (1.0 + std::abs(x)));
      }
    }
  }
}

TEST_CASE("continuity at lambda = 0") {
  for (const auto& b : {BoundSpec::lower_bound(1.0), BoundSpec::interval(-2.0, 3.0)}) {
    const auto xs = b.kind == BoundSpec::Kind::Lower ? lower_grid() : interval_grid();
    for (double x : xs) {
      CHECK(std::abs(forward(x, b, 1e-8) - forward(x, b, 0.0)) <= 1e-6);
      CHECK(std::abs(forward(x, b, 5e-11) - forward(x, b, 0.0)) <= 1e-9);
    }
  }
}

TEST_CASE("derivative matches central differences") {
  for (const auto& b : {BoundSpec::lower_bound(1.0), BoundSpec::interval(-2.0, 3.0)}) {
    const auto xs = b.kind == BoundSpec::Kind::Lower ? lower_grid() : interval_grid();
    for (double lam : kLambdas) {
      for (double x : xs) {
        // Richardson-extrapolated central difference, with the step kept
        // inside the support
        const double dist = b.kind == BoundSpec::Kind::Lower
                                ? x - b.lower
                                : std::min(x - b.lower, b.upper - x);
        const double h = 1e-3 * dist;
        const auto cd = [&](double s) { return (forward(x + s, b, lam) - forward(x - s, b, lam)) / (2.0 * s); };
        const double fd = (4.0 * cd(h / 2.0) - cd(h)) / 3.0;
        const double d = derivative(x, b, lam);
        CHECK(d > 0.0);
        CHECK(std::abs(fd - d) <= 1e-6 * std::abs(d));
      }
    }
  }
}

TEST_CASE("forward is strictly increasing") {
  for (const auto& b : {BoundSpec::lower_bound(1.0), BoundSpec::interval(-2.0, 3.0)}) {
    const auto xs = b.kind == BoundSpec::Kind::Lower ? lower_grid() : interval_grid();
    for (double lam : kLambdas) {
      for (std::size_t k = 1; k < xs.size(); ++k) {
        CHECK(forward(xs[k], b, lam) > forward(xs[k - 1], b, lam));
      }
    }
  }
}

TEST_CASE("boundary limits diverge") {
  const auto lower = BoundSpec::lower_bound(1.0);
  const auto interval = BoundSpec::interval(0.0, 1.0);
  for (double lam : {-1.0, -0.5, 0.0}) {
    double prev = forward(1.0 + 1e-2, lower, lam);
    for (int k = 3; k <= 8; ++k) {
      const double v = forward(1.0 + std::pow(10.0, -k), lower, lam);
      CHECK(v < prev);
      prev = v;
    }
    // the decrease is unbounded: each decade moves by at least log(10) for
    // lambda <= 0
    CHECK(forward(1.0 + 1e-2, lower, lam) - prev >= 6.0 * std::log(10.0) - 1e-9);
  }
  for (double lam : {0.0, 0.5, 1.0, 2.0}) {
    double prev = forward(1.0 - 1e-2, interval, lam);
    for (int k = 3; k <= 8; ++k) {
      const double v = forward(1.0 - std::pow(10.0, -k), interval, lam);
      CHECK(v > prev);
      prev = v;
    }
    CHECK(prev - forward(1.0 - 1e-2, interval, lam) >= 6.0 * std::log(10.0) - 1e-6);
  }
}

TEST_CASE("row helpers agree with scalar functions") {
  const TransformParams tp({0.3, -0.7, 1.0},
                           {BoundSpec::lower_bound(0.0), BoundSpec::interval(0.0, 2.0), BoundSpec::unbounded()});
  Eigen::MatrixXd data(3, 3);
  data << 0.5, 0.2, -1.0, 3.0, 1.5, 4.0, 10.0, 1.9, 0.0;
  const Eigen::MatrixXd y = transform_rows(data, tp);
  const Eigen::VectorXd lj = log_jacobian_rows(data, tp);
  for (int i = 0; i < 3; ++i) {
    double s = 0.0;
    for (int j = 0; j < 3; ++j) {
      CHECK(y(i, j) == forward(data(i, j), tp.bounds[j], tp.lambdas[j]));
      s += std::log(derivative(data(i, j), tp.bounds[j], tp.lambdas[j]));
    }
    CHECK(lj(i) == doctest::Approx(s).epsilon(1e-14));
  }
  CHECK(tp.n_active() == 2);
}

TEST_CASE("log derivative stays finite where the derivative overflows") {
  for (const auto& b : {BoundSpec::lower_bound(1.0), BoundSpec::interval(-2.0, 3.0)}) {
    const auto xs = b.kind == BoundSpec::Kind::Lower ? lower_grid() : interval_grid();
    for (double lam : kLambdas) {
      for (double x : xs) {
        CHECK(log_derivative(x, b, lam) == doctest::Approx(std::log(derivative(x, b, lam))).epsilon(1e-12));
      }
    }
  }
  const auto lower = BoundSpec::lower_bound(0.0);
  CHECK(std::isinf(derivative(1e-305, lower, -0.5)));
  CHECK(log_derivative(1e-305, lower, -0.5) == doctest::Approx(-1.5 * std::log(1e-305)));
  CHECK(log_derivative(3.0, BoundSpec::unbounded(), 2.0) == 0.0);
}
