#include "doctest.h"
#include "helpers.hpp"

#include "gmdeb/density.hpp"
#include "gmdeb/errors.hpp"
#include "gmdeb/gaussmix.hpp"
#include "gmdeb/transform.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace gmdeb;

namespace {

MixtureFit interval_fit() {
  return testing::univariate_fit(BoundSpec::interval(0.0, 1.0), 0.5, {0.35, 0.65}, {-0.8, 0.9},
                                 {0.3, 0.5});
}

MixtureFit lognormal_fit() {
  return testing::univariate_fit(BoundSpec::lower_bound(0.0), 0.0, {1.0}, {0.0}, {1.0});
}

// Normalized CDF of a univariate fit on (0, 1) by the trapezoid rule on a
// fine logit grid.
struct QuadratureCdf {
  std::vector<double> x;
  std::vector<double> c;

  explicit QuadratureCdf(const MixtureFit& fit) {
    const int m = 200000;
    std::vector<double> u(m + 1);
    std::vector<double> f(m + 1);
    for (int k = 0; k <= m; ++k) {
      u[k] = -25.0 + 50.0 * k / m;
      const double xv = 1.0 / (1.0 + std::exp(-u[k]));
      x.push_back(xv);
      const std::vector<double> pt{xv};
      f[k] = pdf(pt, fit) * xv * (1.0 - xv);
    }
    c.assign(m + 1, 0.0);
    for (int k = 1; k <= m; ++k) {
      c[k] = c[k - 1] + 0.5 * (f[k] + f[k - 1]) * (u[k] - u[k - 1]);
    }
    for (double& v : c) {
      v /= c.back();
    }
  }

  double operator()(double xv) const {
    const auto it = std::lower_bound(x.begin(), x.end(), xv);
    if (it == x.begin()) {
      return 0.0;
    }
    if (it == x.end()) {
      return 1.0;
    }
    const auto k = static_cast<std::size_t>(it - x.begin());
    const double t = (xv - x[k - 1]) / (x[k] - x[k - 1]);
    return c[k - 1] + t * (c[k] - c[k - 1]);
  }
};

}  // namespace

TEST_CASE("pdf examples") {
  const auto fit = lognormal_fit();
  const std::vector<double> one{1.0};
  CHECK(pdf(one, fit) == doctest::Approx(0.398942).epsilon(1e-6));
  for (double x : {0.0, -1.0, -1e-300}) {
    const std::vector<double> pt{x};
    CHECK(pdf(pt, fit) == 0.0);
    CHECK(log_pdf(pt, fit) == -std::numeric_limits<double>::infinity());
  }
  const auto iv = interval_fit();
  for (double x : {0.0, 1.0, 1.5, -0.2}) {
    const std::vector<double> pt{x};
    CHECK(pdf(pt, iv) == 0.0);
  }
}

TEST_CASE("pdf matches the change-of-variables composition") {
  const auto fit = interval_fit();
  Eigen::MatrixXd pts(99, 1);
  for (int k = 0; k < 99; ++k) {
    pts(k, 0) = (k + 1) / 100.0;
  }
  const Eigen::VectorXd batch = pdf(pts, fit);
  for (int k = 0; k < 99; ++k) {
    const double x = pts(k, 0);
    const double y = forward(x, fit.transform.bounds[0], fit.transform.lambdas[0]);
    Eigen::VectorXd terms(2);
    for (int g = 0; g < 2; ++g) {
      terms(g) = std::log(fit.params.weights(g)) +
                 log_phi(Eigen::VectorXd::Constant(1, y), fit.params.means[g], fit.params.covariances[g]);
    }
    const std::vector<double> pt{x};
    const double oracle = std::exp(log_sum_exp(terms)) * std::exp(log_jacobian(pt, fit.transform));
    CHECK(std::abs(batch(k) - oracle) <= 1e-12 * std::max(1.0, oracle));
    CHECK(std::abs(pdf(pt, fit) - oracle) <= 1e-12 * std::max(1.0, oracle));
  }
}

TEST_CASE("pdf on a bivariate fit") {
  Eigen::MatrixXd cov(2, 2);
  cov << 1.0, 0.3, 0.3, 0.5;
  const auto fit = testing::make_fit({BoundSpec::lower_bound(0.0), BoundSpec::interval(0.0, 2.0)}, {0.0, 0.0},
                                     Eigen::VectorXd::Ones(1), {Eigen::Vector2d(0.2, -0.1)}, {cov});
  const std::vector<double> pt{1.5, 0.7};
  const Eigen::Vector2d y(std::log(1.5), std::log(0.7 / 1.3));
  const double jac = 1.0 / 1.5 * (1.0 / 0.7 + 1.0 / 1.3);
  CHECK(pdf(pt, fit) == doctest::Approx(std::exp(log_phi(y, fit.params.means[0], cov)) * jac).epsilon(1e-12));
  const std::vector<double> edge{1.5, 2.0};
  CHECK(pdf(edge, fit) == 0.0);
}

TEST_CASE("sampling moments and support") {
  const auto normal = testing::univariate_fit(BoundSpec::unbounded(), 1.0, {1.0}, {0.0}, {1.0});
  const Eigen::MatrixXd s = sample(100000, normal, 5);
  const double mean = s.col(0).mean();
  CHECK(std::abs(mean) <= 0.02);
  CHECK(std::abs((s.col(0).array() - mean).square().mean() - 1.0) <= 0.03);

  const Eigen::MatrixXd iv = sample(20000, interval_fit(), 6);
  CHECK(iv.minCoeff() > 0.0);
  CHECK(iv.maxCoeff() < 1.0);

  Eigen::VectorXd ln = sample(100000, lognormal_fit(), 7).col(0);
  std::sort(ln.data(), ln.data() + ln.size());
  CHECK(std::abs(0.5 * (ln(49999) + ln(50000)) - 1.0) <= 0.03);

  CHECK(sample(50, interval_fit(), 9) == sample(50, interval_fit(), 9));
  CHECK(sample(50, interval_fit(), 9) != sample(50, interval_fit(), 10));
}

TEST_CASE("samples follow the quadrature CDF") {
  const auto fit = interval_fit();
  const QuadratureCdf cdf(fit);
  Eigen::VectorXd s = sample(100000, fit, 12).col(0);
  std::sort(s.data(), s.data() + s.size());
  double ks = 0.0;
  const double n = static_cast<double>(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double c = cdf(s(i));
    ks = std::max({ks, std::abs(c - i / n), std::abs(c - (i + 1) / n)});
  }
  CHECK(ks < 0.01);
}

TEST_CASE("rejection overflow") {
  // lambda * y + 1 <= 0 for almost every draw
  const auto bad = testing::univariate_fit(BoundSpec::lower_bound(0.0), 1.0, {1.0}, {-5.0}, {1.0});
  CHECK_THROWS_AS(sample(100, bad, 1), RejectionOverflow);
}

TEST_CASE("hdr thresholds") {
  const auto fit = lognormal_fit();
  const HdrSpec spec{{0.25, 0.5, 0.75, 0.9}, 20000};
  const auto t = hdr_thresholds(fit, spec, 3);
  REQUIRE(t.size() == 4);
  for (std::size_t k = 1; k < t.size(); ++k) {
    CHECK(t[k - 1] >= t[k]);
  }
  CHECK(hdr_threshold(fit, 0.25, 20000, 3) >= hdr_threshold(fit, 0.75, 20000, 3));

  // prob -> 1: below the 0.2% quantile of sampled density values
  const Eigen::MatrixXd draws = sample(20000, fit, 4);
  Eigen::VectorXd dens = pdf(draws, fit);
  std::sort(dens.data(), dens.data() + dens.size());
  CHECK(hdr_threshold(fit, 0.999, 20000, 4) <= dens(static_cast<Eigen::Index>(0.002 * 20000)));

  // mass of {pdf >= threshold} by quadrature in log coordinates
  const double thr = hdr_threshold(fit, 0.5, 100000, 5);
  double mass = 0.0;
  const int m = 200000;
  const double du = 20.0 / m;
  for (int k = 0; k < m; ++k) {
    const double u = -10.0 + (k + 0.5) * du;
    const std::vector<double> pt{std::exp(u)};
    const double f = pdf(pt, fit);
    if (f >= thr) {
      mass += f * std::exp(u) * du;
    }
  }
  CHECK(mass >= 0.47);
  CHECK(mass <= 0.53);

  CHECK(hdr_level(1.0, spec.probs, t) == 0.25);
  CHECK(hdr_level(0.0, spec.probs, t) == 1.0);
  CHECK_THROWS_AS((HdrSpec{{0.5, 0.25}, 10000}.validate()), InvalidParams);
  CHECK_THROWS_AS((HdrSpec{{0.5}, 10}.validate()), InvalidParams);
  CHECK_THROWS_AS((HdrSpec{{1.0}, 10000}.validate()), InvalidParams);
}

TEST_CASE("integrate_pdf") {
  CHECK(std::abs(integrate_pdf(lognormal_fit(), 2048) - 1.0) <= 1e-4);
  const auto logit = testing::univariate_fit(BoundSpec::interval(-1.0, 2.0), 0.0, {0.3, 0.7}, {-1.0, 1.5},
                                             {0.4, 2.0});
  CHECK(std::abs(integrate_pdf(logit, 2048) - 1.0) <= 1e-4);

  Eigen::MatrixXd cov(2, 2);
  cov << 1.0, -0.4, -0.4, 0.8;
  const auto biv = testing::make_fit({BoundSpec::lower_bound(1.0), BoundSpec::interval(0.0, 1.0)}, {0.0, 0.0},
                                     Eigen::VectorXd::Ones(1), {Eigen::Vector2d(0.5, 0.0)}, {cov});
  CHECK(std::abs(integrate_pdf(biv, 256) - 1.0) <= 1e-4);

  const auto iv = interval_fit();
  const double base = integrate_pdf(iv, 2048);
  CHECK(base >= 0.98);
  CHECK(base <= 1.005);
  const DensityFn doubled = [&](std::span<const double> x) { return 2.0 * pdf(x, iv); };
  CHECK(integrate_density(doubled, iv, 2048) == doctest::Approx(2.0 * base).epsilon(1e-12));

  std::vector<Eigen::VectorXd> means{Eigen::VectorXd::Zero(4)};
  std::vector<Eigen::MatrixXd> covs{Eigen::MatrixXd::Identity(4, 4)};
  const auto four = testing::make_fit(std::vector<BoundSpec>(4, BoundSpec::unbounded()), {1, 1, 1, 1},
                                      Eigen::VectorXd::Ones(1), means, covs);
  CHECK_THROWS_AS(integrate_pdf(four, 8), UnsupportedDimension);
}

TEST_CASE("grid evaluation and CSV") {
  const auto fit = interval_fit();
  const auto axes = default_axes(fit, {512});
  REQUIRE(axes.size() == 1);
  CHECK(axes[0].size() == 512);
  CHECK(axes[0].front() > 0.0);
  CHECK(axes[0].back() < 1.0);
  CHECK(std::is_sorted(axes[0].begin(), axes[0].end()));

  const auto grid = evaluate_grid(fit, axes);
  CHECK(grid.size() == 512);
  for (double v : grid.values) {
    CHECK(v >= 0.0);
  }

  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(2, 2);
  const auto biv = testing::make_fit({BoundSpec::lower_bound(0.0), BoundSpec::unbounded()}, {0.0, 1.0},
                                     Eigen::VectorXd::Ones(1), {Eigen::Vector2d(0.0, 0.0)}, {cov});
  const auto g2 = evaluate_grid(biv, {{1.0, 2.0}, {-1.0, 0.0, 1.0}});
  REQUIRE(g2.size() == 6);
  // last axis varies fastest
  CHECK(g2.point(1) == std::vector<double>{1.0, 0.0});
  CHECK(g2.point(3) == std::vector<double>{2.0, -1.0});
  const std::vector<double> p3{2.0, -1.0};
  CHECK(g2.values[3] == pdf(p3, biv));

  std::ostringstream os;
  write_density_csv(os, g2, {"a", "b"});
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "a,b,density");
  int rows = 0;
  while (std::getline(is, line)) {
    ++rows;
  }
  CHECK(rows == 6);
  std::ostringstream plain;
  write_density_csv(plain, g2);
  CHECK(plain.str().rfind("x1,x2,density\n", 0) == 0);
  // 15 significant digits survive the round trip
  std::istringstream rows_in(plain.str());
  for (int k = 0; k <= 4; ++k) {
    std::getline(rows_in, line);
  }
  const double written = std::stod(line.substr(line.rfind(',') + 1));
  CHECK(std::abs(written - pdf(p3, biv)) <= 1e-14 * pdf(p3, biv));
}

TEST_CASE("density near a bound with negative lambda") {
  const auto fit = testing::univariate_fit(BoundSpec::lower_bound(0.0), -0.074, {1.0}, {0.88}, {0.8});
  for (double x : {1e-300, 1e-100, 1e-10}) {
    const std::vector<double> pt{x};
    CHECK(std::isfinite(pdf(pt, fit)));
    CHECK(std::isfinite(log_pdf(pt, fit)));
  }
  const double mass = integrate_pdf(fit, 2048);
  CHECK(mass >= 0.98);
  CHECK(mass <= 1.005);
}
