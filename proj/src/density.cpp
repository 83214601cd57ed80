#include "gmdeb/density.hpp"

#include "gmdeb/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>

namespace gmdeb {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Range of the quadrature coordinate scanned when locating the mass.
constexpr double kScanLimit = 700.0;
constexpr int kScanPoints = 40001;

std::vector<GaussianComponent> components(const MixtureParams& params) {
  std::vector<GaussianComponent> out;
  for (int g = 0; g < params.n_components(); ++g) {
    out.emplace_back(params.means[static_cast<std::size_t>(g)],
                     params.covariances[static_cast<std::size_t>(g)]);
  }
  return out;
}

double log_pdf_with(std::span<const double> x, const MixtureFit& fit,
                    const std::vector<GaussianComponent>& comps) {
  const auto p = fit.transform.dim();
  if (x.size() != p) {
    throw InvalidParams("point dimension does not match the model");
  }
  Eigen::VectorXd y(static_cast<Eigen::Index>(p));
  double log_jac = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    const auto& b = fit.transform.bounds[j];
    if (!b.contains(x[j])) {
      return kNegInf;
    }
    const double lam = fit.transform.lambdas[j];
    y(static_cast<Eigen::Index>(j)) = forward(x[j], b, lam);
    log_jac += log_derivative(x[j], b, lam);
  }
  Eigen::VectorXd terms(fit.params.n_components());
  for (int g = 0; g < fit.params.n_components(); ++g) {
    terms(g) = std::log(fit.params.weights(g)) + comps[static_cast<std::size_t>(g)].log_density(y);
  }
  return log_sum_exp(terms) + log_jac;
}

// Quadrature coordinate s for one axis: identity, log(x - l) or
// logit((x - l)/(u - l)).
struct AxisMap {
  BoundSpec bound;

  double to_x(double s) const {
    switch (bound.kind) {
      case BoundSpec::Kind::Unbounded:
        return s;
      case BoundSpec::Kind::Lower:
        return bound.lower + std::exp(s);
      case BoundSpec::Kind::Interval: {
        const double w = bound.upper - bound.lower;
        return s > 0.0 ? bound.upper - w / (1.0 + std::exp(s))
                       : bound.lower + w / (1.0 + std::exp(-s));
      }
    }
    return s;
  }

  double dx_ds(double s) const {
    switch (bound.kind) {
      case BoundSpec::Kind::Unbounded:
        return 1.0;
      case BoundSpec::Kind::Lower:
        return std::exp(s);
      case BoundSpec::Kind::Interval: {
        const double e = std::exp(-std::abs(s));
        return (bound.upper - bound.lower) * e / ((1.0 + e) * (1.0 + e));
      }
    }
    return 1.0;
  }

  double log_dx_ds(double s) const {
    switch (bound.kind) {
      case BoundSpec::Kind::Unbounded:
        return 0.0;
      case BoundSpec::Kind::Lower:
        return s;
      case BoundSpec::Kind::Interval: {
        const double a = std::abs(s);
        return std::log(bound.upper - bound.lower) - a - 2.0 * std::log1p(std::exp(-a));
      }
    }
    return 0.0;
  }
};

// Marginal density of axis j in the quadrature coordinate.
double axis_marginal(const MixtureFit& fit, std::size_t j, const AxisMap& map, double s) {
  const double x = map.to_x(s);
  const auto& b = fit.transform.bounds[j];
  if (!b.contains(x)) {
    return 0.0;
  }
  const double lam = fit.transform.lambdas[j];
  const double y = forward(x, b, lam);
  const auto jj = static_cast<Eigen::Index>(j);
  Eigen::VectorXd terms(fit.params.n_components());
  for (int g = 0; g < fit.params.n_components(); ++g) {
    const double mu = fit.params.means[static_cast<std::size_t>(g)](jj);
    const double var = fit.params.covariances[static_cast<std::size_t>(g)](jj, jj);
    const double r = y - mu;
    terms(g) = std::log(fit.params.weights(g)) - 0.5 * r * r / var -
               0.5 * std::log(2.0 * std::numbers::pi * var);
  }
  return std::exp(log_sum_exp(terms) + log_derivative(x, b, lam) + map.log_dx_ds(s));
}

// Window [s_lo, s_hi] of axis j outside which the marginal stays below
// rel * peak.
std::pair<double, double> axis_window(const MixtureFit& fit, std::size_t j, double rel) {
  const AxisMap map{fit.transform.bounds[j]};
  const auto jj = static_cast<Eigen::Index>(j);
  double lo = kScanLimit;
  double hi = -kScanLimit;
  if (map.bound.kind == BoundSpec::Kind::Unbounded) {
    for (int g = 0; g < fit.params.n_components(); ++g) {
      const double mu = fit.params.means[static_cast<std::size_t>(g)](jj);
      const double sd = std::sqrt(fit.params.covariances[static_cast<std::size_t>(g)](jj, jj));
      lo = std::min(lo, mu - 40.0 * sd);
      hi = std::max(hi, mu + 40.0 * sd);
    }
  } else {
    lo = -kScanLimit;
    hi = kScanLimit;
  }

  // coarse scan, then zoom once so narrow peaks are resolved
  for (int pass = 0; pass < 2; ++pass) {
    const double step = (hi - lo) / (kScanPoints - 1);
    std::vector<double> v(kScanPoints);
    double peak = 0.0;
    for (int k = 0; k < kScanPoints; ++k) {
      v[static_cast<std::size_t>(k)] = axis_marginal(fit, j, map, lo + k * step);
      peak = std::max(peak, v[static_cast<std::size_t>(k)]);
    }
    if (!(peak > 0.0)) {
      throw NonFinite("axis " + std::to_string(j) + " marginal density vanished everywhere");
    }
    int first = 0;
    int last = kScanPoints - 1;
    while (first < kScanPoints && v[static_cast<std::size_t>(first)] < rel * peak) {
      ++first;
    }
    while (last > 0 && v[static_cast<std::size_t>(last)] < rel * peak) {
      --last;
    }
    const double new_lo = lo + std::max(first - 1, 0) * step;
    const double new_hi = lo + std::min(last + 1, kScanPoints - 1) * step;
    lo = new_lo;
    hi = new_hi;
  }
  return {lo, hi};
}

// Quantile of the axis-j marginal, from a trapezoidal CDF in the quadrature
// coordinate.
double axis_quantile(const MixtureFit& fit, std::size_t j, double q) {
  const AxisMap map{fit.transform.bounds[j]};
  const auto [lo, hi] = axis_window(fit, j, 1e-12);
  const double step = (hi - lo) / (kScanPoints - 1);
  std::vector<double> cdf(kScanPoints, 0.0);
  double prev = axis_marginal(fit, j, map, lo);
  for (int k = 1; k < kScanPoints; ++k) {
    const double cur = axis_marginal(fit, j, map, lo + k * step);
    cdf[static_cast<std::size_t>(k)] = cdf[static_cast<std::size_t>(k - 1)] + 0.5 * step * (prev + cur);
    prev = cur;
  }
  const double target = q * cdf.back();
  const auto it = std::lower_bound(cdf.begin(), cdf.end(), target);
  const auto k = static_cast<int>(it - cdf.begin());
  if (k == 0) {
    return lo;
  }
  const double c0 = cdf[static_cast<std::size_t>(k - 1)];
  const double c1 = cdf[static_cast<std::size_t>(k)];
  const double frac = c1 > c0 ? (target - c0) / (c1 - c0) : 0.0;
  return lo + (k - 1 + frac) * step;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  // linear interpolation between order statistics
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto k = static_cast<std::size_t>(std::floor(h));
  if (k + 1 >= sorted.size()) {
    return sorted.back();
  }
  return sorted[k] + (h - static_cast<double>(k)) * (sorted[k + 1] - sorted[k]);
}

}  // namespace

std::vector<double> DensityGrid::point(std::size_t k) const {
  std::vector<double> x(axes.size());
  for (std::size_t j = axes.size(); j-- > 0;) {
    const auto& ax = axes[j];
    x[j] = ax[k % ax.size()];
    k /= ax.size();
  }
  return x;
}

void HdrSpec::validate() const {
  if (n_mc < 1000) {
    throw InvalidParams("HDR Monte-Carlo size must be >= 1000");
  }
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!(probs[i] > 0.0 && probs[i] < 1.0)) {
      throw InvalidParams("HDR probabilities must lie in (0, 1)");
    }
    if (i > 0 && !(probs[i] > probs[i - 1])) {
      throw InvalidParams("HDR probabilities must be sorted ascending");
    }
  }
}

double log_pdf(std::span<const double> point, const MixtureFit& fit) {
  return log_pdf_with(point, fit, components(fit.params));
}

double pdf(std::span<const double> point, const MixtureFit& fit) {
  return std::exp(log_pdf(point, fit));
}

Eigen::VectorXd pdf(const Eigen::MatrixXd& points, const MixtureFit& fit) {
  const auto comps = components(fit.params);
  Eigen::VectorXd out(points.rows());
  std::vector<double> row(static_cast<std::size_t>(points.cols()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
      row[static_cast<std::size_t>(j)] = points(i, j);
    }
    out(i) = std::exp(log_pdf_with(row, fit, comps));
  }
  return out;
}

Eigen::MatrixXd sample(int n, const MixtureFit& fit, std::uint64_t seed) {
  if (n < 1) {
    throw InvalidParams("sample size must be >= 1");
  }
  const auto p = static_cast<Eigen::Index>(fit.transform.dim());
  const auto comps = components(fit.params);
  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> pick(fit.params.weights.data(),
                                       fit.params.weights.data() + fit.params.weights.size());
  std::normal_distribution<double> normal(0.0, 1.0);

  Eigen::MatrixXd out(n, p);
  Eigen::VectorXd zv(p);
  int filled = 0;
  while (filled < n) {
    const int batch = std::max(n - filled, 256);
    int rejected = 0;
    for (int b = 0; b < batch && filled < n; ++b) {
      const auto& c = comps[static_cast<std::size_t>(pick(rng))];
      for (Eigen::Index j = 0; j < p; ++j) {
        zv(j) = normal(rng);
      }
      const Eigen::VectorXd y = c.mean() + c.chol() * zv;
      bool ok = true;
      for (Eigen::Index j = 0; j < p && ok; ++j) {
        const auto& bound = fit.transform.bounds[static_cast<std::size_t>(j)];
        try {
          const double x = inverse(y(j), bound, fit.transform.lambdas[static_cast<std::size_t>(j)]);
          ok = bound.contains(x);
          out(filled, j) = x;
        } catch (const RangeError&) {
          ok = false;
        }
      }
      if (ok) {
        ++filled;
      } else {
        ++rejected;
      }
    }
    if (2 * rejected > batch) {
      throw RejectionOverflow("more than half of a sampling batch had no preimage");
    }
  }
  return out;
}

double hdr_threshold(const MixtureFit& fit, double prob, int n_mc, std::uint64_t seed) {
  if (!(prob > 0.0 && prob < 1.0)) {
    throw InvalidParams("HDR probability must lie in (0, 1)");
  }
  if (n_mc < 1) {
    throw InvalidParams("n_mc must be >= 1");
  }
  const Eigen::MatrixXd draws = sample(n_mc, fit, seed);
  const Eigen::VectorXd dens = pdf(draws, fit);
  std::vector<double> sorted(dens.data(), dens.data() + dens.size());
  std::sort(sorted.begin(), sorted.end());
  return quantile_sorted(sorted, 1.0 - prob);
}

std::vector<double> hdr_thresholds(const MixtureFit& fit, const HdrSpec& spec, std::uint64_t seed) {
  spec.validate();
  const Eigen::MatrixXd draws = sample(spec.n_mc, fit, seed);
  const Eigen::VectorXd dens = pdf(draws, fit);
  std::vector<double> sorted(dens.data(), dens.data() + dens.size());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out;
  for (double pr : spec.probs) {
    out.push_back(quantile_sorted(sorted, 1.0 - pr));
  }
  return out;
}

double hdr_level(double density, const std::vector<double>& probs,
                 const std::vector<double>& thresholds) {
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (density >= thresholds[k]) {
      return probs[k];
    }
  }
  return 1.0;
}

double integrate_density(const DensityFn& density, const MixtureFit& fit, int resolution) {
  const auto p = fit.transform.dim();
  if (p > 3) {
    throw UnsupportedDimension("tensor-grid quadrature supports p <= 3");
  }
  if (resolution < 2) {
    throw InvalidParams("resolution must be >= 2");
  }
  std::vector<AxisMap> maps;
  std::vector<std::vector<double>> s_nodes(p);
  std::vector<std::vector<double>> x_nodes(p);
  std::vector<std::vector<double>> w_nodes(p);
  for (std::size_t j = 0; j < p; ++j) {
    maps.push_back(AxisMap{fit.transform.bounds[j]});
    const auto [lo, hi] = axis_window(fit, j, 1e-12);
    const double h = (hi - lo) / (resolution - 1);
    for (int k = 0; k < resolution; ++k) {
      const double s = lo + k * h;
      s_nodes[j].push_back(s);
      x_nodes[j].push_back(maps[j].to_x(s));
      const double trap = (k == 0 || k == resolution - 1) ? 0.5 : 1.0;
      w_nodes[j].push_back(trap * h * maps[j].dx_ds(s));
    }
  }

  std::vector<std::size_t> idx(p, 0);
  std::vector<double> x(p);
  double total = 0.0;
  const auto res = static_cast<std::size_t>(resolution);
  std::size_t count = 1;
  for (std::size_t j = 0; j < p; ++j) {
    count *= res;
  }
  for (std::size_t flat = 0; flat < count; ++flat) {
    std::size_t rem = flat;
    double w = 1.0;
    for (std::size_t j = p; j-- > 0;) {
      idx[j] = rem % res;
      rem /= res;
      x[j] = x_nodes[j][idx[j]];
      w *= w_nodes[j][idx[j]];
    }
    if (w > 0.0) {
      const double f = density(x);
      if (f > 0.0) {
        total += w * f;
      }
    }
  }
  return total;
}

double integrate_pdf(const MixtureFit& fit, int resolution) {
  const auto comps = components(fit.params);
  return integrate_density(
      [&](std::span<const double> x) { return std::exp(log_pdf_with(x, fit, comps)); }, fit,
      resolution);
}

std::vector<std::vector<double>> default_axes(const MixtureFit& fit, const std::vector<int>& n) {
  const auto p = fit.transform.dim();
  if (n.size() != p) {
    throw InvalidParams("need one grid size per variable");
  }
  std::vector<std::vector<double>> axes(p);
  for (std::size_t j = 0; j < p; ++j) {
    if (n[j] < 1) {
      throw InvalidParams("grid sizes must be >= 1");
    }
    const auto& b = fit.transform.bounds[j];
    const int m = n[j];
    double lo = 0.0;
    double hi = 0.0;
    if (b.kind == BoundSpec::Kind::Interval) {
      lo = b.lower;
      hi = b.upper;
      for (int k = 1; k <= m; ++k) {
        axes[j].push_back(lo + (hi - lo) * k / (m + 1));
      }
      continue;
    }
    const AxisMap map{b};
    if (b.kind == BoundSpec::Kind::Lower) {
      lo = b.lower;
      hi = map.to_x(axis_quantile(fit, j, 0.999));
      for (int k = 1; k <= m; ++k) {
        axes[j].push_back(lo + (hi - lo) * k / m);
      }
    } else {
      const auto [s_lo, s_hi] = axis_window(fit, j, 1e-6);
      lo = map.to_x(s_lo);
      hi = map.to_x(s_hi);
      for (int k = 0; k < m; ++k) {
        axes[j].push_back(m == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * k / (m - 1));
      }
    }
  }
  return axes;
}

DensityGrid evaluate_grid(const MixtureFit& fit, std::vector<std::vector<double>> axes) {
  if (axes.size() != fit.transform.dim()) {
    throw InvalidParams("need one axis per variable");
  }
  DensityGrid grid;
  grid.axes = std::move(axes);
  std::size_t count = 1;
  for (const auto& ax : grid.axes) {
    if (ax.empty()) {
      throw InvalidParams("grid axes must be non-empty");
    }
    count *= ax.size();
  }
  const auto comps = components(fit.params);
  grid.values.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    const auto x = grid.point(k);
    grid.values[k] = std::exp(log_pdf_with(x, fit, comps));
  }
  return grid;
}

void write_density_csv(std::ostream& os, const DensityGrid& grid,
                       const std::vector<std::string>& names) {
  const auto p = grid.axes.size();
  for (std::size_t j = 0; j < p; ++j) {
    os << (j < names.size() ? names[j] : "x" + std::to_string(j + 1)) << ',';
  }
  os << "density";
  const bool with_hdr = !grid.hdr_levels.empty();
  if (with_hdr) {
    os << ",hdr";
  }
  os << '\n' << std::setprecision(15);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto x = grid.point(k);
    for (double v : x) {
      os << v << ',';
    }
    os << grid.values[k];
    if (with_hdr) {
      os << ',' << grid.hdr_levels[k];
    }
    os << '\n';
  }
}

}  // namespace gmdeb
