#include "gmdeb/bench.hpp"

#include "gmdeb/density.hpp"
#include "gmdeb/errors.hpp"
#include "gmdeb/parallel.hpp"
#include "gmdeb/seeding.hpp"

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/lognormal.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace gmdeb {

namespace {

namespace bm = boost::math;

void require(bool ok, const std::string& what) {
  if (!ok) {
    throw InvalidParams(what);
  }
}

// Wraps a boost distribution whose support is given explicitly.
template <class Law>
class BoostLaw final : public Distribution {
 public:
  BoostLaw(std::string name, Law law, BoundSpec support,
           std::function<double(std::mt19937_64&)> drawer)
      : name_(std::move(name)), law_(law), support_(support), drawer_(std::move(drawer)) {}

  std::string name() const override { return name_; }
  BoundSpec support() const override { return support_; }
  double pdf(double x) const override {
    if (support_.bounded() && !support_.contains(x)) {
      return 0.0;
    }
    return bm::pdf(law_, x);
  }
  double cdf(double x) const override {
    if (support_.bounded() && x <= support_.lower) {
      return 0.0;
    }
    if (support_.kind == BoundSpec::Kind::Interval && x >= support_.upper) {
      return 1.0;
    }
    return bm::cdf(law_, x);
  }
  double quantile(double q) const override { return bm::quantile(law_, q); }
  double draw(std::mt19937_64& rng) const override { return drawer_(rng); }

 private:
  std::string name_;
  Law law_;
  BoundSpec support_;
  std::function<double(std::mt19937_64&)> drawer_;
};

// Gompertz with hazard b * exp(a x): f(x) = b exp(a x) exp(-(b/a)(exp(a x) - 1)).
class Gompertz final : public Distribution {
 public:
  Gompertz(double shape, double rate) : a_(shape), b_(rate) {}

  std::string name() const override { return "gompertz"; }
  BoundSpec support() const override { return BoundSpec::lower_bound(0.0); }
  double pdf(double x) const override {
    if (!(x > 0.0)) {
      return 0.0;
    }
    return b_ * std::exp(a_ * x - (b_ / a_) * std::expm1(a_ * x));
  }
  double cdf(double x) const override {
    if (!(x > 0.0)) {
      return 0.0;
    }
    return -std::expm1(-(b_ / a_) * std::expm1(a_ * x));
  }
  double quantile(double q) const override {
    return std::log1p(-(a_ / b_) * std::log1p(-q)) / a_;
  }
  double draw(std::mt19937_64& rng) const override {
    return quantile(std::uniform_real_distribution<double>(0.0, 1.0)(rng));
  }

 private:
  double a_;
  double b_;
};

// f(x) = a b x^(a-1) (1 - x^a)^(b-1) on (0, 1).
class Kumaraswamy final : public Distribution {
 public:
  Kumaraswamy(double a, double b) : a_(a), b_(b) {}

  std::string name() const override { return "kumaraswamy"; }
  BoundSpec support() const override { return BoundSpec::interval(0.0, 1.0); }
  double pdf(double x) const override {
    if (!(x > 0.0 && x < 1.0)) {
      return 0.0;
    }
    return a_ * b_ * std::pow(x, a_ - 1.0) * std::pow(1.0 - std::pow(x, a_), b_ - 1.0);
  }
  double cdf(double x) const override {
    if (!(x > 0.0)) {
      return 0.0;
    }
    if (x >= 1.0) {
      return 1.0;
    }
    return 1.0 - std::pow(1.0 - std::pow(x, a_), b_);
  }
  double quantile(double q) const override {
    return std::pow(1.0 - std::pow(1.0 - q, 1.0 / b_), 1.0 / a_);
  }
  double draw(std::mt19937_64& rng) const override {
    return quantile(std::uniform_real_distribution<double>(0.0, 1.0)(rng));
  }

 private:
  double a_;
  double b_;
};

// f(x) = -log x on (0, 1); the product of two independent uniforms.
class LogPeak final : public Distribution {
 public:
  std::string name() const override { return "logpeak"; }
  BoundSpec support() const override { return BoundSpec::interval(0.0, 1.0); }
  double pdf(double x) const override { return (x > 0.0 && x < 1.0) ? -std::log(x) : 0.0; }
  double cdf(double x) const override {
    if (!(x > 0.0)) {
      return 0.0;
    }
    if (x >= 1.0) {
      return 1.0;
    }
    return x - x * std::log(x);
  }
  double quantile(double q) const override {
    // F is increasing on (0, 1); bisection to machine precision
    double lo = 0.0;
    double hi = 1.0;
    for (int i = 0; i < 200 && hi - lo > 1e-300; ++i) {
      const double mid = 0.5 * (lo + hi);
      (cdf(mid) < q ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }
  double draw(std::mt19937_64& rng) const override {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double v = 0.0;
    while (!(v > 0.0)) {
      v = u(rng) * u(rng);
    }
    return v;
  }
};

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(15) << v;
  return os.str();
}

double quartile(std::vector<double> v, double q) {
  if (v.empty()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto k = static_cast<std::size_t>(std::floor(h));
  if (k + 1 >= v.size()) {
    return v.back();
  }
  return v[k] + (h - static_cast<double>(k)) * (v[k + 1] - v[k]);
}

}  // namespace

Eigen::VectorXd Distribution::draw_n(int n, std::mt19937_64& rng) const {
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) {
    out(i) = draw(rng);
  }
  return out;
}

std::shared_ptr<const Distribution> reference(const std::string& name,
                                              const std::vector<double>& params) {
  auto nparams = [&](std::size_t k) {
    require(params.size() == k, name + " expects " + std::to_string(k) + " parameter(s)");
  };
  auto positive = [&] {
    for (double v : params) {
      require(std::isfinite(v) && v > 0.0, name + " parameters must be positive");
    }
  };

  if (name == "normal") {
    nparams(2);
    require(std::isfinite(params[0]) && params[1] > 0.0, "normal needs finite mean and sd > 0");
    const double m = params[0];
    const double s = params[1];
    return std::make_shared<BoostLaw<bm::normal>>(
        name, bm::normal(m, s), BoundSpec::unbounded(),
        [m, s](std::mt19937_64& rng) { return std::normal_distribution<double>(m, s)(rng); });
  }
  if (name == "lognormal") {
    nparams(2);
    require(std::isfinite(params[0]) && params[1] > 0.0, "lognormal needs finite meanlog and sdlog > 0");
    const double m = params[0];
    const double s = params[1];
    return std::make_shared<BoostLaw<bm::lognormal>>(
        name, bm::lognormal(m, s), BoundSpec::lower_bound(0.0),
        [m, s](std::mt19937_64& rng) { return std::lognormal_distribution<double>(m, s)(rng); });
  }
  if (name == "chi2") {
    nparams(1);
    positive();
    const double df = params[0];
    return std::make_shared<BoostLaw<bm::chi_squared>>(
        name, bm::chi_squared(df), BoundSpec::lower_bound(0.0),
        [df](std::mt19937_64& rng) { return std::chi_squared_distribution<double>(df)(rng); });
  }
  if (name == "gamma") {
    nparams(2);
    positive();
    const double k = params[0];
    const double theta = params[1];
    return std::make_shared<BoostLaw<bm::gamma_distribution<>>>(
        name, bm::gamma_distribution<>(k, theta), BoundSpec::lower_bound(0.0),
        [k, theta](std::mt19937_64& rng) { return std::gamma_distribution<double>(k, theta)(rng); });
  }
  if (name == "gompertz") {
    nparams(2);
    positive();
    return std::make_shared<Gompertz>(params[0], params[1]);
  }
  if (name == "beta") {
    nparams(2);
    positive();
    const double a = params[0];
    const double b = params[1];
    return std::make_shared<BoostLaw<bm::beta_distribution<>>>(
        name, bm::beta_distribution<>(a, b), BoundSpec::interval(0.0, 1.0),
        [a, b](std::mt19937_64& rng) {
          for (;;) {
            const double x = std::gamma_distribution<double>(a, 1.0)(rng);
            const double y = std::gamma_distribution<double>(b, 1.0)(rng);
            const double v = x / (x + y);
            if (v > 0.0 && v < 1.0) {
              return v;
            }
          }
        });
  }
  if (name == "kumaraswamy") {
    nparams(2);
    positive();
    return std::make_shared<Kumaraswamy>(params[0], params[1]);
  }
  if (name == "logpeak") {
    nparams(0);
    return std::make_shared<LogPeak>();
  }
  throw UnknownDistribution("unknown reference distribution '" + name + "'");
}

double total_mass(const Distribution& dist) {
  const BoundSpec s = dist.support();
  auto f = [&](double x) { return dist.pdf(x); };
  switch (s.kind) {
    case BoundSpec::Kind::Interval: {
      bm::quadrature::tanh_sinh<double> q;
      return q.integrate(f, s.lower, s.upper);
    }
    case BoundSpec::Kind::Lower: {
      bm::quadrature::exp_sinh<double> q;
      return q.integrate([&](double t) { return dist.pdf(s.lower + t); }, 0.0,
                         std::numeric_limits<double>::infinity());
    }
    case BoundSpec::Kind::Unbounded: {
      bm::quadrature::sinh_sinh<double> q;
      return q.integrate(f);
    }
  }
  return 0.0;
}

void Scenario::validate() const {
  if (!law) {
    throw InvalidParams("scenario '" + name + "' has no distribution");
  }
  if (replications < 1) {
    throw InvalidParams("scenario '" + name + "' needs replications >= 1");
  }
  if (n < 2) {
    throw InvalidParams("scenario '" + name + "' needs n >= 2");
  }
  const double mass = total_mass(*law);
  if (!(std::abs(mass - 1.0) <= 1e-6)) {
    throw InvalidParams("scenario '" + name + "' density integrates to " + format_double(mass));
  }
}

double ise(const ScalarFn& estimated, const ScalarFn& truth, double a, double b, int resolution) {
  if (!(b > a) || resolution < 1) {
    throw InvalidParams("ise needs a < b and resolution >= 1");
  }
  const double h = (b - a) / (resolution + 1);
  double sum = 0.0;
  double prev = 0.0;
  for (int k = 1; k <= resolution; ++k) {
    const double x = a + k * h;
    const double fe = estimated(x);
    const double ft = truth(x);
    if (!std::isfinite(fe) || !std::isfinite(ft)) {
      throw NonFinite("density is not finite at x = " + format_double(x));
    }
    const double d = (fe - ft) * (fe - ft);
    if (k == 1) {
      sum += d * h;  // end cell [a, x_1]
    } else {
      sum += 0.5 * (prev + d) * h;
    }
    if (k == resolution) {
      sum += d * h;  // end cell [x_R, b]
    }
    prev = d;
  }
  return sum;
}

double ise(const ScalarFn& estimated, const Distribution& truth, int resolution) {
  const BoundSpec s = truth.support();
  auto f = [&](double x) { return truth.pdf(x); };
  switch (s.kind) {
    case BoundSpec::Kind::Interval:
      return ise(estimated, f, s.lower, s.upper, resolution);
    case BoundSpec::Kind::Lower:
      return ise(estimated, f, s.lower, truth.quantile(1.0 - 1e-8), resolution);
    case BoundSpec::Kind::Unbounded:
      return ise(estimated, f, truth.quantile(1e-8), truth.quantile(1.0 - 1e-8), resolution);
  }
  return 0.0;
}

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::GMDEB:
      return "GMDEB";
    case Estimator::GMDE:
      return "GMDE";
    case Estimator::GMDEB_FIXED:
      return "GMDEB-fixed";
  }
  return "?";
}

std::optional<Estimator> parse_estimator(const std::string& name) {
  for (auto e : {Estimator::GMDEB, Estimator::GMDE, Estimator::GMDEB_FIXED}) {
    if (to_string(e) == name) {
      return e;
    }
  }
  return std::nullopt;
}

const CellSummary* BenchmarkReport::cell(const std::string& scenario, Estimator e) const {
  for (const auto& c : summary) {
    if (c.scenario == scenario && c.estimator == e) {
      return &c;
    }
  }
  return nullptr;
}

std::uint64_t replication_seed(std::uint64_t scenario_seed, int rep) {
  return mix_seed(scenario_seed, static_cast<std::uint64_t>(rep));
}

std::uint64_t hash_sample(const Eigen::VectorXd& x) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    std::uint64_t bits = 0;
    const double v = x(i);
    std::memcpy(&bits, &v, sizeof bits);
    h = mix_seed(h, bits);
  }
  return h;
}

BenchmarkReport run_benchmark(const std::vector<Scenario>& scenarios,
                              const std::vector<Estimator>& estimators, const BenchOptions& opts) {
  if (scenarios.empty() || estimators.empty()) {
    throw InvalidParams("benchmark needs at least one scenario and one estimator");
  }
  for (const auto& s : scenarios) {
    s.validate();
  }

  struct Task {
    std::size_t scenario;
    int rep;
  };
  std::vector<Task> tasks;
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    for (int r = 0; r < scenarios[s].replications; ++r) {
      tasks.push_back({s, r});
    }
  }
  std::vector<std::vector<BenchRow>> slots(tasks.size());

  parallel_for(tasks.size(), opts.jobs, [&](std::size_t k) {
    const Scenario& sc = scenarios[tasks[k].scenario];
    const int rep = tasks[k].rep;
    const std::uint64_t seed = replication_seed(sc.seed, rep);
    std::mt19937_64 rng(seed);
    const Eigen::VectorXd x = sc.law->draw_n(sc.n, rng);
    const Eigen::MatrixXd data = x;
    const std::uint64_t dhash = hash_sample(x);

    SelectionGrid grid;
    grid.g_range = opts.g_range;
    grid.models = models_for_dimension(1);
    FitOptions fopts = opts.fit;
    fopts.seed = seed;

    std::optional<std::vector<double>> lambda_mle;
    for (Estimator est : estimators) {
      BenchRow row;
      row.scenario = sc.name;
      row.estimator = est;
      row.rep = rep;
      row.seed = seed;
      row.data_hash = dhash;
      try {
        std::vector<BoundSpec> bounds{sc.law->support()};
        FitOptions local = fopts;
        if (est == Estimator::GMDE) {
          bounds = {BoundSpec::unbounded()};
        } else if (est == Estimator::GMDEB_FIXED) {
          if (!lambda_mle) {
            // untimed preliminary fit supplies the lambda estimate
            const SelectionReport pre = select(data, bounds, grid, fopts, opts.select_jobs);
            lambda_mle = pre.best_fit().transform.lambdas;
          }
          local.lambda_fixed = lambda_mle;
        }
        const auto t0 = std::chrono::steady_clock::now();
        const SelectionReport rep_sel = select(data, bounds, grid, local, opts.select_jobs);
        const auto t1 = std::chrono::steady_clock::now();
        const MixtureFit& best = rep_sel.best_fit();
        if (est == Estimator::GMDEB) {
          lambda_mle = best.transform.lambdas;
        }
        row.fit_seconds = opts.timing ? std::chrono::duration<double>(t1 - t0).count() : 0.0;
        row.G = best.G;
        row.model = std::string(to_string(best.model));
        row.ise = ise([&](double v) { return pdf(std::span<const double>(&v, 1), best); }, *sc.law,
                      opts.resolution);
      } catch (const std::exception& e) {
        row.failure = e.what();
        row.ise = std::numeric_limits<double>::quiet_NaN();
      }
      slots[k].push_back(std::move(row));
    }
  });

  BenchmarkReport report;
  for (auto& s : slots) {
    for (auto& r : s) {
      report.rows.push_back(std::move(r));
    }
  }
  for (const auto& sc : scenarios) {
    for (Estimator est : estimators) {
      CellSummary cell;
      cell.scenario = sc.name;
      cell.estimator = est;
      std::vector<double> ises;
      std::vector<double> secs;
      for (const auto& r : report.rows) {
        if (r.scenario != sc.name || r.estimator != est) {
          continue;
        }
        if (r.failure.empty()) {
          ++cell.n_ok;
          ises.push_back(r.ise);
          secs.push_back(r.fit_seconds);
        } else {
          ++cell.n_failed;
        }
      }
      cell.ise_q1 = quartile(ises, 0.25);
      cell.ise_median = quartile(ises, 0.5);
      cell.ise_q3 = quartile(ises, 0.75);
      cell.seconds_median = quartile(secs, 0.5);
      report.summary.push_back(cell);
    }
  }
  return report;
}

void write_report_csv(std::ostream& os, const BenchmarkReport& report) {
  os << "scenario,estimator,rep,seed,ise,fit_seconds\n" << std::setprecision(15);
  for (const auto& r : report.rows) {
    os << r.scenario << ',' << to_string(r.estimator) << ',' << r.rep << ',' << r.seed << ',';
    if (r.failure.empty()) {
      os << r.ise;
    } else {
      os << "nan";
    }
    os << ',' << r.fit_seconds << '\n';
  }
}

void write_summary_json(std::ostream& os, const BenchmarkReport& report) {
  nlohmann::ordered_json cells = nlohmann::ordered_json::array();
  for (const auto& c : report.summary) {
    nlohmann::ordered_json j;
    j["scenario"] = c.scenario;
    j["estimator"] = to_string(c.estimator);
    j["n_ok"] = c.n_ok;
    j["n_failed"] = c.n_failed;
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nullptr; };
    j["ise_q1"] = num(c.ise_q1);
    j["ise_median"] = num(c.ise_median);
    j["ise_q3"] = num(c.ise_q3);
    j["fit_seconds_median"] = num(c.seconds_median);
    cells.push_back(std::move(j));
  }
  nlohmann::ordered_json root;
  root["cells"] = std::move(cells);
  os << root.dump(2) << '\n';
}

}  // namespace gmdeb
