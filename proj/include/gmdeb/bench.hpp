#pragma once

// Simulation harness: reference laws, integrated squared error, and the
// paired replication runner comparing the bounded estimator against a plain
// Gaussian mixture on the original scale.

#include "gmdeb/emfit.hpp"
#include "gmdeb/modelselect.hpp"
#include "gmdeb/transform.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace gmdeb {

//! A univariate reference law with closed-form density.
class Distribution {
 public:
  virtual ~Distribution() = default;

  virtual std::string name() const = 0;
  virtual BoundSpec support() const = 0;
  virtual double pdf(double x) const = 0;
  virtual double cdf(double x) const = 0;
  virtual double quantile(double q) const = 0;
  virtual double draw(std::mt19937_64& rng) const = 0;

  Eigen::VectorXd draw_n(int n, std::mt19937_64& rng) const;
};

//! Known names: normal(mean, sd), lognormal(meanlog, sdlog), chi2(df),
//! gamma(shape, scale), gompertz(shape, rate), beta(a, b),
//! kumaraswamy(a, b), logpeak().
std::shared_ptr<const Distribution> reference(const std::string& name,
                                              const std::vector<double>& params);

//! Integral of `f` over its support by adaptive double-exponential
//! quadrature (independent of the trapezoidal rules used elsewhere).
double total_mass(const Distribution& dist);

struct Scenario {
  std::string name;
  std::shared_ptr<const Distribution> law;
  int n = 200;
  int replications = 100;
  std::uint64_t seed = 1;

  //! Checks replications >= 1, n >= 2 and that the law integrates to one.
  void validate() const;
};

using ScalarFn = std::function<double(double)>;

//! Trapezoidal integral of (f_hat - f)^2 over [a, b] using `resolution`
//! interior nodes; the two end cells take the value at their interior node,
//! so the endpoints themselves are never evaluated.
double ise(const ScalarFn& estimated, const ScalarFn& truth, double a, double b, int resolution);

//! ISE over the law's support; lower-bounded supports are cut at the
//! 1 - 1e-8 quantile, unbounded ones at the 1e-8 and 1 - 1e-8 quantiles.
double ise(const ScalarFn& estimated, const Distribution& truth, int resolution = 8192);

enum class Estimator {
  GMDEB,        //!< bounded mixture, lambda estimated
  GMDE,         //!< plain Gaussian mixture on the original scale
  GMDEB_FIXED,  //!< bounded mixture with lambda fixed at its estimate
};

std::string to_string(Estimator e);
std::optional<Estimator> parse_estimator(const std::string& name);

struct BenchOptions {
  FitOptions fit;
  std::vector<int> g_range{1, 2, 3, 4, 5, 6, 7, 8, 9};
  int resolution = 8192;
  //! Worker threads across replications.
  int jobs = 1;
  //! Threads used inside each model selection.
  int select_jobs = 1;
  //! Record wall-clock fit times; when false fit_seconds is written as 0 so
  //! reports are byte-reproducible.
  bool timing = true;
};

struct BenchRow {
  std::string scenario;
  Estimator estimator = Estimator::GMDEB;
  int rep = 0;
  std::uint64_t seed = 0;
  double ise = 0.0;
  double fit_seconds = 0.0;
  std::uint64_t data_hash = 0;
  int G = 0;
  std::string model;
  //! Empty on success.
  std::string failure;
};

struct CellSummary {
  std::string scenario;
  Estimator estimator = Estimator::GMDEB;
  int n_ok = 0;
  int n_failed = 0;
  double ise_q1 = 0.0;
  double ise_median = 0.0;
  double ise_q3 = 0.0;
  double seconds_median = 0.0;
};

struct BenchmarkReport {
  std::vector<BenchRow> rows;
  std::vector<CellSummary> summary;

  const CellSummary* cell(const std::string& scenario, Estimator e) const;
};

std::uint64_t replication_seed(std::uint64_t scenario_seed, int rep);
std::uint64_t hash_sample(const Eigen::VectorXd& x);

BenchmarkReport run_benchmark(const std::vector<Scenario>& scenarios,
                              const std::vector<Estimator>& estimators, const BenchOptions& opts);

//! Header `scenario,estimator,rep,seed,ise,fit_seconds`; failed rows carry
//! `nan` ISE.
void write_report_csv(std::ostream& os, const BenchmarkReport& report);
void write_summary_json(std::ostream& os, const BenchmarkReport& report);

}  // namespace gmdeb
