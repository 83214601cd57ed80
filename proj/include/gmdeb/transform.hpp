#pragma once

// Coordinate-wise range-power transformations.
//
// A bounded variable is first mapped onto the positive half-line, by
// (x - l) for a lower bound or (x - l)/(u - x) for an interval, and then
// Box-Cox transformed with its own power parameter lambda. Unbounded
// variables pass through unchanged.

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace gmdeb {

//! Support of a single variable.
struct BoundSpec {
  enum class Kind { Unbounded, Lower, Interval };

  Kind kind = Kind::Unbounded;
  double lower = 0.0;
  double upper = 0.0;

  static BoundSpec unbounded() { return {}; }
  static BoundSpec lower_bound(double l);
  static BoundSpec interval(double l, double u);

  bool bounded() const { return kind != Kind::Unbounded; }
  //! True when x lies strictly inside the support.
  bool contains(double x) const;
  std::string describe() const;

  friend bool operator==(const BoundSpec&, const BoundSpec&) = default;
};

//! Per-variable power parameters together with the supports they act on.
struct TransformParams {
  std::vector<double> lambdas;
  std::vector<BoundSpec> bounds;

  TransformParams() = default;
  TransformParams(std::vector<double> lambdas, std::vector<BoundSpec> bounds);

  std::size_t dim() const { return bounds.size(); }
  //! Number of coordinates whose lambda actually enters the transform.
  std::size_t n_active() const;
};

//! Lambdas with magnitude below this use the logarithmic branch.
inline constexpr double kLambdaZeroThreshold = 1e-10;
//! Admissible lambda range used by the estimators.
inline constexpr double kLambdaMin = -3.0;
inline constexpr double kLambdaMax = 3.0;

double forward(double x, const BoundSpec& bound, double lambda);
double derivative(double x, const BoundSpec& bound, double lambda);
//! log t'(x; lambda), computed without forming t' (finite where t'
//! overflows or underflows).
double log_derivative(double x, const BoundSpec& bound, double lambda);
double inverse(double y, const BoundSpec& bound, double lambda);

//! Sum over coordinates of log t'(x_j; lambda_j). DomainError carries the
//! offending column.
double log_jacobian(std::span<const double> x, const TransformParams& params);

//! Row-wise transform of an n x p data matrix.
Eigen::MatrixXd transform_rows(const Eigen::MatrixXd& data, const TransformParams& params);

//! Per-row log-Jacobian of an n x p data matrix.
Eigen::VectorXd log_jacobian_rows(const Eigen::MatrixXd& data, const TransformParams& params);

//! Throws DomainError (with row and column) if any value falls on or outside
//! its support, NonFinite for NaN/inf entries.
void check_support(const Eigen::MatrixXd& data, std::span<const BoundSpec> bounds);

}  // namespace gmdeb
