#include "gmdeb/transform.hpp"

#include "gmdeb/errors.hpp"

#include <cmath>
#include <sstream>

namespace gmdeb {

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw NonFinite(std::string("non-finite ") + what);
  }
}

// Log of the range-mapped value: log(x - l) or log((x - l)/(u - x)).
double log_range(double x, const BoundSpec& b) {
  require_finite(x, "input value");
  if (!b.contains(x)) {
    std::ostringstream os;
    os.precision(15);
    os << "value " << x << " is outside the support " << b.describe();
    throw DomainError(os.str());
  }
  if (b.kind == BoundSpec::Kind::Lower) {
    return std::log(x - b.lower);
  }
  return std::log(x - b.lower) - std::log(b.upper - x);
}

bool is_zero(double lambda) { return std::abs(lambda) < kLambdaZeroThreshold; }

}  // namespace

BoundSpec BoundSpec::lower_bound(double l) {
  if (!std::isfinite(l)) {
    throw InvalidParams("lower bound must be finite");
  }
  return {Kind::Lower, l, 0.0};
}

BoundSpec BoundSpec::interval(double l, double u) {
  if (!std::isfinite(l) || !std::isfinite(u)) {
    throw InvalidParams("interval bounds must be finite");
  }
  if (!(l < u)) {
    throw InvalidParams("interval requires lower < upper");
  }
  return {Kind::Interval, l, u};
}

bool BoundSpec::contains(double x) const {
  switch (kind) {
    case Kind::Unbounded:
      return std::isfinite(x);
    case Kind::Lower:
      return x > lower && std::isfinite(x);
    case Kind::Interval:
      return x > lower && x < upper;
  }
  return false;
}

std::string BoundSpec::describe() const {
  std::ostringstream os;
  os.precision(15);
  switch (kind) {
    case Kind::Unbounded:
      os << "(-inf, inf)";
      break;
    case Kind::Lower:
      os << "(" << lower << ", inf)";
      break;
    case Kind::Interval:
      os << "(" << lower << ", " << upper << ")";
      break;
  }
  return os.str();
}

TransformParams::TransformParams(std::vector<double> l, std::vector<BoundSpec> b)
    : lambdas(std::move(l)), bounds(std::move(b)) {
  if (lambdas.size() != bounds.size() || bounds.empty()) {
    throw InvalidParams("lambdas and bounds must be non-empty and of equal length");
  }
  for (double v : lambdas) {
    if (!std::isfinite(v)) {
      throw InvalidParams("lambda must be finite");
    }
  }
}

std::size_t TransformParams::n_active() const {
  std::size_t k = 0;
  for (const auto& b : bounds) {
    k += b.bounded() ? 1 : 0;
  }
  return k;
}

double forward(double x, const BoundSpec& bound, double lambda) {
  require_finite(lambda, "lambda");
  if (bound.kind == BoundSpec::Kind::Unbounded) {
    require_finite(x, "input value");
    return x;
  }
  const double lr = log_range(x, bound);
  if (is_zero(lambda)) {
    return lr;
  }
  return std::expm1(lambda * lr) / lambda;
}

double derivative(double x, const BoundSpec& bound, double lambda) {
  require_finite(lambda, "lambda");
  switch (bound.kind) {
    case BoundSpec::Kind::Unbounded:
      require_finite(x, "input value");
      return 1.0;
    case BoundSpec::Kind::Lower: {
      const double lr = log_range(x, bound);
      return std::exp((lambda - 1.0) * lr);
    }
    case BoundSpec::Kind::Interval: {
      const double lr = log_range(x, bound);
      if (is_zero(lambda)) {
        return 1.0 / (x - bound.lower) + 1.0 / (bound.upper - x);
      }
      const double ux = bound.upper - x;
      return std::exp((lambda - 1.0) * lr) * (bound.upper - bound.lower) / (ux * ux);
    }
  }
  return 1.0;
}

double log_derivative(double x, const BoundSpec& bound, double lambda) {
  require_finite(lambda, "lambda");
  switch (bound.kind) {
    case BoundSpec::Kind::Unbounded:
      require_finite(x, "input value");
      return 0.0;
    case BoundSpec::Kind::Lower:
      return (lambda - 1.0) * log_range(x, bound);
    case BoundSpec::Kind::Interval: {
      const double lr = log_range(x, bound);
      return (lambda - 1.0) * lr + std::log(bound.upper - bound.lower) - 2.0 * std::log(bound.upper - x);
    }
  }
  return 0.0;
}

double inverse(double y, const BoundSpec& bound, double lambda) {
  require_finite(y, "transformed value");
  require_finite(lambda, "lambda");
  if (bound.kind == BoundSpec::Kind::Unbounded) {
    return y;
  }
  // log of the range-mapped value r
  double log_r = y;
  if (!is_zero(lambda)) {
    const double base = lambda * y;
    if (!(base > -1.0)) {
      throw RangeError("lambda*y + 1 <= 0: transformed value has no preimage");
    }
    log_r = std::log1p(base) / lambda;
  }
  if (bound.kind == BoundSpec::Kind::Lower) {
    return bound.lower + std::exp(log_r);
  }
  const double width = bound.upper - bound.lower;
  if (log_r > 0.0) {
    // r > 1: measure from the upper end to keep precision there
    return bound.upper - width / (1.0 + std::exp(log_r));
  }
  const double r = std::exp(log_r);
  return bound.lower + width * r / (1.0 + r);
}

double log_jacobian(std::span<const double> x, const TransformParams& params) {
  if (x.size() != params.dim()) {
    throw InvalidParams("point dimension does not match transform dimension");
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    try {
      sum += log_derivative(x[j], params.bounds[j], params.lambdas[j]);
    } catch (const DomainError& e) {
      throw DomainError(e.what(), std::nullopt, j);
    }
  }
  return sum;
}

Eigen::MatrixXd transform_rows(const Eigen::MatrixXd& data, const TransformParams& params) {
  const auto p = static_cast<Eigen::Index>(params.dim());
  if (data.cols() != p) {
    throw InvalidParams("data dimension does not match transform dimension");
  }
  Eigen::MatrixXd out(data.rows(), p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto& b = params.bounds[static_cast<std::size_t>(j)];
    const double lam = params.lambdas[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      try {
        out(i, j) = forward(data(i, j), b, lam);
      } catch (const DomainError& e) {
        throw DomainError(e.what(), static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      }
    }
  }
  return out;
}

Eigen::VectorXd log_jacobian_rows(const Eigen::MatrixXd& data, const TransformParams& params) {
  const auto p = static_cast<Eigen::Index>(params.dim());
  if (data.cols() != p) {
    throw InvalidParams("data dimension does not match transform dimension");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(data.rows());
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto& b = params.bounds[static_cast<std::size_t>(j)];
    if (!b.bounded()) {
      continue;
    }
    const double lam = params.lambdas[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      try {
        out(i) += log_derivative(data(i, j), b, lam);
      } catch (const DomainError& e) {
        throw DomainError(e.what(), static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      }
    }
  }
  return out;
}

void check_support(const Eigen::MatrixXd& data, std::span<const BoundSpec> bounds) {
  if (static_cast<std::size_t>(data.cols()) != bounds.size()) {
    throw InvalidParams("data dimension does not match number of bounds");
  }
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    const auto& b = bounds[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      const double v = data(i, j);
      if (!std::isfinite(v)) {
        throw NonFinite("non-finite value at row " + std::to_string(i) + ", column " +
                        std::to_string(j));
      }
      if (!b.contains(v)) {
        std::ostringstream os;
        os.precision(15);
        os << "value " << v << " at row " << i << ", column " << j << " is outside the support "
           << b.describe();
        throw DomainError(os.str(), static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      }
    }
  }
}

}  // namespace gmdeb
