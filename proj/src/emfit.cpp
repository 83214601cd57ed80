#include "gmdeb/emfit.hpp"

#include "gmdeb/errors.hpp"
#include "gmdeb/kmeans.hpp"
#include "gmdeb/modelselect.hpp"
#include "gmdeb/optim.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace gmdeb {

namespace {

constexpr double kGridLo = -2.0;
constexpr double kGridHi = 2.0;
constexpr double kGridStep = 0.25;

std::vector<GaussianComponent> components(const MixtureParams& params) {
  std::vector<GaussianComponent> out;
  out.reserve(static_cast<std::size_t>(params.n_components()));
  for (int g = 0; g < params.n_components(); ++g) {
    out.emplace_back(params.means[static_cast<std::size_t>(g)],
                     params.covariances[static_cast<std::size_t>(g)]);
  }
  return out;
}

// n x G matrix of log pi_g + log phi(y_i; mu_g, Sigma_g).
Eigen::MatrixXd weighted_log_densities(const Eigen::MatrixXd& y, const MixtureParams& params,
                                       const std::vector<GaussianComponent>& comps) {
  const auto G = params.n_components();
  Eigen::MatrixXd out(y.rows(), G);
  for (int g = 0; g < G; ++g) {
    const double lw = std::log(params.weights(g));
    const auto& c = comps[static_cast<std::size_t>(g)];
    out.col(g) = c.log_density_rows(y).array() + lw;
  }
  return out;
}

std::vector<std::size_t> active_coordinates(const TransformParams& t) {
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < t.dim(); ++j) {
    if (t.bounds[j].bounded()) {
      idx.push_back(j);
    }
  }
  return idx;
}

double column_profile_loglik(const Eigen::VectorXd& x, const BoundSpec& bound, double lambda) {
  const auto n = static_cast<double>(x.size());
  double mean = 0.0;
  double log_jac = 0.0;
  Eigen::VectorXd y(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    y(i) = forward(x(i), bound, lambda);
    log_jac += std::log(derivative(x(i), bound, lambda));
    mean += y(i);
  }
  mean /= n;
  const double var = (y.array() - mean).square().sum() / n;
  if (!(var > 0.0) || !std::isfinite(var)) {
    return -std::numeric_limits<double>::infinity();
  }
  return -0.5 * n * (std::log(2.0 * std::numbers::pi * var) + 1.0) + log_jac;
}

// Log-range values of the bounded columns, which stay fixed while lambda
// varies. With r = log_range(x), t(x; lambda) = expm1(lambda r) / lambda and
// log t'(x; lambda) = (lambda - 1) r + c(x), where c does not depend on lambda.
class LambdaPath {
 public:
  LambdaPath(const Eigen::MatrixXd& data, const std::vector<BoundSpec>& bounds)
      : data_(data), bounds_(bounds), lr_(data.rows(), data.cols()), lr_sum_(data.cols()) {
    lr_sum_.setZero();
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
      const auto& b = bounds[static_cast<std::size_t>(j)];
      if (!b.bounded()) {
        continue;
      }
      for (Eigen::Index i = 0; i < data.rows(); ++i) {
        const double r = forward(data(i, j), b, 0.0);
        lr_(i, j) = r;
        jac_const_ += std::log(derivative(data(i, j), b, 0.0)) + r;
      }
      lr_sum_(j) = lr_.col(j).sum();
    }
  }

  Eigen::MatrixXd transform(const std::vector<double>& lambdas) const {
    Eigen::MatrixXd y = data_;
    for (Eigen::Index j = 0; j < data_.cols(); ++j) {
      if (!bounds_[static_cast<std::size_t>(j)].bounded()) {
        continue;
      }
      const double lam = lambdas[static_cast<std::size_t>(j)];
      if (std::abs(lam) < kLambdaZeroThreshold) {
        y.col(j) = lr_.col(j);
      } else {
        for (Eigen::Index i = 0; i < data_.rows(); ++i) {
          y(i, j) = std::expm1(lam * lr_(i, j)) / lam;
        }
      }
    }
    return y;
  }

  double log_jacobian_sum(const std::vector<double>& lambdas) const {
    double s = jac_const_;
    for (Eigen::Index j = 0; j < data_.cols(); ++j) {
      if (bounds_[static_cast<std::size_t>(j)].bounded()) {
        s += (lambdas[static_cast<std::size_t>(j)] - 1.0) * lr_sum_(j);
      }
    }
    return s;
  }

 private:
  const Eigen::MatrixXd& data_;
  const std::vector<BoundSpec>& bounds_;
  Eigen::MatrixXd lr_;
  Eigen::VectorXd lr_sum_;
  double jac_const_ = 0.0;
};

void check_weights(const MixtureParams& params, int n) {
  const double floor = 2.0 / static_cast<double>(n);
  for (int g = 0; g < params.n_components(); ++g) {
    if (!(params.weights(g) >= floor)) {
      throw DegenerateComponent("component " + std::to_string(g) + " weight " +
                                std::to_string(params.weights(g)) + " fell below 2/n");
    }
  }
}

}  // namespace

void FitOptions::validate() const {
  if (max_iter < 1) {
    throw InvalidParams("max_iter must be >= 1");
  }
  if (!(tol > 0.0)) {
    throw InvalidParams("tol must be > 0");
  }
  if (n_kmeans_starts < 1) {
    throw InvalidParams("n_kmeans_starts must be >= 1");
  }
}

double observed_loglik(const Eigen::MatrixXd& data, const MixtureParams& params,
                       const TransformParams& transform) {
  return e_step(data, params, transform, true).loglik;
}

EStepResult e_step(const Eigen::MatrixXd& data, const MixtureParams& params,
                   const TransformParams& transform, bool include_jacobian) {
  const Eigen::MatrixXd y = transform_rows(data, transform);
  const auto comps = components(params);
  const Eigen::MatrixXd lw = weighted_log_densities(y, params, comps);

  EStepResult res;
  res.z.resize(lw.rows(), lw.cols());
  double ll = 0.0;
  for (Eigen::Index i = 0; i < lw.rows(); ++i) {
    const double lse = log_sum_exp(lw.row(i).transpose());
    res.z.row(i) = (lw.row(i).array() - lse).exp();
    res.z.row(i) /= res.z.row(i).sum();
    ll += lse;
  }
  if (include_jacobian) {
    ll += log_jacobian_rows(data, transform).sum();
  }
  res.loglik = ll;
  return res;
}

double q_function(const Eigen::MatrixXd& data, const Eigen::MatrixXd& z,
                  const MixtureParams& params, const TransformParams& transform) {
  const Eigen::MatrixXd y = transform_rows(data, transform);
  const auto comps = components(params);
  const Eigen::MatrixXd lw = weighted_log_densities(y, params, comps);
  return (z.array() * lw.array()).sum() + log_jacobian_rows(data, transform).sum();
}

MixtureParams m_step_fixed_lambda(const Eigen::MatrixXd& data, const Eigen::MatrixXd& z,
                                  const TransformParams& transform, CovarianceModel model) {
  const Eigen::MatrixXd y = transform_rows(data, transform);
  MixtureParams out;
  m_step_weights_means(y, z, out.weights, out.means);
  out.covariances = m_step_covariance(y, z, out.means, model);
  return out;
}

MStepResult m_step(const Eigen::MatrixXd& data, const Eigen::MatrixXd& z,
                   const TransformParams& transform_prev, const MixtureParams& params_prev,
                   CovarianceModel model, const FitOptions& opts) {
  MStepResult res;
  res.transform = transform_prev;

  const auto active = active_coordinates(transform_prev);
  if (!opts.lambda_fixed && !active.empty()) {
    const auto comps = components(params_prev);
    const LambdaPath path(data, transform_prev.bounds);
    std::vector<double> trial = transform_prev.lambdas;

    Objective objective;
    if (opts.lambda_objective == LambdaObjective::HoldPrevious) {
      objective = [&](std::span<const double> lam) {
        for (std::size_t k = 0; k < active.size(); ++k) {
          trial[active[k]] = lam[k];
        }
        const Eigen::MatrixXd y = path.transform(trial);
        const Eigen::MatrixXd lw = weighted_log_densities(y, params_prev, comps);
        return -((z.array() * lw.array()).sum() + path.log_jacobian_sum(trial));
      };
    } else {
      objective = [&](std::span<const double> lam) {
        for (std::size_t k = 0; k < active.size(); ++k) {
          trial[active[k]] = lam[k];
        }
        try {
          const Eigen::MatrixXd y = path.transform(trial);
          Eigen::VectorXd w;
          std::vector<Eigen::VectorXd> means;
          m_step_weights_means(y, z, w, means);
          const auto covs = m_step_covariance(y, z, means, model);
          const double qw = (z.colwise().sum().transpose().array() * w.array().log()).sum();
          return -(qw + expected_gaussian_loglik(y, z, means, covs) + path.log_jacobian_sum(trial));
        } catch (const Error&) {
          return std::numeric_limits<double>::infinity();
        }
      };
    }

    std::vector<double> start;
    for (auto j : active) {
      start.push_back(transform_prev.lambdas[j]);
    }
    const std::vector<double> lo(active.size(), kLambdaMin);
    const std::vector<double> hi(active.size(), kLambdaMax);
    const BoxMinimizeResult opt = minimize_box(objective, start, lo, hi);
    if (opt.improved()) {
      for (std::size_t k = 0; k < active.size(); ++k) {
        res.transform.lambdas[active[k]] = opt.x[k];
      }
      res.lambda_improved = true;
    }
  }

  res.params = m_step_fixed_lambda(data, z, res.transform, model);
  if (model == CovarianceModel::VEE) {
    // the inner VEE iteration is truncated; never fall below the previous
    // covariances
    const Eigen::MatrixXd y = transform_rows(data, res.transform);
    const double q_new = expected_gaussian_loglik(y, z, res.params.means, res.params.covariances);
    const double q_old = expected_gaussian_loglik(y, z, res.params.means, params_prev.covariances);
    if (q_old > q_new) {
      res.params.covariances = params_prev.covariances;
    }
  }
  return res;
}

double marginal_lambda(const Eigen::VectorXd& column, const BoundSpec& bound) {
  if (!bound.bounded()) {
    return 1.0;
  }
  double best = 0.0;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (double lam = kGridLo; lam <= kGridHi + 1e-12; lam += kGridStep) {
    const double ll = column_profile_loglik(column, bound, lam);
    if (ll > best_ll) {
      best_ll = ll;
      best = lam;
    }
  }
  const double a = std::max(kLambdaMin, best - kGridStep);
  const double b = std::min(kLambdaMax, best + kGridStep);
  const double refined =
      golden_section_max([&](double l) { return column_profile_loglik(column, bound, l); }, a, b,
                         1e-6);
  return column_profile_loglik(column, bound, refined) >= best_ll ? refined : best;
}

InitResult initialize(const Eigen::MatrixXd& data, const std::vector<BoundSpec>& bounds, int G,
                      const FitOptions& opts) {
  const auto n = data.rows();
  const auto p = data.cols();
  if (static_cast<std::size_t>(p) != bounds.size()) {
    throw InvalidParams("data dimension does not match number of bounds");
  }
  check_support(data, bounds);

  InitResult res;
  if (opts.lambda_fixed) {
    if (opts.lambda_fixed->size() != bounds.size()) {
      throw InvalidParams("lambda_fixed must have one value per variable");
    }
    res.lambda0 = *opts.lambda_fixed;
  } else {
    res.lambda0.resize(bounds.size());
    for (Eigen::Index j = 0; j < p; ++j) {
      res.lambda0[static_cast<std::size_t>(j)] =
          marginal_lambda(data.col(j), bounds[static_cast<std::size_t>(j)]);
    }
  }

  res.z0 = Eigen::MatrixXd::Zero(n, G);
  if (G == 1) {
    res.z0.setOnes();
    return res;
  }

  Eigen::MatrixXd y = transform_rows(data, TransformParams(res.lambda0, bounds));
  for (Eigen::Index j = 0; j < p; ++j) {
    const double mean = y.col(j).mean();
    const double sd = std::sqrt((y.col(j).array() - mean).square().mean());
    y.col(j).array() -= mean;
    if (sd > 0.0) {
      y.col(j) /= sd;
    }
  }
  const KMeansResult km = kmeans_best_of(y, G, opts.n_kmeans_starts, opts.seed);
  for (Eigen::Index i = 0; i < n; ++i) {
    res.z0(i, km.labels[static_cast<std::size_t>(i)]) = 1.0;
  }
  return res;
}

MixtureFit fit(const Eigen::MatrixXd& data, const std::vector<BoundSpec>& bounds, int G,
               CovarianceModel model, const FitOptions& opts) {
  opts.validate();
  const auto n = static_cast<int>(data.rows());
  const auto p = static_cast<int>(data.cols());
  if (G < 1) {
    throw InvalidParams("G must be >= 1");
  }
  if (!valid_for_dimension(model, p)) {
    throw UnsupportedModel(std::string("model ") + std::string(to_string(model)) +
                           " is not available for p = " + std::to_string(p));
  }
  if (n <= G * (p + 1)) {
    throw InvalidParams("need n > G * (p + 1) observations");
  }

  const InitResult init = initialize(data, bounds, G, opts);

  MixtureFit out;
  out.G = G;
  out.model = model;
  out.n_obs = n;
  out.transform = TransformParams(init.lambda0, bounds);

  // start from the M-step on the initial partition
  out.params = m_step_fixed_lambda(data, init.z0, out.transform, model);
  check_weights(out.params, n);
  EStepResult es = e_step(data, out.params, out.transform);
  out.loglik_trace.push_back(es.loglik);

  for (int it = 1; it <= opts.max_iter; ++it) {
    MStepResult ms = m_step(data, es.z, out.transform, out.params, model, opts);
    if (!ms.lambda_improved && !opts.lambda_fixed && out.transform.n_active() > 0) {
      ++out.lambda_noop_steps;
    }
    check_weights(ms.params, n);
    out.params = std::move(ms.params);
    out.transform = std::move(ms.transform);

    const double prev = out.loglik_trace.back();
    es = e_step(data, out.params, out.transform);
    out.loglik_trace.push_back(es.loglik);
    out.n_iter = it;
    if ((es.loglik - prev) / (1.0 + std::abs(es.loglik)) < opts.tol) {
      out.converged = true;
      break;
    }
  }

  out.z = std::move(es.z);
  out.loglik = out.loglik_trace.back();
  const int n_lambda = opts.lambda_fixed ? 0 : static_cast<int>(out.transform.n_active());
  out.n_params = n_free_params(model, p, G, n_lambda);
  out.bic = bic(out.loglik, out.n_params, n);
  out.icl = icl(out.bic, out.z);
  return out;
}

}  // namespace gmdeb
