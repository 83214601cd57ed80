#pragma once

// EM estimation of a Gaussian mixture on range-power transformed data, with
// the power parameters estimated jointly with the mixture parameters.

#include "gmdeb/gaussmix.hpp"
#include "gmdeb/transform.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace gmdeb {

//! How the power parameters are updated inside the M-step.
enum class LambdaObjective {
  //! Maximize Q over lambda with (pi, mu, Sigma) held at the previous
  //! iteration's values, then update (pi, mu, Sigma) in closed form.
  HoldPrevious,
  //! Maximize Q over lambda with (mu, Sigma) re-estimated for every trial
  //! lambda.
  Profile,
};

struct FitOptions {
  int max_iter = 500;
  //! Stop when (l_new - l_old) / (1 + |l_new|) falls below tol.
  double tol = 1e-8;
  //! When set, lambda is held at these values (one per variable).
  std::optional<std::vector<double>> lambda_fixed;
  int n_kmeans_starts = 10;
  std::uint64_t seed = 0;
  LambdaObjective lambda_objective = LambdaObjective::Profile;

  void validate() const;
};

struct MixtureFit {
  MixtureParams params;
  TransformParams transform;
  int G = 0;
  CovarianceModel model = CovarianceModel::V;
  std::vector<double> loglik_trace;
  Eigen::MatrixXd z;
  double loglik = 0.0;
  int n_obs = 0;
  int n_params = 0;
  double bic = 0.0;
  double icl = 0.0;
  int n_iter = 0;
  bool converged = false;
  //! M-steps whose lambda search could not improve on the previous lambda.
  int lambda_noop_steps = 0;

  int dim() const { return static_cast<int>(transform.dim()); }
};

struct EStepResult {
  Eigen::MatrixXd z;
  double loglik = 0.0;
};

struct MStepResult {
  MixtureParams params;
  TransformParams transform;
  //! False when the lambda search could not improve Q (GEM no-op step).
  bool lambda_improved = false;
};

struct InitResult {
  Eigen::MatrixXd z0;
  std::vector<double> lambda0;
};

//! Observed-data log-likelihood on the original scale, Jacobian included.
double observed_loglik(const Eigen::MatrixXd& data, const MixtureParams& params,
                       const TransformParams& transform);

//! Posterior responsibilities and the observed log-likelihood. The Jacobian
//! only shifts the log-likelihood; it cancels in the responsibilities.
EStepResult e_step(const Eigen::MatrixXd& data, const MixtureParams& params,
                   const TransformParams& transform, bool include_jacobian = true);

//! Complete-data expected log-likelihood Q for the given responsibilities.
double q_function(const Eigen::MatrixXd& data, const Eigen::MatrixXd& z,
                  const MixtureParams& params, const TransformParams& transform);

//! Two-stage M-step: lambda by bounded quasi-Newton search on [-3, 3], then
//! weights, means and covariances in closed form (iteratively for VEE) on the
//! data transformed with the new lambda.
MStepResult m_step(const Eigen::MatrixXd& data, const Eigen::MatrixXd& z,
                   const TransformParams& transform_prev, const MixtureParams& params_prev,
                   CovarianceModel model, const FitOptions& opts);

//! M-step with lambda held fixed: a plain Gaussian-mixture M-step on the
//! transformed data.
MixtureParams m_step_fixed_lambda(const Eigen::MatrixXd& data, const Eigen::MatrixXd& z,
                                  const TransformParams& transform, CovarianceModel model);

//! Maximizer of the single-Gaussian profile log-likelihood (Jacobian
//! included) for one variable: grid over [-2, 2] then golden-section
//! refinement.
double marginal_lambda(const Eigen::VectorXd& column, const BoundSpec& bound);

InitResult initialize(const Eigen::MatrixXd& data, const std::vector<BoundSpec>& bounds, int G,
                      const FitOptions& opts);

MixtureFit fit(const Eigen::MatrixXd& data, const std::vector<BoundSpec>& bounds, int G,
               CovarianceModel model, const FitOptions& opts = {});

}  // namespace gmdeb
