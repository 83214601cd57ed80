#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gmdeb {

//! Within-component covariance structure, mclust naming. E and V are the
//! univariate models; EII/VII are spherical, EEE/VVV are common/unconstrained
//! ellipsoidal, VEE has component volumes varying around a shared shape and
//! orientation.
enum class CovarianceModel { E, V, EII, VII, EEE, VVV, VEE };

std::string_view to_string(CovarianceModel model);
std::optional<CovarianceModel> parse_model(std::string_view name);
//! True when `model` can be fitted to p-dimensional data.
bool valid_for_dimension(CovarianceModel model, int p);
//! All models usable at dimension p, in a fixed order.
std::vector<CovarianceModel> models_for_dimension(int p);

struct MixtureParams {
  Eigen::VectorXd weights;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covariances;

  int n_components() const { return static_cast<int>(weights.size()); }
  int dim() const { return means.empty() ? 0 : static_cast<int>(means.front().size()); }
};

//! Gaussian density with a cached Cholesky factor, for repeated evaluation.
class GaussianComponent {
 public:
  GaussianComponent(Eigen::VectorXd mean, const Eigen::MatrixXd& covariance);

  double log_density(const Eigen::Ref<const Eigen::VectorXd>& y) const;
  //! Log-density of every row of an n x p matrix.
  Eigen::VectorXd log_density_rows(const Eigen::MatrixXd& y) const;

  const Eigen::VectorXd& mean() const { return mean_; }
  //! Lower Cholesky factor of the covariance.
  const Eigen::MatrixXd& chol() const { return chol_; }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd chol_;
  double log_norm_ = 0.0;
};

double log_phi(const Eigen::VectorXd& y, const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma);

//! log(sum(exp(v))) without overflow.
double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v);

//! Closed-form weight and mean updates from responsibilities.
void m_step_weights_means(const Eigen::MatrixXd& y, const Eigen::MatrixXd& z,
                          Eigen::VectorXd& weights, std::vector<Eigen::VectorXd>& means);

//! Covariance update maximizing the Q-function within the structure of
//! `model`. All scatters use the sum of responsibilities as divisor.
std::vector<Eigen::MatrixXd> m_step_covariance(const Eigen::MatrixXd& y, const Eigen::MatrixXd& z,
                                               const std::vector<Eigen::VectorXd>& means,
                                               CovarianceModel model);

//! Sum_i sum_g z_ig log phi(y_i; mu_g, Sigma_g): the covariance-dependent part
//! of the Q-function.
double expected_gaussian_loglik(const Eigen::MatrixXd& y, const Eigen::MatrixXd& z,
                                const std::vector<Eigen::VectorXd>& means,
                                const std::vector<Eigen::MatrixXd>& covariances);

//! Free parameters: weights, means, covariances, plus `n_lambda` power
//! parameters.
int n_free_params(CovarianceModel model, int p, int G, int n_lambda);
inline int n_free_params(CovarianceModel model, int p, int G, bool with_lambda) {
  return n_free_params(model, p, G, with_lambda ? p : 0);
}

}  // namespace gmdeb
