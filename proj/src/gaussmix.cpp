#include "gmdeb/gaussmix.hpp"

#include "gmdeb/errors.hpp"

#include <array>
#include <limits>
#include <cmath>
#include <numbers>

namespace gmdeb {

namespace {

constexpr std::array<std::pair<CovarianceModel, std::string_view>, 7> kModelNames{{
    {CovarianceModel::E, "E"},
    {CovarianceModel::V, "V"},
    {CovarianceModel::EII, "EII"},
    {CovarianceModel::VII, "VII"},
    {CovarianceModel::EEE, "EEE"},
    {CovarianceModel::VVV, "VVV"},
    {CovarianceModel::VEE, "VEE"},
}};

constexpr int kVeeMaxInner = 20;
constexpr double kVeeTol = 1e-8;
constexpr double kEigenFloor = 1e-12;
constexpr double kRidge = 1e-10;

// Weighted scatter of y around `mean` with weights z(:, g).
Eigen::MatrixXd scatter(const Eigen::MatrixXd& y, const Eigen::VectorXd& w,
                        const Eigen::VectorXd& mean) {
  const Eigen::MatrixXd centered = y.rowwise() - mean.transpose();
  return centered.transpose() * w.asDiagonal() * centered;
}

// Ridge-regularizes a covariance whose spectrum has collapsed.
Eigen::MatrixXd regularize(Eigen::MatrixXd sigma, int g) {
  sigma = 0.5 * (sigma + sigma.transpose());
  const auto p = sigma.rows();
  const double tr = sigma.trace();
  if (!std::isfinite(tr) || tr <= 0.0) {
    throw DegenerateComponent("component " + std::to_string(g) + " has a zero covariance");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (lo < kEigenFloor * hi) {
    sigma.diagonal().array() += kRidge * tr / static_cast<double>(p);
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) {
      throw DegenerateComponent("component " + std::to_string(g) +
                                " covariance is not positive definite after regularization");
    }
  }
  return sigma;
}

// Alternating updates for Sigma_g = v_g C with det(C) = 1.
std::vector<Eigen::MatrixXd> vee_update(const std::vector<Eigen::MatrixXd>& scatters,
                                        const Eigen::VectorXd& sizes) {
  const auto G = static_cast<int>(scatters.size());
  const auto p = scatters.front().rows();
  const double pd = static_cast<double>(p);

  auto unit_det = [pd](const Eigen::MatrixXd& s) -> Eigen::MatrixXd {
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() != Eigen::Success) {
      throw DegenerateComponent("VEE shape matrix is not positive definite");
    }
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    return s * std::exp(-log_det / pd);
  };

  Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(p, p);
  for (const auto& w : scatters) {
    pooled += w;
  }
  Eigen::MatrixXd shape = unit_det(pooled);
  Eigen::VectorXd vol(G);
  double prev_q = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < kVeeMaxInner; ++it) {
    const Eigen::MatrixXd shape_inv = shape.llt().solve(Eigen::MatrixXd::Identity(p, p));
    for (int g = 0; g < G; ++g) {
      vol(g) = (scatters[static_cast<std::size_t>(g)] * shape_inv).trace() / (pd * sizes(g));
      if (!(vol(g) > 0.0)) {
        throw DegenerateComponent("component " + std::to_string(g) + " has zero volume");
      }
    }
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(p, p);
    for (int g = 0; g < G; ++g) {
      s += scatters[static_cast<std::size_t>(g)] / vol(g);
    }
    shape = unit_det(s);
    const Eigen::MatrixXd inv = shape.llt().solve(Eigen::MatrixXd::Identity(p, p));
    double q = 0.0;
    for (int g = 0; g < G; ++g) {
      q -= 0.5 * (sizes(g) * pd * std::log(vol(g)) +
                  (scatters[static_cast<std::size_t>(g)] * inv).trace() / vol(g));
    }
    if (std::abs(q - prev_q) <= kVeeTol * (1.0 + std::abs(q))) {
      break;
    }
    prev_q = q;
  }
  // final volume refresh against the last shape
  const Eigen::MatrixXd shape_inv = shape.llt().solve(Eigen::MatrixXd::Identity(p, p));
  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<std::size_t>(G));
  for (int g = 0; g < G; ++g) {
    const double v = (scatters[static_cast<std::size_t>(g)] * shape_inv).trace() / (pd * sizes(g));
    out.push_back(v * shape);
  }
  return out;
}

}  // namespace

std::string_view to_string(CovarianceModel model) {
  for (const auto& [m, name] : kModelNames) {
    if (m == model) {
      return name;
    }
  }
  return "?";
}

std::optional<CovarianceModel> parse_model(std::string_view name) {
  for (const auto& [m, n] : kModelNames) {
    if (n == name) {
      return m;
    }
  }
  return std::nullopt;
}

bool valid_for_dimension(CovarianceModel model, int p) {
  if (p < 1) {
    return false;
  }
  if (model == CovarianceModel::E || model == CovarianceModel::V) {
    return p == 1;
  }
  return true;
}

std::vector<CovarianceModel> models_for_dimension(int p) {
  if (p == 1) {
    return {CovarianceModel::E, CovarianceModel::V};
  }
  return {CovarianceModel::EII, CovarianceModel::VII, CovarianceModel::EEE, CovarianceModel::VVV,
          CovarianceModel::VEE};
}

GaussianComponent::GaussianComponent(Eigen::VectorXd mean, const Eigen::MatrixXd& covariance)
    : mean_(std::move(mean)) {
  const auto p = mean_.size();
  if (covariance.rows() != p || covariance.cols() != p) {
    throw InvalidParams("covariance shape does not match mean");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success) {
    throw SingularCovariance("covariance matrix is not positive definite");
  }
  chol_ = llt.matrixL();
  const double log_det = 2.0 * chol_.diagonal().array().log().sum();
  if (!std::isfinite(log_det)) {
    throw SingularCovariance("covariance matrix has a non-finite determinant");
  }
  log_norm_ = -0.5 * (static_cast<double>(p) * std::log(2.0 * std::numbers::pi) + log_det);
}

double GaussianComponent::log_density(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  const Eigen::VectorXd r = chol_.triangularView<Eigen::Lower>().solve(y - mean_);
  return log_norm_ - 0.5 * r.squaredNorm();
}

Eigen::VectorXd GaussianComponent::log_density_rows(const Eigen::MatrixXd& y) const {
  Eigen::MatrixXd r = (y.rowwise() - mean_.transpose()).transpose();
  chol_.triangularView<Eigen::Lower>().solveInPlace(r);
  return (log_norm_ - 0.5 * r.colwise().squaredNorm().array()).matrix().transpose();
}

double log_phi(const Eigen::VectorXd& y, const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma) {
  return GaussianComponent(mu, sigma).log_density(y);
}

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) {
    return m;
  }
  return m + std::log((v.array() - m).exp().sum());
}

void m_step_weights_means(const Eigen::MatrixXd& y, const Eigen::MatrixXd& z,
                          Eigen::VectorXd& weights, std::vector<Eigen::VectorXd>& means) {
  const auto n = static_cast<double>(y.rows());
  const Eigen::VectorXd sizes = z.colwise().sum().transpose();
  weights = sizes / n;
  means.assign(static_cast<std::size_t>(z.cols()), Eigen::VectorXd());
  for (Eigen::Index g = 0; g < z.cols(); ++g) {
    if (!(sizes(g) > 0.0)) {
      throw DegenerateComponent("component " + std::to_string(g) + " has no responsibility mass");
    }
    means[static_cast<std::size_t>(g)] = (y.transpose() * z.col(g)) / sizes(g);
  }
}

std::vector<Eigen::MatrixXd> m_step_covariance(const Eigen::MatrixXd& y, const Eigen::MatrixXd& z,
                                               const std::vector<Eigen::VectorXd>& means,
                                               CovarianceModel model) {
  const auto n = static_cast<double>(y.rows());
  const auto p = y.cols();
  const auto G = static_cast<int>(z.cols());
  if (!valid_for_dimension(model, static_cast<int>(p))) {
    throw UnsupportedModel(std::string("model ") + std::string(to_string(model)) +
                           " is not available for p = " + std::to_string(p));
  }
  if (static_cast<int>(means.size()) != G || z.rows() != y.rows()) {
    throw InvalidParams("responsibilities, means and data disagree in shape");
  }

  const Eigen::VectorXd sizes = z.colwise().sum().transpose();
  std::vector<Eigen::MatrixXd> w;
  w.reserve(static_cast<std::size_t>(G));
  for (int g = 0; g < G; ++g) {
    if (!(sizes(g) > 0.0)) {
      throw DegenerateComponent("component " + std::to_string(g) + " has no responsibility mass");
    }
    w.push_back(scatter(y, z.col(g), means[static_cast<std::size_t>(g)]));
  }

  std::vector<Eigen::MatrixXd> out(static_cast<std::size_t>(G));
  const double pd = static_cast<double>(p);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(p, p);
  switch (model) {
    case CovarianceModel::E:
    case CovarianceModel::EII: {
      double tr = 0.0;
      for (const auto& wg : w) {
        tr += wg.trace();
      }
      const Eigen::MatrixXd s = (tr / (n * pd)) * eye;
      std::fill(out.begin(), out.end(), s);
      break;
    }
    case CovarianceModel::V:
    case CovarianceModel::VII:
      for (int g = 0; g < G; ++g) {
        out[static_cast<std::size_t>(g)] = (w[static_cast<std::size_t>(g)].trace() / (sizes(g) * pd)) * eye;
      }
      break;
    case CovarianceModel::EEE: {
      Eigen::MatrixXd s = Eigen::MatrixXd::Zero(p, p);
      for (const auto& wg : w) {
        s += wg;
      }
      s /= n;
      std::fill(out.begin(), out.end(), s);
      break;
    }
    case CovarianceModel::VVV:
      for (int g = 0; g < G; ++g) {
        out[static_cast<std::size_t>(g)] = w[static_cast<std::size_t>(g)] / sizes(g);
      }
      break;
    case CovarianceModel::VEE:
      out = vee_update(w, sizes);
      break;
  }
  for (int g = 0; g < G; ++g) {
    out[static_cast<std::size_t>(g)] = regularize(out[static_cast<std::size_t>(g)], g);
  }
  return out;
}

double expected_gaussian_loglik(const Eigen::MatrixXd& y, const Eigen::MatrixXd& z,
                                const std::vector<Eigen::VectorXd>& means,
                                const std::vector<Eigen::MatrixXd>& covariances) {
  double q = 0.0;
  for (Eigen::Index g = 0; g < z.cols(); ++g) {
    const GaussianComponent comp(means[static_cast<std::size_t>(g)],
                                 covariances[static_cast<std::size_t>(g)]);
    q += z.col(g).dot(comp.log_density_rows(y));
  }
  return q;
}

int n_free_params(CovarianceModel model, int p, int G, int n_lambda) {
  if (p < 1 || G < 1) {
    throw InvalidParams("n_free_params requires p >= 1 and G >= 1");
  }
  if (!valid_for_dimension(model, p)) {
    throw UnsupportedModel(std::string("model ") + std::string(to_string(model)) +
                           " is not available for p = " + std::to_string(p));
  }
  const int full = p * (p + 1) / 2;
  int cov = 0;
  switch (model) {
    case CovarianceModel::E:
    case CovarianceModel::EII:
      cov = 1;
      break;
    case CovarianceModel::V:
    case CovarianceModel::VII:
      cov = G;
      break;
    case CovarianceModel::EEE:
      cov = full;
      break;
    case CovarianceModel::VVV:
      cov = G * full;
      break;
    case CovarianceModel::VEE:
      cov = full + G - 1;
      break;
  }
  return (G - 1) + G * p + cov + n_lambda;
}

}  // namespace gmdeb
