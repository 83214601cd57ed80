#pragma once

#include "gmdeb/emfit.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

namespace testing {

inline Eigen::MatrixXd lognormal_column(int n, double l, std::uint64_t seed, double mu = 0.0,
                                        double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(mu, sd);
  Eigen::MatrixXd x(n, 1);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = l + std::exp(nd(rng));
  }
  return x;
}

inline Eigen::MatrixXd normal_matrix(int n, int p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXd x(n, p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) {
      x(i, j) = nd(rng);
    }
  }
  return x;
}

//! Random responsibilities with rows summing to one.
inline Eigen::MatrixXd random_z(int n, int G, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Eigen::MatrixXd z(n, G);
  for (int i = 0; i < n; ++i) {
    for (int g = 0; g < G; ++g) {
      z(i, g) = u(rng);
    }
    z.row(i) /= z.row(i).sum();
  }
  return z;
}

inline Eigen::MatrixXd random_spd(int p, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXd a(p, p);
  for (int r = 0; r < p; ++r) {
    for (int c = 0; c < p; ++c) {
      a(r, c) = nd(rng);
    }
  }
  return a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(p, p);
}

//! A hand-built fit with the given parameters; no EM involved.
inline gmdeb::MixtureFit make_fit(std::vector<gmdeb::BoundSpec> bounds, std::vector<double> lambdas,
                                  Eigen::VectorXd weights, std::vector<Eigen::VectorXd> means,
                                  std::vector<Eigen::MatrixXd> covs) {
  gmdeb::MixtureFit f;
  f.G = static_cast<int>(weights.size());
  f.model = bounds.size() == 1 ? gmdeb::CovarianceModel::V : gmdeb::CovarianceModel::VVV;
  f.transform = gmdeb::TransformParams(std::move(lambdas), std::move(bounds));
  f.params.weights = std::move(weights);
  f.params.means = std::move(means);
  f.params.covariances = std::move(covs);
  return f;
}

inline gmdeb::MixtureFit univariate_fit(gmdeb::BoundSpec bound, double lambda,
                                        std::vector<double> w, std::vector<double> mu,
                                        std::vector<double> var) {
  Eigen::VectorXd weights(static_cast<Eigen::Index>(w.size()));
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covs;
  for (std::size_t g = 0; g < w.size(); ++g) {
    weights(static_cast<Eigen::Index>(g)) = w[g];
    means.push_back(Eigen::VectorXd::Constant(1, mu[g]));
    covs.push_back(Eigen::MatrixXd::Constant(1, 1, var[g]));
  }
  return make_fit({bound}, {lambda}, weights, means, covs);
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("gmdeb_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
