#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

namespace gmdeb {

struct KMeansResult {
  std::vector<int> labels;
  Eigen::MatrixXd centers;  // k x p
  double wcss = 0.0;
  int iterations = 0;
};

//! Lloyd iterations from a k-means++ seeding, run until no label changes.
KMeansResult kmeans(const Eigen::MatrixXd& x, int k, std::mt19937_64& rng, int max_iter = 1000);

//! Best (smallest within-cluster sum of squares) of `starts` runs.
KMeansResult kmeans_best_of(const Eigen::MatrixXd& x, int k, int starts, std::uint64_t seed);

}  // namespace gmdeb
