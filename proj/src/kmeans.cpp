#include "gmdeb/kmeans.hpp"

#include "gmdeb/errors.hpp"

#include <algorithm>
#include <limits>

namespace gmdeb {

namespace {

Eigen::MatrixXd plus_plus_seed(const Eigen::MatrixXd& x, int k, std::mt19937_64& rng) {
  const auto n = x.rows();
  Eigen::MatrixXd centers(k, x.cols());
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  centers.row(0) = x.row(pick(rng));
  Eigen::VectorXd d2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index chosen = n - 1;
    if (total > 0.0) {
      const double target = unif(rng) * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2(i);
        if (acc >= target && d2(i) > 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = pick(rng);
    }
    centers.row(c) = x.row(chosen);
    d2 = d2.cwiseMin((x.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }
  return centers;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& x, int k, std::mt19937_64& rng, int max_iter) {
  const auto n = x.rows();
  if (k < 1 || k > n) {
    throw InvalidParams("k-means requires 1 <= k <= n");
  }
  KMeansResult res;
  res.centers = plus_plus_seed(x, k, rng);
  res.labels.assign(static_cast<std::size_t>(n), -1);

  Eigen::VectorXd best_d(n);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (x.row(i) - res.centers.row(c)).squaredNorm();
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      best_d(i) = bd;
      auto& lab = res.labels[static_cast<std::size_t>(i)];
      if (lab != best) {
        lab = best;
        changed = true;
      }
    }
    res.iterations = it + 1;
    if (!changed && it > 0) {
      break;
    }

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = res.labels[static_cast<std::size_t>(i)];
      sums.row(c) += x.row(i);
      ++counts[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        res.centers.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
      } else {
        // empty cluster: move it onto the point farthest from its center
        Eigen::Index far = 0;
        best_d.maxCoeff(&far);
        res.centers.row(c) = x.row(far);
        best_d(far) = 0.0;
      }
    }
  }

  res.wcss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    res.wcss += (x.row(i) - res.centers.row(res.labels[static_cast<std::size_t>(i)])).squaredNorm();
  }
  return res;
}

KMeansResult kmeans_best_of(const Eigen::MatrixXd& x, int k, int starts, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  KMeansResult best;
  best.wcss = std::numeric_limits<double>::infinity();
  for (int s = 0; s < std::max(starts, 1); ++s) {
    KMeansResult r = kmeans(x, k, rng);
    if (r.wcss < best.wcss) {
      best = std::move(r);
    }
  }
  return best;
}

}  // namespace gmdeb
