#pragma once

// Density of a fitted model on the original (bounded) scale, sampling, HDR
// thresholds and quadrature checks.

#include "gmdeb/emfit.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <iosfwd>
#include <string>
#include <vector>

namespace gmdeb {

//! Density values over a tensor grid. `values` is row-major with the last
//! axis varying fastest.
struct DensityGrid {
  std::vector<std::vector<double>> axes;
  std::vector<double> values;
  //! Optional per-point HDR level (see hdr_level); written as an extra
  //! `hdr` column when present.
  std::vector<double> hdr_levels;

  std::size_t size() const { return values.size(); }
  //! Coordinates of the k-th grid point.
  std::vector<double> point(std::size_t k) const;
};

struct HdrSpec {
  std::vector<double> probs{0.25, 0.5, 0.75, 0.9};
  int n_mc = 10000;

  void validate() const;
};

//! f(x) = sum_g pi_g phi(t(x); mu_g, Sigma_g) |J(t(x))|; exactly zero on or
//! outside the support.
Eigen::VectorXd pdf(const Eigen::MatrixXd& points, const MixtureFit& fit);
double pdf(std::span<const double> point, const MixtureFit& fit);

//! Log-density; -inf on or outside the support.
double log_pdf(std::span<const double> point, const MixtureFit& fit);

//! n draws from the fitted model. Draws whose transformed value has no
//! preimage are rejected and redrawn; RejectionOverflow if more than half of
//! a batch is rejected.
Eigen::MatrixXd sample(int n, const MixtureFit& fit, std::uint64_t seed);

//! Density level f_a such that {x : f(x) >= f_a} has probability `prob`,
//! estimated as the (1 - prob) quantile of f at n_mc model draws.
double hdr_threshold(const MixtureFit& fit, double prob, int n_mc, std::uint64_t seed);
std::vector<double> hdr_thresholds(const MixtureFit& fit, const HdrSpec& spec, std::uint64_t seed);

//! Smallest HDR probability level whose region contains a point with
//! density `density`; 1 when it lies outside the largest region. Thresholds
//! must be ordered as returned by hdr_thresholds.
double hdr_level(double density, const std::vector<double>& probs,
                 const std::vector<double>& thresholds);

using DensityFn = std::function<double(std::span<const double>)>;

//! Trapezoidal integral of `density` over the product support. Each axis is
//! integrated in log / logit coordinates (identity for unbounded axes) over
//! a window outside which the axis marginal falls below 1e-12 of its peak.
//! Only p <= 3.
double integrate_density(const DensityFn& density, const MixtureFit& fit, int resolution);
double integrate_pdf(const MixtureFit& fit, int resolution);

//! Per-axis evaluation points strictly inside the support, `n` per axis:
//! the open interval for interval axes, (l, q_0.999] of the marginal for
//! lower-bounded axes, and the region where the marginal exceeds 1e-6 of
//! its peak for unbounded axes.
std::vector<std::vector<double>> default_axes(const MixtureFit& fit, const std::vector<int>& n);

DensityGrid evaluate_grid(const MixtureFit& fit, std::vector<std::vector<double>> axes);

//! CSV with header x1..xp,density (or the given column names), 15
//! significant digits.
void write_density_csv(std::ostream& os, const DensityGrid& grid,
                       const std::vector<std::string>& names = {});

}  // namespace gmdeb
