#pragma once

#include <functional>
#include <span>
#include <vector>

namespace gmdeb {

//! Projected quasi-Newton (BFGS) minimizer over a box, with gradients from
//! central finite differences. Used for the power-parameter updates, where
//! the dimension is the number of bounded variables.
struct BoxMinimizeOptions {
  int max_iter = 100;
  //! Stop when the projected gradient's largest component falls below this.
  double pg_tol = 1e-7;
  //! Stop when the relative objective decrease falls below this.
  double f_tol = 1e-13;
  //! Finite-difference step is fd_step * (1 + |x_i|).
  double fd_step = 1e-6;
  //! Longest first trial step along any coordinate.
  double max_step = 1.0;
};

struct BoxMinimizeResult {
  std::vector<double> x;
  double fx = 0.0;
  double f0 = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;

  bool improved() const { return fx < f0; }
};

using Objective = std::function<double(std::span<const double>)>;

BoxMinimizeResult minimize_box(const Objective& f, std::vector<double> x0,
                               std::span<const double> lower, std::span<const double> upper,
                               const BoxMinimizeOptions& opts = {});

//! Golden-section maximization of a unimodal function on [a, b].
double golden_section_max(const std::function<double(double)>& f, double a, double b,
                          double tol = 1e-8);

}  // namespace gmdeb
