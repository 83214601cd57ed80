#include "gmdeb/optim.hpp"

#include "gmdeb/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace gmdeb {

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktracks = 40;

class Problem {
 public:
  Problem(const Objective& f, std::span<const double> lo, std::span<const double> hi)
      : f_(f), lo_(lo.begin(), lo.end()), hi_(hi.begin(), hi.end()) {}

  double eval(const Eigen::VectorXd& x) {
    ++evals_;
    const double v = f_(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  }

  Eigen::VectorXd project(Eigen::VectorXd x) const {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      x(i) = std::clamp(x(i), lo_[static_cast<std::size_t>(i)], hi_[static_cast<std::size_t>(i)]);
    }
    return x;
  }

  // Central differences; also records the diagonal curvature seen on the
  // way, used to scale the initial inverse Hessian.
  Eigen::VectorXd gradient(const Eigen::VectorXd& x, double fx, double step) {
    Eigen::VectorXd g(x.size());
    curvature_.resize(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double h = step * (1.0 + std::abs(x(i)));
      Eigen::VectorXd xp = x;
      Eigen::VectorXd xm = x;
      xp(i) = std::min(x(i) + h, hi_[static_cast<std::size_t>(i)]);
      xm(i) = std::max(x(i) - h, lo_[static_cast<std::size_t>(i)]);
      const double fp = eval(xp);
      const double fm = eval(xm);
      g(i) = (fp - fm) / (xp(i) - xm(i));
      if (!std::isfinite(g(i))) {
        g(i) = 0.0;
      }
      const double hp = xp(i) - x(i);
      const double hm = x(i) - xm(i);
      curvature_(i) = hp > 0.0 && hm > 0.0
                          ? 2.0 * (hp * fm + hm * fp - (hp + hm) * fx) / (hp * hm * (hp + hm))
                          : 0.0;
    }
    return g;
  }

  // Coordinates pinned at a bound with the gradient pushing outward.
  std::vector<bool> active(const Eigen::VectorXd& x, const Eigen::VectorXd& g) const {
    std::vector<bool> a(static_cast<std::size_t>(x.size()));
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const auto k = static_cast<std::size_t>(i);
      const double eps = 1e-12 * (1.0 + std::abs(x(i)));
      a[k] = (x(i) <= lo_[k] + eps && g(i) > 0.0) || (x(i) >= hi_[k] - eps && g(i) < 0.0);
    }
    return a;
  }

  int evaluations() const { return evals_; }

  Eigen::MatrixXd initial_inverse_hessian() const {
    const auto n = curvature_.size();
    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::isfinite(curvature_(i)) && curvature_(i) > 1e-8) {
        h(i, i) = 1.0 / curvature_(i);
      }
    }
    return h;
  }

 private:
  const Objective& f_;
  std::vector<double> lo_;
  std::vector<double> hi_;
  int evals_ = 0;
  Eigen::VectorXd curvature_;
};

}  // namespace

BoxMinimizeResult minimize_box(const Objective& f, std::vector<double> x0,
                               std::span<const double> lower, std::span<const double> upper,
                               const BoxMinimizeOptions& opts) {
  const auto n = static_cast<Eigen::Index>(x0.size());
  if (lower.size() != x0.size() || upper.size() != x0.size()) {
    throw InvalidParams("bounds must match the start point in length");
  }
  for (std::size_t i = 0; i < x0.size(); ++i) {
    if (!(lower[i] <= upper[i])) {
      throw InvalidParams("lower bound exceeds upper bound");
    }
  }

  Problem prob(f, lower, upper);
  Eigen::VectorXd x = prob.project(Eigen::Map<const Eigen::VectorXd>(x0.data(), n));
  double fx = prob.eval(x);

  BoxMinimizeResult res;
  res.f0 = fx;
  if (n == 0 || !std::isfinite(fx)) {
    res.x.assign(x.data(), x.data() + n);
    res.fx = fx;
    res.evaluations = prob.evaluations();
    res.converged = n == 0;
    return res;
  }

  Eigen::VectorXd g = prob.gradient(x, fx, opts.fd_step);
  Eigen::MatrixXd hinv = prob.initial_inverse_hessian();
  std::vector<bool> act = prob.active(x, g);
  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    const Eigen::VectorXd pg = x - prob.project(x - g);
    if (pg.lpNorm<Eigen::Infinity>() < opts.pg_tol) {
      res.converged = true;
      break;
    }

    Eigen::VectorXd d = -(hinv * g);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (act[static_cast<std::size_t>(i)]) {
        d(i) = 0.0;
      }
    }
    if (d.dot(g) >= 0.0) {
      hinv = prob.initial_inverse_hessian();
      d = -(hinv * g);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (act[static_cast<std::size_t>(i)]) {
          d(i) = 0.0;
        }
      }
    }
    const double dmax = d.lpNorm<Eigen::Infinity>();
    if (dmax == 0.0) {
      res.converged = true;
      break;
    }
    if (dmax > opts.max_step) {
      d *= opts.max_step / dmax;
    }

    double alpha = 1.0;
    Eigen::VectorXd xn;
    double fn = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int k = 0; k < kMaxBacktracks; ++k, alpha *= 0.5) {
      xn = prob.project(x + alpha * d);
      fn = prob.eval(xn);
      if (fn <= fx + kArmijo * g.dot(xn - x) && fn <= fx) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      break;
    }

    const Eigen::VectorXd gn = prob.gradient(xn, fn, opts.fd_step);
    const Eigen::VectorXd s = xn - x;
    const Eigen::VectorXd yv = gn - g;
    const double sy = s.dot(yv);
    const double decrease = fx - fn;
    x = xn;
    g = gn;
    fx = fn;

    const std::vector<bool> act_new = prob.active(x, g);
    if (act_new != act) {
      hinv = prob.initial_inverse_hessian();
      act = act_new;
    } else if (sy > 1e-12 * s.norm() * yv.norm()) {
      // inverse BFGS update
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
      hinv = (eye - rho * s * yv.transpose()) * hinv * (eye - rho * yv * s.transpose()) +
             rho * s * s.transpose();
    }
    if (decrease <= opts.f_tol * (1.0 + std::abs(fx))) {
      res.converged = true;
      ++iter;
      break;
    }
  }

  res.x.assign(x.data(), x.data() + n);
  res.fx = fx;
  res.iterations = iter;
  res.evaluations = prob.evaluations();
  return res;
}

double golden_section_max(const std::function<double(double)>& f, double a, double b, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (std::abs(b - a) > tol * (1.0 + std::abs(a) + std::abs(b))) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace gmdeb
