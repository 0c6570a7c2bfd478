#include "vbgrowth/optim.hpp"

#include <cmath>

namespace vbgrowth {

OptimResult bfgs_minimize(const ObjectiveFn& fg, Eigen::VectorXd x0, const OptimOptions& opt) {
  const int n = static_cast<int>(x0.size());
  OptimResult res;
  res.x = std::move(x0);
  res.grad.resize(n);

  double f;
  try {
    f = fg(res.x, res.grad);
  } catch (const std::exception& e) {
    res.message = std::string("objective failed at start: ") + e.what();
    return res;
  }
  if (!std::isfinite(f)) {
    res.message = "non-finite objective at start";
    return res;
  }

  Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd g = res.grad;

  for (int it = 0; it < opt.max_iter; ++it) {
    res.iterations = it;
    if (g.lpNorm<Eigen::Infinity>() <= opt.grad_tol) {
      res.converged = true;
      res.message = "gradient tolerance reached";
      break;
    }

    Eigen::VectorXd p = -(Hinv * g);
    double slope = p.dot(g);
    if (!(slope < 0.0)) {  // lost descent direction, reset
      Hinv.setIdentity();
      p = -g;
      slope = p.dot(g);
    }

    // Armijo backtracking.
    const double c1 = 1e-4;
    double step = 1.0;
    double f_new = f;
    Eigen::VectorXd x_new, g_new(n);
    bool ok = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = res.x + step * p;
      double ft;
      try {
        ft = fg(x_new, g_new);
      } catch (const std::exception&) {
        ft = std::numeric_limits<double>::quiet_NaN();
      }
      if (std::isfinite(ft) && ft <= f + c1 * step * slope) {
        f_new = ft;
        ok = true;
        break;
      }
      step *= 0.5;
    }
    if (!ok) {
      // No Armijo decrease even at a tiny step: the objective is flat to
      // machine precision around the current point. After at least one
      // accepted step this is a stall at the optimum, not a failure.
      if (it > 0) {
        res.converged = true;
        res.message = "stalled at numerical precision";
      } else {
        res.message = "line search failed at start";
      }
      break;
    }

    const Eigen::VectorXd s = x_new - res.x;
    const Eigen::VectorXd y = g_new - g;
    res.x = std::move(x_new);
    f = f_new;
    g = g_new;

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::VectorXd Hy = Hinv * y;
      const double yHy = y.dot(Hy);
      Hinv += (sy + yHy) * rho * rho * (s * s.transpose()) -
              rho * (Hy * s.transpose() + s * Hy.transpose());
    }

    if (s.lpNorm<Eigen::Infinity>() <=
        opt.param_tol * (1.0 + res.x.lpNorm<Eigen::Infinity>())) {
      res.iterations = it + 1;
      res.converged = true;
      res.message = "parameter tolerance reached";
      break;
    }
  }
  if (!res.converged && res.message.empty()) res.message = "max iterations reached";
  if (g.lpNorm<Eigen::Infinity>() <= opt.grad_tol) res.converged = true;

  res.f = f;
  res.grad = g;
  return res;
}

}  // namespace vbgrowth
