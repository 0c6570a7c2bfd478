#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

namespace vbgrowth {

struct OptimOptions {
  int max_iter = 500;
  double grad_tol = 1e-6;   // inf-norm of the gradient
  double param_tol = 1e-8;  // inf-norm of the step, relative to 1 + |x|
};

struct OptimResult {
  Eigen::VectorXd x;
  double f = 0.0;
  Eigen::VectorXd grad;
  bool converged = false;
  int iterations = 0;
  std::string message;
};

/// Objective with gradient: returns f(x) and fills grad (same length as x).
using ObjectiveFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

/// Unconstrained BFGS with Armijo backtracking. Non-finite trial values are
/// treated as line-search failures.
OptimResult bfgs_minimize(const ObjectiveFn& fg, Eigen::VectorXd x0, const OptimOptions& opt);

}  // namespace vbgrowth
