#pragma once

#include <Eigen/Dense>
#include <vector>

#include "vbgrowth/smsn.hpp"

namespace vbgrowth {

/// Paired (age, length) observations. Ages must be strictly positive because
/// the variance model sigma_t^2 = sigma^2 * age^rho admits negative rho.
struct GrowthDataset {
  std::vector<double> ages;
  std::vector<double> lengths;

  std::size_t size() const { return ages.size(); }
  void validate(std::size_t min_obs = 4) const;
};

/// Full parameter vector; the active subset depends on the family
/// (lambda is fixed at 0 for N and T). Fixed ordering across all modules:
/// (L_inf, K, t0, sigma2, rho[, lambda]).
struct ThetaVB {
  double l_inf = 1.0;   // asymptotic length, > 0
  double k = 0.1;       // growth rate, > 0
  double t0 = 0.0;      // theoretical age at zero length
  double sigma2 = 1.0;  // > 0
  double rho = 0.0;     // variance power
  double lambda = 0.0;  // shape

  void validate(const ModelSpec& spec) const;
};

double vb_mean(const ThetaVB& theta, double age);
Eigen::Vector3d vb_mean_grad(const ThetaVB& theta, double age);  // d eta / d(L_inf, K, t0)

double sigma_t(const ThetaVB& theta, double age);

/// Zero-mean location correction mu_t = -sqrt(2/pi) * kappa1 * sigma_t * delta.
double mu_t(const ThetaVB& theta, const ModelSpec& spec, double age);

/// Var(y_t) = sigma_t^2 (kappa2 - (2/pi) kappa1^2 delta^2) under the zero-mean
/// error construction.
double response_variance(const ThetaVB& theta, const ModelSpec& spec, double age);

/// Log-density of one observation under the family's marginal law.
double obs_loglik(const ThetaVB& theta, const ModelSpec& spec, double age, double length);

/// Per-observation score over the active parameters, fixed ordering.
Eigen::VectorXd obs_loglik_grad(const ThetaVB& theta, const ModelSpec& spec, double age,
                                double length);

/// Sum of per-observation log-densities; optional case weights.
double loglik(const ThetaVB& theta, const ModelSpec& spec, const GrowthDataset& data,
              const std::vector<double>* weights = nullptr);

Eigen::VectorXd loglik_grad(const ThetaVB& theta, const ModelSpec& spec,
                            const GrowthDataset& data,
                            const std::vector<double>* weights = nullptr);

/// Log-likelihood and gradient in one pass (the optimizer's hot path).
double loglik_with_grad(const ThetaVB& theta, const ModelSpec& spec, const GrowthDataset& data,
                        Eigen::VectorXd& grad, const std::vector<double>* weights = nullptr);

}  // namespace vbgrowth
