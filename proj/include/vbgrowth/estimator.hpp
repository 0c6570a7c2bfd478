#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "vbgrowth/growth_model.hpp"
#include "vbgrowth/smsn.hpp"

namespace vbgrowth {

struct FitConfig {
  std::vector<double> nu_grid;  // defaults to 3..60 step 1 when empty
  int max_iter = 500;
  double grad_tol = 1e-6;
  double param_tol = 1e-8;
  int n_starts = 5;
  std::uint64_t seed = 0;

  std::vector<double> effective_nu_grid() const;
  void validate() const;
};

struct FitResult {
  ModelSpec spec;
  ThetaVB theta;
  double loglik = 0.0;
  double aic = 0.0;
  Eigen::MatrixXd info_matrix;     // observed information J, q x q
  std::vector<double> std_errors;  // empty when J is not positive definite
  bool se_available = false;
  bool converged = false;
  int iterations = 0;
  std::size_t n_used = 0;
};

struct ProfileResult {
  std::vector<double> grid;
  std::vector<double> logliks;  // NaN marks a grid point whose fit failed
  double best_nu = 0.0;
  FitResult best_fit;
};

/// Pack the active parameters in the fixed order (L_inf, K, t0, sigma2, rho[, lambda]).
Eigen::VectorXd pack_theta(const ThetaVB& theta, const ModelSpec& spec);
ThetaVB unpack_theta(const Eigen::VectorXd& v, const ModelSpec& spec);

/// Heuristic starting point (Ford-Walford style for beta, residual variance
/// for sigma2, rho = lambda = 0).
ThetaVB heuristic_start(const GrowthDataset& data);

/// Maximum-likelihood fit via multistart BFGS on log-transformed positive
/// parameters. Optional case weights define a weighted likelihood; an optional
/// initial point is tried as the first start.
FitResult fit(const ModelSpec& spec, const GrowthDataset& data, const FitConfig& config,
              const std::vector<double>* weights = nullptr, const ThetaVB* init = nullptr);

/// Profile the likelihood over the nu grid, warm-starting each grid point from
/// its predecessor. Grid points where every start fails are excluded from the
/// argmax; ties break toward smaller nu.
ProfileResult profile_nu(Family family, const GrowthDataset& data, const FitConfig& config);

/// Observed information: negated, symmetrized central finite differences of
/// the analytic gradient (step 1e-5 * (1 + |theta_k|)).
Eigen::MatrixXd observed_information(const ThetaVB& theta, const ModelSpec& spec,
                                     const GrowthDataset& data,
                                     const std::vector<double>* weights = nullptr);

struct BandPoint {
  double age = 0.0;
  double lower = 0.0;
  double mean = 0.0;
  double upper = 0.0;
};

/// Pointwise delta-method confidence band for the mean growth curve.
std::vector<BandPoint> confidence_band(const FitResult& fit, const std::vector<double>& ages,
                                       double alpha);

double aic(double loglik, int q);
double aic(const FitResult& fit);

}  // namespace vbgrowth
