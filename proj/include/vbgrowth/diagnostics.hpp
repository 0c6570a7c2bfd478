#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "vbgrowth/estimator.hpp"

namespace vbgrowth {

/// How per-observation conformal curvatures are read off: at the n standard
/// basis directions (default) or from the components of d_max.
enum class CurvatureDirections { BasisVectors, MaxDirection };

struct InfluenceReport {
  std::vector<double> B;  // conformal curvature per observation, in [0,1]
  double m0_bar = 0.0;
  double var_m0 = 0.0;
  double benchmark = 0.0;
  double tau = 0.0;
  std::vector<int> influential;  // sorted indices with B_t > benchmark
  Eigen::VectorXd d_max;         // unit direction of maximum curvature
  double c_dmax = 0.0;           // C_d at d_max (= 2 * lambda_max(F))
};

struct RCReport {
  struct Entry {
    std::string name;
    double full = 0.0;
    double filtered = 0.0;
    double rc_percent = 0.0;
  };
  std::vector<Entry> beta;  // L_inf, K, t0
  std::size_t n_full = 0;
  std::size_t n_filtered = 0;
};

/// Columns are per-observation scores at theta-hat; rows follow the fixed
/// parameter ordering. Under case weights this is the cross-derivative H.
Eigen::MatrixXd score_matrix(const FitResult& fit, const GrowthDataset& data);

/// C_d = 2 |d' H' J^{-1} H d| for a unit direction d.
double normal_curvature(const FitResult& fit, const Eigen::MatrixXd& H, const Eigen::VectorXd& d);

InfluenceReport influence_analysis(const FitResult& fit, const GrowthDataset& data, double tau,
                                   CurvatureDirections dirs = CurvatureDirections::BasisVectors);

/// LD(omega) = 2 { l(theta_hat) - l(theta_hat_omega) }, with the perturbed
/// estimate maximizing the omega-weighted likelihood.
double likelihood_displacement(const FitResult& fit, const GrowthDataset& data,
                               const std::vector<double>& omega, const FitConfig& config);

/// RC(b0, b) = |1 - b0/b| * 100 for each growth-curve parameter.
double relative_change_percent(double full, double filtered);

/// Refit on the complement of the influential set and report per-parameter
/// relative changes for (L_inf, K, t0).
std::pair<FitResult, RCReport> filter_and_refit(const FitResult& fit, const GrowthDataset& data,
                                                const InfluenceReport& report,
                                                const FitConfig& config);

}  // namespace vbgrowth
