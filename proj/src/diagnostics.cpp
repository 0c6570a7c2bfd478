#include "vbgrowth/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vbgrowth {

namespace {

// Cholesky factor of the observed information, shared by the curvature paths.
Eigen::LLT<Eigen::MatrixXd> info_llt(const FitResult& fit) {
  Eigen::LLT<Eigen::MatrixXd> llt(fit.info_matrix);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("diagnostics: observed information is not positive definite");
  return llt;
}

}  // namespace

Eigen::MatrixXd score_matrix(const FitResult& fit, const GrowthDataset& data) {
  const int q = fit.spec.active_params();
  Eigen::MatrixXd H(q, data.size());
  for (std::size_t t = 0; t < data.size(); ++t)
    H.col(t) = obs_loglik_grad(fit.theta, fit.spec, data.ages[t], data.lengths[t]);
  return H;
}

double normal_curvature(const FitResult& fit, const Eigen::MatrixXd& H,
                        const Eigen::VectorXd& d) {
  if (d.size() != H.cols())
    throw std::invalid_argument("normal_curvature: direction length mismatch");
  const auto llt = info_llt(fit);
  const Eigen::VectorXd u = H * d;
  return 2.0 * std::fabs(u.dot(llt.solve(u)));
}

InfluenceReport influence_analysis(const FitResult& fit, const GrowthDataset& data, double tau,
                                   CurvatureDirections dirs) {
  if (!(tau > 0.0)) throw std::invalid_argument("influence_analysis: tau must be positive");
  const std::size_t n = data.size();
  if (n < 2) throw std::invalid_argument("influence_analysis: need at least 2 observations");

  const Eigen::MatrixXd H = score_matrix(fit, data);
  const auto llt = info_llt(fit);
  // F = H' J^{-1} H = G'G with G = L^{-1} H; everything below works on the
  // small q x q Gram matrix instead of the n x n F.
  const Eigen::MatrixXd G = llt.matrixL().solve(H);
  const Eigen::MatrixXd gram = G * G.transpose();  // = G G', q x q, same spectrum as F

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("influence_analysis: eigen-decomposition failed");
  const Eigen::VectorXd evals = es.eigenvalues();
  const double lambda_max = evals.maxCoeff();
  const double fro = std::sqrt(evals.array().square().sum());  // ||F||_F = sqrt(tr F'F)
  if (!(fro > 0.0))
    throw std::runtime_error("influence_analysis: curvature matrix is identically zero");

  InfluenceReport rep;
  rep.tau = tau;
  rep.c_dmax = 2.0 * lambda_max;

  rep.d_max = G.transpose() * es.eigenvectors().col(es.eigenvectors().cols() - 1);
  rep.d_max.normalize();
  // sign convention: the largest-magnitude component is positive
  int imax = 0;
  rep.d_max.cwiseAbs().maxCoeff(&imax);
  if (rep.d_max[imax] < 0.0) rep.d_max = -rep.d_max;

  rep.B.resize(n);
  if (dirs == CurvatureDirections::BasisVectors) {
    for (std::size_t t = 0; t < n; ++t) rep.B[t] = G.col(t).squaredNorm() / fro;  // F_tt/||F||_F
  } else {
    for (std::size_t t = 0; t < n; ++t) rep.B[t] = std::fabs(rep.d_max[t]);
  }

  double mean = 0.0;
  for (double b : rep.B) mean += b;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double b : rep.B) var += (b - mean) * (b - mean);
  var /= static_cast<double>(n - 1);

  rep.m0_bar = mean;
  rep.var_m0 = var;
  rep.benchmark = mean + tau * std::sqrt(var);
  for (std::size_t t = 0; t < n; ++t)
    if (rep.B[t] > rep.benchmark) rep.influential.push_back(static_cast<int>(t));
  return rep;
}

double likelihood_displacement(const FitResult& base, const GrowthDataset& data,
                               const std::vector<double>& omega, const FitConfig& config) {
  if (omega.size() != data.size())
    throw std::invalid_argument("likelihood_displacement: omega length mismatch");
  for (double w : omega)
    if (!(w >= 0.0)) throw std::invalid_argument("likelihood_displacement: omega must be >= 0");

  const FitResult perturbed = fit(base.spec, data, config, &omega, &base.theta);
  const double ld = 2.0 * (base.loglik - loglik(perturbed.theta, base.spec, data));
  return std::max(0.0, ld);
}

double relative_change_percent(double full, double filtered) {
  return std::fabs(1.0 - filtered / full) * 100.0;
}

std::pair<FitResult, RCReport> filter_and_refit(const FitResult& fit_full,
                                                const GrowthDataset& data,
                                                const InfluenceReport& report,
                                                const FitConfig& config) {
  GrowthDataset kept;
  std::size_t next_influential = 0;
  for (std::size_t t = 0; t < data.size(); ++t) {
    if (next_influential < report.influential.size() &&
        report.influential[next_influential] == static_cast<int>(t)) {
      ++next_influential;
      continue;
    }
    kept.ages.push_back(data.ages[t]);
    kept.lengths.push_back(data.lengths[t]);
  }
  const std::size_t q = static_cast<std::size_t>(fit_full.spec.active_params());
  if (kept.size() < q + 1)
    throw std::runtime_error("filter_and_refit: too few observations left after filtering");

  const FitResult refit = report.influential.empty()
                              ? fit_full
                              : fit(fit_full.spec, kept, config, nullptr, &fit_full.theta);

  RCReport rc;
  rc.n_full = data.size();
  rc.n_filtered = kept.size();
  const char* names[3] = {"L_inf", "K", "t0"};
  const double full_vals[3] = {fit_full.theta.l_inf, fit_full.theta.k, fit_full.theta.t0};
  const double filt_vals[3] = {refit.theta.l_inf, refit.theta.k, refit.theta.t0};
  for (int j = 0; j < 3; ++j) {
    RCReport::Entry e;
    e.name = names[j];
    e.full = full_vals[j];
    e.filtered = filt_vals[j];
    e.rc_percent =
        report.influential.empty() ? 0.0 : relative_change_percent(full_vals[j], filt_vals[j]);
    rc.beta.push_back(e);
  }
  return {refit, rc};
}

}  // namespace vbgrowth
