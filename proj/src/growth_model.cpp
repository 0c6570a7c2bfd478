#include "vbgrowth/growth_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace vbgrowth {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Log-density of the standardized family member with shape lambda, plus its
// derivatives in z and lambda. For N/T the lambda derivative is zero.
struct StdLogPdf {
  double logg = 0.0;
  double dz = 0.0;
  double dlambda = 0.0;
};

StdLogPdf std_logpdf(double z, double lambda, const ModelSpec& spec) {
  StdLogPdf r;
  switch (spec.family) {
    case Family::Normal: {
      r.logg = -0.5 * z * z - 0.5 * kLog2Pi;
      r.dz = -z;
      break;
    }
    case Family::SkewNormal: {
      const double lz = lambda * z;
      r.logg = std::log(2.0) - 0.5 * z * z - 0.5 * kLog2Pi + log_normal_cdf(lz);
      const double mills = inv_mills(lz);
      r.dz = -z + lambda * mills;
      r.dlambda = z * mills;
      break;
    }
    case Family::StudentT: {
      const double nu = *spec.nu;
      const double a = 0.5 * (nu + 1.0);
      r.logg = std::lgamma(a) - std::lgamma(0.5 * nu) - 0.5 * std::log(M_PI * nu) -
               a * std::log1p(z * z / nu);
      r.dz = -(nu + 1.0) * z / (nu + z * z);
      break;
    }
    case Family::SkewT: {
      const double nu = *spec.nu;
      const double a = 0.5 * (nu + 1.0);
      const double nz2 = nu + z * z;
      const double w = lambda * z * std::sqrt((nu + 1.0) / nz2);
      double tw_cdf = student_t_cdf(w, nu + 1.0);
      if (tw_cdf < 1e-300) tw_cdf = 1e-300;
      const double ratio = student_t_pdf(w, nu + 1.0) / tw_cdf;
      r.logg = std::log(2.0) + std::lgamma(a) - std::lgamma(0.5 * nu) -
               0.5 * std::log(M_PI * nu) - a * std::log1p(z * z / nu) + std::log(tw_cdf);
      const double dw_dz = lambda * std::sqrt(nu + 1.0) * nu * std::pow(nz2, -1.5);
      r.dz = -(nu + 1.0) * z / nz2 + ratio * dw_dz;
      r.dlambda = ratio * z * std::sqrt((nu + 1.0) / nz2);
      break;
    }
  }
  return r;
}

struct ObsEval {
  double ll = 0.0;
  Eigen::VectorXd grad;  // empty unless requested
};

ObsEval eval_obs(const ThetaVB& theta, const ModelSpec& spec, double age, double length,
                 bool want_grad) {
  const double s = sigma_t(theta, age);
  const double eta = vb_mean(theta, age);
  const MixMoments mm = mix_moments(spec);
  const double akappa = std::sqrt(2.0 / M_PI) * mm.kappa1;
  const double delta = theta.lambda / std::sqrt(1.0 + theta.lambda * theta.lambda);
  const double mu = -akappa * s * delta;
  const double z = (length - eta - mu) / s;

  const StdLogPdf g = std_logpdf(z, theta.lambda, spec);

  ObsEval out;
  out.ll = -std::log(s) + g.logg;
  if (!want_grad) return out;

  const int q = spec.active_params();
  out.grad.resize(q);
  const Eigen::Vector3d deta = vb_mean_grad(theta, age);
  for (int j = 0; j < 3; ++j) out.grad[j] = g.dz * (-deta[j] / s);

  // sigma2 and rho enter through both the scale and the location correction.
  const double ds_dsigma2 = s / (2.0 * theta.sigma2);
  const double ds_drho = s * 0.5 * std::log(age);
  const auto scale_term = [&](double ds) {
    const double dmu = -akappa * delta * ds;
    const double dz = (-dmu - z * ds) / s;
    return -ds / s + g.dz * dz;
  };
  out.grad[3] = scale_term(ds_dsigma2);
  out.grad[4] = scale_term(ds_drho);

  if (spec.has_shape()) {
    const double ddelta = std::pow(1.0 + theta.lambda * theta.lambda, -1.5);
    const double dmu_dlambda = -akappa * s * ddelta;
    out.grad[5] = g.dz * (-dmu_dlambda / s) + g.dlambda;
  }
  return out;
}

}  // namespace

void GrowthDataset::validate(std::size_t min_obs) const {
  require(ages.size() == lengths.size(), "GrowthDataset: ages and lengths differ in length");
  require(ages.size() >= min_obs,
          "GrowthDataset: need at least " + std::to_string(min_obs) + " observations");
  for (std::size_t t = 0; t < ages.size(); ++t) {
    require(std::isfinite(ages[t]) && ages[t] > 0.0,
            "GrowthDataset: age must be positive at row " + std::to_string(t));
    require(std::isfinite(lengths[t]) && lengths[t] > 0.0,
            "GrowthDataset: length must be positive at row " + std::to_string(t));
  }
}

void ThetaVB::validate(const ModelSpec& spec) const {
  spec.validate();
  require(std::isfinite(l_inf) && l_inf > 0.0, "ThetaVB: L_inf must be positive");
  require(std::isfinite(k) && k > 0.0, "ThetaVB: K must be positive");
  require(std::isfinite(t0), "ThetaVB: t0 must be finite");
  require(std::isfinite(sigma2) && sigma2 > 0.0, "ThetaVB: sigma2 must be positive");
  require(std::isfinite(rho), "ThetaVB: rho must be finite");
  require(std::isfinite(lambda), "ThetaVB: lambda must be finite");
  if (!spec.has_shape())
    require(lambda == 0.0, "ThetaVB: lambda must be 0 for N/T families");
}

double vb_mean(const ThetaVB& theta, double age) {
  require(std::isfinite(age), "vb_mean: age must be finite");
  return theta.l_inf * (1.0 - std::exp(-theta.k * (age - theta.t0)));
}

Eigen::Vector3d vb_mean_grad(const ThetaVB& theta, double age) {
  const double e = std::exp(-theta.k * (age - theta.t0));
  Eigen::Vector3d g;
  g[0] = 1.0 - e;
  g[1] = theta.l_inf * (age - theta.t0) * e;
  g[2] = -theta.l_inf * theta.k * e;
  return g;
}

double sigma_t(const ThetaVB& theta, double age) {
  require(std::isfinite(age) && age > 0.0, "sigma_t: age must be positive");
  return std::sqrt(theta.sigma2 * std::pow(age, theta.rho));
}

double mu_t(const ThetaVB& theta, const ModelSpec& spec, double age) {
  const MixMoments mm = mix_moments(spec);
  const double delta = theta.lambda / std::sqrt(1.0 + theta.lambda * theta.lambda);
  return -std::sqrt(2.0 / M_PI) * mm.kappa1 * sigma_t(theta, age) * delta;
}

double response_variance(const ThetaVB& theta, const ModelSpec& spec, double age) {
  const MixMoments mm = mix_moments(spec);
  const double delta = theta.lambda / std::sqrt(1.0 + theta.lambda * theta.lambda);
  const double s = sigma_t(theta, age);
  return s * s * (mm.kappa2 - (2.0 / M_PI) * mm.kappa1 * mm.kappa1 * delta * delta);
}

double obs_loglik(const ThetaVB& theta, const ModelSpec& spec, double age, double length) {
  theta.validate(spec);
  const double ll = eval_obs(theta, spec, age, length, false).ll;
  if (!std::isfinite(ll)) throw std::runtime_error("obs_loglik: non-finite log-density");
  return ll;
}

Eigen::VectorXd obs_loglik_grad(const ThetaVB& theta, const ModelSpec& spec, double age,
                                double length) {
  theta.validate(spec);
  return eval_obs(theta, spec, age, length, true).grad;
}

double loglik(const ThetaVB& theta, const ModelSpec& spec, const GrowthDataset& data,
              const std::vector<double>* weights) {
  theta.validate(spec);
  double sum = 0.0;
  for (std::size_t t = 0; t < data.size(); ++t) {
    const double w = weights ? (*weights)[t] : 1.0;
    if (w == 0.0) continue;
    const double ll = eval_obs(theta, spec, data.ages[t], data.lengths[t], false).ll;
    if (!std::isfinite(ll))
      throw std::runtime_error("loglik: non-finite term at observation " + std::to_string(t));
    sum += w * ll;
  }
  return sum;
}

Eigen::VectorXd loglik_grad(const ThetaVB& theta, const ModelSpec& spec,
                            const GrowthDataset& data, const std::vector<double>* weights) {
  Eigen::VectorXd g;
  loglik_with_grad(theta, spec, data, g, weights);
  return g;
}

double loglik_with_grad(const ThetaVB& theta, const ModelSpec& spec, const GrowthDataset& data,
                        Eigen::VectorXd& grad, const std::vector<double>* weights) {
  theta.validate(spec);
  if (weights) require(weights->size() == data.size(), "loglik: weight vector length mismatch");
  grad = Eigen::VectorXd::Zero(spec.active_params());
  double sum = 0.0;
  for (std::size_t t = 0; t < data.size(); ++t) {
    const double w = weights ? (*weights)[t] : 1.0;
    if (w == 0.0) continue;
    const ObsEval ev = eval_obs(theta, spec, data.ages[t], data.lengths[t], true);
    if (!std::isfinite(ev.ll))
      throw std::runtime_error("loglik: non-finite term at observation " + std::to_string(t));
    sum += w * ev.ll;
    grad += w * ev.grad;
  }
  return sum;
}

}  // namespace vbgrowth
