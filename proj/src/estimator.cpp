#include "vbgrowth/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "vbgrowth/optim.hpp"

namespace vbgrowth {

namespace {

constexpr double kPositiveFloor = 1e-12;

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Optimizer coordinates: (log L_inf, log K, t0, log sigma2, rho[, lambda]).
bool is_log_coord(int j) { return j == 0 || j == 1 || j == 3; }

Eigen::VectorXd to_internal(const Eigen::VectorXd& natural) {
  Eigen::VectorXd x = natural;
  for (int j = 0; j < x.size(); ++j)
    if (is_log_coord(j)) x[j] = std::log(natural[j]);
  return x;
}

// Positive parameters are floored at 1e-12; within the floored region the
// chain-rule factor is zero, which lets the optimizer settle on degenerate
// (e.g. noiseless) problems.
void from_internal(const Eigen::VectorXd& x, Eigen::VectorXd& natural, Eigen::VectorXd& dndx) {
  natural.resize(x.size());
  dndx.resize(x.size());
  for (int j = 0; j < x.size(); ++j) {
    if (is_log_coord(j)) {
      const double v = std::exp(x[j]);
      if (v < kPositiveFloor) {
        natural[j] = kPositiveFloor;
        dndx[j] = 0.0;
      } else {
        natural[j] = v;
        dndx[j] = v;
      }
    } else {
      natural[j] = x[j];
      dndx[j] = 1.0;
    }
  }
}

}  // namespace

std::vector<double> FitConfig::effective_nu_grid() const {
  if (!nu_grid.empty()) return nu_grid;
  std::vector<double> g;
  for (int v = 3; v <= 60; ++v) g.push_back(static_cast<double>(v));
  return g;
}

void FitConfig::validate() const {
  require(max_iter > 0, "FitConfig: max_iter must be positive");
  require(grad_tol > 0.0 && param_tol > 0.0, "FitConfig: tolerances must be positive");
  require(n_starts >= 1, "FitConfig: n_starts must be >= 1");
  const auto g = effective_nu_grid();
  require(!g.empty(), "FitConfig: nu grid must be nonempty");
  for (std::size_t i = 0; i < g.size(); ++i) {
    require(g[i] > 2.0, "FitConfig: nu grid values must exceed 2");
    if (i > 0) require(g[i] > g[i - 1], "FitConfig: nu grid must be sorted ascending");
  }
}

Eigen::VectorXd pack_theta(const ThetaVB& theta, const ModelSpec& spec) {
  Eigen::VectorXd v(spec.active_params());
  v[0] = theta.l_inf;
  v[1] = theta.k;
  v[2] = theta.t0;
  v[3] = theta.sigma2;
  v[4] = theta.rho;
  if (spec.has_shape()) v[5] = theta.lambda;
  return v;
}

ThetaVB unpack_theta(const Eigen::VectorXd& v, const ModelSpec& spec) {
  require(v.size() == spec.active_params(), "unpack_theta: wrong vector length");
  ThetaVB t;
  t.l_inf = v[0];
  t.k = v[1];
  t.t0 = v[2];
  t.sigma2 = v[3];
  t.rho = v[4];
  t.lambda = spec.has_shape() ? v[5] : 0.0;
  return t;
}

ThetaVB heuristic_start(const GrowthDataset& data) {
  const std::size_t n = data.size();
  ThetaVB t;
  t.l_inf = 1.05 * *std::max_element(data.lengths.begin(), data.lengths.end());

  // log(1 - y/L_inf) = -K*(x - t0): ordinary least squares on age.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ratio = std::clamp(data.lengths[i] / t.l_inf, 1e-6, 0.999);
    const double w = std::log1p(-ratio);
    sx += data.ages[i];
    sy += w;
    sxx += data.ages[i] * data.ages[i];
    sxy += data.ages[i] * w;
  }
  const double denom = n * sxx - sx * sx;
  double slope = denom != 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
  const double intercept = (sy - slope * sx) / n;
  t.k = slope < -1e-6 ? -slope : 0.1;
  t.t0 = intercept / t.k;

  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = data.lengths[i] - vb_mean(t, data.ages[i]);
    ss += r * r;
  }
  t.sigma2 = std::max(ss / n, 1e-6);
  return t;
}

FitResult fit(const ModelSpec& spec, const GrowthDataset& data, const FitConfig& config,
              const std::vector<double>* weights, const ThetaVB* init) {
  spec.validate();
  config.validate();
  data.validate(static_cast<std::size_t>(spec.active_params()));
  if (weights) {
    require(weights->size() == data.size(), "fit: weight vector length mismatch");
    for (double w : *weights) require(std::isfinite(w) && w >= 0.0, "fit: weights must be >= 0");
  }

  ObjectiveFn objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    Eigen::VectorXd natural, dndx;
    from_internal(x, natural, dndx);
    const ThetaVB theta = unpack_theta(natural, spec);
    Eigen::VectorXd g;
    const double ll = loglik_with_grad(theta, spec, data, g, weights);
    grad = -(g.array() * dndx.array()).matrix();
    return -ll;
  };

  // Assemble starts: caller-supplied point, heuristic, seeded perturbations.
  std::vector<ThetaVB> starts;
  if (init) starts.push_back(*init);
  starts.push_back(heuristic_start(data));
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  while (starts.size() < static_cast<std::size_t>(config.n_starts) + (init ? 1 : 0)) {
    ThetaVB p = starts[init ? 1 : 0];
    p.l_inf *= std::exp(0.1 * gauss(rng));
    p.k *= std::exp(0.3 * gauss(rng));
    p.t0 += 0.5 * gauss(rng);
    p.sigma2 *= std::exp(0.5 * gauss(rng));
    p.rho += 0.2 * gauss(rng);
    if (spec.has_shape()) p.lambda += 0.5 * gauss(rng);
    starts.push_back(p);
  }

  OptimOptions opt;
  opt.max_iter = config.max_iter;
  opt.grad_tol = config.grad_tol;
  opt.param_tol = config.param_tol;

  bool have_best = false;
  OptimResult best;
  std::string trace;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    const OptimResult r = bfgs_minimize(objective, to_internal(pack_theta(starts[s], spec)), opt);
    trace += "start " + std::to_string(s) + ": " + r.message + "; ";
    if (r.converged && (!have_best || r.f < best.f)) {
      best = r;
      have_best = true;
    }
  }
  if (!have_best) throw std::runtime_error("fit: no start converged [" + trace + "]");

  Eigen::VectorXd natural, dndx;
  from_internal(best.x, natural, dndx);

  FitResult out;
  out.spec = spec;
  out.theta = unpack_theta(natural, spec);
  out.loglik = -best.f;
  out.converged = true;
  out.iterations = best.iterations;
  out.aic = aic(out.loglik, spec.active_params());
  out.n_used = data.size();
  if (weights) {
    out.n_used = 0;
    for (double w : *weights)
      if (w > 0.0) ++out.n_used;
  }

  out.info_matrix = observed_information(out.theta, spec, data, weights);
  Eigen::LLT<Eigen::MatrixXd> llt(out.info_matrix);
  if (llt.info() == Eigen::Success) {
    const Eigen::MatrixXd cov =
        llt.solve(Eigen::MatrixXd::Identity(out.info_matrix.rows(), out.info_matrix.cols()));
    out.std_errors.resize(cov.rows());
    for (int j = 0; j < cov.rows(); ++j) out.std_errors[j] = std::sqrt(cov(j, j));
    out.se_available = true;
  }
  return out;
}

ProfileResult profile_nu(Family family, const GrowthDataset& data, const FitConfig& config) {
  require(family == Family::StudentT || family == Family::SkewT,
          "profile_nu: family must be T or ST");
  config.validate();

  ProfileResult res;
  res.grid = config.effective_nu_grid();
  res.logliks.assign(res.grid.size(), std::numeric_limits<double>::quiet_NaN());

  bool have_prev = false;
  ThetaVB prev;
  bool have_best = false;
  for (std::size_t i = 0; i < res.grid.size(); ++i) {
    ModelSpec spec{family, res.grid[i]};
    try {
      const FitResult fr = fit(spec, data, config, nullptr, have_prev ? &prev : nullptr);
      res.logliks[i] = fr.loglik;
      prev = fr.theta;
      have_prev = true;
      if (!have_best || fr.loglik > res.best_fit.loglik) {
        res.best_fit = fr;
        res.best_nu = res.grid[i];
        have_best = true;
      }
    } catch (const std::exception&) {
      // flagged by the NaN entry; the profile run continues
    }
  }
  if (!have_best) throw std::runtime_error("profile_nu: every grid point failed");
  return res;
}

Eigen::MatrixXd observed_information(const ThetaVB& theta, const ModelSpec& spec,
                                     const GrowthDataset& data,
                                     const std::vector<double>* weights) {
  theta.validate(spec);
  const int q = spec.active_params();
  const Eigen::VectorXd center = pack_theta(theta, spec);
  Eigen::MatrixXd A(q, q);
  for (int k = 0; k < q; ++k) {
    double h = 1e-5 * (1.0 + std::fabs(center[k]));
    if (is_log_coord(k) || k == 3) h = std::min(h, 0.5 * center[k]);  // keep positives positive
    Eigen::VectorXd vp = center, vm = center;
    vp[k] += h;
    vm[k] -= h;
    const Eigen::VectorXd gp = loglik_grad(unpack_theta(vp, spec), spec, data, weights);
    const Eigen::VectorXd gm = loglik_grad(unpack_theta(vm, spec), spec, data, weights);
    A.col(k) = (gp - gm) / (2.0 * h);
  }
  return -0.5 * (A + A.transpose());
}

std::vector<BandPoint> confidence_band(const FitResult& fit, const std::vector<double>& ages,
                                       double alpha) {
  require(alpha > 0.0 && alpha <= 1.0, "confidence_band: alpha must lie in (0,1]");
  Eigen::LLT<Eigen::MatrixXd> llt(fit.info_matrix);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("confidence_band: information matrix is singular");
  const Eigen::MatrixXd cov =
      llt.solve(Eigen::MatrixXd::Identity(fit.info_matrix.rows(), fit.info_matrix.cols()));
  const Eigen::Matrix3d cov_beta = cov.topLeftCorner<3, 3>();
  const double z = alpha == 1.0 ? 0.0 : normal_quantile(1.0 - 0.5 * alpha);

  std::vector<BandPoint> band;
  band.reserve(ages.size());
  for (double age : ages) {
    require(age > 0.0, "confidence_band: ages must be positive");
    const Eigen::Vector3d g = vb_mean_grad(fit.theta, age);
    const double var = g.dot(cov_beta * g);
    const double half = z * std::sqrt(std::max(var, 0.0));
    const double m = vb_mean(fit.theta, age);
    band.push_back({age, m - half, m, m + half});
  }
  return band;
}

double aic(double loglik, int q) { return -2.0 * (loglik - q); }

double aic(const FitResult& fit) { return aic(fit.loglik, fit.spec.active_params()); }

}  // namespace vbgrowth
