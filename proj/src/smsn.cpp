#include "vbgrowth/smsn.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace vbgrowth {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488;
constexpr double kLog2Pi = 1.8378770664093454836;

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Continued fraction for the regularized incomplete beta (modified Lentz).
double betacf(double a, double b, double x) {
  const double eps = 3e-16;
  const double fpmin = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return h;
}

}  // namespace

const char* family_code(Family f) {
  switch (f) {
    case Family::Normal: return "N";
    case Family::SkewNormal: return "SN";
    case Family::StudentT: return "T";
    case Family::SkewT: return "ST";
  }
  return "?";
}

std::optional<Family> family_from_code(const std::string& code) {
  if (code == "N") return Family::Normal;
  if (code == "SN") return Family::SkewNormal;
  if (code == "T") return Family::StudentT;
  if (code == "ST") return Family::SkewT;
  return std::nullopt;
}

void ModelSpec::validate() const {
  if (is_mixture()) {
    require(nu.has_value(), "ModelSpec: nu required for T/ST families");
    require(std::isfinite(*nu) && *nu > 2.0, "ModelSpec: nu must be finite and > 2");
  } else {
    require(!nu.has_value(), "ModelSpec: nu only meaningful for T/ST families");
  }
}

double SkewNormalParams::delta() const { return shape / std::sqrt(1.0 + shape * shape); }

void SkewNormalParams::validate() const {
  require(std::isfinite(location), "SkewNormalParams: location must be finite");
  require(std::isfinite(scale) && scale > 0.0, "SkewNormalParams: scale must be positive");
  require(std::isfinite(shape), "SkewNormalParams: shape must be finite");
}

double SkewTParams::delta() const { return shape / std::sqrt(1.0 + shape * shape); }

void SkewTParams::validate() const {
  require(std::isfinite(location), "SkewTParams: location must be finite");
  require(std::isfinite(scale) && scale > 0.0, "SkewTParams: scale must be positive");
  require(std::isfinite(shape), "SkewTParams: shape must be finite");
  require(std::isfinite(dof) && dof > 0.0, "SkewTParams: dof must be positive");
}

double normal_pdf(double x) { return std::exp(-0.5 * x * x - 0.5 * kLog2Pi); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double log_normal_cdf(double x) {
  if (x > -30.0) return std::log(normal_cdf(x));
  // asymptotic tail: log phi(x) - log(-x) + log(1 - 1/x^2 + 3/x^4 - 15/x^6)
  const double x2 = x * x;
  return -0.5 * x2 - 0.5 * kLog2Pi - std::log(-x) +
         std::log1p(-1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2));
}

double inv_mills(double x) {
  if (x > -30.0) return normal_pdf(x) / normal_cdf(x);
  const double x2 = x * x;
  return -x / (1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2));
}

double normal_quantile(double p) {
  require(std::isfinite(p) && p > 0.0 && p < 1.0, "normal_quantile: p must lie in (0,1)");
  // Acklam's rational approximation, then one Halley polish.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = normal_cdf(x) - p;
  const double u = e / normal_pdf(x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

double regularized_incomplete_beta(double a, double b, double x) {
  require(a > 0.0 && b > 0.0, "regularized_incomplete_beta: a, b must be positive");
  require(x >= 0.0 && x <= 1.0, "regularized_incomplete_beta: x must lie in [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double student_t_pdf(double x, double dof) {
  require(std::isfinite(dof) && dof > 0.0, "student_t_pdf: dof must be positive");
  if (!std::isfinite(x)) return 0.0;
  const double a = 0.5 * (dof + 1.0);
  return std::exp(std::lgamma(a) - std::lgamma(0.5 * dof) - 0.5 * std::log(M_PI * dof) -
                  a * std::log1p(x * x / dof));
}

double student_t_cdf(double x, double dof) {
  require(std::isfinite(dof) && dof > 0.0, "student_t_cdf: dof must be positive");
  if (std::isnan(x)) throw std::invalid_argument("student_t_cdf: x must not be NaN");
  if (x == 0.0) return 0.5;
  if (std::isinf(x)) return x > 0.0 ? 1.0 : 0.0;
  if (dof > 2e5) {
    // Cornish-Fisher style large-dof expansion; error O(1/dof^2).
    const double p = normal_cdf(x) - normal_pdf(x) * (x * x * x + x) / (4.0 * dof);
    return std::fmin(1.0, std::fmax(0.0, p));
  }
  const double p = 0.5 * regularized_incomplete_beta(0.5 * dof, 0.5, dof / (dof + x * x));
  return x > 0.0 ? 1.0 - p : p;
}

double sn_pdf(double x, const SkewNormalParams& p) {
  p.validate();
  require(std::isfinite(x), "sn_pdf: x must be finite");
  const double z = (x - p.location) / p.scale;
  return 2.0 / p.scale * normal_pdf(z) * normal_cdf(p.shape * z);
}

double st_pdf(double x, const SkewTParams& p) {
  p.validate();
  require(std::isfinite(x), "st_pdf: x must be finite");
  const double z = (x - p.location) / p.scale;
  const double w = p.shape * z * std::sqrt((p.dof + 1.0) / (p.dof + z * z));
  return 2.0 / p.scale * student_t_pdf(z, p.dof) * student_t_cdf(w, p.dof + 1.0);
}

MixMoments mix_moments(const ModelSpec& spec) {
  spec.validate();
  if (!spec.is_mixture()) return MixMoments{1.0, 1.0};
  const double nu = *spec.nu;
  if (nu <= 2.0) throw std::invalid_argument("mix_moments: moments undefined for nu <= 2");
  MixMoments m;
  m.kappa1 = std::sqrt(0.5 * nu) * std::exp(std::lgamma(0.5 * (nu - 1.0)) - std::lgamma(0.5 * nu));
  m.kappa2 = nu / (nu - 2.0);
  return m;
}

std::vector<double> sample_smsn_error(std::size_t n, const std::vector<double>& sigma_t,
                                      double lambda, const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  require(n >= 1, "sample_smsn_error: n must be >= 1");
  require(sigma_t.size() == n || sigma_t.size() == 1,
          "sample_smsn_error: sigma_t must have length n or 1");
  for (double s : sigma_t) require(std::isfinite(s) && s > 0.0, "sample_smsn_error: sigma_t must be positive");
  require(std::isfinite(lambda), "sample_smsn_error: lambda must be finite");
  if (spec.has_shape() == false && lambda != 0.0)
    throw std::invalid_argument("sample_smsn_error: lambda must be 0 for N/T families");

  const double delta = lambda / std::sqrt(1.0 + lambda * lambda);
  const double comp = std::sqrt(1.0 - delta * delta);
  const double kappa1 = mix_moments(spec).kappa1;
  const double mean_shift = std::sqrt(2.0 / M_PI) * kappa1 * delta;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::optional<std::gamma_distribution<double>> mix;
  if (spec.is_mixture()) mix.emplace(0.5 * *spec.nu, 2.0 / *spec.nu);

  std::vector<double> out(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double s = sigma_t.size() == 1 ? sigma_t[0] : sigma_t[t];
    const double u0 = gauss(rng);
    const double u1 = gauss(rng);
    const double e = s * (delta * std::fabs(u0) + comp * u1);
    const double v = mix ? (*mix)(rng) : 1.0;
    out[t] = e / std::sqrt(v) - mean_shift * s;
  }
  return out;
}

}  // namespace vbgrowth
