#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace vbgrowth {

enum class Family { Normal, SkewNormal, StudentT, SkewT };

const char* family_code(Family f);          // "N", "SN", "T", "ST"
std::optional<Family> family_from_code(const std::string& code);

/// Error family plus its fixed hyperparameter (nu for the mixture members).
struct ModelSpec {
  Family family = Family::Normal;
  std::optional<double> nu;  // required for T/ST, must exceed 2

  bool is_mixture() const { return family == Family::StudentT || family == Family::SkewT; }
  bool has_shape() const { return family == Family::SkewNormal || family == Family::SkewT; }
  int active_params() const { return has_shape() ? 6 : 5; }  // q
  void validate() const;
};

struct SkewNormalParams {
  double location = 0.0;
  double scale = 1.0;  // sigma
  double shape = 0.0;  // lambda
  double delta() const;
  void validate() const;
};

struct SkewTParams {
  double location = 0.0;
  double scale = 1.0;
  double shape = 0.0;
  double dof = 4.0;  // nu
  double delta() const;
  void validate() const;
};

/// kappa_k = E[v^(-k/2)] of the mixing factor.
struct MixMoments {
  double kappa1 = 1.0;
  double kappa2 = 1.0;
};

// Scalar special functions.
double normal_pdf(double x);
double normal_cdf(double x);
double normal_quantile(double p);
double log_normal_cdf(double x);
double inv_mills(double x);  // phi(x)/Phi(x), stable for x << 0
double regularized_incomplete_beta(double a, double b, double x);

double student_t_pdf(double x, double dof);
double student_t_cdf(double x, double dof);

double sn_pdf(double x, const SkewNormalParams& p);
double st_pdf(double x, const SkewTParams& p);

MixMoments mix_moments(const ModelSpec& spec);

/// Zero-mean SMSN error draws with per-observation scales sigma_t.
/// Uses the |U0| convolution construction for the skew-normal core and
/// Gamma(nu/2, nu/2) mixing for T/ST. Deterministic per seed.
std::vector<double> sample_smsn_error(std::size_t n, const std::vector<double>& sigma_t,
                                      double lambda, const ModelSpec& spec, std::uint64_t seed);

}  // namespace vbgrowth
