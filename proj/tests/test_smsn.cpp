#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "vbgrowth/smsn.hpp"

using namespace vbgrowth;

TEST_CASE("sn_pdf basic values") {
  CHECK(sn_pdf(0.0, {0.0, 1.0, 0.0}) == doctest::Approx(0.3989422804014327).epsilon(1e-12));
  // Phi(0) = 1/2 cancels the factor 2 at the location for any shape
  CHECK(sn_pdf(0.0, {0.0, 1.0, 3.0}) == doctest::Approx(0.3989422804014327).epsilon(1e-12));
  // frozen from the quadrature oracle: 2*phi(1)*Phi(2)
  const double expected = 0.4729317172174726;
  CHECK(sn_pdf(1.0, {0.0, 1.0, 2.0}) == doctest::Approx(expected).epsilon(1e-13));
  CHECK(std::fabs(sn_pdf(1.0, {0.0, 1.0, 2.0}) -
                  2.0 * oracles::phi(1.0) * oracles::normal_cdf_quad(2.0)) < 1e-12);
}

TEST_CASE("sn_pdf rejects bad input") {
  CHECK_THROWS(sn_pdf(std::numeric_limits<double>::quiet_NaN(), {0.0, 1.0, 0.0}));
  CHECK_THROWS(sn_pdf(0.0, {0.0, -1.0, 0.0}));
  CHECK_THROWS(sn_pdf(0.0, {0.0, 0.0, 0.0}));
}

TEST_CASE("st_pdf reduces to Student-t at lambda=0") {
  CHECK(st_pdf(0.0, {0.0, 1.0, 0.0, 5.0}) ==
        doctest::Approx(0.3796066898224944).epsilon(1e-13));
  for (double x : {-4.0, -1.3, 0.2, 2.7, 9.0})
    CHECK(std::fabs(st_pdf(x, {0.0, 1.0, 0.0, 7.5}) - student_t_pdf(x, 7.5)) < 1e-14);
}

TEST_CASE("st_pdf integrates to one") {
  const double total = oracles::integrate_real_line(
      [](double x) { return st_pdf(x, {0.0, 1.0, 2.0, 4.0}); });
  CHECK(std::fabs(total - 1.0) < 1e-8);
}

TEST_CASE("st_pdf matches the sampler (CDF at 1.5, lambda=1, nu=10)") {
  ModelSpec spec{Family::SkewT, 10.0};
  const auto draws = sample_smsn_error(2'000'000, {1.0}, 1.0, spec, 20240517ULL);
  std::size_t below = 0;
  for (double d : draws)
    if (d <= 1.5) ++below;
  const double empirical = static_cast<double>(below) / draws.size();
  // location of the sampled errors is the zero-mean correction
  const double loc = -std::sqrt(2.0 / M_PI) * mix_moments(spec).kappa1 * (1.0 / std::sqrt(2.0));
  const double model = oracles::adaptive_simpson(
      [&](double x) { return st_pdf(x, {loc, 1.0, 1.0, 10.0}); }, -60.0, 1.5, 1e-11, 48);
  CHECK(std::fabs(empirical - model) < 1e-3);
}

TEST_CASE("student_t_cdf values and properties") {
  CHECK(student_t_cdf(0.0, 7.0) == 0.5);
  CHECK(student_t_cdf(std::numeric_limits<double>::infinity(), 3.0) == 1.0);
  // frozen from the quadrature oracle
  CHECK(student_t_cdf(2.0, 10.0) == doctest::Approx(0.9633059826146298).epsilon(1e-13));
  CHECK(std::fabs(student_t_cdf(2.0, 10.0) - oracles::student_t_cdf_quad(2.0, 10.0)) < 1e-12);

  double prev = 0.0;
  for (double x = -9.0; x <= 9.0; x += 0.25) {
    const double p = student_t_cdf(x, 4.5);
    CHECK(p >= prev);
    prev = p;
    CHECK(std::fabs(student_t_cdf(-x, 4.5) - (1.0 - p)) < 1e-13);
  }
  CHECK_THROWS(student_t_cdf(1.0, 0.0));
  CHECK_THROWS(student_t_cdf(1.0, -3.0));
}

TEST_CASE("mix_moments") {
  const MixMoments sn = mix_moments({Family::SkewNormal, std::nullopt});
  CHECK(sn.kappa1 == 1.0);
  CHECK(sn.kappa2 == 1.0);

  const MixMoments t37 = mix_moments({Family::StudentT, 37.0});
  CHECK(std::fabs(t37.kappa1 - 1.021) < 5e-4);
  CHECK(std::fabs(t37.kappa2 - 1.057) < 5e-4);
  CHECK(t37.kappa1 == doctest::Approx(1.0208575805561740).epsilon(1e-12));

  const MixMoments st51 = mix_moments({Family::SkewT, 51.0});
  CHECK(std::fabs(st51.kappa1 - 1.015) < 5e-4);
  CHECK(std::fabs(st51.kappa2 - 1.041) < 5e-4);

  CHECK_THROWS(mix_moments({Family::StudentT, 2.0}));
}

TEST_CASE("sampler moments and determinism") {
  const std::size_t n = 1'000'000;

  SUBCASE("zero mean, normal family") {
    const auto d = sample_smsn_error(n, {1.0}, 0.0, {Family::Normal, std::nullopt}, 7ULL);
    double mean = 0.0;
    for (double v : d) mean += v;
    mean /= n;
    CHECK(std::fabs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
  }

  SUBCASE("variance matches the moment formula, ST nu=10 lambda=2") {
    ModelSpec spec{Family::SkewT, 10.0};
    const auto d = sample_smsn_error(n, {1.0}, 2.0, spec, 11ULL);
    double mean = 0.0;
    for (double v : d) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : d) var += (v - mean) * (v - mean);
    var /= (n - 1);
    const double delta2 = 4.0 / 5.0;  // (lambda/sqrt(1+lambda^2))^2
    const MixMoments mm = mix_moments(spec);
    const double expected = mm.kappa2 - 2.0 / M_PI * mm.kappa1 * mm.kappa1 * delta2;
    CHECK(std::fabs(var - expected) < 0.01 * expected);
    CHECK(std::fabs(mean) < 5.0 * std::sqrt(expected / n));
  }

  SUBCASE("same seed, same draws") {
    const auto a = sample_smsn_error(1000, {2.0}, 1.3, {Family::SkewT, 8.0}, 99ULL);
    const auto b = sample_smsn_error(1000, {2.0}, 1.3, {Family::SkewT, 8.0}, 99ULL);
    CHECK(a == b);
  }

  SUBCASE("invalid parameters rejected") {
    CHECK_THROWS(sample_smsn_error(10, {1.0}, 1.0, {Family::StudentT, 10.0}, 1ULL));
    CHECK_THROWS(sample_smsn_error(10, {-1.0}, 0.0, {Family::Normal, std::nullopt}, 1ULL));
    CHECK_THROWS(sample_smsn_error(10, {1.0}, 0.0, {Family::SkewT, 1.5}, 1ULL));
  }
}

TEST_CASE("normalization across families and shapes") {
  for (double lambda : {0.0, 0.873, -1.5}) {
    for (double nu : {4.0, 25.0}) {
      const double total = oracles::integrate_real_line(
          [&](double x) { return st_pdf(x, {0.3, 1.7, lambda, nu}); });
      CAPTURE(lambda);
      CAPTURE(nu);
      CHECK(std::fabs(total - 1.0) < 1e-8);
    }
    const double sn_total = oracles::integrate_real_line(
        [&](double x) { return sn_pdf(x, {-0.5, 2.2, lambda}); });
    CHECK(std::fabs(sn_total - 1.0) < 1e-8);
  }
}

TEST_CASE("reduction chain ST -> SN -> N") {
  // ST(lambda=0, nu) equals Student-t pointwise
  for (double x = -10.0; x <= 10.0; x += 0.5)
    CHECK(std::fabs(st_pdf(x, {0.0, 1.0, 0.0, 9.0}) - student_t_pdf(x, 9.0)) < 1e-12);

  // ST(lambda, nu=1e6) approaches SN(lambda)
  for (double lambda : {0.5, 2.0, -1.5}) {
    double max_diff = 0.0;
    for (double x = -10.0; x <= 10.0; x += 0.125) {
      const double diff =
          std::fabs(st_pdf(x, {0.0, 1.0, lambda, 1e6}) - sn_pdf(x, {0.0, 1.0, lambda}));
      max_diff = std::max(max_diff, diff);
    }
    CHECK(max_diff < 1e-5);
  }

  // SN(lambda=0) equals the normal density
  for (double x = -8.0; x <= 8.0; x += 0.25)
    CHECK(std::fabs(sn_pdf(x, {0.0, 1.0, 0.0}) - normal_pdf(x)) < 1e-14);
}
