#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "vbgrowth/report_io.hpp"

using namespace vbgrowth;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("vbgrowth_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace

TEST_CASE("csv round trip is bit-identical") {
  const fs::path dir = temp_dir("roundtrip");
  ThetaVB theta{35.137, 0.083, -3.075, 38.087, -0.705, 0.873};
  ModelSpec spec{Family::SkewT, 51.0};
  const GrowthDataset d =
      generate_synthetic(theta, spec, oracles::uniform_ages(2687, 1.0, 61.0, 1ULL), 2ULL, 0.5);

  const fs::path a = dir / "a.csv";
  save_csv(d, a.string());
  const GrowthDataset back = load_csv(a.string());
  REQUIRE(back.size() == d.size());
  for (std::size_t t = 0; t < d.size(); ++t) {
    CHECK(back.ages[t] == d.ages[t]);
    CHECK(back.lengths[t] == d.lengths[t]);
  }

  const fs::path b = dir / "b.csv";
  save_csv(back, b.string());
  CHECK(slurp(a) == slurp(b));
}

TEST_CASE("load_csv rejects malformed input with line numbers") {
  const fs::path dir = temp_dir("badcsv");

  SUBCASE("invalid rows are listed by line") {
    const fs::path p = dir / "bad.csv";
    spit(p, "age,length\n5,20\nx,21\n7,-3\n0,22\n9,30\n");
    try {
      load_csv(p.string());
      FAIL("expected invalid_argument");
    } catch (const std::invalid_argument& e) {
      const std::string msg = e.what();
      CHECK(msg.find("3") != std::string::npos);
      CHECK(msg.find("4") != std::string::npos);
      CHECK(msg.find("5") != std::string::npos);
    }
  }

  SUBCASE("missing columns") {
    const fs::path p = dir / "cols.csv";
    spit(p, "age,width\n5,20\n");
    CHECK_THROWS_AS(load_csv(p.string()), std::invalid_argument);
  }

  SUBCASE("empty file and missing file") {
    const fs::path p = dir / "empty.csv";
    spit(p, "");
    CHECK_THROWS_AS(load_csv(p.string()), std::invalid_argument);
    CHECK_THROWS_AS(load_csv((dir / "nope.csv").string()), std::invalid_argument);
  }

  SUBCASE("header only") {
    const fs::path p = dir / "header.csv";
    spit(p, "age,length\n");
    CHECK_THROWS_AS(load_csv(p.string()), std::invalid_argument);
  }

  SUBCASE("windows line endings and extra columns are fine") {
    const fs::path p = dir / "crlf.csv";
    spit(p, "id,age,length\r\n1,5,20.5\r\n2,9,26.25\r\n");
    const GrowthDataset d = load_csv(p.string());
    REQUIRE(d.size() == 2);
    CHECK(d.ages[1] == 9.0);
    CHECK(d.lengths[1] == 26.25);
  }
}

TEST_CASE("generate_synthetic") {
  ThetaVB theta{34.0, 0.1, -2.0, 9.0, -0.4, 1.0};
  ModelSpec spec{Family::SkewNormal, std::nullopt};
  const auto ages = oracles::uniform_ages(200, 3.0, 55.0, 3ULL);

  SUBCASE("deterministic per seed") {
    const GrowthDataset a = generate_synthetic(theta, spec, ages, 7ULL, 0.5);
    const GrowthDataset b = generate_synthetic(theta, spec, ages, 7ULL, 0.5);
    const GrowthDataset c = generate_synthetic(theta, spec, ages, 8ULL, 0.5);
    CHECK(a.lengths == b.lengths);
    CHECK(a.lengths != c.lengths);
  }

  SUBCASE("noiseless limit tracks the mean curve") {
    ThetaVB tiny = theta;
    tiny.sigma2 = 1e-12;
    const GrowthDataset d = generate_synthetic(tiny, spec, ages, 9ULL);
    for (std::size_t t = 0; t < d.size(); ++t)
      CHECK(std::fabs(d.lengths[t] - vb_mean(tiny, d.ages[t])) < 1e-4);
  }

  SUBCASE("non-positive draws are counted and floored") {
    // huge variance forces many non-positive lengths
    ThetaVB wild{5.0, 0.1, -2.0, 400.0, 0.0, 0.0};
    std::size_t bad = 0;
    const GrowthDataset d =
        generate_synthetic(wild, {Family::Normal, std::nullopt}, ages, 11ULL, 0.5, &bad);
    CHECK(bad > 0);
    CHECK(std::count(d.lengths.begin(), d.lengths.end(), 0.5) >= 1);
    CHECK(std::all_of(d.lengths.begin(), d.lengths.end(), [](double y) { return y > 0.0; }));

    std::size_t bad2 = 0;
    const GrowthDataset raw =
        generate_synthetic(wild, {Family::Normal, std::nullopt}, ages, 11ULL, 0.0, &bad2);
    CHECK(bad2 == bad);
    CHECK(*std::min_element(raw.lengths.begin(), raw.lengths.end()) <= 0.0);
  }

  CHECK_THROWS(generate_synthetic(theta, spec, {}, 1ULL));
}

TEST_CASE("describe bins") {
  GrowthDataset d;
  // one point per bin boundary plus interior points
  d.ages = {1.0, 3.0, 3.5, 8.0, 20.0, 60.9};
  d.lengths = {5.0, 10.0, 12.0, 16.0, 30.0, 35.0};
  const auto bins = describe(d);
  REQUIRE(bins.size() == 13);

  // [1,3] is closed on both ends; (3,8] takes 3.5 and 8
  CHECK(bins[0].count == 2);
  CHECK(bins[1].count == 2);
  CHECK(bins[4].count == 1);   // age 20 lands in (18,23]
  CHECK(bins[12].count == 1);  // (58,61]

  std::size_t total = 0;
  double prop = 0.0;
  for (const auto& b : bins) {
    total += b.count;
    prop += b.proportion;
  }
  CHECK(total == d.size());
  CHECK(prop == doctest::Approx(1.0));

  CHECK(bins[0].min == 5.0);
  CHECK(bins[0].max == 10.0);
  CHECK(bins[0].mean == doctest::Approx(7.5));
  CHECK(bins[0].sd == doctest::Approx(std::sqrt(12.5)));
  CHECK(bins[1].mean == doctest::Approx(14.0));
  // singleton bin has zero sd
  CHECK(bins[12].sd == 0.0);
}

TEST_CASE("run config") {
  RunConfig rc;
  rc.input_path = "x.csv";
  rc.nu_min = 3.0;
  rc.nu_max = 5.0;
  rc.nu_step = 1.0;
  CHECK(rc.nu_grid() == std::vector<double>{3.0, 4.0, 5.0});
  rc.validate();

  RunConfig bad = rc;
  bad.alpha = 1.5;
  CHECK_THROWS(bad.validate());
  bad = rc;
  bad.tau = 0.0;
  CHECK_THROWS(bad.validate());
  bad = rc;
  bad.nu_min = 2.0;
  CHECK_THROWS(bad.validate());
  bad = rc;
  bad.families.clear();
  CHECK_THROWS(bad.validate());
}

TEST_CASE("run_protocol: determinism, sidecars, internal consistency") {
  const fs::path dir = temp_dir("protocol");
  ThetaVB theta{34.0, 0.1, -2.0, 9.0, -0.4, 0.0};
  ModelSpec gen{Family::StudentT, 5.0};
  const GrowthDataset d =
      generate_synthetic(theta, gen, oracles::uniform_ages(120, 3.0, 55.0, 21ULL), 22ULL, 0.5);
  const fs::path csv = dir / "data.csv";
  save_csv(d, csv.string());

  RunConfig cfg;
  cfg.input_path = csv.string();
  cfg.families = {Family::Normal, Family::StudentT};
  cfg.nu_min = 4.0;
  cfg.nu_max = 8.0;
  cfg.nu_step = 2.0;
  cfg.seed = 5;
  cfg.fit_config.n_starts = 1;
  cfg.out_dir = (dir / "run1").string();

  const RunReport r1 = run_protocol(cfg);
  REQUIRE(r1.all_ok());
  REQUIRE(r1.families.size() == 2);

  SUBCASE("byte-identical report.json on rerun") {
    RunConfig cfg2 = cfg;
    cfg2.out_dir = (dir / "run2").string();
    run_protocol(cfg2);
    CHECK(slurp(dir / "run1" / "report.json") == slurp(dir / "run2" / "report.json"));
  }

  SUBCASE("sidecar files exist with the expected headers") {
    for (const std::string fam : {"N", "T"}) {
      CHECK(fs::exists(dir / "run1" / ("curve_" + fam + ".tsv")));
      CHECK(fs::exists(dir / "run1" / ("influence_" + fam + ".tsv")));
      CHECK(fs::exists(dir / "run1" / ("residuals_" + fam + ".tsv")));
    }
    CHECK(!fs::exists(dir / "run1" / "profile_N.tsv"));  // no grid for the normal fit
    const std::string prof = slurp(dir / "run1" / "profile_T.tsv");
    CHECK(prof.rfind("nu\tloglik\n", 0) == 0);
    CHECK(std::count(prof.begin(), prof.end(), '\n') == 4);  // header + 3 grid points

    const std::string infl = slurp(dir / "run1" / "influence_T.tsv");
    CHECK(infl.rfind("index\tB\tbenchmark\tinfluential\n", 0) == 0);
    CHECK(std::count(infl.begin(), infl.end(), '\n') == 1 + 120);

    const std::string curve = slurp(dir / "run1" / "curve_N.tsv");
    CHECK(std::count(curve.begin(), curve.end(), '\n') == 1 + 120);
  }

  SUBCASE("report internals are consistent") {
    REQUIRE(r1.aic_ranking.size() == 2);
    CHECK(r1.aic_ranking[0].second <= r1.aic_ranking[1].second);

    for (const FamilyRun& fr : r1.families) {
      CHECK(fr.fit.aic == doctest::Approx(aic(fr.fit.loglik, fr.spec.active_params())));
      CHECK(fr.influence.B.size() == d.size());
      CHECK(fr.rc.n_full == d.size());
      CHECK(fr.rc.n_filtered == d.size() - fr.influence.influential.size());
      REQUIRE(fr.rc.beta.size() == 3);
      for (const auto& e : fr.rc.beta) {
        if (fr.influence.influential.empty())
          CHECK(e.rc_percent == 0.0);
        else
          CHECK(e.rc_percent ==
                doctest::Approx(relative_change_percent(e.full, e.filtered)));
      }
      CHECK(fr.band.size() == 120);
      for (const BandPoint& b : fr.band) {
        CHECK(b.lower <= b.mean);
        CHECK(b.mean <= b.upper);
      }
    }
    const FamilyRun& t_run = r1.families[1];
    REQUIRE(t_run.profile.has_value());
    CHECK(t_run.profile->grid == std::vector<double>{4.0, 6.0, 8.0});
    CHECK(t_run.fit.loglik ==
          doctest::Approx(*std::max_element(t_run.profile->logliks.begin(),
                                            t_run.profile->logliks.end())));

    const auto j = r1.to_json();
    CHECK(j.at("schema_version") == 1);
    CHECK(j.at("families").size() == 2);
    CHECK(j.at("families")[0].at("family") == "N");
    CHECK(!j.at("families")[0].contains("profile"));
    CHECK(j.at("families")[1].contains("profile"));
  }

  SUBCASE("a failing family is reported, not fatal") {
    RunConfig cfg3 = cfg;
    cfg3.out_dir = (dir / "run3").string();
    cfg3.nu_min = 2.5;
    cfg3.nu_max = 2.5;
    const RunReport r3 = run_protocol(cfg3);
    REQUIRE(r3.families.size() == 2);
    for (const FamilyRun& fr : r3.families)
      if (!fr.ok) CHECK(!fr.error.empty());
    // the normal family never touches the nu grid
    CHECK(r3.families[0].ok);
  }
}
