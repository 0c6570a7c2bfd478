#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vbgrowth/diagnostics.hpp"
#include "vbgrowth/estimator.hpp"

namespace vbgrowth {

struct RunConfig {
  std::string input_path;
  std::vector<Family> families = {Family::Normal, Family::SkewNormal, Family::StudentT,
                                  Family::SkewT};
  double nu_min = 3.0;
  double nu_max = 60.0;
  double nu_step = 1.0;
  double tau = 2.0;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  FitConfig fit_config;

  std::vector<double> nu_grid() const;
  void validate() const;
};

struct FamilyRun {
  ModelSpec spec;
  bool ok = false;
  std::string error;
  FitResult fit;
  std::optional<ProfileResult> profile;  // T/ST only
  InfluenceReport influence;
  FitResult filtered_fit;
  RCReport rc;
  std::vector<BandPoint> band;
};

struct RunReport {
  RunConfig config;
  std::vector<FamilyRun> families;
  std::vector<std::pair<std::string, double>> aic_ranking;  // ascending AIC

  bool all_ok() const;
  nlohmann::ordered_json to_json() const;
};

/// CSV with header `age,length`. Any non-numeric or non-positive row is an
/// error naming the offending line.
GrowthDataset load_csv(const std::string& path);
void save_csv(const GrowthDataset& data, const std::string& path);

/// y_t = vb_mean + SMSN error, deterministic per seed. With positive_floor > 0
/// draws are clipped from below; otherwise non-positive draws are counted into
/// *n_nonpositive (when given) and kept.
GrowthDataset generate_synthetic(const ThetaVB& theta, const ModelSpec& spec,
                                 const std::vector<double>& ages, std::uint64_t seed,
                                 double positive_floor = 0.0,
                                 std::size_t* n_nonpositive = nullptr);

struct AgeBinSummary {
  double lo = 0.0, hi = 0.0;
  double min = 0.0, max = 0.0, mean = 0.0, sd = 0.0;
  std::size_t count = 0;
  double proportion = 0.0;
};

/// Descriptive statistics over the 13 standard age bins [1,3],(3,8],...,(58,61].
std::vector<AgeBinSummary> describe(const GrowthDataset& data);

/// The 4-step protocol: profile (T/ST) or fit, influence analysis, filtered
/// refit with RC, AIC ranking. Writes report.json and the TSV sidecars to
/// config.out_dir.
RunReport run_protocol(const RunConfig& config);

/// TSV sidecars: profile_<fam>.tsv, curve_<fam>.tsv, influence_<fam>.tsv,
/// residuals_<fam>.tsv.
void emit_plot_data(const RunReport& report, const GrowthDataset& data,
                    const std::string& out_dir);

}  // namespace vbgrowth
