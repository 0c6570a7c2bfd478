#include "vbgrowth/report_io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vbgrowth {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

nlohmann::ordered_json theta_json(const ThetaVB& t, const ModelSpec& spec) {
  nlohmann::ordered_json j;
  j["L_inf"] = t.l_inf;
  j["K"] = t.k;
  j["t0"] = t.t0;
  j["sigma2"] = t.sigma2;
  j["rho"] = t.rho;
  if (spec.has_shape()) j["lambda"] = t.lambda;
  if (spec.nu) j["nu"] = *spec.nu;
  return j;
}

nlohmann::ordered_json fit_json(const FitResult& f) {
  nlohmann::ordered_json j;
  j["family"] = family_code(f.spec.family);
  j["theta"] = theta_json(f.theta, f.spec);
  j["loglik"] = f.loglik;
  j["aic"] = f.aic;
  j["q"] = f.spec.active_params();
  j["converged"] = f.converged;
  j["iterations"] = f.iterations;
  j["n_used"] = f.n_used;
  j["se_available"] = f.se_available;
  if (f.se_available) j["std_errors"] = f.std_errors;
  return j;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

}  // namespace

std::vector<double> RunConfig::nu_grid() const {
  std::vector<double> g;
  for (double v = nu_min; v <= nu_max + 1e-9; v += nu_step) g.push_back(v);
  return g;
}

void RunConfig::validate() const {
  require(!families.empty(), "RunConfig: families must be nonempty");
  require(alpha > 0.0 && alpha < 1.0, "RunConfig: alpha must lie in (0,1)");
  require(tau > 0.0, "RunConfig: tau must be positive");
  require(nu_min > 2.0 && nu_max >= nu_min && nu_step > 0.0, "RunConfig: invalid nu grid");
}

bool RunReport::all_ok() const {
  return std::all_of(families.begin(), families.end(), [](const FamilyRun& f) { return f.ok; });
}

nlohmann::ordered_json RunReport::to_json() const {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  nlohmann::ordered_json jc;
  jc["input"] = config.input_path;
  std::vector<std::string> fams;
  for (Family f : config.families) fams.push_back(family_code(f));
  jc["families"] = fams;
  jc["nu_min"] = config.nu_min;
  jc["nu_max"] = config.nu_max;
  jc["nu_step"] = config.nu_step;
  jc["tau"] = config.tau;
  jc["alpha"] = config.alpha;
  jc["seed"] = config.seed;
  j["config"] = jc;

  j["families"] = nlohmann::ordered_json::array();
  for (const FamilyRun& fr : families) {
    nlohmann::ordered_json f;
    f["family"] = family_code(fr.spec.family);
    f["ok"] = fr.ok;
    if (!fr.ok) {
      f["error"] = fr.error;
      j["families"].push_back(f);
      continue;
    }
    f["fit"] = fit_json(fr.fit);
    if (fr.profile) {
      nlohmann::ordered_json p;
      p["grid"] = fr.profile->grid;
      p["logliks"] = fr.profile->logliks;
      p["best_nu"] = fr.profile->best_nu;
      f["profile"] = p;
    }
    nlohmann::ordered_json infl;
    infl["tau"] = fr.influence.tau;
    infl["m0_bar"] = fr.influence.m0_bar;
    infl["var_m0"] = fr.influence.var_m0;
    infl["benchmark"] = fr.influence.benchmark;
    infl["n_influential"] = fr.influence.influential.size();
    infl["influential"] = fr.influence.influential;
    f["influence"] = infl;
    f["filtered_fit"] = fit_json(fr.filtered_fit);
    nlohmann::ordered_json rc;
    rc["n_full"] = fr.rc.n_full;
    rc["n_filtered"] = fr.rc.n_filtered;
    rc["beta"] = nlohmann::ordered_json::array();
    for (const auto& e : fr.rc.beta) {
      nlohmann::ordered_json je;
      je["name"] = e.name;
      je["full"] = e.full;
      je["filtered"] = e.filtered;
      je["rc_percent"] = e.rc_percent;
      rc["beta"].push_back(je);
    }
    f["rc"] = rc;
    j["families"].push_back(f);
  }

  j["aic_ranking"] = nlohmann::ordered_json::array();
  for (const auto& [fam, a] : aic_ranking) {
    nlohmann::ordered_json e;
    e["family"] = fam;
    e["aic"] = a;
    j["aic_ranking"].push_back(e);
  }
  return j;
}

GrowthDataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("load_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("load_csv: empty file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  // header: locate the age and length columns by name
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
  }
  int age_idx = -1, len_idx = -1;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (cols[i] == "age") age_idx = static_cast<int>(i);
    if (cols[i] == "length") len_idx = static_cast<int>(i);
  }
  if (age_idx < 0 || len_idx < 0)
    throw std::invalid_argument("load_csv: header must name columns age,length in " + path);

  GrowthDataset data;
  std::vector<std::string> bad;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) fields.push_back(c);
    double age = std::numeric_limits<double>::quiet_NaN();
    double len = std::numeric_limits<double>::quiet_NaN();
    try {
      if (static_cast<int>(fields.size()) > std::max(age_idx, len_idx)) {
        age = std::stod(fields[age_idx]);
        len = std::stod(fields[len_idx]);
      }
    } catch (const std::exception&) {
      // falls through to the validity check below
    }
    if (!std::isfinite(age) || !std::isfinite(len) || age <= 0.0 || len <= 0.0) {
      bad.push_back(std::to_string(line_no));
      continue;
    }
    data.ages.push_back(age);
    data.lengths.push_back(len);
  }
  if (!bad.empty()) {
    std::string lines;
    for (std::size_t i = 0; i < bad.size(); ++i) lines += (i ? "," : "") + bad[i];
    throw std::invalid_argument("load_csv: invalid rows (non-numeric or non-positive) at lines " +
                             lines + " in " + path);
  }
  if (data.size() == 0) throw std::invalid_argument("load_csv: no valid rows in " + path);
  return data;
}

void save_csv(const GrowthDataset& data, const std::string& path) {
  auto out = open_out(path);
  out << "age,length\n";
  for (std::size_t t = 0; t < data.size(); ++t)
    out << fmt(data.ages[t]) << "," << fmt(data.lengths[t]) << "\n";
}

GrowthDataset generate_synthetic(const ThetaVB& theta, const ModelSpec& spec,
                                 const std::vector<double>& ages, std::uint64_t seed,
                                 double positive_floor, std::size_t* n_nonpositive) {
  theta.validate(spec);
  require(!ages.empty(), "generate_synthetic: ages must be nonempty");
  std::vector<double> sigmas(ages.size());
  for (std::size_t t = 0; t < ages.size(); ++t) sigmas[t] = sigma_t(theta, ages[t]);
  const std::vector<double> eps =
      sample_smsn_error(ages.size(), sigmas, theta.lambda, spec, seed);

  GrowthDataset data;
  data.ages = ages;
  data.lengths.resize(ages.size());
  std::size_t bad = 0;
  for (std::size_t t = 0; t < ages.size(); ++t) {
    double y = vb_mean(theta, ages[t]) + eps[t];
    if (y <= 0.0) {
      ++bad;
      if (positive_floor > 0.0) y = positive_floor;
    }
    data.lengths[t] = y;
  }
  if (n_nonpositive) *n_nonpositive = bad;
  return data;
}

std::vector<AgeBinSummary> describe(const GrowthDataset& data) {
  static const double edges[] = {1, 3, 8, 13, 18, 23, 28, 33, 38, 43, 48, 53, 58, 61};
  const int nbins = 13;
  std::vector<AgeBinSummary> bins(nbins);
  std::vector<std::vector<double>> members(nbins);
  for (int b = 0; b < nbins; ++b) {
    bins[b].lo = edges[b];
    bins[b].hi = edges[b + 1];
  }
  for (std::size_t t = 0; t < data.size(); ++t) {
    const double a = data.ages[t];
    for (int b = 0; b < nbins; ++b) {
      const bool in = b == 0 ? (a >= edges[0] && a <= edges[1])
                             : (a > edges[b] && a <= edges[b + 1]);
      if (in) {
        members[b].push_back(data.lengths[t]);
        break;
      }
    }
  }
  for (int b = 0; b < nbins; ++b) {
    auto& m = members[b];
    bins[b].count = m.size();
    bins[b].proportion = data.size() ? static_cast<double>(m.size()) / data.size() : 0.0;
    if (m.empty()) continue;
    bins[b].min = *std::min_element(m.begin(), m.end());
    bins[b].max = *std::max_element(m.begin(), m.end());
    double mean = 0.0;
    for (double v : m) mean += v;
    mean /= m.size();
    bins[b].mean = mean;
    if (m.size() > 1) {
      double ss = 0.0;
      for (double v : m) ss += (v - mean) * (v - mean);
      bins[b].sd = std::sqrt(ss / (m.size() - 1));
    }
  }
  return bins;
}

RunReport run_protocol(const RunConfig& config) {
  config.validate();
  const GrowthDataset data = load_csv(config.input_path);
  data.validate();

  FitConfig fc = config.fit_config;
  fc.nu_grid = config.nu_grid();
  fc.seed = config.seed;

  RunReport report;
  report.config = config;
  for (Family fam : config.families) {
    FamilyRun fr;
    fr.spec.family = fam;
    try {
      if (fam == Family::StudentT || fam == Family::SkewT) {
        ProfileResult pr = profile_nu(fam, data, fc);
        fr.fit = pr.best_fit;
        fr.spec = fr.fit.spec;
        fr.profile = std::move(pr);
      } else {
        fr.fit = fit(fr.spec, data, fc);
      }
      fr.influence = influence_analysis(fr.fit, data, config.tau);
      auto [refit, rc] = filter_and_refit(fr.fit, data, fr.influence, fc);
      fr.filtered_fit = refit;
      fr.rc = rc;

      const auto [age_lo, age_hi] =
          std::minmax_element(data.ages.begin(), data.ages.end());
      std::vector<double> grid_ages;
      const int npts = 120;
      for (int i = 0; i < npts; ++i)
        grid_ages.push_back(*age_lo + (*age_hi - *age_lo) * i / (npts - 1));
      fr.band = confidence_band(fr.fit, grid_ages, config.alpha);
      fr.ok = true;
    } catch (const std::exception& e) {
      fr.ok = false;
      fr.error = e.what();
    }
    report.families.push_back(std::move(fr));
  }

  for (const FamilyRun& fr : report.families)
    if (fr.ok) report.aic_ranking.emplace_back(family_code(fr.spec.family), fr.fit.aic);
  std::stable_sort(report.aic_ranking.begin(), report.aic_ranking.end(),
                   [](const auto& a, const auto& b) { return a.second < b.second; });

  std::filesystem::create_directories(config.out_dir);
  auto out = open_out(std::filesystem::path(config.out_dir) / "report.json");
  out << report.to_json().dump(2) << "\n";
  emit_plot_data(report, data, config.out_dir);
  return report;
}

void emit_plot_data(const RunReport& report, const GrowthDataset& data,
                    const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  for (const FamilyRun& fr : report.families) {
    if (!fr.ok) continue;
    const std::string fam = family_code(fr.spec.family);

    if (fr.profile) {
      auto out = open_out(dir / ("profile_" + fam + ".tsv"));
      out << "nu\tloglik\n";
      for (std::size_t i = 0; i < fr.profile->grid.size(); ++i)
        out << fmt(fr.profile->grid[i]) << "\t" << fmt(fr.profile->logliks[i]) << "\n";
    }

    {
      auto out = open_out(dir / ("curve_" + fam + ".tsv"));
      out << "age\tlower\tmean\tupper\n";
      for (const BandPoint& b : fr.band)
        out << fmt(b.age) << "\t" << fmt(b.lower) << "\t" << fmt(b.mean) << "\t" << fmt(b.upper)
            << "\n";
    }

    {
      auto out = open_out(dir / ("influence_" + fam + ".tsv"));
      out << "index\tB\tbenchmark\tinfluential\n";
      std::size_t next = 0;
      for (std::size_t t = 0; t < fr.influence.B.size(); ++t) {
        const bool flagged = next < fr.influence.influential.size() &&
                             fr.influence.influential[next] == static_cast<int>(t);
        if (flagged) ++next;
        out << t << "\t" << fmt(fr.influence.B[t]) << "\t" << fmt(fr.influence.benchmark) << "\t"
            << (flagged ? 1 : 0) << "\n";
      }
    }

    {
      auto out = open_out(dir / ("residuals_" + fam + ".tsv"));
      out << "age\tlength\tresidual\n";
      for (std::size_t t = 0; t < data.size(); ++t) {
        const double r = data.lengths[t] - vb_mean(fr.fit.theta, data.ages[t]);
        out << fmt(data.ages[t]) << "\t" << fmt(data.lengths[t]) << "\t" << fmt(r) << "\n";
      }
    }
  }
}

}  // namespace vbgrowth
