// Command-line front end: fit, profile, diagnose, simulate, describe, run.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vbgrowth/diagnostics.hpp"
#include "vbgrowth/estimator.hpp"
#include "vbgrowth/report_io.hpp"

namespace {

using namespace vbgrowth;

std::vector<Family> parse_families(const std::string& csv) {
  std::vector<Family> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    auto f = family_from_code(tok);
    if (!f) throw CLI::ValidationError("--families", "unknown family code: " + tok);
    out.push_back(*f);
  }
  if (out.empty()) throw CLI::ValidationError("--families", "no families given");
  return out;
}

ModelSpec make_spec(const std::string& family, double nu) {
  auto f = family_from_code(family);
  if (!f) throw CLI::ValidationError("--family", "unknown family code: " + family);
  ModelSpec spec;
  spec.family = *f;
  if (spec.is_mixture()) spec.nu = nu;
  return spec;
}

void write_or_print(const nlohmann::ordered_json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream f(out);
  if (!f) throw std::runtime_error("cannot write " + out);
  f << j.dump(2) << "\n";
}

nlohmann::ordered_json fit_summary(const FitResult& r) {
  nlohmann::ordered_json j;
  j["family"] = family_code(r.spec.family);
  j["L_inf"] = r.theta.l_inf;
  j["K"] = r.theta.k;
  j["t0"] = r.theta.t0;
  j["sigma2"] = r.theta.sigma2;
  j["rho"] = r.theta.rho;
  if (r.spec.has_shape()) j["lambda"] = r.theta.lambda;
  if (r.spec.nu) j["nu"] = *r.spec.nu;
  j["loglik"] = r.loglik;
  j["aic"] = r.aic;
  j["converged"] = r.converged;
  j["n_used"] = r.n_used;
  j["se_available"] = r.se_available;
  if (r.se_available) j["std_errors"] = r.std_errors;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"von Bertalanffy growth-curve fitting under SMSN errors"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may appear after the subcommand

  std::uint64_t seed = 0;
  std::string out;
  double tau = 2.0, alpha = 0.05;
  double nu_min = 3.0, nu_max = 60.0, nu_step = 1.0;
  std::string families_csv = "N,SN,T,ST";
  app.add_option("--seed", seed, "RNG seed");
  app.add_option("--out", out, "output file or directory");
  app.add_option("--tau", tau, "influence benchmark multiplier");
  app.add_option("--nu-min", nu_min, "smallest nu in the profile grid");
  app.add_option("--nu-max", nu_max, "largest nu in the profile grid");
  app.add_option("--nu-step", nu_step, "nu grid step");
  app.add_option("--alpha", alpha, "confidence band significance level");
  app.add_option("--families", families_csv, "comma-separated family codes (N,SN,T,ST)");

  std::string input, family = "N";
  double nu = 10.0;

  auto* cmd_fit = app.add_subcommand("fit", "fit one family by maximum likelihood");
  cmd_fit->add_option("--input", input, "input CSV")->required();
  cmd_fit->add_option("--family", family, "family code");
  cmd_fit->add_option("--nu", nu, "degrees of freedom (T/ST)");

  auto* cmd_profile = app.add_subcommand("profile", "profile the likelihood over the nu grid");
  cmd_profile->add_option("--input", input, "input CSV")->required();
  cmd_profile->add_option("--family", family, "family code (T or ST)");

  auto* cmd_diag = app.add_subcommand("diagnose", "local influence analysis for one family");
  cmd_diag->add_option("--input", input, "input CSV")->required();
  cmd_diag->add_option("--family", family, "family code");
  cmd_diag->add_option("--nu", nu, "degrees of freedom (T/ST)");

  double linf = 35.137, kpar = 0.083, t0 = -3.075, sigma2 = 38.087, rho = -0.705, lambda = 0.873;
  std::size_t nsim = 1000;
  double age_min = 3.0, age_max = 61.0, floor = 0.0;
  auto* cmd_sim = app.add_subcommand("simulate", "generate a synthetic dataset");
  cmd_sim->add_option("--family", family, "family code");
  cmd_sim->add_option("--nu", nu, "degrees of freedom (T/ST)");
  cmd_sim->add_option("--n", nsim, "number of observations");
  cmd_sim->add_option("--linf", linf, "L_inf");
  cmd_sim->add_option("--k", kpar, "K");
  cmd_sim->add_option("--t0", t0, "t0");
  cmd_sim->add_option("--sigma2", sigma2, "sigma^2");
  cmd_sim->add_option("--rho", rho, "variance power rho");
  cmd_sim->add_option("--lambda", lambda, "shape lambda (SN/ST)");
  cmd_sim->add_option("--age-min", age_min, "minimum age");
  cmd_sim->add_option("--age-max", age_max, "maximum age");
  cmd_sim->add_option("--floor", floor, "clip lengths below this positive floor");

  auto* cmd_desc = app.add_subcommand("describe", "length statistics by age category");
  cmd_desc->add_option("--input", input, "input CSV")->required();

  auto* cmd_run = app.add_subcommand("run", "full protocol over all families");
  cmd_run->add_option("--input", input, "input CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_fit->parsed()) {
      const GrowthDataset data = load_csv(input);
      const ModelSpec spec = make_spec(family, nu);
      FitConfig fc;
      fc.seed = seed;
      write_or_print(fit_summary(fit(spec, data, fc)), out);
    } else if (cmd_profile->parsed()) {
      const GrowthDataset data = load_csv(input);
      const ModelSpec spec = make_spec(family, nu_min);
      if (!spec.is_mixture()) throw std::runtime_error("profile: family must be T or ST");
      FitConfig fc;
      fc.seed = seed;
      for (double v = nu_min; v <= nu_max + 1e-9; v += nu_step) fc.nu_grid.push_back(v);
      const ProfileResult pr = profile_nu(spec.family, data, fc);
      nlohmann::ordered_json j;
      j["family"] = family;
      j["grid"] = pr.grid;
      j["logliks"] = pr.logliks;
      j["best_nu"] = pr.best_nu;
      j["best_fit"] = fit_summary(pr.best_fit);
      write_or_print(j, out);
    } else if (cmd_diag->parsed()) {
      const GrowthDataset data = load_csv(input);
      const ModelSpec spec = make_spec(family, nu);
      FitConfig fc;
      fc.seed = seed;
      const FitResult fr = fit(spec, data, fc);
      const InfluenceReport rep = influence_analysis(fr, data, tau);
      nlohmann::ordered_json j;
      j["family"] = family;
      j["fit"] = fit_summary(fr);
      j["tau"] = rep.tau;
      j["m0_bar"] = rep.m0_bar;
      j["var_m0"] = rep.var_m0;
      j["benchmark"] = rep.benchmark;
      j["influential"] = rep.influential;
      j["B"] = rep.B;
      write_or_print(j, out);
    } else if (cmd_sim->parsed()) {
      const ModelSpec spec = make_spec(family, nu);
      ThetaVB theta{linf, kpar, t0, sigma2, rho, spec.has_shape() ? lambda : 0.0};
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> age_dist(age_min, age_max);
      std::vector<double> ages(nsim);
      for (auto& a : ages) a = age_dist(rng);
      std::size_t bad = 0;
      const GrowthDataset data =
          generate_synthetic(theta, spec, ages, seed + 1, floor, &bad);
      if (bad > 0 && floor <= 0.0)
        std::cerr << "warning: " << bad << " non-positive draws\n";
      if (out.empty()) throw std::runtime_error("simulate: --out <file.csv> required");
      save_csv(data, out);
    } else if (cmd_desc->parsed()) {
      const GrowthDataset data = load_csv(input);
      std::cout << "ages\tmin\tmax\tmean\tsd\tn\tproportion\n";
      for (const AgeBinSummary& b : describe(data)) {
        std::cout << b.lo << "-" << b.hi << "\t" << b.min << "\t" << b.max << "\t" << b.mean
                  << "\t" << b.sd << "\t" << b.count << "\t" << b.proportion << "\n";
      }
    } else if (cmd_run->parsed()) {
      RunConfig rc;
      rc.input_path = input;
      rc.families = parse_families(families_csv);
      rc.nu_min = nu_min;
      rc.nu_max = nu_max;
      rc.nu_step = nu_step;
      rc.tau = tau;
      rc.alpha = alpha;
      rc.seed = seed;
      rc.out_dir = out.empty() ? "." : out;
      const RunReport report = run_protocol(rc);
      for (const FamilyRun& fr : report.families) {
        std::cout << family_code(fr.spec.family) << ": "
                  << (fr.ok ? "ok, aic=" + std::to_string(fr.fit.aic)
                            : "FAILED: " + fr.error)
                  << "\n";
      }
      if (!report.all_ok()) return 1;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
