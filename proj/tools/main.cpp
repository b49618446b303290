#include "landau/cli/config.hpp"
#include "landau/cli/experiment.hpp"
#include "landau/cli/invariants.hpp"
#include "landau/cli/presets.hpp"
#include "landau/oracles.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace landau;
using namespace landau::cli;

struct CommonArgs {
  std::string config_file;
  std::string preset;
  bool paper_scale = false;
  double n_scale = 0.0;
  std::vector<std::string> assignments;
};

void add_common(CLI::App* app, CommonArgs& a) {
  app->add_option("-c,--config", a.config_file, "flat key = value config file")->check(CLI::ExistingFile);
  app->add_option("-p,--preset", a.preset, "preset name (see `landau presets`)");
  app->add_flag("--paper-scale", a.paper_scale, "use the published particle counts");
  app->add_option("--n-scale", a.n_scale, "multiply the desk-scale particle count");
  app->add_option("overrides", a.assignments, "key=value overrides");
}

ExperimentConfig resolve(const CommonArgs& a) {
  KeyValues flags = parse_assignments(a.assignments);
  if (!a.preset.empty()) flags.emplace_back("preset", a.preset);
  if (a.paper_scale) flags.emplace_back("paper_scale", "true");
  if (a.n_scale > 0.0) flags.emplace_back("n_scale", std::to_string(a.n_scale));
  std::optional<std::filesystem::path> file;
  if (!a.config_file.empty()) file = a.config_file;
  return parse_config(file, flags);
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  return out;
}

int cmd_oracle_bkw(int dim, double b, double c, double t, double eps, int points, double extent, const std::string& out) {
  const BkwSpec spec{dim, b, c};
  spec.validate();
  const double time = t + spec.earliest_valid_time();
  const Mat grid = slice_grid(dim, points, extent);
  Vec f(grid.cols());
  for (Index q = 0; q < grid.cols(); ++q)
    f(q) = eps > 0.0 ? bkw_smoothed_density(spec, time, eps, grid.col(q)) : bkw_density(spec, time, grid.col(q));
  std::cout << "bkw d=" << dim << " b=" << b << " c=" << c << " t=" << time << " K=" << spec.k_of_t(time)
            << " entropy=" << bkw_entropy(spec, time) << " mass=" << bkw_mass(spec, time) << '\n';
  if (!out.empty()) {
    std::ofstream os(out);
    write_grid_csv(os, grid, f);
    std::cout << "wrote " << grid.cols() << " grid values to " << out << '\n';
  }
  return 0;
}

int cmd_oracle_cov(const std::string& p, double t, double c) {
  const auto vals = parse_list(p);
  const Vec p0 = Eigen::Map<const Vec>(vals.data(), static_cast<Index>(vals.size()));
  const Mat cov = covariance_exact(p0, c * t);
  std::cout << "covariance at t=" << t << " (C=" << c << ")\n" << cov.diagonal().transpose() << '\n';
  return 0;
}

int cmd_check(bool quick) {
  std::vector<CheckResult> results;
  results.push_back(check_gradients(11));
  results.push_back(check_null_space(12));
  results.push_back(check_momentum(13));
  results.push_back(check_rbm_unbiased(14, quick ? 2000 : 10000));
  for (auto& r : check_sgd_rr(15)) results.push_back(r);
  bool ok = true;
  for (const auto& r : results) {
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << ": measured " << r.measured << " (tolerance "
              << r.tolerance << ") " << r.detail << '\n';
    ok = ok && r.pass;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"JKO particle solver for the homogeneous Landau equation"};
  app.require_subcommand(1);

  CommonArgs run_args;
  std::string run_out;
  bool no_reuse = false, quiet = false;
  auto* run_cmd = app.add_subcommand("run", "run one experiment");
  add_common(run_cmd, run_args);
  run_cmd->add_option("-o,--out", run_out, "output directory")->required();
  run_cmd->add_flag("--no-reuse", no_reuse, "rerun even if a complete run with the same manifest exists");
  run_cmd->add_flag("-q,--quiet", quiet, "no per-step progress");

  CommonArgs cmp_args;
  std::string cmp_out, cmp_schemes = "implicit,explicit,score", cmp_taus;
  auto* cmp_cmd = app.add_subcommand("compare", "run several schemes and time steps on one preset");
  add_common(cmp_cmd, cmp_args);
  cmp_cmd->add_option("-o,--out", cmp_out, "output directory")->required();
  cmp_cmd->add_option("--schemes", cmp_schemes, "comma-separated schemes");
  cmp_cmd->add_option("--taus", cmp_taus, "comma-separated time steps (default: the preset's list)");

  auto* oracle_cmd = app.add_subcommand("oracle", "evaluate analytic reference solutions");
  oracle_cmd->require_subcommand(1);
  int o_dim = 2, o_points = 101;
  double o_b = 0.5, o_c = 1.0 / 16.0, o_t = 0.0, o_eps = 0.0, o_extent = 6.0;
  std::string o_out;
  auto* bkw_cmd = oracle_cmd->add_subcommand("bkw", "BKW density on a grid, entropy and mass");
  bkw_cmd->add_option("--dim", o_dim)->check(CLI::IsMember({2, 3}));
  bkw_cmd->add_option("--b", o_b);
  bkw_cmd->add_option("--c", o_c);
  bkw_cmd->add_option("--t", o_t, "time after the earliest valid time");
  bkw_cmd->add_option("--eps", o_eps, "Gaussian smoothing width (0: raw density)");
  bkw_cmd->add_option("--points", o_points);
  bkw_cmd->add_option("--extent", o_extent);
  bkw_cmd->add_option("--out", o_out, "grid CSV");
  std::string o_p = "1.8,0.2,1,1,1,1,1,1,1,1";
  double o_cc = 1.0, o_tc = 0.1;
  auto* cov_cmd = oracle_cmd->add_subcommand("covariance", "exact covariance of the Maxwellian-kernel flow");
  cov_cmd->add_option("--p", o_p, "initial diagonal covariance");
  cov_cmd->add_option("--t", o_tc);
  cov_cmd->add_option("--c", o_cc, "collision strength");

  bool quick = false;
  auto* check_cmd = app.add_subcommand("check", "run the invariant suite");
  check_cmd->add_flag("--quick", quick, "fewer random batchings");

  auto* presets_cmd = app.add_subcommand("presets", "list presets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      const ExperimentConfig cfg = resolve(run_args);
      std::cout << to_text(cfg);
      ExperimentOptions opts;
      opts.reuse = !no_reuse;
      if (!quiet) opts.progress = &std::cout;
      const ExperimentResult r = run_experiment(cfg, run_out, opts);
      std::cout << (r.reused ? "reused " : "wrote ") << r.dir.string() << " (manifest " << r.manifest_hash << ")\n";
      return 0;
    }
    if (*cmp_cmd) {
      const ExperimentConfig cfg = resolve(cmp_args);
      std::vector<Scheme> schemes;
      std::stringstream ss(cmp_schemes);
      for (std::string tok; std::getline(ss, tok, ',');) schemes.push_back(scheme_from_string(tok));
      const std::vector<double> taus = cmp_taus.empty() ? find_preset(cfg.preset).compare_taus : parse_list(cmp_taus);
      ExperimentOptions opts;
      const auto rows = compare_schemes(cfg, schemes, taus, cmp_out, opts);
      for (const auto& r : rows)
        std::cout << r.scheme << " tau=" << r.tau << " " << r.status << " steps=" << r.steps_done
                  << " max energy drift=" << r.max_rel_energy_drift << (r.error.empty() ? "" : " (" + r.error + ")")
                  << '\n';
      return 0;
    }
    if (*bkw_cmd) return cmd_oracle_bkw(o_dim, o_b, o_c, o_t, o_eps, o_points, o_extent, o_out);
    if (*cov_cmd) return cmd_oracle_cov(o_p, o_tc, o_cc);
    if (*check_cmd) return cmd_check(quick);
    if (*presets_cmd) {
      for (const auto& p : preset_catalog())
        std::cout << p.name << "  N=" << p.desk_n << " (paper " << p.paper_n << ")  tau=" << p.run.tau
                  << "  t_end=" << p.t_end << "  " << p.summary << '\n';
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
