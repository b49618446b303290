#include "landau/cli/experiment.hpp"

#include "landau/oracles.hpp"
#include "landau_version.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace landau::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string cell(double v) {
  if (std::isnan(v)) return {};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

double median(std::vector<double> x) {
  if (x.empty()) return kNaN;
  const auto mid = x.begin() + static_cast<std::ptrdiff_t>(x.size() / 2);
  std::nth_element(x.begin(), mid, x.end());
  if (x.size() % 2 == 1) return *mid;
  return 0.5 * (*mid + *std::max_element(x.begin(), mid));
}

// Reference quantities evaluated alongside the run.
class OracleTracker {
 public:
  OracleTracker(const ExperimentConfig& cfg, std::ostream& os, std::string hash)
      : cfg_(cfg), os_(os), hash_(std::move(hash)), energy_(exact_energy(cfg.run.initial)) {
    const auto& ic = cfg.run.initial;
    const bool maxwellian = cfg.run.kernel.gamma == 0.0;
    if (const auto* b = std::get_if<BkwInitial>(&ic); b && maxwellian) bkw_ = b->bkw;
    if (const auto* a = std::get_if<AnisotropicGaussian>(&ic); a && maxwellian) p0_ = a->p;
    const int d = dimension(ic);
    if (bkw_ && d <= 3) grid_ = slice_grid(d, cfg.kde_points, cfg.kde_extent);
    os_ << "step,time,energy,energy_exact,energy_rel_error,entropy_estimate,entropy_exact,entropy_error,"
           "kde_l2_error,kde_l2_error_smoothed,density_median_rel_error,cov_frobenius_error,manifest\n";
  }

  void observe(const ParticleEnsemble& ens, const StepRecord& rec) {
    const DiagnosticsRecord& d = rec.diag;
    double h_exact = kNaN, kde = kNaN, kde_s = kNaN, dens = kNaN, cov = kNaN;
    if (bkw_) {
      h_exact = bkw_entropy(*bkw_, ens.time);
      std::vector<double> rel(static_cast<std::size_t>(ens.count()));
      for (Index i = 0; i < ens.count(); ++i) {
        const double f = bkw_density(*bkw_, ens.time, ens.velocities.col(i));
        rel[static_cast<std::size_t>(i)] = std::abs(std::exp(ens.log_density(i)) - f) / f;
      }
      dens = median(std::move(rel));
      const bool last = rec.step == cfg_.run.n_steps;
      if (grid_.size() > 0 && (rec.step % cfg_.oracle_every == 0 || last)) {
        const Vec approx = kde_density(ens.velocities, cfg_.kde_eps, grid_);
        Vec exact(grid_.cols()), smooth(grid_.cols());
        for (Index q = 0; q < grid_.cols(); ++q) {
          exact(q) = bkw_density(*bkw_, ens.time, grid_.col(q));
          smooth(q) = bkw_smoothed_density(*bkw_, ens.time, cfg_.kde_eps, grid_.col(q));
        }
        kde = relative_l2(approx, exact);
        kde_s = relative_l2(approx, smooth);
      }
    }
    if (p0_) {
      // the Maxwellian flow with strength C is the unit flow run for C t
      const Mat p = covariance_exact(*p0_, cfg_.run.kernel.c_gamma * ens.time);
      cov = frobenius_error(covariance(ens), p);
    }
    os_ << rec.step << ',' << cell(d.time) << ',' << cell(d.energy) << ',' << cell(energy_) << ','
        << cell(std::abs(d.energy - energy_) / energy_) << ',' << cell(d.entropy_estimate) << ',' << cell(h_exact)
        << ',' << cell(std::isnan(h_exact) ? kNaN : d.entropy_estimate - h_exact) << ',' << cell(kde) << ','
        << cell(kde_s) << ',' << cell(dens) << ',' << cell(cov) << ',' << hash_ << '\n'
        << std::flush;
  }

  double exact() const { return energy_; }

 private:
  const ExperimentConfig& cfg_;
  std::ostream& os_;
  std::string hash_;
  double energy_;
  std::optional<BkwSpec> bkw_;
  std::optional<Vec> p0_;
  Mat grid_;
};

json config_json(const std::string& text) {
  json out = json::object();
  std::istringstream is(text);
  for (const auto& [k, v] : read_key_values(is, "config")) out[k] = v;
  return out;
}

void write_manifest(const fs::path& dir, const ExperimentConfig& cfg, const std::string& hash, bool complete) {
  json m;
  m["manifest_hash"] = hash;
  m["preset"] = cfg.preset;
  m["code_version"] = code_version();
  m["seed"] = cfg.run.seed;
  m["scaling"] = cfg.scaling_note;
  m["config"] = config_json(to_text(cfg));
  m["complete"] = complete;
  std::ofstream os(dir / "manifest.json");
  os << m.dump(2) << '\n';
  if (!os) throw std::runtime_error("cannot write manifest in " + dir.string());
}

bool reusable(const fs::path& dir, const std::string& hash) {
  std::ifstream in(dir / "manifest.json");
  if (!in || !fs::exists(dir / "diagnostics.csv") || !fs::exists(dir / "oracle_errors.csv")) return false;
  try {
    const json m = json::parse(in);
    return m.value("manifest_hash", "") == hash && m.value("complete", false);
  } catch (const json::exception&) {
    return false;
  }
}

std::string tau_tag(double tau) {
  std::ostringstream os;
  os << tau;
  return os.str();
}

}  // namespace

std::string code_version() { return std::string(LANDAU_VERSION) + "+" + LANDAU_GIT_REVISION; }

std::string manifest_hash(const ExperimentConfig& cfg) { return hex(fnv1a(to_text(cfg) + code_version())); }

double exact_energy(const InitialCondition& ic) {
  return std::visit(
      [](const auto& x) -> double {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, BkwInitial>) {
          return static_cast<double>(x.bkw.dim);
        } else if constexpr (std::is_same_v<T, BiMaxwellian2d>) {
          // two unit Gaussians centred at (-2, 1) and (0, -1)
          return 2.0 + 0.5 * (5.0 + 1.0);
        } else if constexpr (std::is_same_v<T, RosenbluthShell3d>) {
          // radial quadrature of r^4 g / r^2 g
          const double w = x.sigma / std::sqrt(x.s);
          const double hi = x.sigma + 12.0 * w;
          const int n = 20000;
          double m2 = 0.0, m4 = 0.0;
          for (int k = 1; k < n; ++k) {
            const double r = hi * k / n;
            const double g = std::exp(-x.s * (r - x.sigma) * (r - x.sigma) / (x.sigma * x.sigma));
            m2 += r * r * g;
            m4 += r * r * r * r * g;
          }
          return m4 / m2;
        } else {
          return x.p.sum();
        }
      },
      ic);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const fs::path& dir, const ExperimentOptions& opts) {
  ExperimentResult res;
  res.dir = dir;
  res.manifest_hash = manifest_hash(cfg);
  fs::create_directories(dir);
  if (opts.reuse && reusable(dir, res.manifest_hash)) {
    res.reused = true;
    res.diagnostics = read_csv(dir / "diagnostics.csv");
    res.oracle_errors = read_csv(dir / "oracle_errors.csv");
    return res;
  }

  {
    std::ofstream echo(dir / "config.resolved.txt");
    echo << to_text(cfg);
  }
  write_manifest(dir, cfg, res.manifest_hash, false);

  std::ofstream oracle_csv(dir / "oracle_errors.csv");
  if (!oracle_csv) throw std::runtime_error("cannot write oracle_errors.csv in " + dir.string());
  OracleTracker tracker(cfg, oracle_csv, res.manifest_hash);

  RunOutput out;
  out.dir = dir;
  out.manifest_hash = res.manifest_hash;
  out.checkpoint_every = cfg.checkpoint_every;
  out.timings = !cfg.deterministic;

  const StepObserver observer = [&](const ParticleEnsemble& ens, const StepRecord& rec) {
    tracker.observe(ens, rec);
    if (opts.progress) {
      char line[200];
      std::snprintf(line, sizeof line, "step %d/%d  t=%.4g  energy=%.6g  entropy=%.6g  loss=%.3g  %.0f ms\n", rec.step,
                    cfg.run.n_steps, rec.diag.time, rec.diag.energy, rec.diag.entropy_estimate, rec.diag.loss_value,
                    rec.wall_ms);
      *opts.progress << line << std::flush;
    }
    if (opts.blowup_factor > 0.0 && !(rec.diag.energy < opts.blowup_factor * tracker.exact()))
      throw NumericalError("energy blow-up at step " + std::to_string(rec.step) + ": " + cell(rec.diag.energy));
  };

  run(cfg.run, out, observer);
  oracle_csv.close();
  write_manifest(dir, cfg, res.manifest_hash, true);
  res.diagnostics = read_csv(dir / "diagnostics.csv");
  res.oracle_errors = read_csv(dir / "oracle_errors.csv");
  return res;
}

std::vector<ComparisonRow> compare_schemes(const ExperimentConfig& base, const std::vector<Scheme>& schemes,
                                           const std::vector<double>& taus, const fs::path& dir,
                                           const ExperimentOptions& opts) {
  fs::create_directories(dir);
  std::vector<ComparisonRow> rows;
  std::ofstream merged(dir / "comparison.csv");
  merged << "scheme,tau,step,time,energy,entropy_estimate,loss,status,manifest\n";

  for (Scheme s : schemes) {
    for (double tau : taus) {
      ExperimentConfig cfg = base;
      cfg.run.scheme = s;
      cfg.run.tau = tau;
      cfg.run.n_steps = static_cast<int>(std::llround(cfg.t_end / tau));
      const std::string tag = std::string(to_string(s)) + "_tau" + tau_tag(tau);
      cfg.run.seed = derive_seed(base.run.seed, fnv1a(tag));

      ComparisonRow row;
      row.scheme = std::string(to_string(s));
      row.tau = tau;
      const fs::path sub = dir / tag;
      Table diag;
      std::string hash = manifest_hash(cfg);
      try {
        cfg.run.validate();
        ExperimentOptions o = opts;
        if (o.blowup_factor <= 0.0) o.blowup_factor = 10.0;
        const ExperimentResult r = run_experiment(cfg, sub, o);
        diag = r.diagnostics;
        row.status = "ok";
      } catch (const std::exception& e) {
        row.status = "diverged";
        row.error = e.what();
        if (fs::exists(sub / "diagnostics.csv")) diag = read_csv(sub / "diagnostics.csv");
      }
      const double e0 = exact_energy(cfg.run.initial);
      for (std::size_t k = 0; k < diag.size(); ++k) {
        const double e = diag.value(k, "energy");
        const double drift = std::isfinite(e) ? std::abs(e - e0) / e0 : std::numeric_limits<double>::infinity();
        row.max_rel_energy_drift = std::max(row.max_rel_energy_drift, drift);
        row.steps_done = static_cast<int>(diag.value(k, "step"));
        row.final_time = diag.value(k, "time");
      }
      if (row.status == "ok" && row.max_rel_energy_drift > 0.1) row.status = "drift";
      for (std::size_t k = 0; k < diag.size(); ++k) {
        merged << row.scheme << ',' << cell(tau) << ',' << diag.rows[k][diag.column_index("step")] << ','
               << diag.rows[k][diag.column_index("time")] << ',' << diag.rows[k][diag.column_index("energy")] << ','
               << diag.rows[k][diag.column_index("entropy_estimate")] << ','
               << diag.rows[k][diag.column_index("loss")] << ',' << row.status << ',' << hash << '\n';
      }
      rows.push_back(row);
    }
  }

  std::ofstream summary(dir / "comparison_summary.csv");
  summary << "scheme,tau,status,steps_done,final_time,max_rel_energy_drift,error\n";
  for (const auto& r : rows) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    summary << r.scheme << ',' << cell(r.tau) << ',' << r.status << ',' << r.steps_done << ',' << cell(r.final_time)
            << ',' << cell(r.max_rel_energy_drift) << ',' << err << '\n';
  }
  return rows;
}

}  // namespace landau::cli
