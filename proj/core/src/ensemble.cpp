#include "landau/ensemble.hpp"

#include "landau/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace landau {
namespace {

constexpr double kPi = std::numbers::pi;

const Eigen::Vector2d kBiMaxCenter1{-2.0, 1.0};
const Eigen::Vector2d kBiMaxCenter2{0.0, -1.0};

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// log of the normalizing integral of exp(-a (|v| - sigma)^2) over R^3, a = S / sigma^2
double shell_log_normalizer(const RosenbluthShell3d& shell) {
  const double sigma = shell.sigma;
  const double a = shell.s / (sigma * sigma);
  const double g0 = 0.5 * std::sqrt(kPi / a) * (1.0 + std::erf(sigma * std::sqrt(a)));
  const double tail = std::exp(-a * sigma * sigma);
  const double g1 = tail / (2.0 * a);
  const double g2 = -sigma * tail / (2.0 * a) + g0 / (2.0 * a);
  return std::log(4.0 * kPi * (g2 + 2.0 * sigma * g1 + sigma * sigma * g0));
}

double parse_double(std::string_view s) {
  double v = 0.0;
  // from_chars for double needs GCC 11+, which is the floor for this project
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw std::invalid_argument("cannot parse number '" + std::string(s) + "'");
  return v;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// key=value pairs after the ':' of an id; values may hold commas (vectors),
// so a new key starts only at a token containing '='.
std::vector<std::pair<std::string, std::string>> parse_fields(std::string_view body) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t pos = 0;
  while (pos <= body.size() && !body.empty()) {
    auto comma = body.find(',', pos);
    std::string_view tok = body.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    auto eq = tok.find('=');
    if (eq != std::string_view::npos) {
      out.emplace_back(std::string(tok.substr(0, eq)), std::string(tok.substr(eq + 1)));
    } else if (!out.empty()) {
      out.back().second += "," + std::string(tok);
    } else {
      throw std::invalid_argument("malformed preset parameters '" + std::string(body) + "'");
    }
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

void sample_bkw(const BkwSpec& bkw, double t, Pcg32& rng, ParticleEnsemble& ens) {
  const int d = bkw.dim;
  const double k = bkw.k_of_t(t);
  const double a = ((d + 2) * k - d) / (2.0 * k);
  const double b = (1.0 - k) / (2.0 * k * k);
  // Gaussian envelope of variance 2K; f/g = (2)^(d/2) exp(-c|v|^2)(a + b|v|^2), c = 1/(4K)
  const double env_var = 2.0 * k;
  const double c = 1.0 / (2.0 * k) - 1.0 / (2.0 * env_var);
  const double s_star = b > 0.0 ? std::max(0.0, 1.0 / c - a / b) : 0.0;
  const double bound = std::pow(env_var / k, 0.5 * d) * std::exp(-c * s_star) * (a + b * s_star);

  std::normal_distribution<double> normal;
  const double env_sd = std::sqrt(env_var);
  Vec v(d);
  for (Index i = 0; i < ens.count();) {
    for (int k2 = 0; k2 < d; ++k2) v(k2) = env_sd * normal(rng);
    const double s = v.squaredNorm();
    const double ratio = std::pow(env_var / k, 0.5 * d) * std::exp(-c * s) * (a + b * s);
    if (rng.uniform() * bound < ratio) {
      ens.velocities.col(i) = v;
      ++i;
    }
  }
}

void sample_shell(const RosenbluthShell3d& shell, Pcg32& rng, ParticleEnsemble& ens) {
  // radial density p(r) ~ r^2 exp(-a (r - sigma)^2); Gaussian envelope in r
  // centered at the mode with variance 1/a
  const double sigma = shell.sigma;
  const double a = shell.s / (sigma * sigma);
  const double mode = 0.5 * (sigma + std::sqrt(sigma * sigma + 4.0 / a));
  auto log_ratio = [&](double r) {
    return 2.0 * std::log(r) - a * (r - sigma) * (r - sigma) + 0.5 * a * (r - mode) * (r - mode);
  };
  const double lin = 2.0 * sigma - mode;
  const double r_max = 0.5 * (lin + std::sqrt(lin * lin + 8.0 / a));
  const double log_bound = log_ratio(r_max);

  std::normal_distribution<double> normal;
  const double env_sd = 1.0 / std::sqrt(a);
  Eigen::Vector3d dir;
  for (Index i = 0; i < ens.count();) {
    const double r = mode + env_sd * normal(rng);
    if (r <= 0.0) continue;
    if (std::log(rng.uniform()) >= log_ratio(r) - log_bound) continue;
    double n2 = 0.0;
    do {
      for (int k = 0; k < 3; ++k) dir(k) = normal(rng);
      n2 = dir.squaredNorm();
    } while (n2 == 0.0);
    ens.velocities.col(i) = r * dir / std::sqrt(n2);
    ++i;
  }
}

}  // namespace

int dimension(const InitialCondition& ic) {
  return std::visit(Overloaded{
                        [](const BkwInitial& b) { return b.bkw.dim; },
                        [](const BiMaxwellian2d&) { return 2; },
                        [](const RosenbluthShell3d&) { return 3; },
                        [](const AnisotropicGaussian& g) { return static_cast<int>(g.p.size()); },
                    },
                    ic);
}

double start_time(const InitialCondition& ic) {
  if (const auto* b = std::get_if<BkwInitial>(&ic)) return b->bkw.earliest_valid_time();
  return 0.0;
}

double initial_log_density(const InitialCondition& ic, const Eigen::Ref<const Vec>& v) {
  return std::visit(
      Overloaded{
          [&](const BkwInitial& b) { return bkw_log_density(b.bkw, b.bkw.earliest_valid_time(), v); },
          [&](const BiMaxwellian2d&) {
            const double e1 = -0.5 * (v - kBiMaxCenter1).squaredNorm();
            const double e2 = -0.5 * (v - kBiMaxCenter2).squaredNorm();
            const double m = std::max(e1, e2);
            return -std::log(4.0 * kPi) + m + std::log(std::exp(e1 - m) + std::exp(e2 - m));
          },
          [&](const RosenbluthShell3d& s) {
            const double r = v.norm();
            return -s.s * (r - s.sigma) * (r - s.sigma) / (s.sigma * s.sigma) - shell_log_normalizer(s);
          },
          [&](const AnisotropicGaussian& g) {
            const auto d = g.p.size();
            return -0.5 * static_cast<double>(d) * std::log(2.0 * kPi) - 0.5 * g.p.array().log().sum() -
                   0.5 * (v.array().square() / g.p.array()).sum();
          },
      },
      ic);
}

std::string to_id(const InitialCondition& ic) {
  return std::visit(Overloaded{
                        [](const BkwInitial& b) {
                          return "bkw:d=" + std::to_string(b.bkw.dim) + ",b=" + format_double(b.bkw.bkw_b) +
                                 ",c=" + format_double(b.bkw.c_gamma);
                        },
                        [](const BiMaxwellian2d&) { return std::string("bi_maxwellian_2d"); },
                        [](const RosenbluthShell3d& s) {
                          return "rosenbluth_shell_3d:sigma=" + format_double(s.sigma) + ",s=" + format_double(s.s);
                        },
                        [](const AnisotropicGaussian& g) {
                          std::string out = "anisotropic_gaussian:p=";
                          for (Index i = 0; i < g.p.size(); ++i) out += (i ? "," : "") + format_double(g.p(i));
                          return out;
                        },
                    },
                    ic);
}

InitialCondition parse_initial_condition(std::string_view id) {
  const auto colon = id.find(':');
  const std::string_view name = id.substr(0, colon);
  const auto fields = colon == std::string_view::npos ? decltype(parse_fields("")){} : parse_fields(id.substr(colon + 1));
  auto field = [&](const std::string& key) -> const std::string* {
    for (const auto& [k, v] : fields)
      if (k == key) return &v;
    return nullptr;
  };
  for (const auto& [k, v] : fields) {
    (void)v;
    const bool known = (name == "bkw" && (k == "d" || k == "b" || k == "c")) ||
                       (name == "rosenbluth_shell_3d" && (k == "sigma" || k == "s")) ||
                       (name == "anisotropic_gaussian" && k == "p");
    if (!known) throw std::invalid_argument("unknown parameter '" + k + "' for preset '" + std::string(name) + "'");
  }

  if (name == "bkw") {
    BkwSpec spec;
    if (auto* d = field("d")) spec.dim = static_cast<int>(parse_double(*d));
    if (auto* b = field("b")) spec.bkw_b = parse_double(*b);
    if (auto* c = field("c")) spec.c_gamma = parse_double(*c);
    spec.validate();
    return BkwInitial{spec};
  }
  if (name == "bi_maxwellian_2d") return BiMaxwellian2d{};
  if (name == "rosenbluth_shell_3d") {
    RosenbluthShell3d s;
    if (auto* v = field("sigma")) s.sigma = parse_double(*v);
    if (auto* v = field("s")) s.s = parse_double(*v);
    if (!(s.sigma > 0.0 && s.s > 0.0)) throw std::invalid_argument("shell sigma and S must be > 0");
    return s;
  }
  if (name == "anisotropic_gaussian") {
    const auto* p = field("p");
    if (p == nullptr) throw std::invalid_argument("anisotropic_gaussian needs p=...");
    std::vector<double> vals;
    std::string_view rest = *p;
    while (!rest.empty()) {
      auto comma = rest.find(',');
      vals.push_back(parse_double(rest.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (vals.size() < 2) throw std::invalid_argument("anisotropic_gaussian needs d >= 2");
    AnisotropicGaussian g{Eigen::Map<const Vec>(vals.data(), static_cast<Index>(vals.size()))};
    if ((g.p.array() <= 0.0).any()) throw std::invalid_argument("anisotropic_gaussian variances must be > 0");
    return g;
  }
  throw std::invalid_argument("unknown preset '" + std::string(name) + "'");
}

void ParticleEnsemble::validate() const {
  if (log_density.size() != velocities.cols())
    throw NumericalError("ensemble: log_density size does not match particle count");
  if (!velocities.allFinite()) throw NumericalError("ensemble: non-finite velocity");
  if (!log_density.allFinite()) throw NumericalError("ensemble: non-finite log density");
}

ParticleEnsemble sample_initial(const InitialCondition& ic, Index n, std::uint64_t seed) {
  if (n <= 0) throw std::invalid_argument("sample_initial: particle count must be positive");
  const int d = dimension(ic);
  ParticleEnsemble ens;
  ens.velocities.resize(d, n);
  ens.time = start_time(ic);
  ens.preset = to_id(ic);
  Pcg32 rng(seed, streams::kSampling);
  std::normal_distribution<double> normal;

  std::visit(Overloaded{
                 [&](const BkwInitial& b) { sample_bkw(b.bkw, ens.time, rng, ens); },
                 [&](const BiMaxwellian2d&) {
                   for (Index i = 0; i < n; ++i) {
                     const bool first = rng.uniform() < 0.5;
                     const Eigen::Vector2d& c = first ? kBiMaxCenter1 : kBiMaxCenter2;
                     for (int k = 0; k < 2; ++k) ens.velocities(k, i) = c(k) + normal(rng);
                   }
                 },
                 [&](const RosenbluthShell3d& s) { sample_shell(s, rng, ens); },
                 [&](const AnisotropicGaussian& g) {
                   const Vec sd = g.p.array().sqrt();
                   for (Index i = 0; i < n; ++i)
                     for (int k = 0; k < d; ++k) ens.velocities(k, i) = sd(k) * normal(rng);
                 },
             },
             ic);

  ens.log_density.resize(n);
  for (Index i = 0; i < n; ++i) ens.log_density(i) = initial_log_density(ic, ens.velocities.col(i));
  ens.validate();
  return ens;
}

DiagnosticsRecord moments(const ParticleEnsemble& ens) {
  DiagnosticsRecord rec;
  const auto n = static_cast<double>(ens.count());
  rec.time = ens.time;
  rec.mass = 1.0;
  rec.momentum = ens.velocities.rowwise().sum() / n;
  rec.energy = ens.velocities.colwise().squaredNorm().sum() / n;
  rec.entropy_estimate = ens.log_density.sum() / n;
  return rec;
}

Mat covariance(const ParticleEnsemble& ens) {
  return ens.velocities * ens.velocities.transpose() / static_cast<double>(ens.count());
}

}  // namespace landau
