#include "landau/cli/config.hpp"

#include "landau/cli/presets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace landau::cli {
namespace {

const std::vector<std::string> kKeys = {
    "preset",      "paper_scale",  "n_scale",      "n_particles",      "initial",       "gamma",
    "c_gamma",     "min_dist",     "tau",          "t_end",            "n_steps",       "scheme",
    "rbm_batch",   "rbm_normalization", "warm_start", "tilde",         "seed",          "optimizer",
    "first_lr",    "first_epochs", "first_batch",  "later_lr",         "later_epochs",  "later_batch",
    "kde_eps",     "kde_extent",   "kde_points",   "oracle_every",     "checkpoint_every", "deterministic",
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void fail(const std::string& key, const std::string& what) { throw ConfigError(key + ": " + what); }

double number(const std::string& key, const std::string& text) {
  // a/b is accepted so kernel strengths can be written as published
  const auto slash = text.find('/');
  if (slash != std::string::npos) {
    const double num = number(key, trim(text.substr(0, slash)));
    const double den = number(key, trim(text.substr(slash + 1)));
    if (den == 0.0) fail(key, "division by zero in '" + text + "'");
    return num / den;
  }
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end || !std::isfinite(v)) fail(key, "not a number: '" + text + "'");
  return v;
}

long long integer(const std::string& key, const std::string& text) {
  long long v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) fail(key, "not an integer: '" + text + "'");
  return v;
}

bool boolean(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  fail(key, "not a boolean: '" + text + "'");
}

double positive(const std::string& key, const std::string& text) {
  const double v = number(key, text);
  if (!(v > 0.0)) fail(key, "must be > 0, got " + text);
  return v;
}

long long at_least(const std::string& key, const std::string& text, long long lo) {
  const long long v = integer(key, text);
  if (v < lo) fail(key, "must be >= " + std::to_string(lo) + ", got " + text);
  return v;
}

// shortest text that reads back to the same double
std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string_view optimizer_name(Optimizer o) { return o == Optimizer::kSgdRR ? "sgd" : "adamax"; }

}  // namespace

const std::vector<std::string>& known_keys() { return kKeys; }

KeyValues read_key_values(std::istream& in, const std::string& source) {
  KeyValues out;
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ":" + std::to_string(no) + ": expected key = value, got '" + t + "'");
    out.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return out;
}

KeyValues read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found: " + path.string());
  return read_key_values(in, path.string());
}

KeyValues parse_assignments(const std::vector<std::string>& tokens) {
  KeyValues out;
  for (const auto& tok : tokens) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("expected key=value, got '" + tok + "'");
    out.emplace_back(trim(tok.substr(0, eq)), trim(tok.substr(eq + 1)));
  }
  return out;
}

ExperimentConfig parse_config(const std::optional<std::filesystem::path>& file, const KeyValues& flags) {
  return parse_config(file ? read_config_file(*file) : KeyValues{}, flags);
}

ExperimentConfig parse_config(const KeyValues& file, const KeyValues& flags) {
  std::map<std::string, std::string> kv;
  for (const auto* src : {&file, &flags})
    for (const auto& [k, v] : *src) {
      if (std::find(kKeys.begin(), kKeys.end(), k) == kKeys.end()) throw ConfigError("unknown config key '" + k + "'");
      kv[k] = v;
    }
  auto get = [&](const std::string& k) -> const std::string* {
    const auto it = kv.find(k);
    return it == kv.end() ? nullptr : &it->second;
  };

  const std::string* preset_name = get("preset");
  if (!preset_name || preset_name->empty()) throw ConfigError("missing preset (set preset=<name>)");
  const Preset* preset = nullptr;
  try {
    preset = &find_preset(*preset_name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("preset: ") + e.what());
  }

  ExperimentConfig c;
  c.preset = preset->name;
  c.run = preset->run;
  c.t_end = preset->t_end;
  c.kde_eps = preset->kde_eps;
  c.kde_extent = preset->kde_extent;

  // particle count: full size, or desk size times n_scale
  if (auto* v = get("paper_scale")) c.paper_scale = boolean("paper_scale", *v);
  if (auto* v = get("n_scale")) c.n_scale = positive("n_scale", *v);
  const Index base_n = c.paper_scale ? preset->paper_n : preset->desk_n;
  c.run.n_particles = std::max<Index>(2, std::llround(static_cast<double>(base_n) * c.n_scale));
  if (auto* v = get("n_particles")) c.run.n_particles = at_least("n_particles", *v, 2);
  const Index n = c.run.n_particles;
  std::ostringstream note;
  note << "N " << preset->paper_n << " -> " << n;
  // Training batches shrink with N so an epoch keeps the published number of
  // optimizer steps (N/B); 64 is the smallest batch used.
  for (TrainConfig* t : {&c.run.first_train, &c.run.later_train}) {
    const char* stage = t == &c.run.first_train ? "first" : "later";
    const double ratio = static_cast<double>(n) / static_cast<double>(preset->paper_n);
    const Index scaled = std::min<Index>(n, std::clamp<Index>(std::llround(static_cast<double>(t->batch_size) * ratio),
                                                               std::min<Index>(64, t->batch_size), t->batch_size));
    if (scaled != t->batch_size) {
      note << "; " << stage << "_batch " << t->batch_size << " -> " << scaled;
      t->batch_size = scaled;
    }
  }
  if (c.run.rbm_batch >= n && c.run.rbm_batch > 0) {
    note << "; rbm_batch " << c.run.rbm_batch << " -> full";
    c.run.rbm_batch = 0;
  }
  c.scaling_note = note.str();

  if (auto* v = get("initial")) {
    try {
      c.run.initial = parse_initial_condition(*v);
    } catch (const std::invalid_argument& e) {
      fail("initial", e.what());
    }
  }
  const int dim = dimension(c.run.initial);
  double gamma = c.run.kernel.gamma;
  double c_gamma = c.run.kernel.c_gamma;
  if (auto* v = get("gamma")) gamma = number("gamma", *v);
  if (auto* v = get("c_gamma")) c_gamma = positive("c_gamma", *v);
  try {
    c.run.kernel = KernelSpec::with_default_guard(dim, gamma, c_gamma);
    if (auto* v = get("min_dist")) {
      c.run.kernel.min_dist = number("min_dist", *v);
      if (c.run.kernel.min_dist < 0.0) fail("min_dist", "must be >= 0, got " + *v);
    }
    c.run.kernel.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("kernel: ") + e.what());
  }
  // the BKW profile is tied to the kernel strength
  if (auto* b = std::get_if<BkwInitial>(&c.run.initial)) {
    b->bkw.c_gamma = c_gamma;
    b->bkw.dim = dim;
  }

  if (auto* v = get("tau")) c.run.tau = positive("tau", *v);
  if (auto* v = get("t_end")) c.t_end = positive("t_end", *v);
  c.run.n_steps = static_cast<int>(std::llround(c.t_end / c.run.tau));
  if (auto* v = get("n_steps")) c.run.n_steps = static_cast<int>(at_least("n_steps", *v, 0));

  if (auto* v = get("scheme")) {
    try {
      c.run.scheme = scheme_from_string(*v);
    } catch (const std::invalid_argument& e) {
      fail("scheme", e.what());
    }
  }
  if (auto* v = get("rbm_batch")) c.run.rbm_batch = at_least("rbm_batch", *v, 0);
  if (auto* v = get("rbm_normalization")) {
    if (*v == "unbiased") c.run.rbm_normalization = RbmNormalization::kUnbiased;
    else if (*v == "inverse_batch") c.run.rbm_normalization = RbmNormalization::kInverseBatch;
    else fail("rbm_normalization", "expected unbiased or inverse_batch, got '" + *v + "'");
  }
  if (auto* v = get("warm_start")) c.run.warm_start = boolean("warm_start", *v);
  if (auto* v = get("tilde")) {
    if (*v == "batch") c.run.tilde = TildeMode::kBatch;
    else if (*v == "full") c.run.tilde = TildeMode::kFull;
    else fail("tilde", "expected batch or full, got '" + *v + "'");
  }
  if (auto* v = get("seed")) c.run.seed = static_cast<std::uint64_t>(at_least("seed", *v, 0));
  if (auto* v = get("optimizer")) {
    Optimizer o;
    if (*v == "adamax") o = Optimizer::kAdamaxRR;
    else if (*v == "sgd") o = Optimizer::kSgdRR;
    else fail("optimizer", "expected adamax or sgd, got '" + *v + "'");
    c.run.first_train.optimizer = c.run.later_train.optimizer = o;
  }
  if (auto* v = get("first_lr")) c.run.first_train.lr = positive("first_lr", *v);
  if (auto* v = get("first_epochs")) c.run.first_train.epochs = static_cast<int>(at_least("first_epochs", *v, 1));
  if (auto* v = get("first_batch")) c.run.first_train.batch_size = at_least("first_batch", *v, 1);
  if (auto* v = get("later_lr")) c.run.later_train.lr = positive("later_lr", *v);
  if (auto* v = get("later_epochs")) c.run.later_train.epochs = static_cast<int>(at_least("later_epochs", *v, 1));
  if (auto* v = get("later_batch")) c.run.later_train.batch_size = at_least("later_batch", *v, 1);

  if (auto* v = get("kde_eps")) c.kde_eps = positive("kde_eps", *v);
  if (auto* v = get("kde_extent")) c.kde_extent = positive("kde_extent", *v);
  if (auto* v = get("kde_points")) c.kde_points = static_cast<int>(at_least("kde_points", *v, 2));
  if (auto* v = get("oracle_every")) c.oracle_every = static_cast<int>(at_least("oracle_every", *v, 1));
  if (auto* v = get("checkpoint_every")) c.checkpoint_every = static_cast<int>(at_least("checkpoint_every", *v, 0));
  if (auto* v = get("deterministic")) c.deterministic = boolean("deterministic", *v);

  try {
    c.run.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

std::string to_text(const ExperimentConfig& c) {
  std::ostringstream os;
  const RunConfig& r = c.run;
  os << "# " << c.scaling_note << '\n';
  os << "preset = " << c.preset << '\n'
     << "paper_scale = " << (c.paper_scale ? "true" : "false") << '\n'
     << "n_scale = " << fmt(c.n_scale) << '\n'
     << "n_particles = " << r.n_particles << '\n'
     << "initial = " << to_id(r.initial) << '\n'
     << "gamma = " << fmt(r.kernel.gamma) << '\n'
     << "c_gamma = " << fmt(r.kernel.c_gamma) << '\n'
     << "min_dist = " << fmt(r.kernel.min_dist) << '\n'
     << "tau = " << fmt(r.tau) << '\n'
     << "t_end = " << fmt(c.t_end) << '\n'
     << "n_steps = " << r.n_steps << '\n'
     << "scheme = " << to_string(r.scheme) << '\n'
     << "rbm_batch = " << r.rbm_batch << '\n'
     << "rbm_normalization = " << (r.rbm_normalization == RbmNormalization::kInverseBatch ? "inverse_batch" : "unbiased") << '\n'
     << "warm_start = " << (r.warm_start ? "true" : "false") << '\n'
     << "tilde = " << (r.tilde == TildeMode::kFull ? "full" : "batch") << '\n'
     << "seed = " << r.seed << '\n'
     << "optimizer = " << optimizer_name(r.first_train.optimizer) << '\n'
     << "first_lr = " << fmt(r.first_train.lr) << '\n'
     << "first_epochs = " << r.first_train.epochs << '\n'
     << "first_batch = " << r.first_train.batch_size << '\n'
     << "later_lr = " << fmt(r.later_train.lr) << '\n'
     << "later_epochs = " << r.later_train.epochs << '\n'
     << "later_batch = " << r.later_train.batch_size << '\n'
     << "kde_eps = " << fmt(c.kde_eps) << '\n'
     << "kde_extent = " << fmt(c.kde_extent) << '\n'
     << "kde_points = " << c.kde_points << '\n'
     << "oracle_every = " << c.oracle_every << '\n'
     << "checkpoint_every = " << c.checkpoint_every << '\n'
     << "deterministic = " << (c.deterministic ? "true" : "false") << '\n';
  return os.str();
}

}  // namespace landau::cli
