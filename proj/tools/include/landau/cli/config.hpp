#pragma once

#include "landau/dynamics.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace landau::cli {

/// Bad configuration: unknown key, malformed or out-of-range value, missing preset.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Fully resolved experiment: the dynamics config plus output and oracle settings.
struct ExperimentConfig {
  std::string preset;
  RunConfig run;
  double t_end = 1.0;
  bool paper_scale = false;
  double n_scale = 1.0;
  double kde_eps = 0.3;
  double kde_extent = 6.0;
  int kde_points = 121;
  int oracle_every = 10;  // KDE grid error every k steps (cheap columns every step)
  int checkpoint_every = 0;
  bool deterministic = false;  // write 0 for wall-clock columns
  std::string scaling_note;
};

/// Flat "key = value" text; '#' starts a comment. Throws ConfigError with the line number.
KeyValues read_key_values(std::istream& in, const std::string& source);
KeyValues read_config_file(const std::filesystem::path& path);

/// "key=value" tokens as given on the command line.
KeyValues parse_assignments(const std::vector<std::string>& tokens);

/// Resolves preset + file + flags. Flags override the file; keys are applied
/// after the preset regardless of their order.
ExperimentConfig parse_config(const KeyValues& file, const KeyValues& flags);
ExperimentConfig parse_config(const std::optional<std::filesystem::path>& file, const KeyValues& flags);

/// Canonical text form. parse_config(read_key_values(to_text(c))) == c.
std::string to_text(const ExperimentConfig& cfg);

const std::vector<std::string>& known_keys();

}  // namespace landau::cli
