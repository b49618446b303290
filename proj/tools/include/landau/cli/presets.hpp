#pragma once

#include "landau/dynamics.hpp"

#include <string>
#include <vector>

namespace landau::cli {

/// One named experiment. `run` holds the published parameters with
/// n_particles at full size; desk_n is what a plain `landau run` uses.
struct Preset {
  std::string name;
  std::string summary;
  RunConfig run;
  Index paper_n = 0;
  Index desk_n = 0;
  double t_end = 1.0;       // evolution time from the initial state
  double kde_eps = 0.3;     // bandwidth for density reconstruction
  double kde_extent = 6.0;  // grid half-width for density output
  std::vector<double> compare_taus;  // time steps for scheme comparisons
};

const std::vector<Preset>& preset_catalog();

/// Throws std::invalid_argument("unknown preset ...") listing the valid names.
const Preset& find_preset(const std::string& name);

}  // namespace landau::cli
