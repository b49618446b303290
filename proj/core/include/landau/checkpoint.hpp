#pragma once

#include "landau/ensemble.hpp"

#include <filesystem>

namespace landau {

class VectorFieldNet;

// Binary layout (little-endian):
//   ensemble: "LDEN" u32 version, i64 N, i64 d, f64 time, u32 len + preset bytes,
//             N*d f64 velocities (particle-major), N f64 log densities
//   net:      "LNET" u32 version, i64 d, i64 width, i64 n_params, n_params f64
// Every save also writes <path>.json with the same content as text.

void save_ensemble(const ParticleEnsemble& ens, const std::filesystem::path& path);
ParticleEnsemble load_ensemble(const std::filesystem::path& path);

void save_net(const VectorFieldNet& net, const std::filesystem::path& path);
VectorFieldNet load_net(const std::filesystem::path& path);

}  // namespace landau
