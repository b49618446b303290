#include "landau/checkpoint.hpp"

#include "landau/net.hpp"

#include <json.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace landau {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint truncated");
  return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

std::ifstream open_in(const std::filesystem::path& path, const char magic[4]) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  char m[4];
  is.read(m, 4);
  if (!is || std::memcmp(m, magic, 4) != 0) throw std::runtime_error(path.string() + ": bad magic");
  if (get<std::uint32_t>(is) != kVersion) throw std::runtime_error(path.string() + ": unsupported version");
  return is;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream os(path.string() + ".json");
  if (!os) throw std::runtime_error("cannot write " + path.string() + ".json");
  os << j.dump(1) << '\n';
}

}  // namespace

void save_ensemble(const ParticleEnsemble& ens, const std::filesystem::path& path) {
  auto os = open_out(path);
  os.write("LDEN", 4);
  put(os, kVersion);
  put<std::int64_t>(os, ens.count());
  put<std::int64_t>(os, ens.dim());
  put(os, ens.time);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(ens.preset.size()));
  os.write(ens.preset.data(), static_cast<std::streamsize>(ens.preset.size()));
  // column-major d x N is particle-major N x d
  os.write(reinterpret_cast<const char*>(ens.velocities.data()),
           static_cast<std::streamsize>(sizeof(double) * ens.velocities.size()));
  os.write(reinterpret_cast<const char*>(ens.log_density.data()),
           static_cast<std::streamsize>(sizeof(double) * ens.log_density.size()));
  if (!os) throw std::runtime_error("write failed: " + path.string());

  nlohmann::json j;
  j["n"] = ens.count();
  j["dim"] = ens.dim();
  j["time"] = ens.time;
  j["preset"] = ens.preset;
  auto& vel = j["velocities"] = nlohmann::json::array();
  for (Index i = 0; i < ens.count(); ++i)
    vel.push_back(std::vector<double>(ens.velocities.col(i).data(), ens.velocities.col(i).data() + ens.dim()));
  j["log_density"] = std::vector<double>(ens.log_density.data(), ens.log_density.data() + ens.count());
  write_json(path, j);
}

ParticleEnsemble load_ensemble(const std::filesystem::path& path) {
  auto is = open_in(path, "LDEN");
  const auto n = get<std::int64_t>(is);
  const auto d = get<std::int64_t>(is);
  if (n <= 0 || d <= 0) throw std::runtime_error(path.string() + ": bad header");
  ParticleEnsemble ens;
  ens.time = get<double>(is);
  ens.preset.resize(get<std::uint32_t>(is));
  is.read(ens.preset.data(), static_cast<std::streamsize>(ens.preset.size()));
  ens.velocities.resize(d, n);
  ens.log_density.resize(n);
  is.read(reinterpret_cast<char*>(ens.velocities.data()), static_cast<std::streamsize>(sizeof(double) * n * d));
  is.read(reinterpret_cast<char*>(ens.log_density.data()), static_cast<std::streamsize>(sizeof(double) * n));
  if (!is) throw std::runtime_error("checkpoint truncated: " + path.string());
  ens.validate();
  return ens;
}

void save_net(const VectorFieldNet& net, const std::filesystem::path& path) {
  auto os = open_out(path);
  os.write("LNET", 4);
  put(os, kVersion);
  put<std::int64_t>(os, net.dim());
  put<std::int64_t>(os, VectorFieldNet::kWidth);
  put<std::int64_t>(os, net.num_params());
  os.write(reinterpret_cast<const char*>(net.params().data()),
           static_cast<std::streamsize>(sizeof(double) * net.num_params()));
  if (!os) throw std::runtime_error("write failed: " + path.string());

  nlohmann::json j;
  j["dim"] = net.dim();
  j["width"] = VectorFieldNet::kWidth;
  j["layout"] = "W1,b1,W2,b2,W3,b3,W4,b4 column-major";
  j["params"] = std::vector<double>(net.params().data(), net.params().data() + net.num_params());
  write_json(path, j);
}

VectorFieldNet load_net(const std::filesystem::path& path) {
  auto is = open_in(path, "LNET");
  const auto d = get<std::int64_t>(is);
  const auto width = get<std::int64_t>(is);
  const auto n = get<std::int64_t>(is);
  if (d <= 0 || width != VectorFieldNet::kWidth || n != VectorFieldNet::param_count(static_cast<int>(d)))
    throw std::runtime_error(path.string() + ": architecture mismatch");
  Vec theta(n);
  is.read(reinterpret_cast<char*>(theta.data()), static_cast<std::streamsize>(sizeof(double) * n));
  if (!is) throw std::runtime_error("checkpoint truncated: " + path.string());
  VectorFieldNet net(static_cast<int>(d));
  net.set_params(theta);
  return net;
}

}  // namespace landau
