#pragma once

#include "q2d/core.hpp"
#include "q2d/md.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace q2d {

enum class Method { ewald2d, soewald2d, rbse2d };
Method parse_method(const std::string& name);
std::string method_name(Method m);

/// Random neutral electrolyte: counts and charges per species.
struct GeneratorSpec {
  Index n_cation = 0;
  Index n_anion = 0;
  double q_cation = 1.0;
  double q_anion = -1.0;
  double mass = 1.0;
  double min_distance = 0.0;  // rejection distance between centres
  double wall_margin = 0.0;   // keep centres this far inside [0, lz]
  double temperature = 0.0;   // Maxwell-Boltzmann velocities when > 0
};

struct EwaldSection {
  double s = 4.0;
  std::optional<double> alpha;  // unset means auto
  AlphaMode alpha_mode = AlphaMode::balanced;
  double alpha_prefactor = 1.0;
};

struct SOESection {
  int m = 16;
  std::string table;          // optional file path
  std::optional<double> eps;  // choose the smallest m meeting this bound
};

struct RBSection {
  int p = 16;
  int downsample = 10;
  int burn_in = 100;
};

struct ScanSection {
  std::string kind = "s";  // s | n | lz | force
  std::vector<double> values;
  std::vector<int> soe_m = {8, 16};
  double reference_s = 8.0;
  double density = 0.0;  // particles per volume for n scans, 0 keeps the box
  int configs = 1;
};

struct BenchSection {
  std::vector<Index> n_list = {1000, 3000, 10000};
  int repeats = 5;
  Index ewald_max_n = 10000;
  double density = 1e-3;
  double aspect_z = 0.5;  // lz / lx
};

/// Fully resolved run description.
struct RunConfig {
  BoxGeometry box;
  std::string particle_file;
  GeneratorSpec generator;
  Method method = Method::soewald2d;
  EwaldSection ewald;
  SOESection soe;
  RBSection rb;
  MDConfig md;
  std::uint64_t md_seed = 1;
  std::uint64_t rb_seed = 2;
  std::string output_dir = ".";
  ScanSection scan;
  BenchSection bench;
  bool walls_set = false;
};

/// Parses the INI-like format. Unknown sections or keys raise ConfigError.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

/// Canonical key=value rendering used for hashing and the manifest.
std::map<std::string, std::string> config_entries(const RunConfig& cfg);
/// 64-bit FNV-1a over the canonical rendering.
std::uint64_t config_hash(const RunConfig& cfg);

}  // namespace q2d
