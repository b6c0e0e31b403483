#include "q2d/config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace q2d {

Method parse_method(const std::string& name) {
  if (name == "ewald2d") return Method::ewald2d;
  if (name == "soewald2d") return Method::soewald2d;
  if (name == "rbse2d") return Method::rbse2d;
  throw ConfigError("unknown method '" + name + "' (expected ewald2d, soewald2d or rbse2d)");
}

std::string method_name(Method m) {
  switch (m) {
    case Method::ewald2d: return "ewald2d";
    case Method::soewald2d: return "soewald2d";
    case Method::rbse2d: return "rbse2d";
  }
  return "?";
}

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"box", {"lx", "ly", "lz", "sigma_top", "sigma_bot"}},
      {"particles",
       {"file", "n_cation", "n_anion", "q_cation", "q_anion", "mass", "min_distance", "wall_margin",
        "temperature"}},
      {"method", {"name"}},
      {"ewald", {"s", "alpha", "alpha_mode", "alpha_prefactor"}},
      {"soe", {"m", "table", "eps"}},
      {"rb", {"p", "downsample", "burn_in", "seed"}},
      {"md",
       {"dt", "steps", "equilibration", "thermostat", "temperature", "gamma", "tau", "record_every",
        "trajectory_every", "seed", "nbins", "skin"}},
      {"lj", {"epsilon", "sigma"}},
      {"wall", {"enabled", "z_lo", "z_hi", "epsilon", "sigma"}},
      {"output", {"dir"}},
      {"scan", {"kind", "values", "soe_m", "reference_s", "density", "configs"}},
      {"bench", {"n_list", "repeats", "ewald_max_n", "density", "aspect_z"}},
  };
  return keys;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
  }
}

std::int64_t to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != std::floor(d) || std::abs(d) > 9e15) {
    throw ConfigError("'" + key + "' expects an integer, got '" + v + "'");
  }
  return static_cast<std::int64_t>(d);
}

std::uint64_t to_seed(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const auto s = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return s;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' expects an unsigned integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  const auto l = boost::algorithm::to_lower_copy(v);
  if (l == "1" || l == "true" || l == "yes" || l == "on") return true;
  if (l == "0" || l == "false" || l == "no" || l == "off") return false;
  throw ConfigError("'" + key + "' expects a boolean, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<std::string> parts;
  boost::algorithm::split(parts, v, boost::is_any_of(", "), boost::token_compress_on);
  std::vector<double> out;
  for (auto& p : parts) {
    boost::algorithm::trim(p);
    if (!p.empty()) out.push_back(to_double(key, p));
  }
  if (out.empty()) throw ConfigError("'" + key + "' expects a non-empty list");
  return out;
}

void require_positive(const std::string& key, double v) {
  if (!(v > 0.0)) throw ConfigError("'" + key + "' must be positive");
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  const auto& allowed = allowed_keys();
  for (const auto& [section, body] : tree) {
    const auto it = allowed.find(section);
    if (it == allowed.end()) throw ConfigError("unknown config section [" + section + "]");
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("key '" + section + "' must appear inside a section");
    }
    for (const auto& [key, _] : body) {
      if (!it->second.count(key)) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
    }
  }
  auto get = [&](const std::string& path) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(path)) return boost::algorithm::trim_copy(*v);
    return std::nullopt;
  };

  RunConfig c;
  if (auto v = get("box.lx")) c.box.lx = to_double("lx", *v);
  if (auto v = get("box.ly")) c.box.ly = to_double("ly", *v);
  if (auto v = get("box.lz")) c.box.lz = to_double("lz", *v);
  if (auto v = get("box.sigma_top")) c.box.sigma_top = to_double("sigma_top", *v);
  if (auto v = get("box.sigma_bot")) c.box.sigma_bot = to_double("sigma_bot", *v);
  require_positive("lx", c.box.lx);
  require_positive("ly", c.box.ly);
  require_positive("lz", c.box.lz);

  auto& g = c.generator;
  if (auto v = get("particles.file")) c.particle_file = *v;
  if (auto v = get("particles.n_cation")) g.n_cation = to_int("n_cation", *v);
  if (auto v = get("particles.n_anion")) g.n_anion = to_int("n_anion", *v);
  if (auto v = get("particles.q_cation")) g.q_cation = to_double("q_cation", *v);
  if (auto v = get("particles.q_anion")) g.q_anion = to_double("q_anion", *v);
  if (auto v = get("particles.mass")) g.mass = to_double("mass", *v);
  if (auto v = get("particles.min_distance")) g.min_distance = to_double("min_distance", *v);
  if (auto v = get("particles.wall_margin")) g.wall_margin = to_double("wall_margin", *v);
  if (auto v = get("particles.temperature")) g.temperature = to_double("temperature", *v);
  if (g.n_cation < 0 || g.n_anion < 0) throw ConfigError("particle counts must be non-negative");
  require_positive("mass", g.mass);
  if (!c.particle_file.empty() && (g.n_cation > 0 || g.n_anion > 0)) {
    throw ConfigError("[particles] takes either a file or generator counts, not both");
  }

  if (auto v = get("method.name")) c.method = parse_method(*v);

  if (auto v = get("ewald.s")) c.ewald.s = to_double("s", *v);
  require_positive("s", c.ewald.s);
  if (auto v = get("ewald.alpha")) {
    if (*v != "auto") {
      c.ewald.alpha = to_double("alpha", *v);
      require_positive("alpha", *c.ewald.alpha);
    }
  }
  if (auto v = get("ewald.alpha_mode")) {
    if (*v == "balanced") c.ewald.alpha_mode = AlphaMode::balanced;
    else if (*v == "linear") c.ewald.alpha_mode = AlphaMode::linear;
    else throw ConfigError("alpha_mode must be balanced or linear");
  }
  if (auto v = get("ewald.alpha_prefactor")) c.ewald.alpha_prefactor = to_double("alpha_prefactor", *v);
  require_positive("alpha_prefactor", c.ewald.alpha_prefactor);

  if (auto v = get("soe.m")) c.soe.m = static_cast<int>(to_int("m", *v));
  if (auto v = get("soe.table")) c.soe.table = *v;
  if (auto v = get("soe.eps")) {
    c.soe.eps = to_double("eps", *v);
    require_positive("eps", *c.soe.eps);
  }
  if (c.soe.m < 1) throw ConfigError("soe m must be at least 1");

  if (auto v = get("rb.p")) c.rb.p = static_cast<int>(to_int("p", *v));
  if (auto v = get("rb.downsample")) c.rb.downsample = static_cast<int>(to_int("downsample", *v));
  if (auto v = get("rb.burn_in")) c.rb.burn_in = static_cast<int>(to_int("burn_in", *v));
  if (auto v = get("rb.seed")) c.rb_seed = to_seed("rb.seed", *v);
  if (c.rb.p < 1) throw ConfigError("rb p must be at least 1");
  if (c.rb.downsample < 1) throw ConfigError("rb downsample must be at least 1");
  if (c.rb.burn_in < 0) throw ConfigError("rb burn_in must be non-negative");

  auto& md = c.md;
  if (auto v = get("md.dt")) md.dt = to_double("dt", *v);
  if (auto v = get("md.steps")) md.steps = to_int("steps", *v);
  if (auto v = get("md.equilibration")) md.equilibration = to_int("equilibration", *v);
  if (auto v = get("md.thermostat")) {
    if (*v == "langevin") md.thermostat.kind = ThermostatKind::langevin;
    else if (*v == "nose-hoover") md.thermostat.kind = ThermostatKind::nose_hoover;
    else throw ConfigError("thermostat must be langevin or nose-hoover");
  }
  if (auto v = get("md.temperature")) md.thermostat.temperature = to_double("temperature", *v);
  if (auto v = get("md.gamma")) md.thermostat.gamma = to_double("gamma", *v);
  if (auto v = get("md.tau")) md.thermostat.tau = to_double("tau", *v);
  if (auto v = get("md.record_every")) md.record_every = to_int("record_every", *v);
  if (auto v = get("md.trajectory_every")) md.trajectory_every = to_int("trajectory_every", *v);
  if (auto v = get("md.seed")) c.md_seed = to_seed("md.seed", *v);
  if (auto v = get("md.nbins")) md.nbins = static_cast<int>(to_int("nbins", *v));
  if (auto v = get("md.skin")) md.skin = to_double("skin", *v);
  require_positive("dt", md.dt);
  require_positive("temperature", md.thermostat.temperature);
  require_positive("gamma", md.thermostat.gamma);
  require_positive("tau", md.thermostat.tau);
  require_positive("skin", md.skin);
  if (md.steps < 0 || md.equilibration < 0) throw ConfigError("step counts must be non-negative");
  if (md.record_every < 1) throw ConfigError("record_every must be at least 1");
  if (md.trajectory_every < 0) throw ConfigError("trajectory_every must be non-negative");
  if (md.nbins < 1) throw ConfigError("nbins must be at least 1");

  if (auto v = get("lj.epsilon")) md.lj.epsilon = to_double("lj.epsilon", *v);
  if (auto v = get("lj.sigma")) md.lj.sigma = to_double("lj.sigma", *v);
  require_positive("lj.sigma", md.lj.sigma);
  if (md.lj.epsilon < 0.0) throw ConfigError("lj epsilon must be non-negative");

  md.walls.z_lo = 0.0;
  md.walls.z_hi = c.box.lz;
  md.walls.epsilon = md.lj.epsilon;
  md.walls.sigma = 0.5 * md.lj.sigma;
  if (auto v = get("wall.enabled")) md.use_walls = to_bool("wall.enabled", *v);
  if (auto v = get("wall.z_lo")) md.walls.z_lo = to_double("wall.z_lo", *v), c.walls_set = true;
  if (auto v = get("wall.z_hi")) md.walls.z_hi = to_double("wall.z_hi", *v), c.walls_set = true;
  if (auto v = get("wall.epsilon")) md.walls.epsilon = to_double("wall.epsilon", *v);
  if (auto v = get("wall.sigma")) md.walls.sigma = to_double("wall.sigma", *v);
  if (!(md.walls.z_hi > md.walls.z_lo)) throw ConfigError("wall z_hi must exceed z_lo");
  require_positive("wall.sigma", md.walls.sigma);

  if (auto v = get("output.dir")) c.output_dir = *v;

  if (auto v = get("scan.kind")) {
    if (*v != "s" && *v != "n" && *v != "lz" && *v != "force") {
      throw ConfigError("scan kind must be s, n, lz or force");
    }
    c.scan.kind = *v;
  }
  if (auto v = get("scan.values")) c.scan.values = to_list("scan.values", *v);
  if (auto v = get("scan.soe_m")) {
    c.scan.soe_m.clear();
    for (double d : to_list("scan.soe_m", *v)) c.scan.soe_m.push_back(static_cast<int>(d));
  }
  if (auto v = get("scan.reference_s")) c.scan.reference_s = to_double("reference_s", *v);
  if (auto v = get("scan.density")) c.scan.density = to_double("scan.density", *v);
  if (auto v = get("scan.configs")) c.scan.configs = static_cast<int>(to_int("configs", *v));
  if (c.scan.configs < 1) throw ConfigError("scan configs must be at least 1");

  if (auto v = get("bench.n_list")) {
    c.bench.n_list.clear();
    for (double d : to_list("bench.n_list", *v)) c.bench.n_list.push_back(static_cast<Index>(d));
  }
  if (auto v = get("bench.repeats")) c.bench.repeats = static_cast<int>(to_int("repeats", *v));
  if (auto v = get("bench.ewald_max_n")) c.bench.ewald_max_n = to_int("ewald_max_n", *v);
  if (auto v = get("bench.density")) c.bench.density = to_double("bench.density", *v);
  if (auto v = get("bench.aspect_z")) c.bench.aspect_z = to_double("aspect_z", *v);
  if (c.bench.repeats < 1) throw ConfigError("bench repeats must be at least 1");
  require_positive("bench.density", c.bench.density);
  require_positive("aspect_z", c.bench.aspect_z);

  md.seed = c.md_seed;
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::map<std::string, std::string> config_entries(const RunConfig& c) {
  std::map<std::string, std::string> e;
  e["box.lx"] = num(c.box.lx);
  e["box.ly"] = num(c.box.ly);
  e["box.lz"] = num(c.box.lz);
  e["box.sigma_top"] = num(c.box.sigma_top);
  e["box.sigma_bot"] = num(c.box.sigma_bot);
  e["particles.file"] = c.particle_file;
  e["particles.n_cation"] = std::to_string(c.generator.n_cation);
  e["particles.n_anion"] = std::to_string(c.generator.n_anion);
  e["particles.q_cation"] = num(c.generator.q_cation);
  e["particles.q_anion"] = num(c.generator.q_anion);
  e["particles.mass"] = num(c.generator.mass);
  e["particles.min_distance"] = num(c.generator.min_distance);
  e["particles.wall_margin"] = num(c.generator.wall_margin);
  e["particles.temperature"] = num(c.generator.temperature);
  e["method.name"] = method_name(c.method);
  e["ewald.s"] = num(c.ewald.s);
  e["ewald.alpha"] = c.ewald.alpha ? num(*c.ewald.alpha) : "auto";
  e["ewald.alpha_mode"] = c.ewald.alpha_mode == AlphaMode::balanced ? "balanced" : "linear";
  e["ewald.alpha_prefactor"] = num(c.ewald.alpha_prefactor);
  e["soe.m"] = std::to_string(c.soe.m);
  e["soe.table"] = c.soe.table;
  e["soe.eps"] = c.soe.eps ? num(*c.soe.eps) : "";
  e["rb.p"] = std::to_string(c.rb.p);
  e["rb.downsample"] = std::to_string(c.rb.downsample);
  e["rb.burn_in"] = std::to_string(c.rb.burn_in);
  e["rb.seed"] = std::to_string(c.rb_seed);
  e["md.dt"] = num(c.md.dt);
  e["md.steps"] = std::to_string(c.md.steps);
  e["md.equilibration"] = std::to_string(c.md.equilibration);
  e["md.thermostat"] =
      c.md.thermostat.kind == ThermostatKind::langevin ? "langevin" : "nose-hoover";
  e["md.temperature"] = num(c.md.thermostat.temperature);
  e["md.gamma"] = num(c.md.thermostat.gamma);
  e["md.tau"] = num(c.md.thermostat.tau);
  e["md.record_every"] = std::to_string(c.md.record_every);
  e["md.trajectory_every"] = std::to_string(c.md.trajectory_every);
  e["md.seed"] = std::to_string(c.md_seed);
  e["md.nbins"] = std::to_string(c.md.nbins);
  e["md.skin"] = num(c.md.skin);
  e["lj.epsilon"] = num(c.md.lj.epsilon);
  e["lj.sigma"] = num(c.md.lj.sigma);
  e["wall.enabled"] = c.md.use_walls ? "true" : "false";
  e["wall.z_lo"] = num(c.md.walls.z_lo);
  e["wall.z_hi"] = num(c.md.walls.z_hi);
  e["wall.epsilon"] = num(c.md.walls.epsilon);
  e["wall.sigma"] = num(c.md.walls.sigma);
  e["output.dir"] = c.output_dir;
  std::ostringstream vals, ms, ns;
  for (std::size_t i = 0; i < c.scan.values.size(); ++i) vals << (i ? "," : "") << num(c.scan.values[i]);
  for (std::size_t i = 0; i < c.scan.soe_m.size(); ++i) ms << (i ? "," : "") << c.scan.soe_m[i];
  for (std::size_t i = 0; i < c.bench.n_list.size(); ++i) ns << (i ? "," : "") << c.bench.n_list[i];
  e["scan.kind"] = c.scan.kind;
  e["scan.values"] = vals.str();
  e["scan.soe_m"] = ms.str();
  e["scan.reference_s"] = num(c.scan.reference_s);
  e["scan.density"] = num(c.scan.density);
  e["scan.configs"] = std::to_string(c.scan.configs);
  e["bench.n_list"] = ns.str();
  e["bench.repeats"] = std::to_string(c.bench.repeats);
  e["bench.ewald_max_n"] = std::to_string(c.bench.ewald_max_n);
  e["bench.density"] = num(c.bench.density);
  e["bench.aspect_z"] = num(c.bench.aspect_z);
  return e;
}

std::uint64_t config_hash(const RunConfig& cfg) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const auto& [k, v] : config_entries(cfg)) {
    for (char ch : k + "=" + v + "\n") {
      h ^= static_cast<unsigned char>(ch);
      h *= 1099511628211ULL;
    }
  }
  return h;
}

}  // namespace q2d
