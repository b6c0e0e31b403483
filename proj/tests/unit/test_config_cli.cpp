#include "doctest.h"

#include "q2d/config.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace q2d;
namespace fs = std::filesystem;

namespace {

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

const char* kSmall = R"(; small neutral cell
[box]
lx = 40
ly = 40
lz = 20

[particles]
n_cation = 4
n_anion = 4
min_distance = 1.0
wall_margin = 1.0

[ewald]
s = 3
alpha = 0.3

[soe]
m = 8
)";

// Scratch directory per test process.
fs::path scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("q2d_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const auto p = scratch() / name;
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(Q2D_CLI_PATH) + " " + args + " > " + (scratch() / "stdout.txt").string() +
                          " 2> " + (scratch() / "stderr.txt").string();
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = parse(kSmall);
  CHECK(c.box.lx == 40.0);
  CHECK(c.generator.n_cation == 4);
  REQUIRE(c.ewald.alpha.has_value());
  CHECK(*c.ewald.alpha == 0.3);
  CHECK(c.soe.m == 8);
  CHECK(c.method == Method::soewald2d);

  CHECK_THROWS_AS(parse(std::string(kSmall) + "[box]\ncolour = red\n"), ConfigError);
  CHECK_THROWS_AS(parse(std::string(kSmall) + "[nonsense]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("[box]\nlx = forty\nly = 1\nlz = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("[box]\nlx = -1\nly = 1\nlz = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse(std::string(kSmall) + "[method]\nname = pppm\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/q2d.ini"), ConfigError);

  CHECK(parse_method("rbse2d") == Method::rbse2d);
  CHECK(method_name(Method::ewald2d) == "ewald2d");
}

TEST_CASE("config hash") {
  const auto a = parse(kSmall);
  CHECK(config_hash(a) == config_hash(parse(kSmall)));
  // comments and spacing do not enter the canonical form
  CHECK(config_hash(a) == config_hash(parse(std::string("; another comment\n") + kSmall + "\n\n")));
  auto b = a;
  b.ewald.s = 3.5;
  CHECK(config_hash(a) != config_hash(b));
  CHECK(config_entries(a).at("ewald.alpha") == config_entries(parse(kSmall)).at("ewald.alpha"));
}

TEST_CASE("command line exit codes") {
  const auto ok = write_file("ok.ini", kSmall);
  const auto out = (scratch() / "out").string();
  CHECK(run_cli("validate --config " + ok.string() + " --out " + out) == 0);

  std::string odd = kSmall;
  odd.replace(odd.find("n_anion = 4"), 11, "n_anion = 3");
  CHECK(run_cli("validate --config " + write_file("odd.ini", odd).string() + " --out " + out) == 2);

  CHECK(run_cli("validate --config " + write_file("bad.ini", std::string(kSmall) + "[soe]\nterms = 3\n").string()) == 3);
  CHECK(run_cli("validate --config /nonexistent/q2d.ini") == 3);
  CHECK(run_cli("validate --config " + ok.string() + " --threads 0") == 3);
  CHECK(run_cli("validate --config " + ok.string() + " --no-such-flag") == 3);
  CHECK(run_cli("energy --config " + ok.string() + " --method fmm --out " + out) == 3);

  // two particles on top of each other blow up the LJ term
  const auto clash = write_file("clash.csv", "id,q,m,x,y,z,vx,vy,vz\n0,1,1,5,5,5,0,0,0\n1,-1,1,5,5,5,0,0,0\n");
  std::string sim = "[box]\nlx = 40\nly = 40\nlz = 20\n[particles]\nfile = " + clash.string() +
                    "\n[ewald]\ns = 3\nalpha = 0.3\n[soe]\nm = 8\n[md]\nsteps = 10\n";
  CHECK(run_cli("simulate --config " + write_file("clash.ini", sim).string() + " --out " + out) == 4);
}

TEST_CASE("energy output columns and manifest") {
  const auto cfg = write_file("energy.ini", kSmall);
  const auto out = scratch() / "energy";
  REQUIRE(run_cli("energy --config " + cfg.string() + " --out " + out.string() + " --oracle") == 0);
  const auto csv = slurp(out / "energy.csv");
  CHECK(csv.rfind("method,n,alpha,s,u_s,u_l_k,u_l_0,u_self,u_ps,total,oracle_total,oracle_abs_diff\n", 0) == 0);
  CHECK(fs::exists(out / "forces.csv"));

  const auto manifest = nlohmann::json::parse(slurp(out / "energy.csv.manifest.json"));
  CHECK(manifest.at("command") == "energy");
  CHECK(manifest.at("config_hash_fnv1a64").get<std::string>().size() == 16);
  CHECK(manifest.at("config").at("ewald.alpha") == config_entries(load_config(cfg.string())).at("ewald.alpha"));

  REQUIRE(run_cli("energy --config " + cfg.string() + " --out " + out.string() + " --method rbse2d --repeats 5 --seed 3") == 0);
  const auto rb = slurp(out / "energy.csv");
  CHECK(rb.rfind("method,n,alpha,s,u_s,u_l_k,u_l_0,u_self,u_ps,total,mean,stderr,repeats\n", 0) == 0);
  CHECK(rb.find("\nrbse2d,8,") != std::string::npos);
}

TEST_CASE("simulate is reproducible for a fixed seed") {
  std::string text = kSmall;
  text += "[md]\nsteps = 300\nrecord_every = 50\nnbins = 5\n";
  const auto cfg = write_file("sim.ini", text);
  const auto a = scratch() / "sim_a", b = scratch() / "sim_b", c = scratch() / "sim_c";
  REQUIRE(run_cli("simulate --config " + cfg.string() + " --out " + a.string() + " --seed 5") == 0);
  REQUIRE(run_cli("simulate --config " + cfg.string() + " --out " + b.string() + " --seed 5") == 0);
  REQUIRE(run_cli("simulate --config " + cfg.string() + " --out " + c.string() + " --seed 6") == 0);
  for (const char* f : {"profile.csv", "msd.csv", "thermo.csv"}) {
    CHECK(fs::exists(a / f));
    CHECK(fs::exists(a / (std::string(f) + ".manifest.json")));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  CHECK(slurp(a / "thermo.csv") != slurp(c / "thermo.csv"));
  CHECK(slurp(a / "msd.csv").rfind("t,msd_xy,msd_z\n", 0) == 0);
}
