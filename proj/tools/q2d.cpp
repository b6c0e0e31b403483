// q2d: command-line front end for the quasi-2D electrostatics solvers.

#include "q2d/config.hpp"
#include "q2d/experiments.hpp"
#include "q2d/md.hpp"
#include "q2d/soewald2d.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace q2d;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitConfig = 3;
constexpr int kExitNumeric = 4;

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string method;
  int threads = 1;
  bool oracle = false;
  int repeats = 1;
};

struct Context {
  std::string command;
  RunConfig cfg;
  fs::path out_dir;
  int threads = 1;
};

Context make_context(const std::string& command, const Options& o) {
  Context ctx;
  ctx.command = command;
  if (o.config.empty()) throw ConfigError("--config is required");
  ctx.cfg = load_config(o.config);
  if (o.seed) {
    ctx.cfg.md_seed = *o.seed;
    ctx.cfg.rb_seed = *o.seed;
    ctx.cfg.md.seed = *o.seed;
  }
  if (!o.method.empty()) ctx.cfg.method = parse_method(o.method);
  if (!o.out.empty()) ctx.cfg.output_dir = o.out;
  if (o.threads < 1) throw ConfigError("--threads must be at least 1");
  if (o.repeats < 1) throw ConfigError("--repeats must be at least 1");
  ctx.threads = o.threads;
  ctx.out_dir = ctx.cfg.output_dir;
  fs::create_directories(ctx.out_dir);
  return ctx;
}

ParticleSystem load_particles(const RunConfig& cfg) {
  if (!cfg.particle_file.empty()) return read_particles_csv_file(cfg.particle_file);
  GeneratorSpec g = cfg.generator;
  if (g.temperature <= 0.0) g.temperature = cfg.md.thermostat.temperature;
  return generate_particles(g, cfg.box, cfg.md_seed);
}

std::ofstream open_csv(const Context& ctx, const std::string& name) {
  std::ofstream out(ctx.out_dir / name);
  if (!out) throw ConfigError("cannot write " + (ctx.out_dir / name).string());
  out << std::setprecision(17);
  return out;
}

// Sidecar <name>.manifest.json with the resolved config, its hash and seeds.
void write_manifest(const Context& ctx, const std::string& csv_name) {
  nlohmann::json j;
  j["command"] = ctx.command;
  j["output"] = csv_name;
  std::ostringstream hash;
  hash << std::hex << std::setw(16) << std::setfill('0') << config_hash(ctx.cfg);
  j["config_hash_fnv1a64"] = hash.str();
  j["md_seed"] = ctx.cfg.md_seed;
  j["rb_seed"] = ctx.cfg.rb_seed;
  j["threads"] = ctx.threads;
  j["config"] = config_entries(ctx.cfg);
  std::ofstream out(ctx.out_dir / (csv_name + ".manifest.json"));
  out << j.dump(2) << '\n';
}

EwaldParams resolve_params(const RunConfig& cfg, Index n) {
  const double alpha = resolve_alpha(cfg.ewald, n, cfg.box);
  return make_params(alpha, cfg.ewald.s, cfg.box);
}

int cmd_validate(const Options& o) {
  const auto ctx = make_context("validate", o);
  const auto& cfg = ctx.cfg;
  cfg.box.check();
  const auto sys = load_particles(cfg);
  sys.check(cfg.box);
  const auto nr = validate_neutrality(sys, cfg.box);
  std::cout << "particles: " << sys.size() << "\n";
  std::cout << "neutrality residual: " << nr.residual << " (tolerance " << nr.tolerance << ")\n";
  if (!nr.ok) {
    std::cerr << "error: system is not charge neutral, residual " << nr.residual << "\n";
    return kExitValidation;
  }
  const auto soe = resolve_soe(cfg.soe);
  const double cert = certify_soe(soe);
  std::cout << "soe terms: " << soe.m() << ", certified error on [0,20]: " << cert << "\n";
  if (cfg.soe.eps && cert > *cfg.soe.eps) {
    std::cerr << "error: SOE misses the requested tolerance " << *cfg.soe.eps << "\n";
    return kExitValidation;
  }
  const auto params = resolve_params(cfg, sys.size());
  const double half = 0.5 * std::min(cfg.box.lx, cfg.box.ly);
  std::cout << "alpha: " << params.alpha << ", r_c: " << params.r_c << ", k_c: " << params.k_c
            << ", modes: " << params.kmodes.size() << "\n";
  if (params.r_c > half) {
    std::cerr << "error: cutoff " << params.r_c << " exceeds min(Lx,Ly)/2 = " << half << "\n";
    return kExitConfig;
  }
  const auto pred = predict_errors(params, charge_sq_sum(sys), cfg.box.volume());
  std::cout << "predicted rms errors:\n"
            << "  phi_s " << pred.e_phi_s << "  phi_l " << pred.e_phi_l << "\n"
            << "  U_s   " << pred.e_U_s << "  U_l   " << pred.e_U_l << "\n"
            << "  F_s   " << pred.e_F_s << "  F_l   " << pred.e_F_l << "\n";
  std::cout << "ok\n";
  return kExitOk;
}

int cmd_energy(const Options& o) {
  const auto ctx = make_context("energy", o);
  const auto& cfg = ctx.cfg;
  const auto sys = load_particles(cfg);
  const auto params = resolve_params(cfg, sys.size());
  ElectroSolver solver(cfg.method, cfg.box, params, resolve_soe(cfg.soe), cfg.rb, cfg.rb_seed,
                       ctx.threads);
  auto first = solver.evaluate(sys, true);

  auto out = open_csv(ctx, "energy.csv");
  out << "method,n,alpha,s,u_s,u_l_k,u_l_0,u_self,u_ps,total";
  std::vector<double> totals{first.energy.total()};
  const bool stats = o.repeats > 1;
  if (stats) {
    for (int r = 1; r < o.repeats; ++r) totals.push_back(solver.evaluate(sys, false).energy.total());
    out << ",mean,stderr,repeats";
  }
  double oracle = 0.0;
  if (o.oracle) {
    oracle = direct_lattice_sum_converged(sys, cfg.box);
    out << ",oracle_total,oracle_abs_diff";
  }
  out << "\n";
  const auto& e = first.energy;
  out << method_name(cfg.method) << ',' << sys.size() << ',' << params.alpha << ',' << params.s
      << ',' << e.u_s << ',' << e.u_l_k << ',' << e.u_l_0 << ',' << e.u_self << ',' << e.u_ps
      << ',' << e.total();
  if (stats) {
    const auto st = variance_diagnostics(totals);
    out << ',' << st.mean << ',' << st.stderr_ << ',' << st.n;
  }
  if (o.oracle) out << ',' << oracle << ',' << std::abs(oracle - e.total());
  out << "\n";
  write_manifest(ctx, "energy.csv");

  auto fout = open_csv(ctx, "forces.csv");
  fout << "id,fx,fy,fz\n";
  for (Index i = 0; i < sys.size(); ++i) {
    fout << i << ',' << first.forces(i, 0) << ',' << first.forces(i, 1) << ',' << first.forces(i, 2)
         << "\n";
  }
  write_manifest(ctx, "forces.csv");
  std::cout << std::setprecision(15) << "total energy: " << e.total() << "\n";
  if (o.oracle) std::cout << "lattice-sum oracle: " << oracle << "\n";
  return kExitOk;
}

std::vector<SOEApprox> scan_soes(const RunConfig& cfg) {
  std::vector<SOEApprox> soes;
  for (int m : cfg.scan.soe_m) soes.push_back(build_soe_contour(m));
  return soes;
}

int cmd_scan_error(const Options& o) {
  const auto ctx = make_context("scan-error", o);
  const auto& cfg = ctx.cfg;
  const auto& sc = cfg.scan;
  const std::string name = "scan_" + sc.kind + ".csv";
  auto out = open_csv(ctx, name);
  if (sc.kind == "s") {
    const auto sys = load_particles(cfg);
    const double alpha = resolve_alpha(cfg.ewald, sys.size(), cfg.box);
    const auto soes = scan_soes(cfg);
    const auto values = sc.values.empty() ? std::vector<double>{2, 3, 4, 5, 6} : sc.values;
    const auto rows = scan_s(sys, cfg.box, alpha, values, soes, sc.reference_s);
    out << "x,error_ewald2d";
    for (int m : sc.soe_m) out << ",error_soewald2d_m" << m;
    out << ",force_error_ewald2d";
    for (int m : sc.soe_m) out << ",force_error_soewald2d_m" << m;
    out << "\n";
    for (const auto& r : rows) {
      out << r.s << ',' << r.err_ref;
      for (double v : r.err_soe) out << ',' << v;
      out << ',' << r.force_err_ref;
      for (double v : r.force_err_soe) out << ',' << v;
      out << "\n";
    }
  } else if (sc.kind == "n") {
    const auto values = sc.values.empty() ? std::vector<double>{50, 100, 200, 400} : sc.values;
    std::vector<Index> ns;
    for (double v : values) ns.push_back(static_cast<Index>(v));
    const double density = sc.density > 0.0 ? sc.density : 1e-3;
    const double aspect = cfg.box.lz / cfg.box.lx;
    if (!cfg.ewald.alpha) throw ConfigError("the n scan needs a fixed [ewald] alpha");
    const auto rows = scan_n(ns, density, aspect, *cfg.ewald.alpha, cfg.ewald.s, scan_soes(cfg),
                             sc.configs, cfg.md_seed);
    out << "x";
    for (int m : sc.soe_m) out << ",error_soewald2d_m" << m;
    for (int m : sc.soe_m) out << ",force_error_soewald2d_m" << m;
    out << "\n";
    for (const auto& r : rows) {
      out << r.n;
      for (double v : r.err_soe) out << ',' << v;
      for (double v : r.force_err_soe) out << ',' << v;
      out << "\n";
    }
  } else if (sc.kind == "lz") {
    const auto values = sc.values.empty() ? std::vector<double>{10, 100, 1000} : sc.values;
    const auto sys_n = cfg.generator.n_cation + cfg.generator.n_anion;
    if (!cfg.ewald.alpha) throw ConfigError("the lz scan needs a fixed [ewald] alpha");
    const auto rows = scan_lz(values, cfg.box.lx, sys_n > 0 ? sys_n : 100, *cfg.ewald.alpha,
                              cfg.ewald.s, resolve_soe(cfg.soe), cfg.md_seed, cfg.scan.configs);
    out << "x,error_ewald2d_naive,error_ewald2d_stable,error_soewald2d\n";
    for (const auto& r : rows) {
      out << r.lz << ',' << r.err_naive << ',' << r.err_stable << ',' << r.err_soe << "\n";
    }
  } else {
    const auto sys = load_particles(cfg);
    const auto params = resolve_params(cfg, sys.size());
    const auto rows = force_error_vs_z(sys, cfg.box, params, resolve_soe(cfg.soe));
    out << "z,error\n";
    std::vector<double> z, err;
    for (const auto& r : rows) {
      out << r.z << ',' << r.error << "\n";
      z.push_back(r.z);
      err.push_back(r.error);
    }
    std::cout << "pearson(z, error) = " << pearson(z, err) << "\n";
  }
  write_manifest(ctx, name);
  std::cout << "wrote " << (ctx.out_dir / name).string() << "\n";
  return kExitOk;
}

int cmd_simulate(const Options& o) {
  const auto ctx = make_context("simulate", o);
  const auto& cfg = ctx.cfg;
  const auto sys = load_particles(cfg);
  MDConfig md = cfg.md;
  md.seed = cfg.md_seed;
  ElectroFn electro;
  std::unique_ptr<ElectroSolver> solver;
  const bool charged = sys.q.size() > 0 && (sys.q.array() != 0.0).any();
  if (charged || cfg.box.sigma_top != 0.0 || cfg.box.sigma_bot != 0.0) {
    const auto params = resolve_params(cfg, sys.size());
    solver = std::make_unique<ElectroSolver>(cfg.method, cfg.box, params, resolve_soe(cfg.soe),
                                             cfg.rb, cfg.rb_seed, ctx.threads);
    electro = [&](const ParticleSystem& s) { return solver->evaluate(s, true); };
  }
  std::ofstream traj;
  if (md.trajectory_every > 0) {
    traj = open_csv(ctx, "trajectory.csv");
    traj << "step,id,x,y,z,vx,vy,vz\n";
  }
  const auto res = run_simulation(sys, cfg.box, md, electro, md.trajectory_every > 0 ? &traj : nullptr);
  if (md.trajectory_every > 0) write_manifest(ctx, "trajectory.csv");

  auto msd_out = open_csv(ctx, "msd.csv");
  write_msd_csv(msd_out, compute_msd(res.obs.unwrapped, res.obs.record_dt));
  write_manifest(ctx, "msd.csv");
  auto prof = open_csv(ctx, "profile.csv");
  write_profile_csv(prof, res.obs);
  write_manifest(ctx, "profile.csv");
  auto thermo = open_csv(ctx, "thermo.csv");
  thermo << "t,temperature,potential" << (res.obs.conserved.empty() ? "" : ",conserved") << "\n";
  for (std::size_t i = 0; i < res.obs.temperature.size(); ++i) {
    thermo << static_cast<double>(i + 1) * res.obs.record_dt << ',' << res.obs.temperature[i] << ','
           << res.obs.potential[i];
    if (!res.obs.conserved.empty()) thermo << ',' << res.obs.conserved[i];
    thermo << "\n";
  }
  write_manifest(ctx, "thermo.csv");
  double tmean = 0.0;
  for (double t : res.obs.temperature) tmean += t;
  if (!res.obs.temperature.empty()) tmean /= static_cast<double>(res.obs.temperature.size());
  std::cout << "frames: " << res.obs.frames << ", mean temperature: " << tmean
            << ", neighbour rebuilds: " << res.neighbor_rebuilds << "\n";
  return kExitOk;
}

int cmd_bench(const Options& o) {
  const auto ctx = make_context("bench", o);
  const auto& cfg = ctx.cfg;
  BenchOptions b;
  b.n_list = cfg.bench.n_list;
  b.repeats = o.repeats > 1 ? o.repeats : cfg.bench.repeats;
  b.ewald_max_n = cfg.bench.ewald_max_n;
  b.density = cfg.bench.density;
  b.aspect_z = cfg.bench.aspect_z;
  b.alpha_prefactor = cfg.ewald.alpha_prefactor;
  b.s = cfg.ewald.s;
  b.soe_m = cfg.soe.m;
  b.p = cfg.rb.p;
  b.seed = cfg.md_seed;
  b.threads = ctx.threads;
  if (!o.method.empty()) b.methods = {cfg.method};
  const auto rows = run_bench(b, &std::cout);
  auto out = open_csv(ctx, "bench.csv");
  out << "N,method,seconds,mode_sampled\n";
  for (const auto& r : rows) {
    out << r.n << ',' << r.method << ',' << r.seconds << ',' << (r.extrapolated ? 1 : 0) << "\n";
  }
  write_manifest(ctx, "bench.csv");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"q2d: Ewald-type electrostatics for doubly periodic slabs"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Run configuration file")->required();
    sub->add_option("--out", o.out, "Output directory (overrides [output] dir)");
    sub->add_option("--seed", o.seed, "Seed for both random streams");
    sub->add_option("--method", o.method, "ewald2d | soewald2d | rbse2d");
    sub->add_option("--threads", o.threads, "Worker threads for the Fourier sum");
    sub->add_flag("--oracle", o.oracle, "Also evaluate the brute-force lattice sum");
    sub->add_option("--repeats", o.repeats, "Repeat count (estimator statistics or timing)");
  };
  struct Sub {
    const char* name;
    const char* help;
    int (*fn)(const Options&);
  };
  const Sub subs[] = {
      {"validate", "Check neutrality, SOE certification and cutoffs", cmd_validate},
      {"energy", "One-shot energy and forces", cmd_energy},
      {"scan-error", "Error scans against the stable closed form", cmd_scan_error},
      {"simulate", "Molecular dynamics run", cmd_simulate},
      {"bench", "Timing per energy and force evaluation", cmd_bench},
  };
  std::vector<std::pair<CLI::App*, int (*)(const Options&)>> handlers;
  for (const auto& s : subs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    add_common(sub);
    handlers.emplace_back(sub, s.fn);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }
  try {
    for (auto& [sub, fn] : handlers) {
      if (sub->parsed()) return fn(o);
    }
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
