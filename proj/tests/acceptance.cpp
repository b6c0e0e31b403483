// Acceptance suite: one PASS/FAIL line per criterion.
//
// Usage: q2d_acceptance [criterion numbers...]   (no arguments runs all 14)

#include "q2d/config.hpp"
#include "q2d/core.hpp"
#include "q2d/ewald2d_ref.hpp"
#include "q2d/experiments.hpp"
#include "q2d/md.hpp"
#include "q2d/rbse2d.hpp"
#include "q2d/soe.hpp"
#include "q2d/soewald2d.hpp"
#include "q2d/special.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace q2d;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 3) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

double predicted_energy_error(const EwaldParams& p, const ParticleSystem& sys, const BoxGeometry& box) {
  const auto e = predict_errors(p, charge_sq_sum(sys), box.volume());
  return std::hypot(e.e_U_s, e.e_U_l);
}

// 1. Three independent evaluations of the same energy agree.
Outcome oracle_equivalence() {
  const BoxGeometry box{100, 100, 100, 0, 0};
  const auto soe = build_soe_contour(16);
  const double alpha = 0.11, s = 5.0;
  const auto p = make_params(alpha, s, box);
  double worst = 0.0;
  for (int c = 0; c < 10; ++c) {
    const auto sys = random_neutral_system(10, box, 1000 + c);
    const double ref = total_energy_ref(sys, box, p).total();
    const double soe_u = total_energy_soe(sys, box, p, soe).total();
    const double lat = direct_lattice_sum_converged(sys, box, 50, 1e-10);
    const double tol = std::max(1e-6 * std::abs(lat), predicted_energy_error(p, sys, box));
    for (double d : {std::abs(ref - soe_u), std::abs(ref - lat), std::abs(soe_u - lat)}) {
      worst = std::max(worst, d / tol);
    }
  }
  return {worst <= 1.0, "max pairwise |diff| / tolerance = " + fmt(worst)};
}

// 2. The total energy does not depend on the splitting parameter.
Outcome alpha_invariance() {
  const BoxGeometry box{160, 160, 100, 0, 0};
  const auto sys = random_neutral_system(20, box, 2024);
  const auto soe = build_soe_contour(24);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo, pred = 0.0, scale = 0.0;
  std::ostringstream d;
  for (double alpha : {0.08, 0.10, 0.12}) {
    const auto p = make_params(alpha, 6.0, box);
    const auto e = total_energy_ref(sys, box, p);
    const double u = e.total();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    pred = std::max(pred, predicted_energy_error(p, sys, box));
    scale = std::max({scale, std::abs(e.u_s), std::abs(e.u_l_k), std::abs(e.u_l_0), std::abs(e.u_self)});
    d << " U(" << alpha << ")=" << std::setprecision(16) << u;
  }
  const double spread = hi - lo;
  const double roundoff = 64.0 * std::numeric_limits<double>::epsilon() * scale;
  d << "; spread " << fmt(spread) << " vs 10x predicted " << fmt(10.0 * pred)
    << " (FP64 resolution of the largest part ~ " << fmt(roundoff) << ", spread within it: "
    << (spread <= roundoff ? "yes" : "no") << ")";
  return {spread <= 10.0 * pred, d.str()};
}

// 3. Error against s follows the Gaussian envelope, then saturates at the SOE accuracy.
Outcome fig2a_shape() {
  const BoxGeometry box{100, 100, 100, 0, 0};
  const std::vector<double> s_list{2, 3, 4, 5, 6};
  const std::vector<int> ms{8, 16};
  std::vector<SOEApprox> soes;
  for (int m : ms) soes.push_back(build_soe_contour(m));
  // root-mean-square over a few configurations smooths accidental cancellations
  const int configs = 3;
  std::vector<std::vector<double>> err(ms.size(), std::vector<double>(s_list.size(), 0.0));
  double u_sq = 0.0;
  for (int c = 0; c < configs; ++c) {
    const auto sys = random_neutral_system(100, box, 300 + c);
    const auto rows = scan_s(sys, box, 0.16, s_list, soes, 8.0);
    u_sq += rows.front().u_reference * rows.front().u_reference;
    for (std::size_t j = 0; j < s_list.size(); ++j) {
      for (std::size_t m = 0; m < ms.size(); ++m) err[m][j] += rows[j].err_soe[m] * rows[j].err_soe[m];
    }
  }
  const double u_rms = std::sqrt(u_sq / configs);
  auto env = [](double s) { return std::exp(-s * s) / (s * s); };
  bool ok = true;
  std::ostringstream d;
  for (std::size_t m = 0; m < ms.size(); ++m) {
    for (auto& v : err[m]) v = std::sqrt(v / configs);
    const double eps = soes[m].eps_certified;
    const double plateau = err[m].back();
    const bool plateau_ok = plateau / u_rms <= 10.0 * eps;
    d << "M=" << ms[m] << " (eps " << fmt(eps) << "): relative plateau " << fmt(plateau / u_rms)
      << (plateau_ok ? " ok" : " too high") << ", step ratios/envelope";
    ok = ok && plateau_ok;
    for (std::size_t j = 0; j + 1 < s_list.size(); ++j) {
      if (err[m][j + 1] <= 10.0 * plateau) break;  // reached the plateau
      const double ratio = err[m][j + 1] / err[m][j];
      const double bound = env(s_list[j + 1]) / env(s_list[j]);
      d << " " << fmt(ratio / bound);
      ok = ok && ratio <= bound;
    }
    d << "; ";
  }
  return {ok, d.str()};
}

// 4. Relative error flat in N at fixed density.
Outcome fig2b_flatness() {
  const std::vector<int> ms{8, 16};
  std::vector<SOEApprox> soes;
  for (int m : ms) soes.push_back(build_soe_contour(m));
  const auto rows = scan_n({50, 100, 200, 400}, 1e-4, 1.0, 0.12, 4.0, soes, 10, 77);
  bool ok = true;
  std::ostringstream d;
  for (std::size_t m = 0; m < ms.size(); ++m) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    d << "M=" << ms[m] << ":";
    for (const auto& r : rows) {
      lo = std::min(lo, r.err_soe[m]);
      hi = std::max(hi, r.err_soe[m]);
      d << " " << fmt(r.err_soe[m]);
    }
    d << " (max/min " << fmt(hi / lo) << "); ";
    ok = ok && hi / lo <= 3.0;
  }
  return {ok, d.str()};
}

// 5. Naive closed form degrades with Lz, the SOE evaluation does not.
Outcome fig3_stability() {
  // s = 5 is paired with the 1e-14 accuracy class
  const auto soe = soe_for_tolerance(1e-14);
  const auto rows = scan_lz({10, 100, 1000}, 100.0, 100, 0.1, 5.0, soe, 5, 5);
  bool increasing = true;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  std::ostringstream d;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && !(rows[i].err_naive > rows[i - 1].err_naive)) increasing = false;
    lo = std::min(lo, rows[i].err_soe);
    hi = std::max(hi, rows[i].err_soe);
    d << " Lz=" << rows[i].lz << ": naive " << fmt(rows[i].err_naive) << " stable "
      << fmt(rows[i].err_stable) << " soe " << fmt(rows[i].err_soe);
  }
  const double ratio = lo > 0.0 ? hi / lo : (hi == 0.0 ? 1.0 : std::numeric_limits<double>::infinity());
  d << "; soe M=" << soe.m() << " max/min " << fmt(ratio);
  return {increasing && ratio <= 10.0, d.str()};
}

// 6. Pointwise force error uncorrelated with height.
Outcome fig4_z_independence() {
  const auto soe = build_soe_contour(8);
  const double alpha = 0.1;
  std::ostringstream d;
  bool ok = true;
  auto run = [&](const ParticleSystem& sys, const BoxGeometry& box, const char* label) {
    const auto p = make_params(alpha, 4.0, box);
    const auto ref = energy_forces_ref(sys, box, make_params(alpha, 5.0, box));
    const auto e = energy_forces_soe(sys, box, p, soe);
    std::vector<double> z, err;
    for (Index i = 0; i < sys.size(); ++i) {
      z.push_back(sys.pos(i, 2));
      err.push_back((e.forces.row(i) - ref.forces.row(i)).norm());
    }
    const double r = pearson(z, err);
    d << label << " r=" << fmt(r) << " ";
    ok = ok && std::abs(r) <= 0.2;
  };
  const BoxGeometry neutral{100, 100, 100, 0, 0};
  run(random_neutral_system(100, neutral, 61), neutral, "neutral slabs:");
  const BoxGeometry charged{100, 100, 100, -0.005, -0.005};
  GeneratorSpec g;
  g.n_cation = 100;
  run(generate_particles(g, charged, 62), charged, "charged slabs:");
  return {ok, d.str()};
}

// 7. O(N) recursion reproduces the direct double sum.
Outcome recursion_oracle() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Index n = 2 + static_cast<Index>(u(rng) * 99);
    const BoxGeometry box{10.0 + 90.0 * u(rng), 10.0 + 90.0 * u(rng), 5.0 + 50.0 * u(rng), 0, 0};
    auto sys = random_neutral_system(n, box, 500 + t);
    for (Index i = 0; i < n; ++i) sys.q(i) = 2.0 * u(rng) - 1.0;
    const auto s = SortedSystem::from(sys, box);
    const double kx = 2.0 * kPi * std::floor(u(rng) * 7 - 3) / box.lx;
    const double ky = 2.0 * kPi * std::floor(u(rng) * 7 - 3) / box.ly;
    const cplx beta(0.5 * u(rng), t % 2 ? 2.0 * u(rng) - 1.0 : 0.0);
    const cplx fast = recursive_pair_sum(s, kx, ky, beta);
    const auto& ss = s.sys;
    cplx slow = 0.0;
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < i; ++j) {
        const double dz = ss.pos(i, 2) - ss.pos(j, 2);
        const double ph = kx * (ss.pos(i, 0) - ss.pos(j, 0)) + ky * (ss.pos(i, 1) - ss.pos(j, 1));
        slow += ss.q(i) * ss.q(j) * std::polar(1.0, ph) * std::exp(-beta * dz);
      }
    }
    worst = std::max(worst, std::abs(fast - slow) / std::max(std::abs(slow), 1e-300));
  }
  return {worst <= 1e-12, "max relative difference " + fmt(worst)};
}

// 8. Forces are minus the gradient of the energy.
Outcome gradient_consistency() {
  const BoxGeometry box{40, 40, 30, 0, 0};
  const auto sys0 = random_neutral_system(20, box, 88, 2.0);
  const auto soe = build_soe_contour(16);
  const auto p = make_params(0.2, 4.0, box);
  const double h = 1e-5;
  auto fd = [&](const std::function<double(const ParticleSystem&)>& energy) {
    Coords g = Coords::Zero(sys0.size(), 3);
    for (Index i = 0; i < sys0.size(); ++i) {
      for (int a = 0; a < 3; ++a) {
        auto sp = sys0, sm = sys0;
        sp.pos(i, a) += h;
        sm.pos(i, a) -= h;
        g(i, a) = -(energy(sp) - energy(sm)) / (2.0 * h);
      }
    }
    return g;
  };
  const auto f_soe = energy_forces_soe(sys0, box, p, soe).forces;
  const auto g_soe = fd([&](const ParticleSystem& s) { return total_energy_soe(s, box, p, soe).total(); });
  const double e1 = (f_soe - g_soe).norm() / g_soe.norm();

  // frozen batch: the estimator is a smooth function of positions for fixed modes
  ImportanceSampler sampler(p.alpha, box, 99);
  const auto batch = sampler.metropolis_batch(16);
  const double H = sampler.h_norm();
  auto rb_energy = [&](const ParticleSystem& s) {
    const auto ss = SortedSystem::from(s, box);
    return rb_estimate(ss, box, soe, p.alpha, batch, H, 0.0, false).u_k;
  };
  const auto ss0 = SortedSystem::from(sys0, box);
  const auto f_rb = ss0.unsort(rb_estimate(ss0, box, soe, p.alpha, batch, H, 0.0, true).forces);
  const auto g_rb = fd(rb_energy);
  const double e2 = (f_rb - g_rb).norm() / g_rb.norm();
  return {e1 <= 1e-5 && e2 <= 1e-5,
          "soewald2d rel " + fmt(e1) + ", frozen-batch rbse2d rel " + fmt(e2)};
}

// 9. Random-batch estimates are unbiased.
Outcome unbiasedness() {
  const BoxGeometry box{50, 50, 30, 0, 0};
  const auto sys = random_neutral_system(50, box, 909, 1.0);
  const auto soe = build_soe_contour(8);
  const double alpha = 0.3;
  const auto s = SortedSystem::from(sys, box);
  const auto full = full_mode_sum(s, box, soe, alpha, true);
  ImportanceSampler sampler(alpha, box, 4242);
  const double cq = q_term_constant(charge_sq_sum(sys), alpha, box);
  const int batches = 10000;
  std::vector<double> e;
  e.reserve(batches);
  Coords f_sum = Coords::Zero(sys.size(), 3), f_sq = Coords::Zero(sys.size(), 3);
  for (int b = 0; b < batches; ++b) {
    const auto batch = sampler.metropolis_batch(16);
    const auto est = rb_estimate(s, box, soe, alpha, batch, sampler.h_norm(), cq, true);
    e.push_back(est.u_k);
    f_sum += est.forces;
    f_sq += est.forces.cwiseProduct(est.forces);
  }
  const auto st = variance_diagnostics(e);
  const double ze = (st.mean - full.u_k) / st.stderr_;
  int bad = 0;
  double zmax = 0.0;
  const double nb = batches;
  for (Index i = 0; i < sys.size(); ++i) {
    for (int a = 0; a < 3; ++a) {
      const double mean = f_sum(i, a) / nb;
      const double var = (f_sq(i, a) - nb * mean * mean) / (nb - 1.0);
      const double z = (mean - full.forces(i, a)) / std::sqrt(var / nb);
      zmax = std::max(zmax, std::abs(z));
      if (std::abs(z) > 3.0) ++bad;
    }
  }
  return {std::abs(ze) <= 3.0 && bad == 0,
          "energy z=" + fmt(ze) + ", force components beyond 3 SE: " + std::to_string(bad) + "/" +
              std::to_string(3 * sys.size()) + " (max |z| " + fmt(zmax) + ")"};
}

// 10. Estimator variance falls like 1/P.
Outcome variance_scaling() {
  const BoxGeometry box{50, 50, 30, 0, 0};
  const auto sys = random_neutral_system(50, box, 1010, 1.0);
  const auto soe = build_soe_contour(8);
  const std::vector<int> ps{8, 16, 32, 64};
  const auto rows = variance_vs_p(sys, box, 0.3, soe, ps, 4000, 11);
  std::vector<double> x, y;
  std::ostringstream d;
  for (const auto& r : rows) {
    x.push_back(r.p);
    y.push_back(r.variance);
    d << " P=" << r.p << ":" << fmt(r.variance);
  }
  const double slope = loglog_slope(x, y);
  d << "; slope " << fmt(slope);
  return {std::abs(slope + 1.0) <= 0.15, d.str()};
}

// 11. Sampler acceptance and distribution.
Outcome sampler_quality() {
  const BoxGeometry box{100, 100, 100, 0, 0};
  const auto r = sampler_check(0.3, box, 1000000, 1111, 10);
  return {r.acceptance > 0.9 && r.p_value > 0.01,
          "acceptance " + fmt(r.acceptance) + ", chi2 " + fmt(r.chi2) + " (dof " +
              std::to_string(r.dof) + "), p = " + fmt(r.p_value)};
}

// 12. Scaled electrolyte MD: random batches agree with the full sum.
Outcome md_agreement() {
  const BoxGeometry box{50, 50, 30, 0, 0};
  GeneratorSpec g;
  g.n_cation = 50;
  g.n_anion = 50;
  g.min_distance = 1.0;
  g.wall_margin = 1.0;
  g.temperature = 1.0;
  const auto sys = generate_particles(g, box, 12);
  const auto soe = build_soe_contour(8);
  const auto params = make_params(0.15, 3.0, box);

  MDConfig md;
  md.dt = 0.001;
  md.equilibration = 10000;
  md.steps = 100000;
  md.record_every = 100;
  md.nbins = 15;
  md.walls.z_lo = 0.0;
  md.walls.z_hi = box.lz;
  md.walls.epsilon = 1.0;
  md.walls.sigma = 0.5;
  md.thermostat.temperature = 1.0;
  md.thermostat.gamma = 1.0;
  md.thermostat.tau = 0.1;
  md.seed = 1212;

  auto run = [&](Method m, int p, ThermostatKind kind) {
    ElectroSolver solver(m, box, params, soe, RBSection{p, 10, 100}, 3434, 1);
    MDConfig c = md;
    c.thermostat.kind = kind;
    ElectroFn fn = [&](const ParticleSystem& s) { return solver.evaluate(s, true); };
    return run_simulation(sys, box, c, fn);
  };
  auto mean_t = [](const SimulationResult& r) {
    double t = 0.0;
    for (double v : r.obs.temperature) t += v;
    return t / static_cast<double>(r.obs.temperature.size());
  };

  const auto ref = run(Method::soewald2d, 0, ThermostatKind::langevin);
  const auto rb16 = run(Method::rbse2d, 16, ThermostatKind::langevin);
  const auto rb64 = run(Method::rbse2d, 64, ThermostatKind::langevin);
  const auto nh = run(Method::rbse2d, 16, ThermostatKind::nose_hoover);

  std::ostringstream d;
  bool ok = true;
  const int blocks = 20;
  const auto c_ref = ref.obs.concentration(true);
  const auto e_ref = ref.obs.concentration_stderr(true, blocks);
  const auto msd_ref = compute_msd(ref.obs.unwrapped, ref.obs.record_dt, 100);
  for (const auto* r : {&rb16, &rb64}) {
    const auto c = r->obs.concentration(true);
    const auto e = r->obs.concentration_stderr(true, blocks);
    double zmax = 0.0;
    for (std::size_t b = 0; b < c.size(); ++b) {
      const double se = std::hypot(e[b], e_ref[b]);
      if (se > 0.0) zmax = std::max(zmax, std::abs(c[b] - c_ref[b]) / se);
    }
    const auto msd = compute_msd(r->obs.unwrapped, r->obs.record_dt, 100);
    double msd_dev = 0.0;
    for (std::size_t lag : {9u, 19u, 49u, 99u}) {
      msd_dev = std::max(msd_dev, std::abs(msd.msd_xy[lag] / msd_ref.msd_xy[lag] - 1.0));
    }
    const char* label = r == &rb16 ? "P=16" : "P=64";
    d << label << ": profile max|dz|/sigma " << fmt(zmax) << ", MSD_xy max dev " << fmt(msd_dev)
      << "; ";
    ok = ok && zmax <= 3.0 && msd_dev <= 0.10;
  }
  const double t_lang = mean_t(ref), t_nh = mean_t(nh);
  d << "T langevin " << fmt(t_lang, 4) << ", T nose-hoover " << fmt(t_nh, 4);
  ok = ok && std::abs(t_lang - 1.0) <= 0.02 && std::abs(t_nh - 1.0) <= 0.02;
  return {ok, d.str()};
}

// 13. Cost scaling of the fast solvers.
Outcome complexity_slopes() {
  BenchOptions opt;
  opt.n_list = {1000, 3000, 10000, 30000, 100000};
  opt.repeats = 5;
  opt.ewald_full_max_n = 1000;
  opt.ewald_max_n = 10000;
  opt.alpha_prefactor = 2.0;
  opt.s = 3.0;
  opt.soe_m = 8;
  const auto rows = run_bench(opt, &std::cerr);
  std::map<std::string, std::vector<double>> n, t;
  double t_rb_1e4 = 0.0, t_ew_1e4 = 0.0;
  for (const auto& r : rows) {
    n[r.method].push_back(static_cast<double>(r.n));
    t[r.method].push_back(r.seconds);
    if (r.n == 10000 && r.method == "rbse2d") t_rb_1e4 = r.seconds;
    if (r.n == 10000 && r.method == "ewald2d") t_ew_1e4 = r.seconds;
  }
  const double s_soe = loglog_slope(n["soewald2d"], t["soewald2d"]);
  const double s_rb = loglog_slope(n["rbse2d"], t["rbse2d"]);
  const double speedup = t_ew_1e4 / t_rb_1e4;
  const bool ok = s_soe >= 1.25 && s_soe <= 1.55 && s_rb <= 1.15 && speedup >= 100.0;
  return {ok, "soewald2d slope " + fmt(s_soe) + ", rbse2d slope " + fmt(s_rb) +
                  ", ewald2d/rbse2d at N=1e4 " + fmt(speedup) + "x (ewald2d mode-sampled)"};
}

// 14. SOE certification and the implied kernel bounds.
Outcome soe_certification() {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::ostringstream d;
  bool ok = true;
  for (double target : {1e-4, 1e-8}) {
    const auto soe = soe_for_tolerance(target);
    const double cert = certify_soe(soe);
    int viol = 0;
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
      const double alpha = 0.05 + 0.95 * u(rng);
      // modes actually summed: k up to 2 s alpha with s <= 6
      const double k = (0.01 + 11.99 * u(rng)) * alpha;
      const double z = 50.0 * u(rng) * u(rng);
      const auto a = xi_soe(soe, alpha, k, z);
      const auto r = xi_closed(k, z, alpha);
      const auto da = dxi_soe(soe, alpha, k, z);
      const auto dr = dxi_closed(k, z, alpha);
      const double bx = xi_bound(cert, alpha, k), bd = dxi_bound(cert, alpha, k);
      const double q = std::max({std::abs(a.plus - r.plus) / bx, std::abs(a.minus - r.minus) / bx,
                                 std::abs(da.plus - dr.plus) / bd, std::abs(da.minus - dr.minus) / bd});
      worst = std::max(worst, q);
      if (q > 1.0) ++viol;
    }
    d << "eps " << fmt(target) << ": M=" << soe.m() << " certified " << fmt(cert)
      << ", bound violations " << viol << "/1000 (max err/bound " << fmt(worst) << "); ";
    ok = ok && cert <= target && viol == 0;
  }
  return {ok, d.str()};
}

struct Criterion {
  const char* name;
  Outcome (*fn)();
};

const Criterion kCriteria[] = {
    {"oracle equivalence", oracle_equivalence},
    {"alpha invariance", alpha_invariance},
    {"error vs s shape", fig2a_shape},
    {"error flat in N", fig2b_flatness},
    {"stability in Lz", fig3_stability},
    {"force error independent of z", fig4_z_independence},
    {"recursion oracle", recursion_oracle},
    {"gradient consistency", gradient_consistency},
    {"random-batch unbiasedness", unbiasedness},
    {"variance scaling in P", variance_scaling},
    {"sampler acceptance and distribution", sampler_quality},
    {"scaled electrolyte MD", md_agreement},
    {"complexity slopes", complexity_slopes},
    {"SOE certification", soe_certification},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
  if (which.empty()) {
    for (int i = 1; i <= 14; ++i) which.push_back(i);
  }
  int failures = 0;
  for (int id : which) {
    if (id < 1 || id > 14) {
      std::cerr << "unknown criterion " << id << "\n";
      return 2;
    }
    const auto& c = kCriteria[id - 1];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << std::setw(2) << id << "] " << c.name << " ("
              << fmt(secs, 3) << " s): " << o.detail << std::endl;
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
