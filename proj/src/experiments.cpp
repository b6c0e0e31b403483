#include "q2d/experiments.hpp"

#include "q2d/soewald2d.hpp"
#include "q2d/special.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>

namespace q2d {

namespace {

constexpr std::uint64_t kParticleStream = 0x5041525449434cULL;

}  // namespace

ParticleSystem generate_particles(const GeneratorSpec& spec, const BoxGeometry& box,
                                  std::uint64_t seed) {
  const Index n = spec.n_cation + spec.n_anion;
  ParticleSystem sys(n);
  auto rng = make_stream(seed, kParticleStream);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double zlo = spec.wall_margin;
  const double zhi = box.lz - spec.wall_margin;
  if (!(zhi > zlo)) throw ConfigError("wall margin leaves no room in z");
  const double d2 = spec.min_distance * spec.min_distance;
  for (Index i = 0; i < n; ++i) {
    sys.q(i) = i < spec.n_cation ? spec.q_cation : spec.q_anion;
    sys.m(i) = spec.mass;
    bool placed = false;
    for (int attempt = 0; attempt < 100000 && !placed; ++attempt) {
      const Vec3 p(unif(rng) * box.lx, unif(rng) * box.ly, zlo + unif(rng) * (zhi - zlo));
      placed = true;
      if (d2 > 0.0) {
        for (Index j = 0; j < i && placed; ++j) {
          double dx = p(0) - sys.pos(j, 0), dy = p(1) - sys.pos(j, 1);
          const double dz = p(2) - sys.pos(j, 2);
          dx -= box.lx * std::nearbyint(dx / box.lx);
          dy -= box.ly * std::nearbyint(dy / box.ly);
          placed = dx * dx + dy * dy + dz * dz >= d2;
        }
      }
      if (placed) sys.pos.row(i) = p.transpose();
    }
    if (!placed) throw ConfigError("could not place particles with the requested min_distance");
  }
  if (spec.temperature > 0.0) {
    std::normal_distribution<double> normal;
    for (Index i = 0; i < n; ++i) {
      const double sd = std::sqrt(spec.temperature / sys.m(i));
      for (int a = 0; a < 3; ++a) sys.vel(i, a) = sd * normal(rng);
    }
  }
  return sys;
}

ParticleSystem random_neutral_system(Index n, const BoxGeometry& box, std::uint64_t seed,
                                     double wall_margin) {
  ParticleSystem sys(n);
  auto rng = make_stream(seed, kParticleStream);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (Index i = 0; i < n; ++i) {
    sys.q(i) = (i % 2 == 0) ? 1.0 : -1.0;
    sys.pos(i, 0) = unif(rng) * box.lx;
    sys.pos(i, 1) = unif(rng) * box.ly;
    sys.pos(i, 2) = wall_margin + unif(rng) * (box.lz - 2.0 * wall_margin);
  }
  return sys;
}

SOEApprox resolve_soe(const SOESection& sec) {
  if (!sec.table.empty()) return load_soe_table_file(sec.table);
  if (sec.eps) return soe_for_tolerance(*sec.eps);
  return build_soe_contour(sec.m);
}

double resolve_alpha(const EwaldSection& sec, Index n, const BoxGeometry& box) {
  if (sec.alpha) return *sec.alpha;
  return choose_alpha(std::max<Index>(n, 1), box, sec.alpha_mode, sec.alpha_prefactor, sec.s);
}

ElectroSolver::ElectroSolver(Method method, const BoxGeometry& box, const EwaldParams& params,
                             SOEApprox soe, const RBSection& rb, std::uint64_t rb_seed,
                             int threads)
    : method_(method), box_(box), params_(params), soe_(std::move(soe)), threads_(threads) {
  if (method == Method::rbse2d) {
    rb_ = std::make_unique<RBSE2DSolver>(box, params, soe_, rb.p, rb_seed, rb.downsample,
                                         rb.burn_in);
  }
}

EnergyForces ElectroSolver::evaluate(const ParticleSystem& sys, bool with_forces) {
  SOESolverOptions opt;
  opt.threads = threads_;
  switch (method_) {
    case Method::ewald2d:
      if (with_forces) return energy_forces_ref(sys, box_, params_);
      return {total_energy_ref(sys, box_, params_), Coords::Zero(sys.size(), 3)};
    case Method::soewald2d:
      if (with_forces) return energy_forces_soe(sys, box_, params_, soe_, opt);
      return {total_energy_soe(sys, box_, params_, soe_, opt), Coords::Zero(sys.size(), 3)};
    case Method::rbse2d:
      return rb_->evaluate(sys, with_forces);
  }
  throw ConfigError("unknown method");
}

double relative_error(double a, double b) {
  if (!std::isfinite(a)) return std::numeric_limits<double>::infinity();
  const double d = std::abs(a - b);
  return b == 0.0 ? d : d / std::abs(b);
}

double relative_force_error(const Coords& f, const Coords& f_ref) {
  if (!f.allFinite()) return std::numeric_limits<double>::infinity();
  const double den = f_ref.squaredNorm();
  const double num = (f - f_ref).squaredNorm();
  return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

std::vector<SScanRow> scan_s(const ParticleSystem& sys, const BoxGeometry& box, double alpha,
                             const std::vector<double>& s_list, const std::vector<SOEApprox>& soes,
                             double reference_s) {
  const auto ref = energy_forces_ref(sys, box, make_params(alpha, reference_s, box));
  const double u_star = ref.energy.total();
  std::vector<SScanRow> rows;
  for (double s : s_list) {
    const auto p = make_params(alpha, s, box);
    SScanRow row;
    row.s = s;
    row.u_reference = u_star;
    const auto r = energy_forces_ref(sys, box, p);
    row.err_ref = std::isfinite(r.energy.total()) ? std::abs(r.energy.total() - u_star)
                                                  : std::numeric_limits<double>::infinity();
    row.force_err_ref = relative_force_error(r.forces, ref.forces);
    for (const auto& soe : soes) {
      const auto e = energy_forces_soe(sys, box, p, soe);
      row.err_soe.push_back(std::abs(e.energy.total() - u_star));
      row.force_err_soe.push_back(relative_force_error(e.forces, ref.forces));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<NScanRow> scan_n(const std::vector<Index>& n_list, double density, double aspect_z,
                             double alpha, double s, const std::vector<SOEApprox>& soes,
                             int configs, std::uint64_t seed) {
  std::vector<NScanRow> rows;
  for (Index n : n_list) {
    const double l = std::cbrt(static_cast<double>(n) / (density * aspect_z));
    const BoxGeometry box{l, l, aspect_z * l, 0.0, 0.0};
    const auto p = make_params(alpha, s, box);
    NScanRow row;
    row.n = n;
    row.err_soe.assign(soes.size(), 0.0);
    row.force_err_soe.assign(soes.size(), 0.0);
    // random placements give energies of either sign near zero, so errors are
    // normalised by the RMS energy over the configurations
    double u_sq = 0.0, f_sq = 0.0;
    for (int c = 0; c < configs; ++c) {
      const auto sys = random_neutral_system(n, box, seed + static_cast<std::uint64_t>(c));
      const auto ref = energy_forces_ref(sys, box, p);
      u_sq += ref.energy.total() * ref.energy.total();
      f_sq += ref.forces.squaredNorm();
      for (std::size_t m = 0; m < soes.size(); ++m) {
        const auto e = energy_forces_soe(sys, box, p, soes[m]);
        const double d = e.energy.total() - ref.energy.total();
        row.err_soe[m] += d * d;
        row.force_err_soe[m] += (e.forces - ref.forces).squaredNorm();
      }
    }
    for (std::size_t m = 0; m < soes.size(); ++m) {
      row.err_soe[m] = std::sqrt(row.err_soe[m] / u_sq);
      row.force_err_soe[m] = std::sqrt(row.force_err_soe[m] / f_sq);
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<LzScanRow> scan_lz(const std::vector<double>& lz_list, double lx, Index n,
                               double alpha, double s, const SOEApprox& soe, std::uint64_t seed,
                               int configs) {
  std::vector<LzScanRow> rows;
  for (double lz : lz_list) {
    const BoxGeometry box{lx, lx, lz, 0.0, 0.0};
    const auto p = make_params(alpha, s, box);
    LzScanRow row;
    row.lz = lz;
    for (int c = 0; c < configs; ++c) {
      const auto sys = random_neutral_system(n, box, seed + static_cast<std::uint64_t>(c));
      // short-range, self and slab parts are shared by every variant; only the
      // long-range sum is compared against the long double evaluation
      const long double exact = long_range_energy_extended(sys, box, p);
      const double u_0 = zero_mode_energy_ref(sys, box, alpha);
      auto sq_err = [&](double u_long) {
        if (!std::isfinite(u_long)) return std::numeric_limits<double>::infinity();
        const auto d = static_cast<double>(static_cast<long double>(u_long) - exact);
        return d * d;
      };
      row.err_naive += sq_err(fourier_energy_ref(sys, box, p, XiVariant::naive) + u_0);
      row.err_stable += sq_err(fourier_energy_ref(sys, box, p, XiVariant::stable) + u_0);
      const auto e = total_energy_soe(sys, box, p, soe);
      row.err_soe += sq_err(e.u_l_k + e.u_l_0);
    }
    for (double* v : {&row.err_naive, &row.err_stable, &row.err_soe}) *v = std::sqrt(*v / configs);
    rows.push_back(row);
  }
  return rows;
}

std::vector<ForceZRow> force_error_vs_z(const ParticleSystem& sys, const BoxGeometry& box,
                                        const EwaldParams& params, const SOEApprox& soe) {
  const auto ref = energy_forces_ref(sys, box, params);
  const auto e = energy_forces_soe(sys, box, params, soe);
  std::vector<ForceZRow> rows;
  for (Index i = 0; i < sys.size(); ++i) {
    rows.push_back({sys.pos(i, 2), (e.forces.row(i) - ref.forces.row(i)).norm()});
  }
  return rows;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) return 0.0;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) mx += x[i], my += y[i];
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

SamplerCheck sampler_check(double alpha, const BoxGeometry& box, std::size_t samples,
                           std::uint64_t seed, int downsample) {
  ImportanceSampler sampler(alpha, box, seed, downsample);
  std::map<std::pair<int, int>, std::size_t> hist;
  std::size_t left = samples;
  while (left > 0) {
    const int chunk = static_cast<int>(std::min<std::size_t>(left, 100000));
    for (const auto& km : sampler.metropolis_batch(chunk).modes) ++hist[{km.mx, km.my}];
    left -= static_cast<std::size_t>(chunk);
  }
  // exact target over every mode where it is not negligible
  const auto modes = enumerate_modes(box, 14.0 * alpha);
  std::vector<double> prob;
  prob.reserve(modes.size());
  double norm = 0.0;
  for (const auto& km : modes) {
    prob.push_back(std::exp(-km.k * km.k / (4.0 * alpha * alpha)));
    norm += prob.back();
  }
  SamplerCheck out;
  out.samples = samples;
  out.acceptance = sampler.acceptance_rate();
  const double total = static_cast<double>(samples);
  double pooled_obs = 0.0, pooled_exp = 0.0;
  std::size_t seen = 0;
  int bins = 0;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const double e = total * prob[i] / norm;
    const auto it = hist.find({modes[i].mx, modes[i].my});
    const double o = it == hist.end() ? 0.0 : static_cast<double>(it->second);
    seen += static_cast<std::size_t>(o);
    if (e >= 5.0) {
      out.chi2 += (o - e) * (o - e) / e;
      ++bins;
    } else {
      pooled_obs += o;
      pooled_exp += e;
    }
  }
  // anything sampled outside the enumerated set lands in the pooled tail
  pooled_obs += static_cast<double>(samples - seen);
  if (pooled_exp > 0.0) {
    out.chi2 += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
    ++bins;
  }
  out.dof = bins - 1;
  if (out.dof > 0) {
    boost::math::chi_squared dist(out.dof);
    out.p_value = boost::math::cdf(boost::math::complement(dist, out.chi2));
  }
  return out;
}

std::vector<VarianceRow> variance_vs_p(const ParticleSystem& sys, const BoxGeometry& box,
                                       double alpha, const SOEApprox& soe,
                                       const std::vector<int>& p_list, int batches,
                                       std::uint64_t seed) {
  const auto s = SortedSystem::from(sys, box);
  const double cq = q_term_constant(charge_sq_sum(sys), alpha, box);
  std::vector<VarianceRow> rows;
  for (int p : p_list) {
    ImportanceSampler sampler(alpha, box, seed + static_cast<std::uint64_t>(p));
    std::vector<double> e;
    e.reserve(static_cast<std::size_t>(batches));
    for (int b = 0; b < batches; ++b) e.push_back(rb_energy_estimate(s, box, soe, alpha, sampler, p, cq));
    const auto st = variance_diagnostics(e);
    rows.push_back({p, st.variance, st.mean});
  }
  return rows;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) return 0.0;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) mx += std::log(x[i]), my += std::log(y[i]);
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Every `stride`-th group of equal |k| from the half modes, plus mirrors.
EwaldParams mode_subset(const EwaldParams& p, std::size_t stride, double& scale) {
  auto half = p.half_modes();
  std::stable_sort(half.begin(), half.end(), [](const KMode& a, const KMode& b) { return a.k < b.k; });
  EwaldParams sub = p;
  sub.kmodes.clear();
  std::size_t group = 0, kept = 0;
  for (std::size_t i = 0; i < half.size(); ++i) {
    if (i > 0 && half[i].k > half[i - 1].k * (1.0 + 1e-13)) ++group;
    if (group % stride != 0) continue;
    KMode mirror = half[i];
    mirror.mx = -mirror.mx;
    mirror.my = -mirror.my;
    mirror.kx = -mirror.kx;
    mirror.ky = -mirror.ky;
    sub.kmodes.push_back(half[i]);
    sub.kmodes.push_back(mirror);
    ++kept;
  }
  scale = kept == 0 ? 0.0 : static_cast<double>(half.size()) / static_cast<double>(kept);
  return sub;
}

}  // namespace

std::vector<BenchRow> run_bench(const BenchOptions& opt, std::ostream* progress) {
  std::vector<BenchRow> rows;
  const SOEApprox soe = build_soe_contour(opt.soe_m);
  for (Index n : opt.n_list) {
    const double volume = static_cast<double>(n) / opt.density;
    const double l = std::cbrt(volume / opt.aspect_z);
    const BoxGeometry box{l, l, opt.aspect_z * l, 0.0, 0.0};
    const auto sys = random_neutral_system(n, box, opt.seed);
    for (Method m : opt.methods) {
      if (m == Method::ewald2d && n > opt.ewald_max_n) continue;
      const AlphaMode mode = m == Method::rbse2d ? AlphaMode::linear : AlphaMode::balanced;
      const double alpha = choose_alpha(n, box, mode, opt.alpha_prefactor, opt.s);
      const auto params = make_params(alpha, opt.s, box);
      BenchRow row;
      row.n = n;
      row.method = method_name(m);
      std::vector<double> times;
      if (m == Method::ewald2d && n > opt.ewald_full_max_n) {
        // time the real-space and zero-mode parts on their own, then a
        // fraction of the mode groups, and scale the Fourier part up
        double scale = 1.0;
        const std::size_t stride = static_cast<std::size_t>(
            std::max<double>(1.0, std::ceil(static_cast<double>(n) / static_cast<double>(opt.ewald_full_max_n))));
        const auto sub = mode_subset(params, stride, scale);
        EwaldParams none = params;
        none.kmodes.clear();
        auto t0 = Clock::now();
        (void)energy_forces_ref(sys, box, none);
        const double base = seconds_since(t0);
        t0 = Clock::now();
        (void)energy_forces_ref(sys, box, sub);
        const double part = seconds_since(t0);
        times.push_back(base + std::max(0.0, part - base) * scale);
        row.extrapolated = true;
      } else {
        ElectroSolver solver(m, box, params, soe, RBSection{opt.p, 10, 100}, opt.seed, opt.threads);
        const int reps = m == Method::ewald2d ? 1 : opt.repeats;
        for (int r = 0; r < reps; ++r) {
          const auto t0 = Clock::now();
          (void)solver.evaluate(sys, true);
          times.push_back(seconds_since(t0));
        }
      }
      row.seconds = median(times);
      if (progress != nullptr) {
        *progress << "bench N=" << n << " " << row.method << " " << row.seconds << " s"
                  << (row.extrapolated ? " (mode-sampled)" : "") << std::endl;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace q2d
