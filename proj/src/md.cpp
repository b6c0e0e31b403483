#include "q2d/md.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace q2d {

LJPair lj_pair(double r2, double epsilon, double sigma) {
  LJPair out;
  const double rc = std::pow(2.0, 1.0 / 6.0) * sigma;
  if (r2 >= rc * rc) return out;
  if (r2 <= 0.0) throw NumericError("overlapping particles in the LJ pair term");
  const double s2 = sigma * sigma / r2;
  const double s6 = s2 * s2 * s2;
  const double s12 = s6 * s6;
  out.energy = 4.0 * epsilon * (s12 - s6) + epsilon;
  out.f_over_r = 24.0 * epsilon * (2.0 * s12 - s6) / r2;
  return out;
}

ForceResult lj_forces(const ParticleSystem& sys, const BoxGeometry& box, const LJParams& lj,
                      VerletList* list) {
  ForceResult out;
  const Index n = sys.size();
  out.forces = Coords::Zero(n, 3);
  double energy = 0.0;
  auto visit = [&](Index i, Index j, double dx, double dy, double dz, double r2) {
    const LJPair p = lj_pair(r2, lj.epsilon, lj.sigma);
    if (p.energy == 0.0 && p.f_over_r == 0.0) return;
    energy += p.energy;
    const Eigen::RowVector3d f(p.f_over_r * dx, p.f_over_r * dy, p.f_over_r * dz);
    out.forces.row(i) += f;
    out.forces.row(j) -= f;
  };
  if (list != nullptr) {
    list->update(sys.pos, box);
    list->for_each_pair(sys.pos, box, visit);
  } else {
    CellList cells(sys.pos, box, lj.r_cut());
    cells.for_each_pair(sys.pos, visit);
  }
  out.energy = energy;
  return out;
}

ForceResult wall_forces(const ParticleSystem& sys, const WallParams& walls) {
  ForceResult out;
  const Index n = sys.size();
  out.forces = Coords::Zero(n, 3);
  for (Index i = 0; i < n; ++i) {
    const double dlo = sys.pos(i, 2) - walls.z_lo;
    const double dhi = walls.z_hi - sys.pos(i, 2);
    if (dlo <= 0.0 || dhi <= 0.0) {
      std::ostringstream msg;
      msg << "particle " << i << " is on or beyond a wall (z = " << sys.pos(i, 2) << ")";
      throw NumericError(msg.str());
    }
    const LJPair lo = lj_pair(dlo * dlo, walls.epsilon, walls.sigma);
    const LJPair hi = lj_pair(dhi * dhi, walls.epsilon, walls.sigma);
    out.energy += lo.energy + hi.energy;
    out.forces(i, 2) += lo.f_over_r * dlo - hi.f_over_r * dhi;
  }
  return out;
}

double kinetic_energy(const ParticleSystem& sys) {
  double k = 0.0;
  for (Index i = 0; i < sys.size(); ++i) k += 0.5 * sys.m(i) * sys.vel.row(i).squaredNorm();
  return k;
}

double instantaneous_temperature(const ParticleSystem& sys) {
  if (sys.size() == 0) return 0.0;
  return 2.0 * kinetic_energy(sys) / (3.0 * static_cast<double>(sys.size()));
}

void wrap_with_images(ParticleSystem& sys, const BoxGeometry& box, Eigen::MatrixXi* images) {
  const double L[2] = {box.lx, box.ly};
  for (Index i = 0; i < sys.size(); ++i) {
    for (int a = 0; a < 2; ++a) {
      const double shift = std::floor(sys.pos(i, a) / L[a]);
      if (shift != 0.0) {
        sys.pos(i, a) -= shift * L[a];
        if (images != nullptr) (*images)(i, a) += static_cast<int>(shift);
      }
      if (sys.pos(i, a) >= L[a]) {
        sys.pos(i, a) -= L[a];
        if (images != nullptr) (*images)(i, a) += 1;
      }
    }
  }
}

namespace {

void kick(ParticleSystem& sys, const Coords& forces, double h) {
  for (Index i = 0; i < sys.size(); ++i) sys.vel.row(i) += (h / sys.m(i)) * forces.row(i);
}

void drift(ParticleSystem& sys, double h) { sys.pos += h * sys.vel; }

void check_dt(double dt) {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
}

}  // namespace

double langevin_step(ParticleSystem& sys, const BoxGeometry& box, Coords& forces,
                     const ForceFn& force_fn, const ThermostatState& th, double dt,
                     std::mt19937_64& rng, Eigen::MatrixXi* images) {
  check_dt(dt);
  std::normal_distribution<double> normal;
  kick(sys, forces, 0.5 * dt);
  drift(sys, 0.5 * dt);
  for (Index i = 0; i < sys.size(); ++i) {
    const double c1 = std::exp(-th.gamma * dt / sys.m(i));
    const double c2 = std::sqrt(th.temperature / sys.m(i) * (1.0 - c1 * c1));
    for (int a = 0; a < 3; ++a) sys.vel(i, a) = c1 * sys.vel(i, a) + c2 * normal(rng);
  }
  drift(sys, 0.5 * dt);
  wrap_with_images(sys, box, images);
  const double u = force_fn(sys, forces);
  kick(sys, forces, 0.5 * dt);
  return u;
}

namespace {

// Quarter update of xi, exact velocity scaling over h, quarter update of xi.
void nose_hoover_half(ParticleSystem& sys, ThermostatState& th, double h) {
  const Index dof = 3 * sys.size();
  if (dof == 0) return;
  const double qm = th.nh_mass(dof);
  const double gT = static_cast<double>(dof) * th.temperature;
  th.nh_xi += 0.5 * h * (2.0 * kinetic_energy(sys) - gT) / qm;
  sys.vel *= std::exp(-th.nh_xi * h);
  th.nh_eta += th.nh_xi * h;
  th.nh_xi += 0.5 * h * (2.0 * kinetic_energy(sys) - gT) / qm;
}

}  // namespace

double nose_hoover_step(ParticleSystem& sys, const BoxGeometry& box, Coords& forces,
                        const ForceFn& force_fn, ThermostatState& th, double dt,
                        Eigen::MatrixXi* images) {
  check_dt(dt);
  nose_hoover_half(sys, th, 0.5 * dt);
  kick(sys, forces, 0.5 * dt);
  drift(sys, dt);
  wrap_with_images(sys, box, images);
  const double u = force_fn(sys, forces);
  kick(sys, forces, 0.5 * dt);
  nose_hoover_half(sys, th, 0.5 * dt);
  return u;
}

double nose_hoover_conserved(const ParticleSystem& sys, double potential,
                             const ThermostatState& th) {
  const Index dof = 3 * sys.size();
  return kinetic_energy(sys) + potential + 0.5 * th.nh_mass(dof) * th.nh_xi * th.nh_xi +
         static_cast<double>(dof) * th.temperature * th.nh_eta;
}

Observables::Observables(int nbins_, double z_lo_, double z_hi_, double area_)
    : nbins(nbins_),
      z_lo(z_lo_),
      z_hi(z_hi_),
      area(area_),
      cation_counts(static_cast<std::size_t>(nbins_), 0.0),
      anion_counts(static_cast<std::size_t>(nbins_), 0.0) {
  if (nbins_ < 1 || !(z_hi_ > z_lo_)) throw ConfigError("invalid histogram range");
}

void Observables::record(const ParticleSystem& sys, const Coords& unwrapped_pos) {
  std::vector<double> cat(static_cast<std::size_t>(nbins), 0.0);
  std::vector<double> an(static_cast<std::size_t>(nbins), 0.0);
  const double w = bin_width();
  for (Index i = 0; i < sys.size(); ++i) {
    const int b = std::clamp(static_cast<int>((sys.pos(i, 2) - z_lo) / w), 0, nbins - 1);
    if (sys.q(i) > 0.0) cat[static_cast<std::size_t>(b)] += 1.0;
    else if (sys.q(i) < 0.0) an[static_cast<std::size_t>(b)] += 1.0;
  }
  for (int b = 0; b < nbins; ++b) {
    cation_counts[static_cast<std::size_t>(b)] += cat[static_cast<std::size_t>(b)];
    anion_counts[static_cast<std::size_t>(b)] += an[static_cast<std::size_t>(b)];
  }
  cation_frames.push_back(std::move(cat));
  anion_frames.push_back(std::move(an));
  ++frames;
  unwrapped.push_back(unwrapped_pos);
}

std::vector<double> Observables::concentration(bool cations) const {
  const auto& counts = cations ? cation_counts : anion_counts;
  std::vector<double> c(counts.size(), 0.0);
  if (frames == 0) return c;
  const double norm = 1.0 / (static_cast<double>(frames) * area * bin_width());
  for (std::size_t b = 0; b < c.size(); ++b) c[b] = counts[b] * norm;
  return c;
}

std::vector<double> Observables::concentration_stderr(bool cations, int blocks) const {
  const auto& fr = cations ? cation_frames : anion_frames;
  std::vector<double> err(static_cast<std::size_t>(nbins), 0.0);
  const std::size_t nb = static_cast<std::size_t>(std::max(2, blocks));
  const std::size_t per = fr.size() / nb;
  if (per == 0) return err;
  const double norm = 1.0 / (area * bin_width());
  for (int b = 0; b < nbins; ++b) {
    std::vector<double> means(nb, 0.0);
    for (std::size_t k = 0; k < nb; ++k) {
      for (std::size_t f = k * per; f < (k + 1) * per; ++f) means[k] += fr[f][static_cast<std::size_t>(b)];
      means[k] *= norm / static_cast<double>(per);
    }
    double mean = 0.0;
    for (double v : means) mean += v;
    mean /= static_cast<double>(nb);
    double var = 0.0;
    for (double v : means) var += (v - mean) * (v - mean);
    var /= static_cast<double>(nb - 1);
    err[static_cast<std::size_t>(b)] = std::sqrt(var / static_cast<double>(nb));
  }
  return err;
}

MSDCurve compute_msd(const std::vector<Coords>& frames, double record_dt, std::size_t max_lag) {
  MSDCurve out;
  const std::size_t nf = frames.size();
  if (nf < 2) return out;
  if (max_lag == 0 || max_lag >= nf) max_lag = nf - 1;
  const Index n = frames.front().rows();
  for (std::size_t lag = 1; lag <= max_lag; ++lag) {
    double sxy = 0.0, sz = 0.0;
    for (std::size_t t0 = 0; t0 + lag < nf; ++t0) {
      const Coords& a = frames[t0];
      const Coords& b = frames[t0 + lag];
      for (Index i = 0; i < n; ++i) {
        const double dx = b(i, 0) - a(i, 0);
        const double dy = b(i, 1) - a(i, 1);
        const double dz = b(i, 2) - a(i, 2);
        sxy += dx * dx + dy * dy;
        sz += dz * dz;
      }
    }
    const double cnt = static_cast<double>((nf - lag) * static_cast<std::size_t>(std::max<Index>(n, 1)));
    out.t.push_back(static_cast<double>(lag) * record_dt);
    out.msd_xy.push_back(sxy / cnt);
    out.msd_z.push_back(sz / cnt);
  }
  return out;
}

SimulationResult run_simulation(ParticleSystem sys, const BoxGeometry& box, const MDConfig& cfg,
                                const ElectroFn& electro, std::ostream* trajectory) {
  check_dt(cfg.dt);
  if (cfg.steps < 0 || cfg.equilibration < 0) throw ConfigError("step counts must be non-negative");
  if (cfg.record_every < 1) throw ConfigError("record_every must be at least 1");
  box.check();
  sys.check(box);
  if (electro) require_neutral(sys, box);

  const Index n = sys.size();
  Eigen::MatrixXi images = Eigen::MatrixXi::Zero(n, 2);
  wrap_with_images(sys, box, &images);
  VerletList neighbors(cfg.lj.r_cut(), cfg.skin);
  const double zlo = cfg.use_walls ? std::max(0.0, cfg.walls.z_lo) : 0.0;
  const double zhi = cfg.use_walls ? std::min(box.lz, cfg.walls.z_hi) : box.lz;

  ForceFn total = [&](const ParticleSystem& s, Coords& f) {
    for (Index i = 0; i < s.size(); ++i) {
      const double z = s.pos(i, 2);
      if (!std::isfinite(z) || !std::isfinite(s.pos(i, 0)) || !std::isfinite(s.pos(i, 1)) ||
          z <= zlo || z >= zhi) {
        std::ostringstream msg;
        msg << "particle " << i << " escaped the slab (z = " << z << ")";
        throw NumericError(msg.str());
      }
    }
    auto lj = lj_forces(s, box, cfg.lj, &neighbors);
    double u = lj.energy;
    f = std::move(lj.forces);
    if (cfg.use_walls) {
      const auto w = wall_forces(s, cfg.walls);
      u += w.energy;
      f += w.forces;
    }
    if (electro) {
      const auto e = electro(s);
      u += e.energy.total();
      f += e.forces;
    }
    return u;
  };

  ThermostatState th = cfg.thermostat;
  std::mt19937_64 rng = [&] {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed & 0xffffffffULL),
                      static_cast<std::uint32_t>(cfg.seed >> 32), 0x54484d4fU, 0U};
    return std::mt19937_64(seq);
  }();

  SimulationResult res;
  res.obs = Observables(cfg.nbins, zlo, zhi, box.area());
  res.obs.record_dt = cfg.dt * static_cast<double>(cfg.record_every);

  Coords forces;
  double u = total(sys, forces);
  double conserved0 = 0.0;
  bool have_conserved = false;

  auto unwrapped = [&] {
    Coords p = sys.pos;
    for (Index i = 0; i < n; ++i) {
      p(i, 0) += images(i, 0) * box.lx;
      p(i, 1) += images(i, 1) * box.ly;
    }
    return p;
  };

  const std::int64_t total_steps = cfg.equilibration + cfg.steps;
  for (std::int64_t step = 1; step <= total_steps; ++step) {
    if (th.kind == ThermostatKind::langevin) {
      u = langevin_step(sys, box, forces, total, th, cfg.dt, rng, &images);
    } else {
      u = nose_hoover_step(sys, box, forces, total, th, cfg.dt, &images);
    }
    const std::int64_t prod = step - cfg.equilibration;
    if (prod <= 0) continue;
    if (prod % cfg.record_every == 0) {
      res.obs.record(sys, unwrapped());
      res.obs.temperature.push_back(instantaneous_temperature(sys));
      res.obs.potential.push_back(u);
      if (th.kind == ThermostatKind::nose_hoover) {
        const double c = nose_hoover_conserved(sys, u, th);
        res.obs.conserved.push_back(c);
        if (!have_conserved) {
          conserved0 = c;
          have_conserved = true;
        }
        const double denom = std::max(std::abs(conserved0), 1e-300);
        res.max_conserved_drift = std::max(res.max_conserved_drift, std::abs(c - conserved0) / denom);
      }
    }
    if (trajectory != nullptr && cfg.trajectory_every > 0 && prod % cfg.trajectory_every == 0) {
      auto& out = *trajectory;
      for (Index i = 0; i < n; ++i) {
        out << prod << ',' << i << ',' << sys.pos(i, 0) << ',' << sys.pos(i, 1) << ','
            << sys.pos(i, 2) << ',' << sys.vel(i, 0) << ',' << sys.vel(i, 1) << ','
            << sys.vel(i, 2) << '\n';
      }
    }
  }
  res.final_state = std::move(sys);
  res.neighbor_rebuilds = neighbors.rebuilds();
  return res;
}

void write_msd_csv(std::ostream& out, const MSDCurve& msd) {
  out << "t,msd_xy,msd_z\n";
  out.precision(17);
  for (std::size_t i = 0; i < msd.t.size(); ++i) {
    out << msd.t[i] << ',' << msd.msd_xy[i] << ',' << msd.msd_z[i] << '\n';
  }
}

void write_profile_csv(std::ostream& out, const Observables& obs) {
  const auto cat = obs.concentration(true);
  const auto an = obs.concentration(false);
  const auto ecat = obs.concentration_stderr(true);
  const auto ean = obs.concentration_stderr(false);
  out << "z_bin_center,concentration_cation,concentration_anion,stderr_cation,stderr_anion\n";
  out.precision(17);
  for (int b = 0; b < obs.nbins; ++b) {
    const auto k = static_cast<std::size_t>(b);
    out << obs.bin_center(b) << ',' << cat[k] << ',' << an[k] << ',' << ecat[k] << ',' << ean[k]
        << '\n';
  }
}

}  // namespace q2d
