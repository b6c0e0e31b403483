#include "q2d/rbse2d.hpp"

#include "q2d/special.hpp"

#include <cmath>
#include <iostream>

namespace q2d {

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream_tag) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffULL); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), lo(stream_tag), hi(stream_tag)};
  return std::mt19937_64(seq);
}

double normalization_H(double alpha, const BoxGeometry& box) {
  double acc = 0.0;
  for (int my = -2; my <= 2; ++my) {
    for (int mx = -2; mx <= 2; ++mx) {
      const double x = mx * box.lx, y = my * box.ly;
      acc += std::exp(-alpha * alpha * (x * x + y * y));
    }
  }
  return alpha * alpha * box.area() / kPi * acc - 1.0;
}

bool small_box_regime(double alpha, const BoxGeometry& box) {
  return alpha * std::min(box.lx, box.ly) < 5.0;
}

double proposal_mass(int m, double alpha, double L) {
  const double c = kPi / (2.0 * alpha * L);
  if (m == 0) return std::erf(c);
  const int a = std::abs(m);
  return 0.5 * (std::erf(c * (2 * a + 1)) - std::erf(c * (2 * a - 1)));
}

ImportanceSampler::ImportanceSampler(double alpha, const BoxGeometry& box, std::uint64_t seed,
                                     int downsample, int burn_in_accepts)
    : alpha_(alpha),
      box_(box),
      h_norm_(normalization_H(alpha, box)),
      rng_(make_stream(seed, kSamplerStream)),
      downsample_(downsample) {
  if (downsample < 1) throw ConfigError("downsampling rate must be at least 1");
  if (small_box_regime(alpha, box)) {
    std::cerr << "warning: alpha*min(Lx,Ly) < 5; the truncated normalization H may be inaccurate\n";
  }
  sx_ = alpha * box.lx / (kPi * std::sqrt(2.0));
  sy_ = alpha * box.ly / (kPi * std::sqrt(2.0));
  const std::uint64_t target = accepts_ + static_cast<std::uint64_t>(std::max(0, burn_in_accepts));
  while (accepts_ < target) step();
}

double ImportanceSampler::log_target(int mx, int my) const {
  const double kx = 2.0 * kPi * mx / box_.lx;
  const double ky = 2.0 * kPi * my / box_.ly;
  return -(kx * kx + ky * ky) / (4.0 * alpha_ * alpha_);
}

double ImportanceSampler::log_proposal(int mx, int my) const {
  return std::log(proposal_mass(mx, alpha_, box_.lx)) + std::log(proposal_mass(my, alpha_, box_.ly));
}

bool ImportanceSampler::step() {
  ++proposals_;
  const int nx = static_cast<int>(std::lround(sx_ * normal_(rng_)));
  const int ny = static_cast<int>(std::lround(sy_ * normal_(rng_)));
  const double u = unif_(rng_);
  if (nx == 0 && ny == 0) return false;  // k = 0 carries no target mass
  const double log_a = log_target(nx, ny) + log_proposal(mx_, my_) - log_target(mx_, my_) -
                       log_proposal(nx, ny);
  if (log_a >= 0.0 || u < std::exp(log_a)) {
    mx_ = nx;
    my_ = ny;
    ++accepts_;
    return true;
  }
  return false;
}

KMode ImportanceSampler::mode_of(int mx, int my) const {
  KMode km;
  km.mx = mx;
  km.my = my;
  km.kx = 2.0 * kPi * mx / box_.lx;
  km.ky = 2.0 * kPi * my / box_.ly;
  km.k = std::hypot(km.kx, km.ky);
  return km;
}

BatchSample ImportanceSampler::metropolis_batch(int P) {
  if (P < 1) throw ConfigError("batch size must be at least 1");
  BatchSample b;
  b.modes.reserve(static_cast<std::size_t>(P));
  for (int p = 0; p < P; ++p) {
    for (int d = 0; d < downsample_; ++d) step();
    b.modes.push_back(mode_of(mx_, my_));
  }
  return b;
}

double q_term_constant(double Q, double alpha, const BoxGeometry& box) {
  return q_term_sum(enumerate_modes(box, 14.0 * alpha), Q, alpha, box.area());
}

RBEstimate rb_estimate(const SortedSystem& s, const BoxGeometry& box, const SOEApprox& soe,
                       double alpha, const BatchSample& batch, double H, double c_q,
                       bool with_forces) {
  const Index n = s.sys.size();
  RBEstimate out;
  out.forces = Coords::Zero(n, 3);
  const double scale = H / static_cast<double>(batch.modes.size());
  const SOEDecayTable tab(s, soe, alpha);
  PairKernelSum sum(s);
  CompensatedSum acc;
  for (const auto& km : batch.modes) {
    sum.set_mode(km.kx, km.ky);
    const auto terms = mode_terms(soe, tab, alpha, km.k, box.area(), false);
    acc.add(with_forces ? sum.energy_forces(terms, scale, out.forces) : sum.energy(terms));
  }
  out.u_k = scale * acc.value() + c_q;
  return out;
}

double rb_energy_estimate(const SortedSystem& s, const BoxGeometry& box, const SOEApprox& soe,
                          double alpha, ImportanceSampler& sampler, int P, double c_q) {
  const auto batch = sampler.metropolis_batch(P);
  return rb_estimate(s, box, soe, alpha, batch, sampler.h_norm(), c_q, false).u_k;
}

Coords rb_force_estimate(const SortedSystem& s, const BoxGeometry& box, const SOEApprox& soe,
                         double alpha, ImportanceSampler& sampler, int P) {
  const auto batch = sampler.metropolis_batch(P);
  return rb_estimate(s, box, soe, alpha, batch, sampler.h_norm(), 0.0, true).forces;
}

RBEstimate full_mode_sum(const SortedSystem& s, const BoxGeometry& box, const SOEApprox& soe,
                         double alpha, bool with_forces) {
  EwaldParams p;
  p.alpha = alpha;
  p.kmodes = enumerate_modes(box, 14.0 * alpha);
  const auto half = p.half_modes();
  const Index n = s.sys.size();
  RBEstimate out;
  out.forces = Coords::Zero(n, 3);
  const SOEDecayTable tab(s, soe, alpha);
  PairKernelSum sum(s);
  CompensatedSum acc;
  for (const auto& km : half) {
    sum.set_mode(km.kx, km.ky);
    const auto terms = mode_terms(soe, tab, alpha, km.k, box.area(), true);
    acc.add(2.0 * (with_forces ? sum.energy_forces(terms, 2.0, out.forces) : sum.energy(terms)));
  }
  out.u_k = acc.value() + q_term_sum(p.kmodes, charge_sq_sum(s.sys), alpha, box.area());
  return out;
}

VarianceStats variance_diagnostics(const std::vector<double>& samples) {
  VarianceStats st;
  st.n = samples.size();
  if (st.n == 0) return st;
  CompensatedSum sum;
  for (double v : samples) sum.add(v);
  st.mean = sum.value() / static_cast<double>(st.n);
  if (st.n < 2) return st;
  CompensatedSum sq;
  for (double v : samples) sq.add((v - st.mean) * (v - st.mean));
  st.variance = sq.value() / static_cast<double>(st.n - 1);
  st.stderr_ = std::sqrt(st.variance / static_cast<double>(st.n));
  return st;
}

RBSE2DSolver::RBSE2DSolver(const BoxGeometry& box, const EwaldParams& params, const SOEApprox& soe,
                           int P, std::uint64_t seed, int downsample, int burn_in)
    : box_(box),
      params_(params),
      soe_(soe),
      P_(P),
      sampler_(params.alpha, box, seed, downsample, burn_in) {
  if (P < 1) throw ConfigError("batch size must be at least 1");
}

EnergyForces RBSE2DSolver::evaluate(const ParticleSystem& sys, bool with_forces) {
  box_.check();
  sys.check(box_);
  require_neutral(sys, box_);
  const double Q = charge_sq_sum(sys);
  if (Q != q_cached_) {
    c_q_ = q_term_constant(Q, params_.alpha, box_);
    q_cached_ = Q;
  }
  const auto s = SortedSystem::from(sys, box_);
  auto det = deterministic_parts(sys, s, box_, params_, soe_, with_forces);
  const auto batch = sampler_.metropolis_batch(P_);
  const auto est = rb_estimate(s, box_, soe_, params_.alpha, batch, sampler_.h_norm(), c_q_, with_forces);
  EnergyForces out;
  out.energy = det.energy;
  out.energy.u_l_k = est.u_k;
  out.forces = std::move(det.forces);
  if (with_forces) out.forces += s.unsort(est.forces);
  return out;
}

}  // namespace q2d
