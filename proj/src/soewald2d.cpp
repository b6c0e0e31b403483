#include "q2d/soewald2d.hpp"

#include "q2d/special.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <thread>

namespace q2d {

SortedSystem SortedSystem::from(const ParticleSystem& sys, const BoxGeometry& box) {
  SortedSystem s;
  s.perm = sort_by_z(sys.pos.col(2), box.lz);
  s.sys = sys;
  s.sys.permute(s.perm);
  const Index n = sys.size();
  s.gap = Eigen::VectorXd::Zero(n);
  for (Index i = 1; i < n; ++i) s.gap(i) = s.sys.pos(i, 2) - s.sys.pos(i - 1, 2);
  return s;
}

Coords SortedSystem::unsort(const Coords& sorted_forces) const {
  Coords out(sorted_forces.rows(), 3);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    out.row(perm[i]) = sorted_forces.row(static_cast<Index>(i));
  }
  return out;
}

cplx recursive_pair_sum(const SortedSystem& s, double kx, double ky, cplx beta) {
  assert(beta.real() >= 0.0);
  const Index n = s.sys.size();
  cplx A = 0.0, S = 0.0;
  cplx prev_conj = 0.0;
  for (Index i = 0; i < n; ++i) {
    const auto& p = s.sys.pos;
    const cplx u = s.sys.q(i) * std::polar(1.0, kx * p(i, 0) + ky * p(i, 1));
    if (i > 0) {
      assert(s.gap(i) >= 0.0);
      A = (A + prev_conj) * std::exp(-beta * s.gap(i));
    }
    S += u * A;
    prev_conj = std::conj(u);
  }
  return S;
}

PairKernelSum::PairKernelSum(const SortedSystem& s) : s_(s) {
  const auto n = static_cast<std::size_t>(s.sys.size());
  u_.resize(n);
  decay_scratch_.resize(n);
  lo_.resize(n);
  dlo_.resize(n);
  up_.resize(n);
  dup_.resize(n);
  set_mode(0.0, 0.0);
}

void PairKernelSum::set_mode(double kx, double ky) {
  kx_ = kx;
  ky_ = ky;
  const auto& p = s_.sys.pos;
  for (Index i = 0; i < s_.sys.size(); ++i) {
    const auto ii = static_cast<std::size_t>(i);
    if (kx == 0.0 && ky == 0.0) {
      u_[ii] = s_.sys.q(i);
    } else {
      u_[ii] = s_.sys.q(i) * std::polar(1.0, kx * p(i, 0) + ky * p(i, 1));
    }
  }
}

const cplx* PairKernelSum::decay_for(const ExpTerm& t) {
  assert(t.beta.real() >= 0.0);
  if (t.decay != nullptr) return t.decay;
  const Index n = s_.sys.size();
  if (t.beta.imag() == 0.0) {
    const double b = t.beta.real();
    for (Index i = 0; i < n; ++i) decay_scratch_[static_cast<std::size_t>(i)] = std::exp(-b * s_.gap(i));
  } else {
    for (Index i = 0; i < n; ++i) decay_scratch_[static_cast<std::size_t>(i)] = std::exp(-t.beta * s_.gap(i));
  }
  return decay_scratch_.data();
}

double PairKernelSum::energy(const std::vector<ExpTerm>& terms) {
  const auto n = static_cast<std::size_t>(s_.sys.size());
  cplx total = 0.0;
  for (const auto& t : terms) {
    const cplx* E = decay_for(t);
    cplx A = 0.0, Az = 0.0, acc = 0.0;
    const bool zw = t.d != 0.0;
    for (std::size_t i = 1; i < n; ++i) {
      A = (A + std::conj(u_[i - 1])) * E[i];
      if (zw) {
        Az = Az * E[i] + s_.gap(static_cast<Index>(i)) * A;
        acc += u_[i] * (t.c * A + t.d * Az);
      } else {
        acc += u_[i] * A;
      }
    }
    total += zw ? acc : t.c * acc;
  }
  return total.real();
}

double PairKernelSum::energy_forces(const std::vector<ExpTerm>& terms, double force_scale,
                                    Coords& forces) {
  const auto n = static_cast<std::size_t>(s_.sys.size());
  std::fill(lo_.begin(), lo_.end(), cplx(0.0));
  std::fill(dlo_.begin(), dlo_.end(), cplx(0.0));
  std::fill(up_.begin(), up_.end(), cplx(0.0));
  std::fill(dup_.begin(), dup_.end(), cplx(0.0));
  if (n < 2) return 0.0;
  for (const auto& t : terms) {
    const cplx* E = decay_for(t);
    const cplx dc = t.d - t.beta * t.c;  // derivative coefficient on the plain sum
    const cplx dd = -t.beta * t.d;       // and on the z-weighted sum
    if (t.d == 0.0) {
      cplx A = 0.0;
      for (std::size_t i = 1; i < n; ++i) {
        A = (A + std::conj(u_[i - 1])) * E[i];
        lo_[i] += t.c * A;
        dlo_[i] += dc * A;
      }
      cplx B = 0.0;
      for (std::size_t i = n - 1; i-- > 0;) {
        B = (B + u_[i + 1]) * E[i + 1];
        up_[i] += t.c * B;
        dup_[i] += dc * B;
      }
    } else {
      cplx A = 0.0, Az = 0.0;
      for (std::size_t i = 1; i < n; ++i) {
        A = (A + std::conj(u_[i - 1])) * E[i];
        Az = Az * E[i] + s_.gap(static_cast<Index>(i)) * A;
        lo_[i] += t.c * A + t.d * Az;
        dlo_[i] += dc * A + dd * Az;
      }
      cplx B = 0.0, Bz = 0.0;
      for (std::size_t i = n - 1; i-- > 0;) {
        B = (B + u_[i + 1]) * E[i + 1];
        Bz = Bz * E[i + 1] + s_.gap(static_cast<Index>(i + 1)) * B;
        up_[i] += t.c * B + t.d * Bz;
        dup_[i] += dc * B + dd * Bz;
      }
    }
  }
  double e = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const cplx lower = u_[i] * lo_[i];
    const cplx upper = std::conj(u_[i]) * up_[i];
    e += lower.real();
    const double im = (lower - upper).imag();
    const auto ii = static_cast<Index>(i);
    forces(ii, 0) += force_scale * kx_ * im;
    forces(ii, 1) += force_scale * ky_ * im;
    forces(ii, 2) -= force_scale * (u_[i] * dlo_[i] - std::conj(u_[i]) * dup_[i]).real();
  }
  return e;
}

SOEDecayTable::SOEDecayTable(const SortedSystem& s, const SOEApprox& soe, double alpha) {
  const Index n = s.sys.size();
  a.resize(soe.s.size());
  decay.resize(soe.s.size());
  for (std::size_t l = 0; l < soe.s.size(); ++l) {
    a[l] = alpha * soe.s[l];
    decay[l].resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) decay[l][static_cast<std::size_t>(i)] = std::exp(-a[l] * s.gap(i));
  }
}

std::vector<ExpTerm> mode_terms(const SOEApprox& soe, const SOEDecayTable& tab, double alpha,
                                double k, double area, bool gaussian) {
  double pref = kPi / area * 2.0 * alpha / (kSqrtPi * k);
  if (gaussian) pref *= std::exp(-k * k / (4.0 * alpha * alpha));
  std::vector<ExpTerm> terms;
  terms.reserve(soe.w.size() + 1);
  terms.push_back({cplx(k, 0.0), 0.0, 0.0, nullptr});  // shared exp(-kz) term
  for (std::size_t l = 0; l < soe.w.size(); ++l) {
    const cplx a = tab.a[l];
    const cplx pw = pref * soe.w[l];
    if (std::abs(a - k) < kSingularTol * k) {
      // limit of (2a e^{-kz} - 2k e^{-az}) / (a^2 - k^2) as a -> k
      terms[0].c += pw / k;
      terms[0].d += pw;
    } else {
      const cplx den = a * a - k * k;
      terms[0].c += pw * 2.0 * a / den;
      terms.push_back({a, -pw * 2.0 * k / den, 0.0, tab.decay[l].data()});
    }
  }
  return terms;
}

std::vector<ExpTerm> zero_mode_terms(const SOEApprox& soe, const SOEDecayTable& tab, double alpha,
                                     double area) {
  // z erf(az) + exp(-a^2 z^2)/(a sqrt(pi)) = z + ierfc(az)/a. The linear part is
  // kept exact; only the decaying ierfc(x) = (2/sqrt(pi)) sum w_l exp(-s_l x)/s_l^2
  // goes through the SOE, so the error does not grow with the pair separation.
  // A single exp(-az) term removes the SOE offset at contact and vanishes far
  // away, so the kernel is exact at both ends.
  const double c0 = -2.0 * kPi / area;
  std::vector<ExpTerm> terms;
  terms.reserve(soe.w.size() + 2);
  terms.push_back({0.0, 0.0, c0, nullptr});
  cplx offset = c0 / (alpha * kSqrtPi);
  for (std::size_t l = 0; l < soe.w.size(); ++l) {
    const cplx c = c0 * kTwoOverSqrtPi * soe.w[l] / (alpha * soe.s[l] * soe.s[l]);
    terms.push_back({tab.a[l], c, 0.0, tab.decay[l].data()});
    offset -= c;
  }
  terms.push_back({cplx(alpha, 0.0), cplx(offset.real(), 0.0), 0.0, nullptr});
  return terms;
}

double q_term_sum(const std::vector<KMode>& modes, double Q, double alpha, double area) {
  CompensatedSum acc;
  for (const auto& km : modes) acc.add(kPi * Q / (km.k * area) * std::erfc(km.k / (2.0 * alpha)));
  return acc.value();
}

double fourier_mode_energy_soe(const SortedSystem& s, const BoxGeometry& box, const KMode& km,
                               const SOEApprox& soe, double alpha) {
  if (!(km.k > 0.0)) throw std::invalid_argument("fourier_mode_energy_soe needs k > 0");
  SOEDecayTable tab(s, soe, alpha);
  PairKernelSum sum(s);
  sum.set_mode(km.kx, km.ky);
  const double Q = charge_sq_sum(s.sys);
  return sum.energy(mode_terms(soe, tab, alpha, km.k, box.area())) +
         kPi * Q / (km.k * box.area()) * std::erfc(km.k / (2.0 * alpha));
}

namespace {

double zero_mode_constant(double Q, double alpha, double area) {
  // i = j terms of the unrestricted zero-mode double sum (Gaussian at 0 is 1)
  return -kPi / area * Q / (alpha * kSqrtPi);
}

// Zero-mode energy; with `with_forces` its forces are added to `forces` (sorted order).
double zero_mode_part(const SortedSystem& s, const SOEDecayTable& tab, const SOEApprox& soe,
                      double alpha, double area, bool with_forces, Coords& forces) {
  PairKernelSum sum(s);
  sum.set_mode(0.0, 0.0);
  const auto terms = zero_mode_terms(soe, tab, alpha, area);
  const double e0 = with_forces ? sum.energy_forces(terms, 1.0, forces) : sum.energy(terms);
  return e0 + zero_mode_constant(charge_sq_sum(s.sys), alpha, area);
}

}  // namespace

double zero_mode_energy_soe(const SortedSystem& s, const BoxGeometry& box, const SOEApprox& soe,
                            double alpha) {
  SOEDecayTable tab(s, soe, alpha);
  Coords unused;
  return zero_mode_part(s, tab, soe, alpha, box.area(), false, unused);
}

LongRangeSorted long_range_soe(const SortedSystem& s, const BoxGeometry& box,
                               const EwaldParams& params, const SOEApprox& soe, bool with_forces,
                               const SOESolverOptions& opt) {
  const Index n = s.sys.size();
  const double area = box.area();
  const double alpha = params.alpha;
  LongRangeSorted out;
  out.forces = Coords::Zero(n, 3);
  const SOEDecayTable tab(s, soe, alpha);
  const auto half = params.half_modes();
  std::vector<double> mode_energy(half.size(), 0.0);

  const int nthreads = std::max(1, std::min<int>(opt.threads, static_cast<int>(half.size())));
  std::vector<Coords> partial(static_cast<std::size_t>(nthreads), Coords::Zero(n, 3));
  auto worker = [&](int tid) {
    PairKernelSum sum(s);
    auto& f = partial[static_cast<std::size_t>(tid)];
    for (std::size_t m = static_cast<std::size_t>(tid); m < half.size();
         m += static_cast<std::size_t>(nthreads)) {
      const auto& km = half[m];
      sum.set_mode(km.kx, km.ky);
      const auto terms = mode_terms(soe, tab, alpha, km.k, area);
      // mirror mode -k contributes the complex conjugate: factor 2 on the real part
      mode_energy[m] = 2.0 * (with_forces ? sum.energy_forces(terms, 2.0, f) : sum.energy(terms));
    }
  };
  if (nthreads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }
  CompensatedSum uk;
  for (double e : mode_energy) uk.add(e);
  uk.add(q_term_sum(params.kmodes, charge_sq_sum(s.sys), alpha, area));
  out.u_k = uk.value();
  for (const auto& f : partial) out.forces += f;

  out.u_0 = zero_mode_part(s, tab, soe, alpha, area, with_forces, out.forces);
  return out;
}

DeterministicParts deterministic_parts(const ParticleSystem& sys, const SortedSystem& s,
                                       const BoxGeometry& box, const EwaldParams& params,
                                       const SOEApprox& soe, bool with_forces) {
  DeterministicParts out;
  const Index n = sys.size();
  auto sr = short_range_energy_forces(sys, box, params.alpha, params.r_c, with_forces);
  const auto slab = slab_energy_forces(sys, box);
  out.energy.u_s = sr.energy;
  out.energy.u_self = self_energy(sys, params.alpha);
  out.energy.u_ps = slab.energy;

  const SOEDecayTable tab(s, soe, params.alpha);
  Coords f0 = Coords::Zero(n, 3);
  out.energy.u_l_0 = zero_mode_part(s, tab, soe, params.alpha, box.area(), with_forces, f0);
  if (with_forces) {
    out.forces = sr.forces + s.unsort(f0);
    out.forces.col(2) += slab.fz;
  } else {
    out.forces = Coords::Zero(n, 3);
  }
  return out;
}

namespace {

EnergyForces solve(const ParticleSystem& sys, const BoxGeometry& box, const EwaldParams& params,
                   const SOEApprox& soe, const SOESolverOptions& opt, bool with_forces) {
  box.check();
  sys.check(box);
  require_neutral(sys, box);
  const auto s = SortedSystem::from(sys, box);
  const Index n = sys.size();
  EnergyForces out;
  auto sr = short_range_energy_forces(sys, box, params.alpha, params.r_c, with_forces);
  const auto slab = slab_energy_forces(sys, box);
  const auto lr = long_range_soe(s, box, params, soe, with_forces, opt);
  out.energy.u_s = sr.energy;
  out.energy.u_l_k = lr.u_k;
  out.energy.u_l_0 = lr.u_0;
  out.energy.u_self = self_energy(sys, params.alpha);
  out.energy.u_ps = slab.energy;
  if (with_forces) {
    out.forces = sr.forces + s.unsort(lr.forces);
    out.forces.col(2) += slab.fz;
  } else {
    out.forces = Coords::Zero(n, 3);
  }
  return out;
}

}  // namespace

EnergyBreakdown total_energy_soe(const ParticleSystem& sys, const BoxGeometry& box,
                                 const EwaldParams& params, const SOEApprox& soe,
                                 const SOESolverOptions& opt) {
  return solve(sys, box, params, soe, opt, false).energy;
}

EnergyForces energy_forces_soe(const ParticleSystem& sys, const BoxGeometry& box,
                               const EwaldParams& params, const SOEApprox& soe,
                               const SOESolverOptions& opt) {
  return solve(sys, box, params, soe, opt, true);
}

Coords forces_soe(const ParticleSystem& sys, const BoxGeometry& box, const EwaldParams& params,
                  const SOEApprox& soe, const SOESolverOptions& opt) {
  return solve(sys, box, params, soe, opt, true).forces;
}

}  // namespace q2d
