#include "q2d/ewald2d_ref.hpp"

#include "q2d/neighbor.hpp"
#include "q2d/special.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

namespace q2d {

XiPair xi_closed(double k, double z, double alpha, XiVariant variant) {
  if (!(k > 0.0)) throw std::invalid_argument("xi_closed needs k > 0");
  if (z < 0.0) throw std::invalid_argument("xi_closed needs z >= 0");
  const double a = k / (2.0 * alpha);
  const double b = alpha * z;
  if (variant == XiVariant::naive) {
    return {std::exp(k * z) * std::erfc(a + b), std::exp(-k * z) * std::erfc(a - b)};
  }
  // k z - (a + b)^2 = -a^2 - b^2 = -kz - (a - b)^2, so both branches share one Gaussian
  const double g = std::exp(-a * a - b * b);
  XiPair xi;
  xi.plus = erfcx(a + b) * g;
  xi.minus = b > a ? 2.0 * std::exp(-k * z) - erfcx(b - a) * g : erfcx(a - b) * g;
  return xi;
}

XiPair dxi_closed(double k, double z, double alpha) {
  const XiPair xi = xi_closed(k, z, alpha, XiVariant::stable);
  const double a = k / (2.0 * alpha);
  const double b = alpha * z;
  const double g = kTwoOverSqrtPi * alpha * std::exp(-a * a - b * b);
  return {k * xi.plus - g, -k * xi.minus + g};
}

namespace {

void check_cutoff(const BoxGeometry& box, double r_c) {
  if (r_c > 0.5 * std::min(box.lx, box.ly) * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "real-space cutoff " << r_c << " exceeds half the smaller in-plane box length";
    throw ConfigError(msg.str());
  }
}

// Half of the mode set grouped by |k| (modes in a group share xi values).
std::vector<std::vector<KMode>> group_by_k(const EwaldParams& params) {
  auto half = params.half_modes();
  std::stable_sort(half.begin(), half.end(),
                   [](const KMode& a, const KMode& b) { return a.k < b.k; });
  std::vector<std::vector<KMode>> groups;
  for (const auto& km : half) {
    if (groups.empty() || km.k > groups.back().front().k * (1.0 + 1e-13)) groups.emplace_back();
    groups.back().push_back(km);
  }
  return groups;
}

std::vector<std::complex<double>> phases(const ParticleSystem& sys, const KMode& km) {
  std::vector<std::complex<double>> ph(static_cast<std::size_t>(sys.size()));
  for (Index i = 0; i < sys.size(); ++i) {
    ph[static_cast<std::size_t>(i)] = std::polar(1.0, km.kx * sys.pos(i, 0) + km.ky * sys.pos(i, 1));
  }
  return ph;
}

}  // namespace

PairResult short_range_energy_forces(const ParticleSystem& sys, const BoxGeometry& box,
                                     double alpha, double r_c, bool with_forces) {
  check_cutoff(box, r_c);
  PairResult out;
  out.forces = Coords::Zero(sys.size(), 3);
  if (sys.size() < 2) return out;
  CellList cells(sys.pos, box, r_c);
  CompensatedSum energy;
  const double c = kTwoOverSqrtPi * alpha;
  cells.for_each_pair(sys.pos, [&](Index i, Index j, double dx, double dy, double dz, double r2) {
    if (r2 == 0.0) throw NumericError("coincident charged particles in the real-space sum");
    const double r = std::sqrt(r2);
    const double qq = sys.q(i) * sys.q(j);
    const double ec = std::erfc(alpha * r);
    energy.add(qq * ec / r);
    if (with_forces) {
      const double f = qq * (ec / r + c * std::exp(-alpha * alpha * r2)) / r2;
      out.forces(i, 0) += f * dx;
      out.forces(i, 1) += f * dy;
      out.forces(i, 2) += f * dz;
      out.forces(j, 0) -= f * dx;
      out.forces(j, 1) -= f * dy;
      out.forces(j, 2) -= f * dz;
    }
  });
  out.energy = energy.value();
  return out;
}

namespace {

// Fused Fourier sum over mode groups sharing |k|. Pairs are generated on the
// fly so memory stays O(N) per mode.
double fourier_ref_impl(const ParticleSystem& sys, const BoxGeometry& box,
                        const EwaldParams& params, XiVariant variant, Coords* forces) {
  const double alpha = params.alpha;
  const double area = box.area();
  const double Q = charge_sq_sum(sys);
  const Index n = sys.size();
  CompensatedSum total;
  std::vector<std::vector<std::complex<double>>> ph;
  std::vector<CompensatedSum> acc;
  for (const auto& group : group_by_k(params)) {
    const double k = group.front().k;
    const double c = 2.0 * kPi / (area * k);
    ph.clear();
    for (const auto& km : group) ph.push_back(phases(sys, km));
    acc.assign(group.size(), CompensatedSum{});
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) {
        const double dz = sys.pos(i, 2) - sys.pos(j, 2);
        const double z = std::abs(dz);
        const double qq = sys.q(i) * sys.q(j);
        const auto xi = xi_closed(k, z, alpha, variant);
        const double g = xi.plus + xi.minus;
        double dg = 0.0;
        if (forces != nullptr) {
          const auto dxi = dxi_closed(k, z, alpha);
          dg = (dxi.plus + dxi.minus) * (dz >= 0.0 ? 1.0 : -1.0);
        }
        for (std::size_t m = 0; m < group.size(); ++m) {
          const auto e = ph[m][static_cast<std::size_t>(i)] * std::conj(ph[m][static_cast<std::size_t>(j)]);
          acc[m].add(qq * e.real() * g);
          if (forces != nullptr) {
            const double fxy = c * qq * e.imag() * g;
            const double fz = -c * qq * e.real() * dg;
            auto& f = *forces;
            f(i, 0) += fxy * group[m].kx;
            f(i, 1) += fxy * group[m].ky;
            f(i, 2) += fz;
            f(j, 0) -= fxy * group[m].kx;
            f(j, 1) -= fxy * group[m].ky;
            f(j, 2) -= fz;
          }
        }
      }
    }
    for (std::size_t m = 0; m < group.size(); ++m) {
      // the factor 2 accounts for the mirror mode -k
      total.add(2.0 * kPi / (area * k) * acc[m].value());
      total.add(2.0 * kPi * Q / (k * area) * std::erfc(k / (2.0 * alpha)));
    }
  }
  return total.value();
}

}  // namespace

double fourier_energy_ref(const ParticleSystem& sys, const BoxGeometry& box,
                          const EwaldParams& params, XiVariant variant) {
  return fourier_ref_impl(sys, box, params, variant, nullptr);
}

Coords fourier_forces_ref(const ParticleSystem& sys, const BoxGeometry& box,
                          const EwaldParams& params) {
  Coords f = Coords::Zero(sys.size(), 3);
  fourier_ref_impl(sys, box, params, XiVariant::stable, &f);
  return f;
}

long double long_range_energy_extended(const ParticleSystem& sys, const BoxGeometry& box,
                                       const EwaldParams& params) {
  using LD = long double;
  const LD alpha = params.alpha;
  const LD area = static_cast<LD>(box.area());
  const LD pi = std::numbers::pi_v<LD>;
  const Index n = sys.size();
  LD Q = 0.0L;
  for (Index i = 0; i < n; ++i) Q += static_cast<LD>(sys.q(i)) * sys.q(i);
  // the plain closed form in long double: e^{kz} and erfc stay in range up to ~11000
  const double top = params.k_c / (2.0 * params.alpha) + params.alpha * box.lz;
  if (std::max(params.k_c * box.lz, top * top) > 11300.0) throw NumericError("extended-precision reference out of long double range");
  LD total = 0.0L;
  for (const auto& km : params.half_modes()) {
    const LD k = km.k;
    const LD a = k / (2.0L * alpha);
    LD acc = 0.0L;
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) {
        const LD z = std::fabs(static_cast<LD>(sys.pos(i, 2)) - sys.pos(j, 2));
        const LD ph = km.kx * (static_cast<LD>(sys.pos(i, 0)) - sys.pos(j, 0)) +
                      km.ky * (static_cast<LD>(sys.pos(i, 1)) - sys.pos(j, 1));
        const LD g = std::exp(k * z) * std::erfc(a + alpha * z) + std::exp(-k * z) * std::erfc(a - alpha * z);
        acc += static_cast<LD>(sys.q(i)) * sys.q(j) * std::cos(ph) * g;
      }
    }
    total += 2.0L * pi / (area * k) * acc + 2.0L * pi * Q / (k * area) * std::erfc(a);
  }
  LD zero = 0.0L;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const LD z = std::fabs(static_cast<LD>(sys.pos(i, 2)) - sys.pos(j, 2));
      zero += static_cast<LD>(sys.q(i)) * sys.q(j) *
              (z * std::erf(alpha * z) + std::exp(-alpha * alpha * z * z) / (alpha * std::sqrt(pi)));
    }
  }
  total += -2.0L * pi / area * zero - pi / area * Q / (alpha * std::sqrt(pi));
  return total;
}

double zero_mode_energy_ref(const ParticleSystem& sys, const BoxGeometry& box, double alpha) {
  const Index n = sys.size();
  CompensatedSum acc;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double z = std::abs(sys.pos(i, 2) - sys.pos(j, 2));
      const double kern = z * std::erf(alpha * z) + std::exp(-alpha * alpha * z * z) / (alpha * kSqrtPi);
      acc.add(sys.q(i) * sys.q(j) * kern);
    }
  }
  // i = j terms of the unrestricted double sum
  const double diag = charge_sq_sum(sys) / (alpha * kSqrtPi);
  return -2.0 * kPi / box.area() * acc.value() - kPi / box.area() * diag;
}

Coords zero_mode_forces_ref(const ParticleSystem& sys, const BoxGeometry& box, double alpha) {
  const Index n = sys.size();
  Coords f = Coords::Zero(n, 3);
  const double c = 2.0 * kPi / box.area();
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double dz = sys.pos(i, 2) - sys.pos(j, 2);
      const double s = dz >= 0.0 ? 1.0 : -1.0;
      const double fz = c * sys.q(i) * sys.q(j) * std::erf(alpha * std::abs(dz)) * s;
      f(i, 2) += fz;
      f(j, 2) -= fz;
    }
  }
  return f;
}

double self_energy(const ParticleSystem& sys, double alpha) {
  return alpha / kSqrtPi * charge_sq_sum(sys);
}

SlabResult slab_energy_forces(const ParticleSystem& sys, const BoxGeometry& box) {
  SlabResult out;
  out.fz = Eigen::VectorXd::Zero(sys.size());
  const double fz_unit = -2.0 * kPi * (box.sigma_top - box.sigma_bot);
  CompensatedSum e;
  for (Index i = 0; i < sys.size(); ++i) {
    const double z = sys.pos(i, 2);
    const double phi = -2.0 * kPi * (box.sigma_top * (box.lz - z) + box.sigma_bot * z);
    e.add(sys.q(i) * phi);
    out.fz(i) = sys.q(i) * fz_unit;
  }
  out.energy = e.value();
  return out;
}

double direct_lattice_sum(const ParticleSystem& sys, const BoxGeometry& box, int R, bool far_field) {
  if (R < 1) throw ConfigError("direct_lattice_sum needs R >= 1");
  const Index n = sys.size();
  const double qsum = sys.q.sum();
  if (std::abs(qsum) > 1e-12 * std::max(1.0, sys.q.cwiseAbs().sum()) || box.sigma_top != 0.0 ||
      box.sigma_bot != 0.0) {
    throw ValidationError("direct_lattice_sum requires a neutral particle system without slabs");
  }
  const double lmax = std::max(box.lx, box.ly);
  const double radius = R * lmax;
  const double rad2 = radius * radius * (1.0 + 1e-14);

  std::vector<Eigen::Vector3d> rij;
  std::vector<double> qq;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      rij.emplace_back(sys.pos.row(i) - sys.pos.row(j));
      qq.push_back(sys.q(i) * sys.q(j));
    }
  }
  CompensatedSum total;
  for (std::size_t p = 0; p < rij.size(); ++p) {
    const double d = rij[p].norm();
    if (d == 0.0) throw NumericError("coincident charged particles in the lattice sum");
    total.add(qq[p] / d);
  }
  // Images M and -M contribute equally once i<->j is symmetrized; sum the half plane.
  CompensatedSum inv_m3;
  const int mxmax = static_cast<int>(std::floor(radius / box.lx));
  const int mymax = static_cast<int>(std::floor(radius / box.ly));
  for (int my = 0; my <= mymax; ++my) {
    for (int mx = (my == 0 ? 1 : -mxmax); mx <= mxmax; ++mx) {
      const double Mx = mx * box.lx, My = my * box.ly;
      const double M2 = Mx * Mx + My * My;
      if (M2 > rad2) continue;
      const double M = std::sqrt(M2);
      inv_m3.add(2.0 / (M2 * M));
      double img = 0.0;
      for (std::size_t p = 0; p < rij.size(); ++p) {
        const auto& r = rij[p];
        const double r2 = r.squaredNorm();
        const double rm = r.x() * Mx + r.y() * My;
        // 1/|r+M| - 1/|M| and its mirror 1/|-r+M| - 1/|M|, written without cancellation
        const double dp = std::sqrt(M2 + 2.0 * rm + r2);
        const double dm = std::sqrt(M2 - 2.0 * rm + r2);
        const double fp = -(2.0 * rm + r2) / (dp * M * (M + dp));
        const double fm = -(-2.0 * rm + r2) / (dm * M * (M + dm));
        img += qq[p] * (fp + fm);
      }
      total.add(img);
    }
  }
  if (far_field && n > 1) {
    // quadrupole tail: sum_{|M|>radius} M^-3 times the pair moments
    double s3;
    if (box.lx == box.ly) {
      constexpr double kEpsteinSquare3 = 9.0336216831009503057;  // sum_{m != 0} |m|^-3
      s3 = (kEpsteinSquare3 - inv_m3.value() * std::pow(box.lx, 3)) / std::pow(box.lx, 3);
    } else {
      s3 = 2.0 * kPi / (radius * box.area());
    }
    CompensatedSum moment;
    for (std::size_t p = 0; p < rij.size(); ++p) {
      const auto& r = rij[p];
      const double rho2 = r.x() * r.x() + r.y() * r.y();
      moment.add(2.0 * qq[p] * (0.5 * rho2 - r.z() * r.z()));
    }
    total.add(0.25 * s3 * moment.value());
  }
  return total.value();
}

double direct_lattice_sum_converged(const ParticleSystem& sys, const BoxGeometry& box, int R0,
                                    double tol, int R_max) {
  double prev = direct_lattice_sum(sys, box, R0);
  for (int R = 2 * R0; R <= R_max; R *= 2) {
    const double cur = direct_lattice_sum(sys, box, R);
    if (std::abs(cur - prev) < tol) return cur;
    prev = cur;
  }
  throw NumericError("direct lattice sum did not converge");
}

EnergyBreakdown total_energy_ref(const ParticleSystem& sys, const BoxGeometry& box,
                                 const EwaldParams& params, XiVariant variant) {
  box.check();
  sys.check(box);
  require_neutral(sys, box);
  EnergyBreakdown e;
  e.u_s = short_range_energy_forces(sys, box, params.alpha, params.r_c, false).energy;
  e.u_l_k = fourier_energy_ref(sys, box, params, variant);
  e.u_l_0 = zero_mode_energy_ref(sys, box, params.alpha);
  e.u_self = self_energy(sys, params.alpha);
  e.u_ps = slab_energy_forces(sys, box).energy;
  return e;
}

EnergyForces energy_forces_ref(const ParticleSystem& sys, const BoxGeometry& box,
                               const EwaldParams& params) {
  box.check();
  sys.check(box);
  require_neutral(sys, box);
  EnergyForces out;
  auto sr = short_range_energy_forces(sys, box, params.alpha, params.r_c, true);
  const auto slab = slab_energy_forces(sys, box);
  out.energy.u_s = sr.energy;
  Coords fk = Coords::Zero(sys.size(), 3);
  out.energy.u_l_k = fourier_ref_impl(sys, box, params, XiVariant::stable, &fk);
  out.energy.u_l_0 = zero_mode_energy_ref(sys, box, params.alpha);
  out.energy.u_self = self_energy(sys, params.alpha);
  out.energy.u_ps = slab.energy;
  out.forces = sr.forces + fk + zero_mode_forces_ref(sys, box, params.alpha);
  out.forces.col(2) += slab.fz;
  return out;
}

}  // namespace q2d
