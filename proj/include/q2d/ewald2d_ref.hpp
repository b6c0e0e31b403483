#pragma once

#include "q2d/core.hpp"
#include "q2d/soe.hpp"

namespace q2d {

/// Energy components; total = u_s + u_l_k + u_l_0 - u_self + u_ps.
struct EnergyBreakdown {
  double u_s = 0.0;
  double u_l_k = 0.0;
  double u_l_0 = 0.0;
  double u_self = 0.0;
  double u_ps = 0.0;

  double total() const { return u_s + u_l_k + u_l_0 - u_self + u_ps; }
};

/// Energies plus the matching electrostatic forces (short range, both
/// Fourier parts and the slab field).
struct EnergyForces {
  EnergyBreakdown energy;
  Coords forces;
};

enum class XiVariant { stable, naive };

/// xi+-(k, z) = exp(+-kz) erfc(k/2alpha +- alpha z).
XiPair xi_closed(double k, double z, double alpha, XiVariant variant = XiVariant::stable);
/// z-derivatives of xi+- (stable form).
XiPair dxi_closed(double k, double z, double alpha);

struct PairResult {
  double energy = 0.0;
  Coords forces;
};

/// Real-space erfc sum over minimum-image pairs within r_c.
PairResult short_range_energy_forces(const ParticleSystem& sys, const BoxGeometry& box,
                                     double alpha, double r_c, bool with_forces = true);

/// O(N^2 K) Fourier sum over the k != 0 modes of `params`.
double fourier_energy_ref(const ParticleSystem& sys, const BoxGeometry& box,
                          const EwaldParams& params, XiVariant variant = XiVariant::stable);
Coords fourier_forces_ref(const ParticleSystem& sys, const BoxGeometry& box,
                          const EwaldParams& params);

/// u_l_k + u_l_0 from the plain closed form evaluated in long double.
/// Serves as an arithmetic-error oracle for the FP64 paths; throws
/// NumericError once e^{kz} or erfc would leave the long double range.
long double long_range_energy_extended(const ParticleSystem& sys, const BoxGeometry& box,
                                       const EwaldParams& params);
double zero_mode_energy_ref(const ParticleSystem& sys, const BoxGeometry& box, double alpha);
Coords zero_mode_forces_ref(const ParticleSystem& sys, const BoxGeometry& box, double alpha);

double self_energy(const ParticleSystem& sys, double alpha);

struct SlabResult {
  double energy = 0.0;
  Eigen::VectorXd fz;
};

/// Interaction of the particles with uniformly charged planes at z=0 and z=lz.
SlabResult slab_energy_forces(const ParticleSystem& sys, const BoxGeometry& box);

/// Brute-force image sum over the circular shell |m| <= R of lattice vectors.
/// With `far_field` the analytic quadrupole tail beyond R is added (exact
/// lattice constant for square cells, continuum estimate otherwise), which
/// turns the slow 1/R convergence into 1/R^3.
double direct_lattice_sum(const ParticleSystem& sys, const BoxGeometry& box, int R,
                          bool far_field = true);
/// Doubles R from R0 until successive values differ by less than tol.
double direct_lattice_sum_converged(const ParticleSystem& sys, const BoxGeometry& box,
                                    int R0 = 50, double tol = 1e-8, int R_max = 3200);

EnergyBreakdown total_energy_ref(const ParticleSystem& sys, const BoxGeometry& box,
                                 const EwaldParams& params,
                                 XiVariant variant = XiVariant::stable);
EnergyForces energy_forces_ref(const ParticleSystem& sys, const BoxGeometry& box,
                               const EwaldParams& params);

}  // namespace q2d
