#pragma once

#include "q2d/core.hpp"
#include "q2d/ewald2d_ref.hpp"
#include "q2d/soe.hpp"

#include <complex>
#include <vector>

namespace q2d {

/// A z-sorted copy of a particle system plus the map back to the caller's order.
struct SortedSystem {
  ParticleSystem sys;
  std::vector<Index> perm;  // sorted index i holds original particle perm[i]
  Eigen::VectorXd gap;      // gap[i] = z_i - z_{i-1} >= 0, gap[0] = 0

  static SortedSystem from(const ParticleSystem& sys, const BoxGeometry& box);
  /// Scatters a sorted-order force block back to the original order.
  Coords unsort(const Coords& sorted_forces) const;
};

/// S = sum_{j<i} q_i q_j exp(i k.rho_ij) exp(-beta z_ij) over a z-sorted system,
/// via the running coefficient A_i (O(N), every exponent has Re <= 0).
cplx recursive_pair_sum(const SortedSystem& s, double kx, double ky, cplx beta);

/// One exponential term (c + d z) exp(-beta z) of a pair kernel g(z), z >= 0.
/// `decay`, when set, points to the precomputed exp(-beta gap[i]) for all i.
struct ExpTerm {
  cplx beta;
  cplx c;
  cplx d;
  const cplx* decay = nullptr;
};

/// Evaluates E = Re sum_{j<i} u_i conj(u_j) g(z_i - z_j), u_i = q_i exp(i k.rho_i),
/// for g given as a sum of ExpTerms, and optionally accumulates -grad E into
/// `forces` (sorted order) scaled by `force_scale`.
class PairKernelSum {
 public:
  explicit PairKernelSum(const SortedSystem& s);

  /// Sets the in-plane wave vector (k = 0 gives real weights u_i = q_i).
  void set_mode(double kx, double ky);
  double energy(const std::vector<ExpTerm>& terms);
  double energy_forces(const std::vector<ExpTerm>& terms, double force_scale, Coords& forces);

 private:
  const SortedSystem& s_;
  double kx_ = 0.0, ky_ = 0.0;
  std::vector<cplx> u_;
  std::vector<cplx> decay_scratch_;
  std::vector<cplx> lo_, dlo_, up_, dup_;
  const cplx* decay_for(const ExpTerm& t);
};

/// Per-evaluation cache of exp(-alpha s_l gap_i) shared by every mode.
struct SOEDecayTable {
  std::vector<cplx> a;                   // alpha s_l
  std::vector<std::vector<cplx>> decay;  // [l][i]
  SOEDecayTable(const SortedSystem& s, const SOEApprox& soe, double alpha);
};

/// Terms of the SOE mode kernel for one k (pair part, prefactor pi/(LxLy) included).
/// With `gaussian` false the exp(-k^2/4alpha^2) factor is dropped (random-batch form).
std::vector<ExpTerm> mode_terms(const SOEApprox& soe, const SOEDecayTable& tab, double alpha,
                                double k, double area, bool gaussian = true);
/// Terms of the zero-mode SOE kernel (pair part, -2pi/(LxLy) included).
std::vector<ExpTerm> zero_mode_terms(const SOEApprox& soe, const SOEDecayTable& tab, double alpha,
                                     double area);

/// Position-independent part of the k-mode sum over the listed (full) modes.
double q_term_sum(const std::vector<KMode>& modes, double Q, double alpha, double area);

/// Energy of a single mode k (not its mirror), including its Q-term.
double fourier_mode_energy_soe(const SortedSystem& s, const BoxGeometry& box, const KMode& km,
                               const SOEApprox& soe, double alpha);
double zero_mode_energy_soe(const SortedSystem& s, const BoxGeometry& box, const SOEApprox& soe,
                            double alpha);

struct SOESolverOptions {
  int threads = 1;
};

/// Energy breakdown (and, on request, forces in the caller's order).
EnergyBreakdown total_energy_soe(const ParticleSystem& sys, const BoxGeometry& box,
                                 const EwaldParams& params, const SOEApprox& soe,
                                 const SOESolverOptions& opt = {});
EnergyForces energy_forces_soe(const ParticleSystem& sys, const BoxGeometry& box,
                               const EwaldParams& params, const SOEApprox& soe,
                               const SOESolverOptions& opt = {});
Coords forces_soe(const ParticleSystem& sys, const BoxGeometry& box, const EwaldParams& params,
                  const SOEApprox& soe, const SOESolverOptions& opt = {});

/// Long-range pieces computed in sorted order (forces in sorted order).
struct LongRangeSorted {
  double u_k = 0.0;   // k != 0, pair part plus Q-term
  double u_0 = 0.0;   // zero mode
  Coords forces;      // sorted order, k != 0 plus zero mode
};
LongRangeSorted long_range_soe(const SortedSystem& s, const BoxGeometry& box,
                               const EwaldParams& params, const SOEApprox& soe, bool with_forces,
                               const SOESolverOptions& opt = {});

/// Deterministic parts shared with the random-batch solver: short range,
/// zero mode, self and slab (forces in the caller's order).
struct DeterministicParts {
  EnergyBreakdown energy;  // u_l_k left at 0
  Coords forces;
};
DeterministicParts deterministic_parts(const ParticleSystem& sys, const SortedSystem& s,
                                       const BoxGeometry& box, const EwaldParams& params,
                                       const SOEApprox& soe, bool with_forces);

}  // namespace q2d
