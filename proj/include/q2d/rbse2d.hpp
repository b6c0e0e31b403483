#pragma once

#include "q2d/core.hpp"
#include "q2d/soe.hpp"
#include "q2d/soewald2d.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace q2d {

/// Seeded 64-bit engine for one named stream. Streams derived from the same
/// seed with different tags are independent.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream_tag);

inline constexpr std::uint64_t kSamplerStream = 0x5a4d504c45ULL;
inline constexpr std::uint64_t kThermostatStream = 0x54484d4fULL;

/// Normalization H = sum_{k != 0} exp(-k^2 / 4 alpha^2) by Poisson summation
/// with the dual lattice truncated at |m| <= 2.
double normalization_H(double alpha, const BoxGeometry& box);
/// True when alpha min(Lx, Ly) < 5, where the truncated dual sum is unreliable.
bool small_box_regime(double alpha, const BoxGeometry& box);

/// Rounded-Gaussian proposal mass q(m) for one axis of length L.
double proposal_mass(int m, double alpha, double L);

struct BatchSample {
  std::vector<KMode> modes;
};

/// Metropolis chain over integer modes (mx, my) != (0, 0) targeting
/// exp(-k^2 / 4 alpha^2), with an independent rounded-Gaussian proposal.
class ImportanceSampler {
 public:
  ImportanceSampler(double alpha, const BoxGeometry& box, std::uint64_t seed, int downsample = 10,
                    int burn_in_accepts = 100);

  /// Advances the chain `downsample` steps per emitted sample.
  BatchSample metropolis_batch(int P);
  /// A single Metropolis step; returns true on acceptance.
  bool step();

  int mx() const { return mx_; }
  int my() const { return my_; }
  double h_norm() const { return h_norm_; }
  double alpha() const { return alpha_; }
  int downsample() const { return downsample_; }
  double proposal_sd_x() const { return sx_; }
  double proposal_sd_y() const { return sy_; }
  double acceptance_rate() const {
    return proposals_ == 0 ? 0.0 : static_cast<double>(accepts_) / static_cast<double>(proposals_);
  }
  std::uint64_t accept_count() const { return accepts_; }
  std::uint64_t proposal_count() const { return proposals_; }
  KMode mode_of(int mx, int my) const;

 private:
  double alpha_;
  BoxGeometry box_;
  double h_norm_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
  int downsample_;
  int mx_ = 1;
  int my_ = 0;
  double sx_, sy_;  // proposal standard deviations
  std::uint64_t accepts_ = 0;
  std::uint64_t proposals_ = 0;

  double log_target(int mx, int my) const;
  double log_proposal(int mx, int my) const;
};

/// Position-independent Q-term summed over all modes up to the point where
/// erfc(k / 2 alpha) is negligible (k <= 14 alpha).
double q_term_constant(double Q, double alpha, const BoxGeometry& box);

struct RBEstimate {
  double u_k = 0.0;  // (H/P) sum phi_RB + C_Q
  Coords forces;     // sorted order
};

/// Estimator for a fixed batch. Forces, when requested, are in sorted order.
RBEstimate rb_estimate(const SortedSystem& s, const BoxGeometry& box, const SOEApprox& soe,
                       double alpha, const BatchSample& batch, double H, double c_q,
                       bool with_forces);

double rb_energy_estimate(const SortedSystem& s, const BoxGeometry& box, const SOEApprox& soe,
                          double alpha, ImportanceSampler& sampler, int P, double c_q);
Coords rb_force_estimate(const SortedSystem& s, const BoxGeometry& box, const SOEApprox& soe,
                         double alpha, ImportanceSampler& sampler, int P);

/// k != 0 pair sum over every mode with |k| <= 14 alpha plus C_Q: the
/// quantity the random-batch estimator is unbiased for. Forces in sorted order.
RBEstimate full_mode_sum(const SortedSystem& s, const BoxGeometry& box, const SOEApprox& soe,
                         double alpha, bool with_forces);

struct VarianceStats {
  double mean = 0.0;
  double stderr_ = 0.0;
  double variance = 0.0;
  std::size_t n = 0;
};
VarianceStats variance_diagnostics(const std::vector<double>& samples);

/// Random-batch solver state: sampler plus cached constants.
class RBSE2DSolver {
 public:
  RBSE2DSolver(const BoxGeometry& box, const EwaldParams& params, const SOEApprox& soe, int P,
               std::uint64_t seed, int downsample = 10, int burn_in = 100);

  /// Draws a batch and returns the estimated breakdown and forces (caller's order).
  EnergyForces evaluate(const ParticleSystem& sys, bool with_forces);
  ImportanceSampler& sampler() { return sampler_; }
  double h_norm() const { return sampler_.h_norm(); }

 private:
  BoxGeometry box_;
  EwaldParams params_;
  SOEApprox soe_;
  int P_;
  ImportanceSampler sampler_;
  double c_q_ = 0.0;
  double q_cached_ = -1.0;
};

}  // namespace q2d
