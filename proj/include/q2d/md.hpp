#pragma once

#include "q2d/core.hpp"
#include "q2d/ewald2d_ref.hpp"
#include "q2d/neighbor.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace q2d {

/// Purely repulsive Lennard-Jones pair, truncated at the potential minimum
/// and shifted up by epsilon so it vanishes there.
struct LJParams {
  double epsilon = 1.0;
  double sigma = 1.0;
  double r_cut() const { return std::pow(2.0, 1.0 / 6.0) * sigma; }
};

/// Same repulsive form acting on the distance from each of two planes.
struct WallParams {
  double z_lo = 0.0;
  double z_hi = 1.0;
  double epsilon = 1.0;
  double sigma = 0.5;
};

/// Shifted-truncated LJ energy and -dU/dr / r at squared distance r2.
struct LJPair {
  double energy = 0.0;
  double f_over_r = 0.0;
};
LJPair lj_pair(double r2, double epsilon, double sigma);

struct ForceResult {
  double energy = 0.0;
  Coords forces;
};

/// Pair LJ with minimum image in x and y. Pass a VerletList to reuse
/// neighbours between steps; otherwise a fresh cell list is built.
ForceResult lj_forces(const ParticleSystem& sys, const BoxGeometry& box, const LJParams& lj,
                      VerletList* list = nullptr);
ForceResult wall_forces(const ParticleSystem& sys, const WallParams& walls);

enum class ThermostatKind { langevin, nose_hoover };

struct ThermostatState {
  ThermostatKind kind = ThermostatKind::langevin;
  double temperature = 1.0;
  double gamma = 1.0;  // Langevin friction
  double tau = 0.1;    // Nose-Hoover relaxation time
  double nh_xi = 0.0;  // thermostat momentum per unit mass
  double nh_eta = 0.0; // time integral of xi, enters the conserved quantity
  /// Nose-Hoover mass g T tau^2 for g degrees of freedom.
  double nh_mass(Index dof) const { return static_cast<double>(dof) * temperature * tau * tau; }
};

/// Returns the potential energy and writes forces for the current positions.
using ForceFn = std::function<double(const ParticleSystem&, Coords&)>;

/// Sum of m v^2 / 2.
double kinetic_energy(const ParticleSystem& sys);
/// 2 K / (3 N).
double instantaneous_temperature(const ParticleSystem& sys);

/// One splitting step kick, drift, exact Ornstein-Uhlenbeck, drift, kick.
/// `forces` holds the forces at the current positions on entry and at the
/// new positions on return. Returns the new potential energy.
double langevin_step(ParticleSystem& sys, const BoxGeometry& box, Coords& forces,
                     const ForceFn& force_fn, const ThermostatState& th, double dt,
                     std::mt19937_64& rng, Eigen::MatrixXi* images = nullptr);

/// One velocity-Verlet step wrapped in half-step Nose-Hoover updates.
double nose_hoover_step(ParticleSystem& sys, const BoxGeometry& box, Coords& forces,
                        const ForceFn& force_fn, ThermostatState& th, double dt,
                        Eigen::MatrixXi* images = nullptr);

/// K + U + Q xi^2 / 2 + g T eta; stays constant along exact Nose-Hoover flow.
double nose_hoover_conserved(const ParticleSystem& sys, double potential,
                             const ThermostatState& th);

/// Wraps x, y into the cell and, when given, records the crossings in `images` (N x 2).
void wrap_with_images(ParticleSystem& sys, const BoxGeometry& box, Eigen::MatrixXi* images);

/// z-histogram per charge sign and stored unwrapped frames for MSD.
struct Observables {
  int nbins = 0;
  double z_lo = 0.0;
  double z_hi = 1.0;
  double area = 1.0;
  std::vector<double> cation_counts;
  std::vector<double> anion_counts;
  std::vector<std::vector<double>> cation_frames;  // per-frame histograms, for error bars
  std::vector<std::vector<double>> anion_frames;
  std::size_t frames = 0;

  double record_dt = 0.0;
  std::vector<Coords> unwrapped;  // one per record event
  std::vector<double> temperature;
  std::vector<double> potential;
  std::vector<double> conserved;

  Observables() = default;
  Observables(int nbins, double z_lo, double z_hi, double area);
  void record(const ParticleSystem& sys, const Coords& unwrapped_pos);
  double bin_width() const { return (z_hi - z_lo) / nbins; }
  double bin_center(int b) const { return z_lo + (b + 0.5) * bin_width(); }
  /// Time-averaged number density per bin.
  std::vector<double> concentration(bool cations) const;
  /// Standard error of the per-bin concentration using `blocks` block averages.
  std::vector<double> concentration_stderr(bool cations, int blocks = 10) const;
};

struct MSDCurve {
  std::vector<double> t;
  std::vector<double> msd_xy;
  std::vector<double> msd_z;
};
/// Mean-squared displacements from stored frames, averaged over every time origin.
MSDCurve compute_msd(const std::vector<Coords>& unwrapped, double record_dt,
                     std::size_t max_lag = 0);

struct MDConfig {
  double dt = 0.001;
  std::int64_t steps = 1000;
  std::int64_t equilibration = 0;
  std::int64_t record_every = 100;
  std::int64_t trajectory_every = 0;  // 0 disables trajectory frames
  ThermostatState thermostat;
  LJParams lj;
  WallParams walls;
  bool use_walls = true;
  double skin = 0.3;
  int nbins = 50;
  std::uint64_t seed = 1;
};

/// Electrostatic forces for the current configuration; may be empty.
using ElectroFn = std::function<EnergyForces(const ParticleSystem&)>;

struct SimulationResult {
  Observables obs;
  ParticleSystem final_state;
  std::size_t neighbor_rebuilds = 0;
  double max_conserved_drift = 0.0;  // Nose-Hoover only, relative to the first record
};

/// Runs equilibration then production. When `trajectory` is set, frames are
/// written there as CSV rows step,id,x,y,z,vx,vy,vz.
SimulationResult run_simulation(ParticleSystem sys, const BoxGeometry& box, const MDConfig& cfg,
                                const ElectroFn& electro, std::ostream* trajectory = nullptr);

void write_msd_csv(std::ostream& out, const MSDCurve& msd);
void write_profile_csv(std::ostream& out, const Observables& obs);

}  // namespace q2d
