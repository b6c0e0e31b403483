#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace q2d {

using Index = Eigen::Index;
using Vec3 = Eigen::Vector3d;
/// N x 3 row-major block of per-particle vectors (positions, velocities, forces).
using Coords = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

// Error categories; the command-line front end maps them to exit codes.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Doubly periodic cell [0,lx) x [0,ly) x [0,lz] with uniform surface
/// charge densities on the planes z = lz (top) and z = 0 (bottom).
struct BoxGeometry {
  double lx = 1.0;
  double ly = 1.0;
  double lz = 1.0;
  double sigma_top = 0.0;
  double sigma_bot = 0.0;

  double area() const { return lx * ly; }
  double volume() const { return lx * ly * lz; }
  /// Throws ValidationError unless the lengths are positive and densities finite.
  void check() const;
};

struct ParticleSystem {
  Eigen::VectorXd q;
  Eigen::VectorXd m;
  Coords pos;
  Coords vel;

  ParticleSystem() = default;
  explicit ParticleSystem(Index n);

  Index size() const { return q.size(); }
  /// Wraps x and y into the primary cell; z is left alone.
  void wrap_xy(const BoxGeometry& box);
  /// Throws ValidationError on non-positive masses, non-finite data or z outside [0, lz].
  void check(const BoxGeometry& box) const;
  /// Reorders every per-particle array so that entry i becomes old entry perm[i].
  void permute(const std::vector<Index>& perm);
};

double charge_sum(const ParticleSystem& sys);
double charge_sq_sum(const ParticleSystem& sys);  // Q = sum q_i^2

struct NeutralityReport {
  double residual = 0.0;
  double tolerance = 0.0;
  bool ok = true;
};

NeutralityReport validate_neutrality(const ParticleSystem& sys, const BoxGeometry& box);
/// Throws ValidationError carrying the residual when the system is not neutral.
void require_neutral(const ParticleSystem& sys, const BoxGeometry& box);

/// Stable bucket sort of z over [0, lz]; returns perm with z[perm[0]] <= z[perm[1]] <= ...
std::vector<Index> sort_by_z(const Eigen::Ref<const Eigen::VectorXd>& z, double lz);

enum class AlphaMode { balanced, linear };

/// Splitting parameter from the complexity-balancing laws, times `prefactor`.
/// In balanced mode the slab law is used unless the implied cutoff s/alpha
/// exceeds lz, in which case the real-space neighbourhood is a cylinder of
/// height lz and the cylinder balance is used instead.
double choose_alpha(Index n, const BoxGeometry& box, AlphaMode mode, double prefactor = 1.0,
                    double s = 4.0);

struct KMode {
  int mx = 0;
  int my = 0;
  double kx = 0.0;
  double ky = 0.0;
  double k = 0.0;
};

struct EwaldParams {
  double alpha = 0.0;
  double s = 0.0;
  double r_c = 0.0;
  double k_c = 0.0;
  /// Every nonzero lattice mode with |k| <= k_c; closed under k -> -k.
  std::vector<KMode> kmodes;

  /// The half of kmodes with my > 0, or my == 0 and mx > 0.
  std::vector<KMode> half_modes() const;
};

/// Cutoffs r_c = s/alpha and k_c = 2 s alpha plus the mode list.
EwaldParams make_params(double alpha, double s, const BoxGeometry& box);
/// Modes of the lattice 2pi(mx/lx, my/ly) with 0 < |k| <= kmax.
std::vector<KMode> enumerate_modes(const BoxGeometry& box, double kmax);

/// Predicted RMS truncation errors. Force predictions are per unit charge.
struct ErrorPrediction {
  double e_phi_s = 0.0;
  double e_phi_l = 0.0;
  double e_U_s = 0.0;
  double e_U_l = 0.0;
  double e_F_s = 0.0;
  double e_F_l = 0.0;
};

ErrorPrediction predict_errors(const EwaldParams& params, double Q, double V);

double rms_error(const Eigen::Ref<const Eigen::VectorXd>& a,
                 const Eigen::Ref<const Eigen::VectorXd>& b);

/// Debye length of a symmetric electrolyte, lambda = (4 pi Q / (V T))^{-1/2}.
double debye_length(double Q, double V, double temperature = 1.0);

// Particle CSV with header id,q,m,x,y,z,vx,vy,vz.
ParticleSystem read_particles_csv(std::istream& in);
ParticleSystem read_particles_csv_file(const std::string& path);
void write_particles_csv(std::ostream& out, const ParticleSystem& sys);

}  // namespace q2d
