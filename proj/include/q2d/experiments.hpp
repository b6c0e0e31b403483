#pragma once

#include "q2d/config.hpp"
#include "q2d/core.hpp"
#include "q2d/ewald2d_ref.hpp"
#include "q2d/rbse2d.hpp"
#include "q2d/soe.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace q2d {

/// Random placement of the generator's species with rejection on min_distance.
ParticleSystem generate_particles(const GeneratorSpec& spec, const BoxGeometry& box,
                                  std::uint64_t seed);
/// n particles of alternating charge +1 / -1 placed uniformly (n even gives neutrality).
ParticleSystem random_neutral_system(Index n, const BoxGeometry& box, std::uint64_t seed,
                                     double wall_margin = 0.0);

/// SOE from a table file, a tolerance or a term count, in that priority.
SOEApprox resolve_soe(const SOESection& sec);
double resolve_alpha(const EwaldSection& sec, Index n, const BoxGeometry& box);

/// One electrostatic back end behind a common call.
class ElectroSolver {
 public:
  ElectroSolver(Method method, const BoxGeometry& box, const EwaldParams& params, SOEApprox soe,
                const RBSection& rb = {}, std::uint64_t rb_seed = 1, int threads = 1);
  EnergyForces evaluate(const ParticleSystem& sys, bool with_forces);
  Method method() const { return method_; }
  const EwaldParams& params() const { return params_; }
  const SOEApprox& soe() const { return soe_; }

 private:
  Method method_;
  BoxGeometry box_;
  EwaldParams params_;
  SOEApprox soe_;
  int threads_;
  std::unique_ptr<RBSE2DSolver> rb_;
};

/// Relative error |a - b| / |b| (absolute when b == 0, +inf when a is not finite).
double relative_error(double a, double b);
/// Relative RMS force error sqrt(sum |F - F*|^2 / sum |F*|^2).
double relative_force_error(const Coords& f, const Coords& f_ref);

// Absolute error in the total energy (and relative RMS force error) against
// a high-accuracy reference as the truncation parameter s varies; one column
// per SOE term count.
struct SScanRow {
  double s = 0.0;
  double u_reference = 0.0;
  double err_ref = 0.0;             // stable closed form at this s
  std::vector<double> err_soe;      // per SOE
  double force_err_ref = 0.0;
  std::vector<double> force_err_soe;
};
std::vector<SScanRow> scan_s(const ParticleSystem& sys, const BoxGeometry& box, double alpha,
                             const std::vector<double>& s_list, const std::vector<SOEApprox>& soes,
                             double reference_s);

// Relative energy and force errors against the stable closed form at the same
// s as the particle count grows at fixed density; one column per SOE. Errors
// are RMS over configurations divided by the RMS reference value.
struct NScanRow {
  Index n = 0;
  std::vector<double> err_soe;
  std::vector<double> force_err_soe;
};
std::vector<NScanRow> scan_n(const std::vector<Index>& n_list, double density, double aspect_z,
                             double alpha, double s, const std::vector<SOEApprox>& soes,
                             int configs, std::uint64_t seed);

// Absolute error of the long-range energy as the cell height grows, measured
// against a long double evaluation of the same truncated sums (RMS over
// `configs` random systems).
struct LzScanRow {
  double lz = 0.0;
  double err_naive = 0.0;  // +inf when the naive evaluation overflows
  double err_stable = 0.0;
  double err_soe = 0.0;
};
std::vector<LzScanRow> scan_lz(const std::vector<double>& lz_list, double lx, Index n,
                               double alpha, double s, const SOEApprox& soe, std::uint64_t seed,
                               int configs = 1);

// Per-particle force error against the stable closed form.
struct ForceZRow {
  double z = 0.0;
  double error = 0.0;
};
std::vector<ForceZRow> force_error_vs_z(const ParticleSystem& sys, const BoxGeometry& box,
                                        const EwaldParams& params, const SOEApprox& soe);
double pearson(const std::vector<double>& x, const std::vector<double>& y);

// Sampler diagnostics: acceptance and a chi-square test of the mode histogram.
struct SamplerCheck {
  double acceptance = 0.0;
  double chi2 = 0.0;
  int dof = 0;
  double p_value = 0.0;
  std::size_t samples = 0;
};
SamplerCheck sampler_check(double alpha, const BoxGeometry& box, std::size_t samples,
                           std::uint64_t seed, int downsample = 10);

// Variance of the random-batch energy estimator for each batch size.
struct VarianceRow {
  int p = 0;
  double variance = 0.0;
  double mean = 0.0;
};
std::vector<VarianceRow> variance_vs_p(const ParticleSystem& sys, const BoxGeometry& box,
                                       double alpha, const SOEApprox& soe,
                                       const std::vector<int>& p_list, int batches,
                                       std::uint64_t seed);
/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Wall time of one energy + force evaluation, median over repeats.
struct BenchRow {
  Index n = 0;
  std::string method;
  double seconds = 0.0;
  bool extrapolated = false;  // ewald2d timed on a subset of modes and scaled
};
struct BenchOptions {
  std::vector<Index> n_list;
  std::vector<Method> methods = {Method::soewald2d, Method::rbse2d, Method::ewald2d};
  int repeats = 5;
  Index ewald_full_max_n = 3000;  // above this the ewald2d mode sum is sampled
  Index ewald_max_n = 10000;      // ewald2d is skipped above this
  double density = 1e-3;
  double aspect_z = 0.5;
  double alpha_prefactor = 1.0;
  double s = 3.0;
  int soe_m = 8;
  int p = 16;
  std::uint64_t seed = 1;
  int threads = 1;
};
std::vector<BenchRow> run_bench(const BenchOptions& opt, std::ostream* progress = nullptr);

}  // namespace q2d
