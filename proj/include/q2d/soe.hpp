#pragma once

#include <complex>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace q2d {

using cplx = std::complex<double>;

/// Sum-of-exponentials model of the unit Gaussian,
///   exp(-x^2) ~ sum_l w_l exp(-s_l |x|),
/// with complex terms arranged in conjugate pairs (plus one real term when
/// the count is odd) so the sum is real for real x.
struct SOEApprox {
  std::vector<cplx> w;
  std::vector<cplx> s;
  double eps_certified = 0.0;
  double domain_max = 0.0;

  int m() const { return static_cast<int>(w.size()); }
  cplx eval(double x) const;
};

/// Hyperbolic contour z(u) = mu (1 + sin(i u - phi)) sampled at m points with spacing h.
struct ContourParams {
  double mu = 0.0;
  double h = 0.0;
  double phi = 0.0;
};

/// Tuned contour parameters for m terms (tabulated for small m, extrapolated beyond).
ContourParams contour_params(int m);

SOEApprox build_soe_contour(int m);
SOEApprox build_soe_contour(int m, const ContourParams& cp);
/// Smallest contour SOE (m <= m_max) whose certified error is at most eps.
SOEApprox soe_for_tolerance(double eps, int m_max = 40);

/// Coefficient table, CSV rows re_w,im_w,re_s,im_s (header optional on input).
SOEApprox load_soe_table(std::istream& in);
SOEApprox load_soe_table_file(const std::string& path);
void write_soe_table(std::ostream& out, const SOEApprox& soe);

/// Sup of |target(x) - SOE(x)| over [0, x_max]: a uniform grid of grid_n
/// points followed by golden-section refinement of each local maximum.
double certify_soe(const SOEApprox& soe, double x_max = 20.0, int grid_n = 20000);
double certify_soe(const SOEApprox& soe, const std::function<double(double)>& target,
                   double x_max, int grid_n);

struct XiPair {
  double plus = 0.0;
  double minus = 0.0;
};

/// Relative distance |alpha s_l - k| / k below which the removable singularity
/// of the xi-minus bracket is replaced by its limit.
inline constexpr double kSingularTol = 1e-8;

/// SOE closed forms of xi+- (k, z) = exp(+-kz) erfc(k/2alpha +- alpha z).
XiPair xi_soe(const SOEApprox& soe, double alpha, double k, double z);
/// z-derivatives of the SOE closed forms.
XiPair dxi_soe(const SOEApprox& soe, double alpha, double k, double z);
/// SOE approximation of erf(alpha z) for z >= 0.
double erf_soe(const SOEApprox& soe, double alpha, double z);

/// Error bounds implied by a certified SOE.
double xi_bound(double eps, double alpha, double k);
double dxi_bound(double eps, double alpha, double k);
double erf_bound(double eps, double alpha, double z);

}  // namespace q2d
