#include "q2d/soe.hpp"

#include "q2d/core.hpp"
#include "q2d/special.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace q2d {

namespace {

// Contour parameters minimizing the sup error on [0, 20], found offline by a
// multistart Nelder-Mead search per term count. Index = m.
struct TunedRow {
  int m;
  double mu, h, phi;
};

#include "contour_table.inc"

const cplx I(0.0, 1.0);

}  // namespace

cplx SOEApprox::eval(double x) const {
  const double ax = std::abs(x);
  cplx acc = 0.0;
  for (std::size_t l = 0; l < w.size(); ++l) acc += w[l] * std::exp(-s[l] * ax);
  return acc;
}

ContourParams contour_params(int m) {
  for (const auto& row : kTunedContours) {
    if (row.m == m) return {row.mu, row.h, row.phi};
  }
  // beyond the table the optimum follows mu ~ c1 m, h ~ c2 / m at fixed angle
  const auto& last = kTunedContours[std::size(kTunedContours) - 1];
  const double r = static_cast<double>(m) / last.m;
  return {last.mu * r, last.h / r, last.phi};
}

SOEApprox build_soe_contour(int m) { return build_soe_contour(m, contour_params(m)); }

SOEApprox build_soe_contour(int m, const ContourParams& cp) {
  if (m < 2) throw ConfigError("SOE term count must be at least 2");
  if (!(cp.mu > 0.0 && cp.h > 0.0 && cp.phi > 0.0 && cp.phi < kPi / 2)) {
    throw ConfigError("invalid contour parameters");
  }
  // exp(-x^2) = (1/2 pi i) int_G e^z sqrt(pi/z) exp(-2 sqrt(z) |x|) dz on a
  // contour enclosing the branch cut; trapezoid rule in the contour variable u.
  auto node = [&](double u, cplx& w, cplx& s) {
    const cplx arg = I * u - cp.phi;
    const cplx z = cp.mu * (1.0 + std::sin(arg));
    const cplx dz = cp.mu * I * std::cos(arg);
    w = cp.h / (2.0 * kPi * I) * std::exp(z) * std::sqrt(kPi / z) * dz;
    s = 2.0 * std::sqrt(z);
  };
  SOEApprox soe;
  soe.w.resize(static_cast<std::size_t>(m));
  soe.s.resize(static_cast<std::size_t>(m));
  const int half = m / 2;
  // nodes u = (j - (m-1)/2) h; build u > 0 and mirror to exact conjugates
  for (int j = 0; j < half; ++j) {
    const double u = (static_cast<double>(m - 1) / 2.0 - j) * cp.h;
    cplx w, s;
    node(u, w, s);
    soe.w[static_cast<std::size_t>(j)] = w;
    soe.s[static_cast<std::size_t>(j)] = s;
    soe.w[static_cast<std::size_t>(m - 1 - j)] = std::conj(w);
    soe.s[static_cast<std::size_t>(m - 1 - j)] = std::conj(s);
  }
  if (m % 2 == 1) {
    cplx w, s;
    node(0.0, w, s);
    soe.w[static_cast<std::size_t>(half)] = cplx(w.real(), 0.0);
    soe.s[static_cast<std::size_t>(half)] = cplx(s.real(), 0.0);
  }
  for (const auto& s : soe.s) {
    if (!(s.real() > 0.0)) {
      throw NumericError("contour produced an exponent with non-positive real part");
    }
  }
  soe.domain_max = 20.0;
  soe.eps_certified = certify_soe(soe, soe.domain_max, 20000);
  return soe;
}

SOEApprox soe_for_tolerance(double eps, int m_max) {
  for (int m = 2; m <= m_max; ++m) {
    auto soe = build_soe_contour(m);
    if (soe.eps_certified <= eps) return soe;
  }
  std::ostringstream msg;
  msg << "no contour SOE with at most " << m_max << " terms reaches eps=" << eps;
  throw NumericError(msg.str());
}

SOEApprox load_soe_table(std::istream& in) {
  SOEApprox soe;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.find_first_of("0123456789") == std::string::npos) continue;
    std::array<double, 4> v{};
    std::stringstream ss(line);
    std::string cell;
    int col = 0;
    while (std::getline(ss, cell, ',')) {
      if (col >= 4) throw ConfigError("SOE table: too many columns on line " + std::to_string(lineno));
      try {
        v[static_cast<std::size_t>(col)] = std::stod(cell);
      } catch (const std::exception&) {
        throw ConfigError("SOE table: bad number on line " + std::to_string(lineno));
      }
      ++col;
    }
    if (col != 4) throw ConfigError("SOE table: expected 4 columns on line " + std::to_string(lineno));
    if (!(v[2] > 0.0)) {
      throw ConfigError("SOE table: exponent with non-positive real part on line " +
                        std::to_string(lineno));
    }
    soe.w.emplace_back(v[0], v[1]);
    soe.s.emplace_back(v[2], v[3]);
  }
  if (soe.w.empty()) throw ConfigError("SOE table is empty");
  soe.domain_max = 20.0;
  soe.eps_certified = certify_soe(soe, soe.domain_max, 20000);
  return soe;
}

SOEApprox load_soe_table_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open SOE table " + path);
  return load_soe_table(in);
}

void write_soe_table(std::ostream& out, const SOEApprox& soe) {
  out << "re_w,im_w,re_s,im_s\n" << std::setprecision(17);
  for (std::size_t l = 0; l < soe.w.size(); ++l) {
    out << soe.w[l].real() << ',' << soe.w[l].imag() << ',' << soe.s[l].real() << ','
        << soe.s[l].imag() << '\n';
  }
}

double certify_soe(const SOEApprox& soe, double x_max, int grid_n) {
  return certify_soe(soe, [](double x) { return std::exp(-x * x); }, x_max, grid_n);
}

double certify_soe(const SOEApprox& soe, const std::function<double(double)>& target,
                   double x_max, int grid_n) {
  if (grid_n < 1000) throw ConfigError("certify_soe needs at least 1000 grid points");
  auto err = [&](double x) { return std::abs(target(x) - soe.eval(x).real()); };
  const double dx = x_max / grid_n;
  std::vector<double> e(static_cast<std::size_t>(grid_n) + 1);
  for (int i = 0; i <= grid_n; ++i) e[static_cast<std::size_t>(i)] = err(i * dx);
  double best = *std::max_element(e.begin(), e.end());
  // golden-section refinement inside each bracketing triple of a local maximum
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int i = 1; i < grid_n; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    if (!(e[iu] >= e[iu - 1] && e[iu] >= e[iu + 1])) continue;
    double a = (i - 1) * dx, b = (i + 1) * dx;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = err(c), fd = err(d);
    for (int it = 0; it < 60 && b - a > 1e-15 * (1.0 + std::abs(a)); ++it) {
      if (fc > fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - g * (b - a);
        fc = err(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + g * (b - a);
        fd = err(d);
      }
    }
    best = std::max({best, fc, fd});
  }
  return best;
}

namespace {

struct Brackets {
  cplx plus;   // 1 / (a + k) e^{-a z}
  cplx minus;  // (2a e^{-kz} - (a+k) e^{-az}) / (a^2 - k^2)
  cplx dplus;
  cplx dminus;
};

Brackets brackets(cplx a, double k, double z) {
  Brackets b;
  const cplx ea = std::exp(-a * z);
  const double ek = std::exp(-k * z);
  b.plus = ea / (a + k);
  b.dplus = -a * b.plus;
  if (std::abs(a - k) < kSingularTol * k) {
    b.minus = ek * (2.0 * k * z + 1.0) / (2.0 * k);
    b.dminus = ek * (1.0 - 2.0 * k * z) / 2.0;
  } else {
    const cplx den = a * a - k * k;
    b.minus = (2.0 * a * ek - (a + k) * ea) / den;
    b.dminus = -a * (2.0 * k * ek - (a + k) * ea) / den;
  }
  return b;
}

void check_xi_args(double alpha, double k, double z) {
  if (!(k > 0.0)) throw std::invalid_argument("xi evaluation needs k > 0");
  if (!(alpha > 0.0)) throw std::invalid_argument("xi evaluation needs alpha > 0");
  if (z < 0.0) throw std::invalid_argument("xi evaluation needs z >= 0");
}

}  // namespace

XiPair xi_soe(const SOEApprox& soe, double alpha, double k, double z) {
  check_xi_args(alpha, k, z);
  cplx p = 0.0, mn = 0.0;
  for (std::size_t l = 0; l < soe.w.size(); ++l) {
    const auto b = brackets(alpha * soe.s[l], k, z);
    p += soe.w[l] * b.plus;
    mn += soe.w[l] * b.minus;
  }
  const double c = 2.0 * alpha / kSqrtPi * std::exp(-k * k / (4.0 * alpha * alpha));
  return {c * p.real(), c * mn.real()};
}

XiPair dxi_soe(const SOEApprox& soe, double alpha, double k, double z) {
  check_xi_args(alpha, k, z);
  cplx p = 0.0, mn = 0.0;
  for (std::size_t l = 0; l < soe.w.size(); ++l) {
    const auto b = brackets(alpha * soe.s[l], k, z);
    p += soe.w[l] * b.dplus;
    mn += soe.w[l] * b.dminus;
  }
  const double c = 2.0 * alpha / kSqrtPi * std::exp(-k * k / (4.0 * alpha * alpha));
  return {c * p.real(), c * mn.real()};
}

double erf_soe(const SOEApprox& soe, double alpha, double z) {
  if (z < 0.0) throw std::invalid_argument("erf_soe needs z >= 0");
  cplx acc = 0.0;
  for (std::size_t l = 0; l < soe.w.size(); ++l) {
    acc += soe.w[l] / soe.s[l] * (1.0 - std::exp(-alpha * soe.s[l] * z));
  }
  return kTwoOverSqrtPi * acc.real();
}

double xi_bound(double eps, double alpha, double k) {
  return 2.0 * alpha * std::exp(-k * k / (4.0 * alpha * alpha)) / (kSqrtPi * k) * eps;
}

double dxi_bound(double eps, double alpha, double k) {
  return 4.0 * alpha * std::exp(-k * k / (4.0 * alpha * alpha)) / kSqrtPi * eps;
}

double erf_bound(double eps, double alpha, double z) { return 2.0 * alpha * z / kSqrtPi * eps; }

}  // namespace q2d
