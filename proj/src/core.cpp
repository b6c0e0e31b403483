#include "q2d/core.hpp"

#include "q2d/special.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace q2d {

void BoxGeometry::check() const {
  if (!(lx > 0.0 && ly > 0.0 && lz > 0.0) || !std::isfinite(lx) || !std::isfinite(ly) ||
      !std::isfinite(lz)) {
    throw ValidationError("box lengths must be positive and finite");
  }
  if (!std::isfinite(sigma_top) || !std::isfinite(sigma_bot)) {
    throw ValidationError("slab charge densities must be finite");
  }
}

ParticleSystem::ParticleSystem(Index n)
    : q(Eigen::VectorXd::Zero(n)),
      m(Eigen::VectorXd::Ones(n)),
      pos(Coords::Zero(n, 3)),
      vel(Coords::Zero(n, 3)) {}

void ParticleSystem::wrap_xy(const BoxGeometry& box) {
  for (Index i = 0; i < size(); ++i) {
    pos(i, 0) -= box.lx * std::floor(pos(i, 0) / box.lx);
    pos(i, 1) -= box.ly * std::floor(pos(i, 1) / box.ly);
    // floor can round a tiny negative value up to exactly L
    if (pos(i, 0) >= box.lx) pos(i, 0) = 0.0;
    if (pos(i, 1) >= box.ly) pos(i, 1) = 0.0;
  }
}

void ParticleSystem::check(const BoxGeometry& box) const {
  const Index n = size();
  if (m.size() != n || pos.rows() != n || vel.rows() != n) {
    throw ValidationError("particle arrays have inconsistent lengths");
  }
  for (Index i = 0; i < n; ++i) {
    if (!(m(i) > 0.0)) throw ValidationError("particle mass must be positive");
    if (!std::isfinite(q(i)) || !pos.row(i).allFinite() || !vel.row(i).allFinite()) {
      throw ValidationError("non-finite particle data");
    }
    if (pos(i, 2) < 0.0 || pos(i, 2) > box.lz) {
      std::ostringstream msg;
      msg << "particle " << i << " has z=" << pos(i, 2) << " outside [0, " << box.lz << "]";
      throw ValidationError(msg.str());
    }
  }
}

void ParticleSystem::permute(const std::vector<Index>& perm) {
  const Index n = size();
  Eigen::VectorXd q2(n), m2(n);
  Coords p2(n, 3), v2(n, 3);
  for (Index i = 0; i < n; ++i) {
    const Index src = perm[static_cast<std::size_t>(i)];
    q2(i) = q(src);
    m2(i) = m(src);
    p2.row(i) = pos.row(src);
    v2.row(i) = vel.row(src);
  }
  q = std::move(q2);
  m = std::move(m2);
  pos = std::move(p2);
  vel = std::move(v2);
}

double charge_sum(const ParticleSystem& sys) { return sys.q.sum(); }
double charge_sq_sum(const ParticleSystem& sys) { return sys.q.squaredNorm(); }

NeutralityReport validate_neutrality(const ParticleSystem& sys, const BoxGeometry& box) {
  NeutralityReport r;
  r.residual = std::abs(sys.q.sum() + (box.sigma_top + box.sigma_bot) * box.area());
  r.tolerance = 1e-12 * std::max(1.0, sys.q.cwiseAbs().sum());
  r.ok = r.residual <= r.tolerance;
  return r;
}

void require_neutral(const ParticleSystem& sys, const BoxGeometry& box) {
  const auto r = validate_neutrality(sys, box);
  if (!r.ok) {
    std::ostringstream msg;
    msg << std::setprecision(17) << "system is not charge neutral: residual " << r.residual;
    throw ValidationError(msg.str());
  }
}

std::vector<Index> sort_by_z(const Eigen::Ref<const Eigen::VectorXd>& z, double lz) {
  const Index n = z.size();
  std::vector<Index> perm(static_cast<std::size_t>(n));
  if (n == 0) return perm;
  const std::size_t nb = static_cast<std::size_t>(std::max<Index>(1, n));
  const double zmin = std::min(0.0, z.minCoeff());
  const double zmax = std::max(lz, z.maxCoeff());
  const double scale = zmax > zmin ? static_cast<double>(nb) / (zmax - zmin) : 0.0;

  auto bucket_of = [&](double v) {
    auto b = static_cast<std::size_t>((v - zmin) * scale);
    return std::min(b, nb - 1);
  };
  // counting pass, then a stable scatter
  std::vector<std::size_t> start(nb + 1, 0);
  for (Index i = 0; i < n; ++i) ++start[bucket_of(z(i)) + 1];
  for (std::size_t b = 0; b < nb; ++b) start[b + 1] += start[b];
  std::vector<std::size_t> fill(start.begin(), start.end() - 1);
  for (Index i = 0; i < n; ++i) perm[fill[bucket_of(z(i))]++] = i;
  // buckets hold O(1) items on average; insertion sort keeps ties stable
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t a = start[b] + 1; a < start[b + 1]; ++a) {
      const Index key = perm[a];
      std::size_t c = a;
      while (c > start[b] && z(perm[c - 1]) > z(key)) {
        perm[c] = perm[c - 1];
        --c;
      }
      perm[c] = key;
    }
  }
  return perm;
}

double choose_alpha(Index n, const BoxGeometry& box, AlphaMode mode, double prefactor, double s) {
  if (n < 1) throw ConfigError("choose_alpha needs at least one particle");
  const double dn = static_cast<double>(n);
  if (mode == AlphaMode::linear) {
    return prefactor * std::cbrt(dn / box.volume());
  }
  const double alpha = prefactor * std::pow(dn, 0.2) /
                       (std::pow(box.lx * box.ly, 0.4) * std::pow(box.lz, 0.2));
  if (s / alpha <= box.lz) return alpha;
  // cylinder neighbourhood: C_s ~ 2 pi s^2 N^2 / (alpha^2 Lx Ly)
  return prefactor * std::pow(dn, 0.25) / std::sqrt(box.lx * box.ly);
}

std::vector<KMode> enumerate_modes(const BoxGeometry& box, double kmax) {
  std::vector<KMode> modes;
  const double ux = 2.0 * kPi / box.lx;
  const double uy = 2.0 * kPi / box.ly;
  const int mxmax = static_cast<int>(std::floor(kmax / ux));
  const int mymax = static_cast<int>(std::floor(kmax / uy));
  const double k2max = kmax * kmax * (1.0 + 1e-14);
  for (int my = -mymax; my <= mymax; ++my) {
    for (int mx = -mxmax; mx <= mxmax; ++mx) {
      if (mx == 0 && my == 0) continue;
      const double kx = ux * mx;
      const double ky = uy * my;
      const double k2 = kx * kx + ky * ky;
      if (k2 > k2max) continue;
      modes.push_back({mx, my, kx, ky, std::sqrt(k2)});
    }
  }
  return modes;
}

std::vector<KMode> EwaldParams::half_modes() const {
  std::vector<KMode> half;
  half.reserve(kmodes.size() / 2);
  for (const auto& km : kmodes) {
    if (km.my > 0 || (km.my == 0 && km.mx > 0)) half.push_back(km);
  }
  return half;
}

EwaldParams make_params(double alpha, double s, const BoxGeometry& box) {
  if (!(alpha > 0.0) || !(s > 0.0)) throw ConfigError("alpha and s must be positive");
  EwaldParams p;
  p.alpha = alpha;
  p.s = s;
  p.r_c = s / alpha;
  p.k_c = 2.0 * s * alpha;
  p.kmodes = enumerate_modes(box, p.k_c);
  return p;
}

namespace {

double qs_factor(double alpha, double rc) {
  const double a = alpha * rc;
  if (a > 2.0) {
    return std::exp(-2.0 * a * a) / (4.0 * kPi * std::pow(alpha, 4) * std::pow(rc, 3));
  }
  const double ec = std::erfc(a);
  return 2.0 * std::exp(-a * a) * ec / (alpha * kSqrtPi) - rc * ec * ec -
         std::sqrt(2.0 / (kPi * alpha * alpha)) * std::erfc(std::sqrt(2.0) * a);
}

}  // namespace

ErrorPrediction predict_errors(const EwaldParams& p, double Q, double V) {
  if (!(p.alpha > 0.0 && p.r_c > 0.0 && p.k_c > 0.0)) {
    throw ConfigError("predict_errors needs positive alpha, r_c and k_c");
  }
  const double a = p.alpha, rc = p.r_c, kc = p.k_c;
  const double gauss_k = std::exp(-kc * kc / (4.0 * a * a));
  const double gauss_r = std::exp(-a * a * rc * rc);
  ErrorPrediction e;
  e.e_phi_s = std::sqrt(std::max(0.0, 4.0 * kPi * Q / V * qs_factor(a, rc)));
  e.e_phi_l = std::sqrt(8.0 * a * a * Q / (kPi * V)) * std::pow(kc, -1.5) * gauss_k;
  e.e_U_s = Q * std::sqrt(1.0 / (2.0 * V)) / (a * a) * std::pow(rc, -1.5) * gauss_r;
  e.e_U_l = Q * std::sqrt(8.0 * a * a / (kPi * V)) * std::pow(kc, -1.5) * gauss_k;
  e.e_F_s = 2.0 * std::sqrt(Q / V) / std::sqrt(rc) * gauss_r;
  e.e_F_l = 4.0 * std::sqrt(Q / (kPi * V)) * a / std::sqrt(kc) * gauss_k;
  return e;
}

double rms_error(const Eigen::Ref<const Eigen::VectorXd>& a,
                 const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("rms_error: length mismatch");
  if (a.size() == 0) throw std::invalid_argument("rms_error: empty input");
  return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

double debye_length(double Q, double V, double temperature) {
  if (Q <= 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / std::sqrt(4.0 * kPi * Q / (V * temperature));
}

ParticleSystem read_particles_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("particle file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "id,q,m,x,y,z,vx,vy,vz") {
    throw ConfigError("particle file header must be id,q,m,x,y,z,vx,vy,vz");
  }
  std::vector<std::array<double, 8>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string cell;
    std::array<double, 9> v{};
    int col = 0;
    while (std::getline(ss, cell, ',')) {
      if (col >= 9) throw ConfigError("too many columns on line " + std::to_string(lineno));
      try {
        std::size_t used = 0;
        v[static_cast<std::size_t>(col)] = std::stod(cell, &used);
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ConfigError("bad number '" + cell + "' on line " + std::to_string(lineno));
      }
      ++col;
    }
    if (col != 9) throw ConfigError("expected 9 columns on line " + std::to_string(lineno));
    rows.push_back({v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]});
  }
  ParticleSystem sys(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const auto ii = static_cast<Index>(i);
    sys.q(ii) = r[0];
    sys.m(ii) = r[1];
    sys.pos.row(ii) << r[2], r[3], r[4];
    sys.vel.row(ii) << r[5], r[6], r[7];
  }
  return sys;
}

ParticleSystem read_particles_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open particle file " + path);
  return read_particles_csv(in);
}

void write_particles_csv(std::ostream& out, const ParticleSystem& sys) {
  out << "id,q,m,x,y,z,vx,vy,vz\n" << std::setprecision(17);
  for (Index i = 0; i < sys.size(); ++i) {
    out << i << ',' << sys.q(i) << ',' << sys.m(i) << ',' << sys.pos(i, 0) << ','
        << sys.pos(i, 1) << ',' << sys.pos(i, 2) << ',' << sys.vel(i, 0) << ','
        << sys.vel(i, 1) << ',' << sys.vel(i, 2) << '\n';
  }
}

}  // namespace q2d
