#pragma once

#include "q2d/core.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace q2d {

/// Linked-cell list over (x, y, z) with cell edges >= cutoff / 2, periodic in
/// x and y, open in z. The half-width cells with a 5-cell stencil per axis
/// scan about 58% of the volume a full-width 27-cell stencil would. Each unordered pair within the cutoff (minimum image
/// in x, y) is visited exactly once.
class CellList {
 public:
  CellList() = default;
  CellList(const Coords& pos, const BoxGeometry& box, double cutoff) { build(pos, box, cutoff); }

  void build(const Coords& pos, const BoxGeometry& box, double cutoff);

  double cutoff() const { return cutoff_; }

  /// Calls f(i, j, dx, dy, dz, r2) with (dx, dy, dz) = r_i - r_j (minimum image)
  /// for every pair i < j with r2 <= cutoff^2.
  template <class F>
  void for_each_pair(const Coords& pos, F&& f) const;

 private:
  BoxGeometry box_;
  double cutoff_ = 0.0;
  double zlo_ = 0.0;
  int nx_ = 1, ny_ = 1, nz_ = 1;
  double cx_ = 1.0, cy_ = 1.0, cz_ = 1.0;
  std::vector<int> head_;  // first particle index per cell, -1 when empty
  std::vector<int> next_;  // singly linked chain through particles

  int cell_index(int ix, int iy, int iz) const { return (iz * ny_ + iy) * nx_ + ix; }
  static constexpr int kReach = 2;  // stencil half-width in cells
  // Offsets that reach every cell within kReach exactly once.
  static std::vector<int> periodic_offsets(int n) {
    std::vector<int> off;
    if (n >= 2 * kReach + 1) {
      for (int d = -kReach; d <= kReach; ++d) off.push_back(d);
    } else {
      for (int d = 0; d < n; ++d) off.push_back(d);
    }
    return off;
  }
};

inline void CellList::build(const Coords& pos, const BoxGeometry& box, double cutoff) {
  box_ = box;
  cutoff_ = cutoff;
  const Index n = pos.rows();
  zlo_ = 0.0;
  double zhi = box.lz;
  for (Index i = 0; i < n; ++i) {
    zlo_ = std::min(zlo_, pos(i, 2));
    zhi = std::max(zhi, pos(i, 2));
  }
  auto count = [&](double len) {
    return std::max(1, static_cast<int>(std::floor(kReach * len / std::max(cutoff, 1e-300))));
  };
  // cap the grid so a tiny cutoff cannot allocate absurd cell arrays
  const int cap = std::max(1, static_cast<int>(std::cbrt(static_cast<double>(n) * 8.0)) + kReach);
  nx_ = std::min(count(box.lx), cap);
  ny_ = std::min(count(box.ly), cap);
  nz_ = std::min(count(zhi - zlo_), cap);
  cx_ = box.lx / nx_;
  cy_ = box.ly / ny_;
  cz_ = (zhi - zlo_) / nz_;
  head_.assign(static_cast<std::size_t>(nx_) * ny_ * nz_, -1);
  next_.assign(static_cast<std::size_t>(n), -1);
  for (Index i = n - 1; i >= 0; --i) {
    double x = pos(i, 0) - box.lx * std::floor(pos(i, 0) / box.lx);
    double y = pos(i, 1) - box.ly * std::floor(pos(i, 1) / box.ly);
    int ix = std::clamp(static_cast<int>(x / cx_), 0, nx_ - 1);
    int iy = std::clamp(static_cast<int>(y / cy_), 0, ny_ - 1);
    int iz = std::clamp(static_cast<int>((pos(i, 2) - zlo_) / cz_), 0, nz_ - 1);
    const auto c = static_cast<std::size_t>(cell_index(ix, iy, iz));
    next_[static_cast<std::size_t>(i)] = head_[c];
    head_[c] = static_cast<int>(i);
  }
}

template <class F>
void CellList::for_each_pair(const Coords& pos, F&& f) const {
  const double rc2 = cutoff_ * cutoff_;
  const auto ox = periodic_offsets(nx_);
  const auto oy = periodic_offsets(ny_);
  const double lx = box_.lx, ly = box_.ly;
  for (int iz = 0; iz < nz_; ++iz) {
    for (int iy = 0; iy < ny_; ++iy) {
      for (int ix = 0; ix < nx_; ++ix) {
        const int c = cell_index(ix, iy, iz);
        if (head_[static_cast<std::size_t>(c)] < 0) continue;
        for (int dz = -kReach; dz <= kReach; ++dz) {
          const int jz = iz + dz;
          if (jz < 0 || jz >= nz_) continue;
          for (int dy : oy) {
            const int jy = (iy + dy + ny_) % ny_;
            for (int dx : ox) {
              const int jx = (ix + dx + nx_) % nx_;
              const int c2 = cell_index(jx, jy, jz);
              for (int i = head_[static_cast<std::size_t>(c)]; i >= 0;
                   i = next_[static_cast<std::size_t>(i)]) {
                for (int j = head_[static_cast<std::size_t>(c2)]; j >= 0;
                     j = next_[static_cast<std::size_t>(j)]) {
                  if (j <= i) continue;
                  double rx = pos(i, 0) - pos(j, 0);
                  double ry = pos(i, 1) - pos(j, 1);
                  const double rz = pos(i, 2) - pos(j, 2);
                  rx -= lx * std::nearbyint(rx / lx);
                  ry -= ly * std::nearbyint(ry / ly);
                  const double r2 = rx * rx + ry * ry + rz * rz;
                  if (r2 <= rc2) f(static_cast<Index>(i), static_cast<Index>(j), rx, ry, rz, r2);
                }
              }
            }
          }
        }
      }
    }
  }
}

/// Verlet pair list built from a cell list with cutoff + skin; rebuilt when
/// any particle has moved more than half the skin since the last build.
class VerletList {
 public:
  VerletList(double cutoff, double skin) : cutoff_(cutoff), skin_(skin) {}

  /// Rebuilds if needed; returns true when a rebuild happened.
  bool update(const Coords& pos, const BoxGeometry& box);

  template <class F>
  void for_each_pair(const Coords& pos, const BoxGeometry& box, F&& f) const {
    const double rc2 = cutoff_ * cutoff_;
    for (const auto& [i, j] : pairs_) {
      double rx = pos(i, 0) - pos(j, 0);
      double ry = pos(i, 1) - pos(j, 1);
      const double rz = pos(i, 2) - pos(j, 2);
      rx -= box.lx * std::nearbyint(rx / box.lx);
      ry -= box.ly * std::nearbyint(ry / box.ly);
      const double r2 = rx * rx + ry * ry + rz * rz;
      if (r2 <= rc2) f(i, j, rx, ry, rz, r2);
    }
  }

  std::size_t rebuilds() const { return rebuilds_; }

 private:
  double cutoff_;
  double skin_;
  Coords ref_;
  std::vector<std::pair<Index, Index>> pairs_;
  std::size_t rebuilds_ = 0;
};

inline bool VerletList::update(const Coords& pos, const BoxGeometry& box) {
  bool need = ref_.rows() != pos.rows();
  if (!need) {
    const double lim2 = 0.25 * skin_ * skin_;
    for (Index i = 0; i < pos.rows() && !need; ++i) {
      double dx = pos(i, 0) - ref_(i, 0);
      double dy = pos(i, 1) - ref_(i, 1);
      const double dz = pos(i, 2) - ref_(i, 2);
      dx -= box.lx * std::nearbyint(dx / box.lx);
      dy -= box.ly * std::nearbyint(dy / box.ly);
      need = dx * dx + dy * dy + dz * dz > lim2;
    }
  }
  if (!need) return false;
  pairs_.clear();
  CellList cells(pos, box, cutoff_ + skin_);
  cells.for_each_pair(pos, [&](Index i, Index j, double, double, double, double) {
    pairs_.emplace_back(i, j);
  });
  ref_ = pos;
  ++rebuilds_;
  return true;
}

}  // namespace q2d
