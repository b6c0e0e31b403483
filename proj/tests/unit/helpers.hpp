#pragma once

#include "q2d/core.hpp"

#include <cmath>
#include <random>

namespace q2d::test {

inline ParticleSystem two_particles(double q1, const Eigen::Vector3d& r1, double q2,
                                    const Eigen::Vector3d& r2) {
  ParticleSystem s(2);
  s.q << q1, q2;
  s.pos.row(0) = r1.transpose();
  s.pos.row(1) = r2.transpose();
  return s;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace q2d::test
