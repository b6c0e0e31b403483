#include "doctest.h"
#include "helpers.hpp"

#include "q2d/ewald2d_ref.hpp"
#include "q2d/experiments.hpp"
#include "q2d/special.hpp"

#include <random>

using namespace q2d;
using q2d::test::rel;
using q2d::test::two_particles;

TEST_CASE("short-range pair sum") {
  const BoxGeometry box{100, 100, 100, 0, 0};
  auto pair = two_particles(1, {10, 10, 10}, -1, {11, 10, 10});
  const auto r = short_range_energy_forces(pair, box, 0.1, 40.0);
  CHECK(r.energy == doctest::Approx(-std::erfc(0.1)).epsilon(1e-14));
  CHECK(r.energy == doctest::Approx(-0.8875371).epsilon(1e-7));
  CHECK((r.forces.row(0) + r.forces.row(1)).norm() == 0.0);

  ParticleSystem empty(0);
  CHECK(short_range_energy_forces(empty, box, 0.1, 40.0).energy == 0.0);

  const BoxGeometry small{20, 20, 20, 0, 0};
  const auto sys = random_neutral_system(30, small, 21);
  const auto f = short_range_energy_forces(sys, small, 0.4, 9.0).forces;
  const double h = 1e-6;
  double worst = 0.0;
  for (Index i = 0; i < 5; ++i) {
    for (int a = 0; a < 3; ++a) {
      auto sp = sys, sm = sys;
      sp.pos(i, a) += h;
      sm.pos(i, a) -= h;
      const double fd = -(short_range_energy_forces(sp, small, 0.4, 9.0, false).energy -
                          short_range_energy_forces(sm, small, 0.4, 9.0, false).energy) /
                        (2 * h);
      worst = std::max(worst, std::abs(fd - f(i, a)) / f.row(i).norm());
    }
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("Fourier sum") {
  const BoxGeometry box{40, 30, 20, 0, 0};
  const auto p = make_params(0.3, 3.0, box);
  SUBCASE("single particle keeps only the self term") {
    ParticleSystem one(1);
    one.q(0) = 1.0;
    one.pos.row(0) << 5, 5, 5;
    double q_term = 0.0;
    for (const auto& km : p.kmodes) q_term += kPi / (km.k * box.area()) * std::erfc(km.k / 0.6);
    CHECK(fourier_energy_ref(one, box, p) == doctest::Approx(q_term).epsilon(1e-13));
  }
  SUBCASE("mirror pair against a plain double loop") {
    auto pair = two_particles(1, {3, 4, 7}, -1, {3 + 20, 4, 12});
    double direct = 0.0;
    for (const auto& km : p.kmodes) {
      double acc = 0.0;
      for (Index i = 0; i < 2; ++i) {
        for (Index j = 0; j < 2; ++j) {
          const double z = std::abs(pair.pos(i, 2) - pair.pos(j, 2));
          const double ph = km.kx * (pair.pos(i, 0) - pair.pos(j, 0)) + km.ky * (pair.pos(i, 1) - pair.pos(j, 1));
          const auto xi = xi_closed(km.k, z, 0.3);
          acc += pair.q(i) * pair.q(j) * std::cos(ph) * (xi.plus + xi.minus);
        }
      }
      direct += kPi / (2.0 * box.area() * km.k) * acc;
    }
    CHECK(fourier_energy_ref(pair, box, p) == doctest::Approx(direct).epsilon(1e-12));
    // odd mx modes flip sign between the two halves of the cell
    const auto fz = fourier_forces_ref(pair, box, p);
    CHECK((fz.row(0) + fz.row(1)).norm() < 1e-14);
  }
}

TEST_CASE("zero mode") {
  const BoxGeometry box{10, 10, 30, 0, 0};
  const double alpha = 0.1;
  SUBCASE("coplanar particles") {
    auto pair = two_particles(1, {1, 1, 5}, -1, {4, 7, 5});
    // pair kernel 1/(alpha sqrt pi) = 5.6418958 plus the diagonal
    const double kern = 1.0 / (alpha * kSqrtPi);
    CHECK(kern == doctest::Approx(5.6418958).epsilon(1e-8));
    const double expect = -2.0 * kPi / box.area() * (-kern) - kPi / box.area() * 2.0 * kern;
    CHECK(zero_mode_energy_ref(pair, box, alpha) == doctest::Approx(expect).epsilon(1e-14));
  }
  SUBCASE("separated pair") {
    auto pair = two_particles(1, {1, 1, 2}, -1, {1, 1, 12});
    const double kern = 10.0 * 0.8427007929497149 + std::exp(-1.0) / (alpha * kSqrtPi);
    const double expect = -2.0 * kPi / box.area() * (-kern) - kPi / box.area() * 2.0 / (alpha * kSqrtPi);
    CHECK(zero_mode_energy_ref(pair, box, alpha) == doctest::Approx(expect).epsilon(1e-14));
    const double before = zero_mode_energy_ref(pair, box, alpha);
    pair.pos.col(2).array() += 9.0;
    CHECK(zero_mode_energy_ref(pair, box, alpha) == doctest::Approx(before).epsilon(1e-15));
  }
}

TEST_CASE("self and slab terms") {
  ParticleSystem one(1);
  one.q(0) = 1.0;
  CHECK(self_energy(one, 0.1) == doctest::Approx(0.0564190).epsilon(1e-6));
  CHECK(self_energy(one, 0.2) == doctest::Approx(2.0 * self_energy(one, 0.1)).epsilon(1e-15));
  CHECK(self_energy(ParticleSystem(0), 0.1) == 0.0);

  const BoxGeometry slabs{100, 100, 100, -0.005, -0.005};
  one.pos.row(0) << 0, 0, 0;
  CHECK(slab_energy_forces(one, slabs).energy == doctest::Approx(kPi).epsilon(1e-14));
  const auto sys = random_neutral_system(10, slabs, 3);
  CHECK(slab_energy_forces(sys, slabs).fz.cwiseAbs().maxCoeff() == 0.0);
  // opposite charges pull a cation toward the negative plate
  const BoxGeometry capacitor{100, 100, 100, -0.005, 0.005};
  CHECK(slab_energy_forces(one, capacitor).fz(0) > 0.0);
}

TEST_CASE("brute-force lattice sum") {
  const BoxGeometry box{100, 100, 100, 0, 0};
  auto pair = two_particles(1, {50, 50, 40}, -1, {51, 50, 40});
  const double u = direct_lattice_sum_converged(pair, box, 50, 1e-10);
  // the bare pair energy -1 plus a small image correction
  CHECK(u == doctest::Approx(-1.0000022587).epsilon(1e-9));
  const auto p = make_params(0.12, 6.0, box);
  CHECK(rel(total_energy_ref(pair, box, p).total(), u) < 1e-6);

  auto shifted = pair;
  shifted.pos.col(0).array() += 13.7;
  shifted.pos.col(1).array() += 3.1;
  shifted.wrap_xy(box);
  CHECK(direct_lattice_sum(shifted, box, 200) == doctest::Approx(direct_lattice_sum(pair, box, 200)).epsilon(1e-12));

  for (int c = 0; c < 3; ++c) {
    const auto sys = random_neutral_system(10, box, 70 + c);
    CHECK(rel(total_energy_ref(sys, box, p).total(), direct_lattice_sum_converged(sys, box, 50, 1e-10)) < 1e-6);
  }
}

TEST_CASE("energy breakdown bookkeeping") {
  const BoxGeometry box{30, 30, 20, 0.01, -0.01};
  auto sys = random_neutral_system(12, box, 8);
  const auto p = make_params(0.25, 3.5, box);
  const auto e = total_energy_ref(sys, box, p);
  CHECK(e.total() == e.u_s + e.u_l_k + e.u_l_0 - e.u_self + e.u_ps);
  const auto ef = energy_forces_ref(sys, box, p);
  CHECK(ef.energy.total() == doctest::Approx(e.total()).epsilon(1e-13));

  const auto zero = total_energy_ref(ParticleSystem(0), box, p);
  CHECK(zero.total() == 0.0);
  CHECK(zero.u_l_k == 0.0);
  CHECK(zero.u_l_0 == 0.0);

  // particle-particle forces obey Newton's third law
  const BoxGeometry neutral{30, 30, 20, 0, 0};
  const auto f = energy_forces_ref(sys, neutral, p).forces;
  CHECK(f.colwise().sum().norm() <= 1e-11 * f.cwiseAbs().sum());

  // forces are minus the energy gradient
  const double h = 1e-5;
  for (Index i : {0, 5}) {
    for (int a = 0; a < 3; ++a) {
      auto sp = sys, sm = sys;
      sp.pos(i, a) += h;
      sm.pos(i, a) -= h;
      const double fd = -(total_energy_ref(sp, neutral, p).total() - total_energy_ref(sm, neutral, p).total()) / (2 * h);
      CHECK(std::abs(fd - f(i, a)) < 1e-6 * f.row(i).norm());
    }
  }
}

TEST_CASE("alpha invariance of the reference sum") {
  const BoxGeometry box{160, 160, 100, 0, 0};
  const auto sys = random_neutral_system(20, box, 2024);
  const double u0 = total_energy_ref(sys, box, make_params(0.10, 6.0, box)).total();
  for (double a : {0.08, 0.12}) {
    CHECK(rel(total_energy_ref(sys, box, make_params(a, 6.0, box)).total(), u0) <= 1e-8);
  }
}

TEST_CASE("cutoff beyond half the cell is rejected") {
  const BoxGeometry box{50, 50, 50, 0, 0};
  const auto sys = random_neutral_system(4, box, 1);
  CHECK_THROWS_AS(total_energy_ref(sys, box, make_params(0.1, 3.0, box)), ConfigError);
}

TEST_CASE("extended-precision long-range oracle agrees with the FP64 sums") {
  const BoxGeometry box{40, 40, 30, 0, 0};
  const auto sys = random_neutral_system(16, box, 4);
  const auto p = make_params(0.2, 3.0, box);
  const double fp64 = fourier_energy_ref(sys, box, p) + zero_mode_energy_ref(sys, box, p.alpha);
  CHECK(std::abs(static_cast<double>(long_range_energy_extended(sys, box, p)) - fp64) < 1e-13 * std::abs(fp64) + 1e-14);
}
