#include "doctest.h"
#include "helpers.hpp"

#include "q2d/experiments.hpp"
#include "q2d/rbse2d.hpp"
#include "q2d/special.hpp"

#include <random>

using namespace q2d;
using q2d::test::rel;

namespace {

double lattice_gaussian_sum(double alpha, const BoxGeometry& box) {
  // sum over k != 0 of exp(-k^2 / 4 alpha^2), grown shell by shell until negligible
  long double acc = 0.0L;
  for (int r = 1;; ++r) {
    long double shell = 0.0L;
    for (int mx = -r; mx <= r; ++mx) {
      for (int my = -r; my <= r; ++my) {
        if (std::max(std::abs(mx), std::abs(my)) != r) continue;
        const double kx = 2 * kPi * mx / box.lx, ky = 2 * kPi * my / box.ly;
        shell += std::exp(-(kx * kx + ky * ky) / (4 * alpha * alpha));
      }
    }
    acc += shell;
    if (shell < 1e-15L * acc) break;
  }
  return static_cast<double>(acc);
}

}  // namespace

TEST_CASE("normalization H") {
  const BoxGeometry box{100, 100, 100, 0, 0};
  const double h = normalization_H(0.3, box);
  CHECK(rel(h, lattice_gaussian_sum(0.3, box)) < 1e-9);
  CHECK(h == doctest::Approx(285.48).epsilon(1e-4));

  const BoxGeometry wide{200, 100, 100, 0, 0};
  CHECK((normalization_H(0.3, wide) + 1.0) / (h + 1.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(rel(normalization_H(0.3, wide), lattice_gaussian_sum(0.3, wide)) < 1e-9);

  CHECK(small_box_regime(0.01, box));
  CHECK_FALSE(small_box_regime(0.3, box));
}

TEST_CASE("proposal distribution") {
  CHECK(proposal_mass(0, 0.3, 100.0) == doctest::Approx(std::erf(kPi / 60.0)).epsilon(1e-15));
  CHECK(proposal_mass(0, 0.3, 100.0) == doctest::Approx(0.0591).epsilon(1e-3));
  double total = 0.0;
  for (int m = -200; m <= 200; ++m) total += proposal_mass(m, 0.3, 100.0);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));

  const BoxGeometry box{100, 100, 100, 0, 0};
  ImportanceSampler sampler(0.3, box, 5);
  CHECK(sampler.proposal_sd_x() == doctest::Approx(6.7524).epsilon(1e-4));
  CHECK(sampler.h_norm() == normalization_H(0.3, box));
  CHECK(sampler.accept_count() >= 100);
  for (int t = 0; t < 20000; ++t) sampler.step();
  CHECK(sampler.acceptance_rate() > 0.9);
  const auto b = sampler.metropolis_batch(64);
  CHECK(b.modes.size() == 64);
  for (const auto& km : b.modes) CHECK((km.mx != 0 || km.my != 0));
  CHECK_THROWS_AS(sampler.metropolis_batch(0), ConfigError);

  const auto chk = sampler_check(0.3, box, 200000, 3, 10);
  CHECK(chk.p_value > 0.01);
}

TEST_CASE("batch estimators") {
  const BoxGeometry box{40, 40, 30, 0, 0};
  const double alpha = 0.3;
  const auto soe = build_soe_contour(8);

  SUBCASE("a single charge gives the constant exactly") {
    ParticleSystem one(1);
    one.q(0) = 1.0;
    one.pos.row(0) << 3, 4, 5;
    const auto s = SortedSystem::from(one, box);
    const double c_q = q_term_constant(1.0, alpha, box);
    ImportanceSampler sampler(alpha, box, 9);
    for (int t = 0; t < 5; ++t) CHECK(rb_energy_estimate(s, box, soe, alpha, sampler, 8, c_q) == c_q);
  }

  const auto sys = random_neutral_system(20, box, 44);
  const auto s = SortedSystem::from(sys, box);

  SUBCASE("pair forces cancel within every batch") {
    ImportanceSampler sampler(alpha, box, 10);
    for (int t = 0; t < 20; ++t) {
      const auto f = rb_estimate(s, box, soe, alpha, sampler.metropolis_batch(16), sampler.h_norm(), 0.0, true).forces;
      CHECK(f.colwise().sum().norm() <= 1e-12 * f.cwiseAbs().sum());
    }
  }

  SUBCASE("frozen-batch forces are the gradient of the frozen-batch energy") {
    ImportanceSampler sampler(alpha, box, 12);
    const auto batch = sampler.metropolis_batch(16);
    const double H = sampler.h_norm();
    const auto f = rb_estimate(s, box, soe, alpha, batch, H, 0.0, true).forces;
    const double h = 1e-5;
    double worst = 0.0;
    for (Index i = 0; i < 20; i += 4) {
      for (int a = 0; a < 3; ++a) {
        auto sp = s.sys, sm = s.sys;
        sp.pos(i, a) += h;
        sm.pos(i, a) -= h;
        const double fd = -(rb_estimate(SortedSystem::from(sp, box), box, soe, alpha, batch, H, 0.0, false).u_k -
                            rb_estimate(SortedSystem::from(sm, box), box, soe, alpha, batch, H, 0.0, false).u_k) /
                          (2 * h);
        worst = std::max(worst, std::abs(fd - f(i, a)) / f.row(i).norm());
      }
    }
    CHECK(worst < 1e-5);
  }

  SUBCASE("mean force over many batches matches the full mode sum") {
    const auto full = full_mode_sum(s, box, soe, alpha, true);
    ImportanceSampler sampler(alpha, box, 13);
    const int batches = 10000;
    Coords sum = Coords::Zero(20, 3), sq = Coords::Zero(20, 3);
    for (int b = 0; b < batches; ++b) {
      const auto f = rb_estimate(s, box, soe, alpha, sampler.metropolis_batch(16), sampler.h_norm(), 0.0, true).forces;
      sum += f;
      sq += f.cwiseProduct(f);
    }
    const Coords mean = sum / batches;
    const Coords var = (sq / batches - mean.cwiseProduct(mean)) * (batches / (batches - 1.0));
    int outside = 0;
    for (Index i = 0; i < 20; ++i)
      for (int a = 0; a < 3; ++a)
        if (std::abs(mean(i, a) - full.forces(i, a)) > 3.0 * std::sqrt(var(i, a) / batches)) ++outside;
    CHECK(outside == 0);
  }

  SUBCASE("variance falls as one over the batch size") {
    const auto rows = variance_vs_p(sys, box, alpha, soe, {16, 64}, 3000, 21);
    const double ratio = rows[1].variance / rows[0].variance;
    MESSAGE("variance ratio " << ratio);
    CHECK(ratio >= 0.2);
    CHECK(ratio <= 0.32);
  }
}

TEST_CASE("variance diagnostics") {
  const auto c = variance_diagnostics(std::vector<double>(100, 2.5));
  CHECK(c.mean == 2.5);
  CHECK(c.variance == 0.0);
  CHECK(c.stderr_ == 0.0);

  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(1.0, 3.0);
  std::vector<double> x(100000);
  for (auto& v : x) v = g(rng);
  const auto st = variance_diagnostics(x);
  CHECK(st.variance == doctest::Approx(9.0).epsilon(0.05));
  CHECK(st.stderr_ == doctest::Approx(std::sqrt(st.variance / 100000.0)).epsilon(1e-12));
  CHECK(st.n == 100000);
}

TEST_CASE("solver determinism and shared deterministic parts") {
  const BoxGeometry box{40, 40, 30, 0.002, -0.002};
  const auto sys = random_neutral_system(30, box, 2);
  const auto p = make_params(0.3, 3.0, box);
  const auto soe = build_soe_contour(8);
  RBSE2DSolver a(box, p, soe, 16, 77), b(box, p, soe, 16, 77), c(box, p, soe, 16, 78);
  for (int t = 0; t < 5; ++t) {
    const auto ra = a.evaluate(sys, true), rb = b.evaluate(sys, true), rc = c.evaluate(sys, true);
    CHECK(ra.energy.u_l_k == rb.energy.u_l_k);
    CHECK(ra.forces == rb.forces);
    CHECK(ra.energy.u_l_k != rc.energy.u_l_k);
  }

  const auto rb = a.evaluate(sys, true).energy;
  const auto so = energy_forces_soe(sys, box, p, soe).energy;
  CHECK(rb.u_s == so.u_s);
  CHECK(rb.u_l_0 == so.u_l_0);
  CHECK(rb.u_self == so.u_self);
  CHECK(rb.u_ps == so.u_ps);
}
