#include <gtest/gtest.h>

#include <limits>
#include <random>

#include "fkhom/chain.hpp"
#include "fkhom/error.hpp"
#include "oracles.hpp"

using namespace fkhom;

namespace {

std::shared_ptr<const ForceModel> classical(std::vector<double> theta, double A, double L, double m0) {
  return std::make_shared<const ForceModel>(build_classical_fk(std::move(theta), A, L, m0));
}

std::vector<double> jitter(std::size_t N, double scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> v(N);
  for (auto& x : v) x = u(rng);
  return v;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace

TEST(InitLinear, UnitSlope) {
  const auto c = init_linear(classical({1.0}, 1.0, 0.0, 0.01), Slope(1, 1), 10);
  EXPECT_EQ(c.size(), 10);
  EXPECT_EQ(c.twist(), 10);
  for (int i = 0; i < 10; ++i) {
    EXPECT_DOUBLE_EQ(c.U[i], i);
    EXPECT_DOUBLE_EQ(c.Xi[i], i);
  }
  EXPECT_DOUBLE_EQ(c.tau, 0.0);
}

TEST(InitLinear, TwoTypesThreeFifths) {
  const auto c = init_linear(classical({1.0, 2.0}, 1.0, 0.0, 0.005), Slope(3, 5), 2);
  EXPECT_EQ(c.size(), 20);
  EXPECT_EQ(c.twist(), 6);
  for (int i = 0; i < 20; ++i) EXPECT_NEAR(c.U[i], 0.3 * i, 1e-14);
  EXPECT_NEAR(c.U_at(25), c.U[5] + 6.0, 1e-14);
  EXPECT_NEAR(c.U_at(-1), c.U[19] - 6.0, 1e-14);
}

TEST(InitLinear, SeamOrdering) {
  const auto model = classical({1.0}, 1.0, 0.0, 0.01);
  const auto c = init_linear(model, Slope(1, 1), 1, std::vector<double>{0.4});
  EXPECT_DOUBLE_EQ(c.U[0], 0.4);
  EXPECT_DOUBLE_EQ(c.U_at(1), 1.4);
  // Second particle pushed past the seam image of the first.
  EXPECT_THROW(init_linear(model, Slope(1, 1), 2, std::vector<double>{0.0, 1.5}), ValidationError);
  EXPECT_THROW(init_linear(model, Slope(1, 1), 2, std::vector<double>{0.0, -1.2}), ValidationError);
  EXPECT_THROW(init_linear(model, Slope(1, 1), 2, std::vector<double>{0.0}), ValidationError);
}

TEST(CflDt, Formula) {
  EXPECT_DOUBLE_EQ(cfl_dt(build_classical_fk({1.0}, 0.0, 0.0, 0.05), 1.0), 0.1);
  const double a = 4.0 + 4.0 * oracle::kPi;
  EXPECT_DOUBLE_EQ(cfl_dt(build_classical_fk({1.0}, 1.0, 0.0, 0.5 / a), 0.5), 0.5 / a);
  const auto m = build_classical_fk({1.0}, 1.0, 0.0, 0.01);
  EXPECT_LT(cfl_dt_delta(m, 1.0, 0.5, 0.2, 1.0), cfl_dt(m, 1.0));
}

TEST(Step, MatchesNaiveRing) {
  const std::vector<double> theta{1.0, 2.0, 1.5};
  const auto model = classical(theta, 1.0, 0.7, 0.004);
  auto c = init_linear(model, Slope(2, 3), 2, jitter(18, 0.05, 3));
  oracle::Ring ring{theta, 1.0, 0.7, model->alpha0, c.twist(), c.U, c.Xi};
  const double dt = cfl_dt(*model, 0.8);
  for (int s = 0; s < 300; ++s) {
    step(c, dt);
    ring.euler(dt);
  }
  EXPECT_LT(max_diff(c.U, ring.U), 1e-10);
  EXPECT_LT(max_diff(c.Xi, ring.Xi), 1e-10);
  EXPECT_NEAR(c.tau, 300 * dt, 1e-12);
}

TEST(Step, ZeroForceFixedPoint) {
  auto model = std::make_shared<const ForceModel>(build_constant_force(0.0, 10.0, 1));
  auto c = init_linear(model, Slope(1, 1), 5);
  for (auto& u : c.U) u = 0.25;
  c.Xi = c.U;
  for (int s = 0; s < 100; ++s) step(c, 0.05);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(c.U[i], 0.25);
    EXPECT_EQ(c.Xi[i], 0.25);
  }
}

TEST(Step, ConstantForceSumMovesAtTwiceL) {
  const double L = 1.3;
  auto model = std::make_shared<const ForceModel>(build_constant_force(L, 20.0, 2));
  auto c = init_linear(model, Slope(1, 2), 3);
  const auto U0 = c.U;
  const double dt = cfl_dt(*model, 0.5);
  const int steps = 4000;
  for (int s = 0; s < steps; ++s) step(c, dt);
  for (std::size_t i = 0; i < U0.size(); ++i) {
    EXPECT_NEAR(c.U[i] + c.Xi[i], 2.0 * U0[i] + 2.0 * L * steps * dt, 1e-9);
    EXPECT_NEAR(c.Xi[i] - c.U[i], L / model->alpha0, 1e-9);  // relaxed gap
  }
}

TEST(Step, ComparisonPrinciple) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto model = classical({1.0, 2.0}, 1.0, 0.4, 0.005);
  const double dt = cfl_dt(*model, 1.0);
  for (int pair = 0; pair < 10; ++pair) {
    auto a = init_linear(model, Slope(1, 1), 4);
    auto b = a;
    for (std::size_t i = 0; i < a.U.size(); ++i) {
      a.U[i] += u(rng) - 0.5;
      a.Xi[i] = a.U[i] + 0.2 * (u(rng) - 0.5);
      b.U[i] = a.U[i] + 0.3 * u(rng);
      b.Xi[i] = a.Xi[i] + 0.3 * u(rng);
    }
    // Both states relax onto the same attractor, so a - b can reach the
    // rounding level; only violations above a few ulps count.
    double worst = 0.0;
    for (int s = 0; s < 2000; ++s) {
      step(a, dt);
      step(b, dt);
      for (std::size_t i = 0; i < a.U.size(); ++i) {
        const double ulps = 8.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(b.Xi[i]) + std::abs(b.U[i]));
        worst = std::max({worst, a.U[i] - b.U[i] - ulps, a.Xi[i] - b.Xi[i] - ulps});
      }
    }
    EXPECT_LE(worst, 0.0) << "pair " << pair;
  }
}

TEST(Step, TwistEquivariance) {
  const auto model = classical({1.0, 2.0}, 1.0, 1.5, 0.005);
  const auto pert = jitter(8, 0.04, 9);
  auto small = init_linear(model, Slope(3, 4), 1, pert);
  std::vector<double> pert2 = pert;
  pert2.insert(pert2.end(), pert.begin(), pert.end());
  auto big = init_linear(model, Slope(3, 4), 2, pert2);
  const double dt = cfl_dt(*model, 0.5);
  for (int s = 0; s < 2000; ++s) {
    step(small, dt);
    step(big, dt);
  }
  for (int i = 0; i < small.size(); ++i) {
    EXPECT_NEAR(small.U[i], big.U[i], 1e-12);
    EXPECT_NEAR(small.Xi[i], big.Xi[i], 1e-12);
    EXPECT_NEAR(small.U_at(i + small.size()), big.U[i + small.size()], 1e-12);
  }
}

TEST(Step, CommutesWithIntegerShift) {
  const auto model = classical({1.0}, 1.0, 0.8, 0.01);
  auto a = init_linear(model, Slope(1, 1), 6, jitter(6, 0.1, 4));
  auto b = a;
  for (auto& v : b.U) v += 1.0;
  for (auto& v : b.Xi) v += 1.0;
  const double dt = cfl_dt(*model, 0.5);
  for (int s = 0; s < 500; ++s) {
    step(a, dt);
    step(b, dt);
  }
  for (std::size_t i = 0; i < a.U.size(); ++i) {
    EXPECT_NEAR(b.U[i] - a.U[i], 1.0, 1e-12);
    EXPECT_NEAR(b.Xi[i] - a.Xi[i], 1.0, 1e-12);
  }
}

TEST(Step, DetectsNonFiniteState) {
  TabulatedForce f;
  f.fn = [](int, double tau, std::span<const double>) { return tau > 0.5 ? NAN : 0.0; };
  auto model = std::make_shared<const ForceModel>(build_tabulated(1, 1, 10.0, f, 0.0, 0.0));
  auto c = init_linear(model, Slope(1, 1), 2);
  EXPECT_THROW(
      {
        for (int s = 0; s < 100; ++s) step(c, 0.05);
      },
      NumericalError);
}

TEST(StepDelta, ZeroDeltaIsBitwiseStep) {
  const auto model = classical({1.0, 2.0}, 1.0, 0.6, 0.005);
  auto a = init_linear(model, Slope(2, 3), 2, jitter(12, 0.05, 5));
  auto b = a;
  const double dt = cfl_dt(*model, 0.5);
  for (int s = 0; s < 200; ++s) {
    step(a, dt);
    step_delta(b, dt, 0.0, 0.7);
  }
  for (std::size_t i = 0; i < a.U.size(); ++i) {
    EXPECT_EQ(a.U[i], b.U[i]);
    EXPECT_EQ(a.Xi[i], b.Xi[i]);
  }
}

TEST(StepDelta, FlatStateGetsUniformTerm) {
  const auto model = classical({1.0}, 1.0, 0.0, 0.01);
  const double p = 1.5, delta = 0.5, a0 = 0.3;
  auto a = init_linear(model, Slope(3, 2), 2);
  for (auto& v : a.Xi) v += 0.1;  // Xi = p i/n + c
  auto b = a;
  const double dt = cfl_dt_delta(*model, p, delta, a0, 0.5);
  step(a, dt);
  step_delta(b, dt, delta, a0);
  for (std::size_t i = 0; i < a.U.size(); ++i) {
    EXPECT_EQ(a.U[i], b.U[i]);
    EXPECT_NEAR(b.Xi[i] - a.Xi[i], dt * delta * a0 * p, 1e-12);
  }
}

TEST(Run, ZeroDurationGivesOneSample) {
  auto c = init_linear(classical({1.0}, 1.0, 0.0, 0.01), Slope(1, 1), 3);
  const auto log = run(c, 0.0, {0.01, 0.05, 0, 0.0, 0.0});
  EXPECT_EQ(log.samples(), 1u);
  EXPECT_DOUBLE_EQ(log.U[0][0], 0.0);
  EXPECT_DOUBLE_EQ(log.Xi[0][0], 0.0);
}

TEST(Run, UniformSamplingAndSnapshots) {
  auto c = init_linear(classical({1.0, 2.0}, 1.0, 0.5, 0.005), Slope(1, 1), 2);
  const auto log = run(c, 2.0, {0.01, 0.1, 5, 0.0, 0.0});
  EXPECT_EQ(log.samples(), 21u);
  EXPECT_EQ(log.U.size(), 2u);
  EXPECT_EQ(log.Xi[1].size(), 21u);
  EXPECT_NEAR(log.end_time(), 2.0, 1e-12);
  EXPECT_NEAR(c.tau, 2.0, 1e-12);
  EXPECT_EQ(log.snapshots.size(), 5u);
  EXPECT_DOUBLE_EQ(log.U[0].back(), c.U[0]);
}

TEST(Run, ConstantForceDisplacementBounded) {
  const double L = 0.8;
  auto model = std::make_shared<const ForceModel>(build_constant_force(L, 10.0, 1));
  auto c = init_linear(model, Slope(1, 1), 2);
  const auto log = run(c, 20.0, {cfl_dt(*model, 0.5), 0.1, 0, 0.0, 0.0});
  const auto ledger = constants_ledger(*model, 1.0, 1.0);
  for (std::size_t k = 0; k < log.samples(); ++k) {
    EXPECT_LE(std::abs(log.U[0][k] - log.U[0][0] - L * log.time(k)), ledger.u_xi_bound());
  }
}

TEST(Run, PinnedChainComesToRest) {
  auto c = init_linear(classical({1.0}, 1.0, 0.0, 0.01), Slope(1, 1), 4, jitter(4, 0.1, 12));
  const auto log = run(c, 30.0, {0.005, 0.1, 0, 0.0, 0.0});
  const std::size_t K = log.samples();
  EXPECT_LT(std::abs(log.U[0][K - 1] - log.U[0][K - 11]), 1e-6);
  EXPECT_LT(std::abs(log.Xi[0][K - 1] - log.U[0][K - 1]), 1e-6);
}

TEST(Invariants, FreshStateIsClean) {
  const auto model = classical({1.0, 2.0}, 1.0, 0.0, 0.005);
  const auto c = init_linear(model, Slope(3, 5), 2);
  const auto rep = monitor_invariants(c, constants_ledger(*model, 0.6, 1.0 / 0.6));
  EXPECT_EQ(rep.ordering_violation, 0.0);
  EXPECT_NEAR(rep.space_osc, 0.0, 1e-12);
  EXPECT_EQ(rep.u_xi_gap, 0.0);
  EXPECT_TRUE(rep.ordering_ok && rep.u_xi_ok && rep.space_osc_ok);
}

TEST(Invariants, FlagsDisorder) {
  const auto model = classical({1.0}, 1.0, 0.0, 0.01);
  auto c = init_linear(model, Slope(1, 1), 4);
  c.U[2] = 3.5;
  const auto rep = monitor_invariants(c, constants_ledger(*model, 1.0, 1.0));
  EXPECT_NEAR(rep.ordering_violation, 0.5, 1e-12);
  EXPECT_FALSE(rep.ordering_ok);
}

TEST(Invariants, LongRunWithinBounds) {
  const auto model = classical({1.0}, 1.0, 2.0, 0.01);
  auto c = init_linear(model, Slope(1, 1), 4, jitter(4, 0.1, 2));
  const auto log = run(c, 30.0, {cfl_dt(*model, 0.5), 0.05, 10, 0.0, 0.0});
  const auto rep = monitor_invariants(log, constants_ledger(*model, 1.0, 1.0), 5.0 / model->alpha0);
  EXPECT_TRUE(rep.ordering_ok);
  EXPECT_LE(rep.u_xi_gap, rep.u_xi_bound);
  EXPECT_LE(rep.space_osc, 1.0);
}

TEST(Rk4, ConstantForceClosedForm) {
  const double L = 0.7, alpha0 = 12.5;
  auto model = std::make_shared<const ForceModel>(build_constant_force(L, alpha0, 1));
  const auto c = init_linear(model, Slope(1, 1), 1);
  const auto log = rk4_oracle(c, 5.0, 0.001, 0.05);
  for (std::size_t k = 0; k < log.samples(); ++k) {
    const double t = log.time(k);
    EXPECT_NEAR(log.U[0][k], oracle::constant_force_position(0.0, L, alpha0, t), 1e-8);
    EXPECT_NEAR(log.Xi[0][k], oracle::constant_force_xi(0.0, L, alpha0, t), 1e-8);
  }
}

TEST(Rk4, EulerErrorIsFirstOrder) {
  const auto model = classical({1.0}, 1.0, 2.0, 0.01);
  const auto c0 = init_linear(model, Slope(1, 1), 2, jitter(2, 0.05, 8));
  auto err = [&](double dt) {
    auto c = c0;
    const auto e = run(c, 20.0, {dt, 0.1, 0, 0.0, 0.0});
    const auto r = rk4_oracle(c0, 20.0, dt / 4, 0.1);
    double m = 0.0;
    for (std::size_t k = 0; k < e.samples(); ++k) m = std::max(m, std::abs(e.U[0][k] - r.U[0][k]));
    return m;
  };
  const double e1 = err(0.01), e2 = err(0.005);
  EXPECT_LE(e1, 5 * 0.01);
  EXPECT_NEAR(e1 / e2, 2.0, 0.4);
}
