#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "dkb/mean_field_sim.hpp"
#include "dkb/rotating_wave.hpp"

using namespace dkb;

namespace {

constexpr double kPi = std::numbers::pi;

OrderParameterTrace synthetic(double t_end, double dt, auto&& f) {
  OrderParameterTrace tr;
  for (double t = 0.0; t <= t_end + 1e-12; t += dt) {
    tr.times.push_back(t);
    tr.values.push_back(f(t));
  }
  return tr;
}

const SystemParams kBase(3, 0.1, 1, 1);

}  // namespace

TEST(ClassifyAttractor, SyntheticRotation) {
  const auto tr = synthetic(300.0, 0.01, [](double t) { return 0.5 * std::exp(kI * (2.0 * t)); });
  const auto s = classify_attractor(tr, 100.0);
  EXPECT_EQ(s.kind, AttractorKind::coherent);
  EXPECT_NEAR(*s.rotation_frequency, 2.0, 1e-6);
  EXPECT_NEAR(*s.period, kPi, 1e-6);
  EXPECT_NEAR(s.r_inf, 0.5, 1e-12);
  EXPECT_NEAR(*s.period, kTwoPi / std::abs(*s.rotation_frequency), 1e-9);
}

TEST(ClassifyAttractor, SyntheticNegativeRotation) {
  const auto tr = synthetic(300.0, 0.01, [](double t) { return 0.8 * std::exp(kI * (-5.0 * t + 1.0)); });
  const auto s = classify_attractor(tr, 100.0);
  EXPECT_EQ(s.kind, AttractorKind::coherent);
  EXPECT_NEAR(*s.rotation_frequency, -5.0, 1e-6);
}

TEST(ClassifyAttractor, SmallAmplitudeIsIncoherent) {
  const auto tr = synthetic(300.0, 0.01, [](double t) { return 0.01 * std::exp(kI * t); });
  EXPECT_EQ(classify_attractor(tr, 100.0).kind, AttractorKind::incoherent);
}

TEST(ClassifyAttractor, IncommensurateModulationFlagged) {
  // |r| beats at sqrt(2) while the phase turns at 5: no integer ratio.
  const auto tr = synthetic(300.0, 0.01, [](double t) {
    return 0.5 * (1.0 + 0.2 * std::cos(std::numbers::sqrt2 * t)) * std::exp(kI * (5.0 * t));
  });
  const auto s = classify_attractor(tr, 100.0);
  EXPECT_EQ(s.kind, AttractorKind::quasiperiodic);
  EXPECT_NEAR(s.modulation, 0.4, 0.01);
}

TEST(ClassifyAttractor, LockedModulationIsUndecided) {
  const auto tr = synthetic(300.0, 0.01, [](double t) {
    return 0.5 * (1.0 + 0.2 * std::cos(2.0 * t)) * std::exp(kI * (2.0 * t));
  });
  EXPECT_EQ(classify_attractor(tr, 100.0).kind, AttractorKind::undecided);
}

TEST(ClassifyAttractor, WindowLongerThanTraceThrows) {
  const auto tr = synthetic(50.0, 0.01, [](double t) { return 0.5 * std::exp(kI * t); });
  EXPECT_THROW(classify_attractor(tr, 100.0), InvalidParameter);
  EXPECT_THROW(classify_attractor(tr, 0.0), InvalidParameter);
}

TEST(RunReduced, CoherentStateMatchesSlowWave) {
  const SystemParams p = kBase.with_k(2.5);
  RunOptions ro;
  ro.record_from = 200.0;
  const auto run = run_reduced(p, Complex(0.9, 0.0), 300.0, ro);
  const auto s = classify_attractor(run.trace, 100.0);
  ASSERT_EQ(s.kind, AttractorKind::coherent);
  EXPECT_NEAR(*s.period, 6.09, 0.05 * 6.09);
  // Independent check against the algebraic wave set.
  const auto waves = enumerate_waves(p);
  const auto best = std::min_element(waves.begin(), waves.end(), [&](const auto& a, const auto& b) {
    return std::abs(a.Omega - *s.rotation_frequency) < std::abs(b.Omega - *s.rotation_frequency);
  });
  ASSERT_NE(best, waves.end());
  EXPECT_NEAR(*s.rotation_frequency, best->Omega, 1e-3);
  EXPECT_NEAR(s.r_inf, best->R, 1e-3);
  EXPECT_EQ(best->unstable_count, 0);
}

TEST(RunReduced, RegionNineIsIncoherent) {
  RunOptions ro;
  ro.record_from = 100.0;
  for (double r0 : {0.01, 0.1, 0.3}) {
    const auto run = run_reduced(kBase.with_k(0.5), Complex(r0, 0.0), 200.0, ro);
    EXPECT_EQ(classify_attractor(run.trace, 100.0).kind, AttractorKind::incoherent);
  }
}

TEST(RunReduced, RejectsWrongDimension) {
  EXPECT_THROW(run_reduced(kBase, HistoryTrajectory::constant({0.1}), 10.0), InvalidParameter);
}

TEST(HysteresisSweep, RegionNineBothDirectionsIncoherent) {
  SweepOptions opt;
  opt.transient = 100.0;
  opt.window = 50.0;
  for (auto dir : {Direction::up, Direction::down}) {
    const auto pts = hysteresis_sweep(kBase, Sweep::k, {0.3, 0.6}, 4, dir, opt);
    ASSERT_EQ(pts.size(), 4u);
    for (const auto& q : pts) EXPECT_EQ(q.summary.kind, AttractorKind::incoherent) << q.parameter;
  }
}

TEST(HysteresisSweep, DelaySweepShowsWindowsAndHysteresis) {
  const auto up = hysteresis_sweep(kBase, Sweep::tau, {0.4, 3.5}, 32, Direction::up);
  auto down = hysteresis_sweep(kBase, Sweep::tau, {0.4, 3.5}, 32, Direction::down);
  ASSERT_EQ(up.size(), 32u);
  EXPECT_NEAR(up.front().parameter, 0.4, 1e-12);
  EXPECT_NEAR(down.front().parameter, 3.5, 1e-12);
  std::reverse(down.begin(), down.end());
  // coherent -> incoherent -> coherent along the up-sweep
  int changes = 0;
  for (std::size_t i = 1; i < up.size(); ++i)
    if ((up[i].summary.kind == AttractorKind::coherent) != (up[i - 1].summary.kind == AttractorKind::coherent)) ++changes;
  EXPECT_GE(changes, 2);
  int disagree = 0;
  for (std::size_t i = 0; i < up.size(); ++i) {
    ASSERT_DOUBLE_EQ(up[i].parameter, down[i].parameter);
    if (up[i].summary.kind != down[i].summary.kind) ++disagree;
  }
  EXPECT_GT(disagree, 0);
}

TEST(HysteresisSweep, Errors) {
  EXPECT_THROW(hysteresis_sweep(kBase, Sweep::k, {0.3, 0.6}, 1, Direction::up), InvalidParameter);
  EXPECT_THROW(hysteresis_sweep(kBase, Sweep::k, {0.6, 0.3}, 4, Direction::up), InvalidParameter);
}

TEST(InitialPhases, GridSpanGivesTargetOrder) {
  for (std::size_t n : {30u, 300u})
    for (double target : {0.1, 0.5, 0.9}) {
      const double s = span_for_order(n, target);
      EXPECT_NEAR(std::abs(order_parameter(initial_phases(n, s, PhaseInit::grid, 0))), target, 1e-12);
    }
  EXPECT_THROW(span_for_order(300, 1.0), InvalidParameter);
  const auto th = initial_phases(4, 2.0, PhaseInit::grid, 0);
  EXPECT_DOUBLE_EQ(th[0], 0.25);
  EXPECT_DOUBLE_EQ(th[3], 1.75);
}

TEST(RunNetwork, OrderParameterBoundedAndDeterministic) {
  NetworkOptions opt;
  opt.snapshot_every = 1.0;
  const auto a = run_network(50, kBase.with_k(2.5), kPi, 20.0, opt);
  const auto b = run_network(50, kBase.with_k(2.5), kPi, 20.0, opt);
  ASSERT_EQ(a.trace.values.size(), b.trace.values.size());
  for (std::size_t i = 0; i < a.trace.values.size(); ++i) {
    EXPECT_LE(std::abs(a.trace.values[i]), 1.0);
    EXPECT_EQ(a.trace.values[i], b.trace.values[i]);
  }
  ASSERT_FALSE(a.snapshots.empty());
  for (const auto& snap : a.snapshots)
    for (double th : snap.phases) {
      EXPECT_GE(th, 0.0);
      EXPECT_LT(th, kTwoPi);
    }
}

TEST(RunNetwork, Errors) {
  EXPECT_THROW(run_network(1, kBase, 1.0, 1.0), InvalidParameter);
  EXPECT_THROW(run_network(10, kBase, 0.0, 1.0), InvalidParameter);
  EXPECT_THROW(run_network(10, kBase, 7.0, 1.0), InvalidParameter);
}

TEST(RunNetwork, FullSpanIsIncoherent) {
  NetworkOptions opt;
  opt.record_from = 200.0;
  const auto run = run_network(300, kBase.with_k(2.5), kTwoPi, 300.0, opt);
  const auto s = classify_attractor(run.trace, 100.0, finite_n_classify());
  EXPECT_EQ(s.kind, AttractorKind::incoherent);
  EXPECT_LT(s.r_inf, 0.1);
}

TEST(CompareReducedNetwork, RegionNineBothIncoherent) {
  const auto rep = compare_reduced_network(kBase.with_k(0.5), 300);
  EXPECT_NEAR(std::abs(rep.r0), 0.5, 1e-12);
  EXPECT_LT(rep.reduced.r_inf, 0.05);
  EXPECT_LT(rep.network.r_inf, 0.05);
}

TEST(GrowthOracle, UnstableDirectionPointsIntoInstability) {
  // Crossing a Hopf curve in the unstable direction adds one root to the right half-plane.
  const auto h = make_hopf_point(Branch::plus, 0, 1.0, kBase);
  for (auto sweep : {Sweep::k, Sweep::tau}) {
    const int dir = unstable_direction(h, sweep, kBase);
    ASSERT_TRUE(dir == 1 || dir == -1);
    const double eps = 1e-3 * dir;
    const SystemParams p = kBase.with_k(h.k).with_tau(h.tau);
    const SystemParams a = sweep == Sweep::k ? p.with_k(h.k + eps) : p.with_tau(h.tau + eps);
    const SystemParams b = sweep == Sweep::k ? p.with_k(h.k - eps) : p.with_tau(h.tau - eps);
    EXPECT_EQ(count_unstable_roots(a), count_unstable_roots(b) + 1);
  }
}
