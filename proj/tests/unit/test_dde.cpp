#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "dkb/dde.hpp"
#include "dkb/mean_field_sim.hpp"

using namespace dkb;

namespace {

// x'(t) = -x(t - 1); used by several tests below.
void negative_feedback(double, std::span<const double>, std::span<const double> xd, std::span<double> dx) {
  dx[0] = -xd[0];
}

// Smooth nonlinear test problem with a non-constant history.
void sine_feedback(double, std::span<const double> x, std::span<const double> xd, std::span<double> dx) {
  dx[0] = -std::sin(xd[0]) + 0.2 * x[0] * std::cos(x[0]);
}

double sine_feedback_end(double h) {
  auto hist = HistoryTrajectory::from_function(1, 0.0, [](double t, std::span<double> out) { out[0] = std::cos(t); });
  return integrate(sine_feedback, hist, 3.0, h, 1.0).back()[0];
}

}  // namespace

TEST(Integrate, MethodOfStepsSolution) {
  // Method of steps by hand: x = 1 - t on [0, 1], x = -(2t - t^2/2 - 3/2) on [1, 2].
  const auto out = integrate(negative_feedback, HistoryTrajectory::constant({1.0}), 2.0, 1e-3, 1.0);
  EXPECT_NEAR(out.back()[0], -0.5, 1e-8);
  EXPECT_NEAR(out.t1(), 2.0, 1e-12);
  EXPECT_NEAR(out.value_at(1.5)[0], -(3.0 - 1.125 - 1.5), 1e-8);
}

TEST(Integrate, ZeroDelayIsAnOde) {
  auto grow = [](double, std::span<const double> x, std::span<const double>, std::span<double> dx) { dx[0] = x[0]; };
  const auto out = integrate(grow, HistoryTrajectory::constant({1.0}), 1.0, 1e-3, 0.0);
  EXPECT_NEAR(out.back()[0], std::exp(1.0), 1e-9);
}

TEST(Integrate, FourthOrderConvergence) {
  const double ref = sine_feedback_end(1.0 / 1280);
  const double e1 = std::abs(sine_feedback_end(1.0 / 20) - ref);
  const double e2 = std::abs(sine_feedback_end(1.0 / 40) - ref);
  ASSERT_GT(e2, 0.0);
  EXPECT_GE(e1 / e2, 14.0);
}

TEST(Integrate, ReducedModelDecaysInRegionI) {
  const SystemParams p(3, 0.1, 0.5, 1);
  const auto run = run_reduced(p, Complex(0.1, 0.0), 200.0);
  EXPECT_LT(std::abs(run.trace.values.back()), 1e-4);
}

TEST(Integrate, StepLargerThanQuarterDelayRejected) {
  EXPECT_THROW(integrate(negative_feedback, HistoryTrajectory::constant({1.0}), 1.0, 0.3, 1.0), StepTooLargeError);
  EXPECT_NO_THROW(integrate(negative_feedback, HistoryTrajectory::constant({1.0}), 1.0, 0.25, 1.0));
}

TEST(Integrate, NonPositiveStepRejected) {
  EXPECT_THROW(integrate(negative_feedback, HistoryTrajectory::constant({1.0}), 1.0, 0.0, 1.0), InvalidParameter);
  EXPECT_THROW(integrate(negative_feedback, HistoryTrajectory::constant({1.0}), 1.0, -1e-3, 1.0), InvalidParameter);
}

TEST(Integrate, BlowUpReportsTime) {
  // x' = x(t - tau)^2 from x = 10 reaches infinity near t = 0.1.
  auto square = [](double, std::span<const double>, std::span<const double> xd, std::span<double> dx) {
    dx[0] = xd[0] * xd[0];
  };
  try {
    integrate(square, HistoryTrajectory::constant({10.0}), 5.0, 1e-3, 0.01);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_GT(e.time(), 0.05);
    EXPECT_LT(e.time(), 5.0);
  }
}

TEST(History, QueriesOutsideRangeThrow) {
  const auto out = integrate(negative_feedback, HistoryTrajectory::constant({1.0}), 2.0, 1e-2, 1.0);
  EXPECT_THROW(out.value_at(5.0), HistoryRangeError);
  EXPECT_THROW(out.value_at(-3.0), HistoryRangeError);
  EXPECT_NO_THROW(out.value_at(1.0));
}

TEST(History, ExactAtNodes) {
  auto hist = HistoryTrajectory::from_function(1, 0.0, [](double t, std::span<double> out) { out[0] = std::cos(t); });
  IntegrateOptions opt;
  opt.retain_all = true;
  std::vector<double> seen;
  opt.observer = [&](double, std::span<const double> x) { seen.push_back(x[0]); };
  const auto out = integrate(sine_feedback, hist, 2.0, 0.05, 1.0, opt);
  ASSERT_EQ(seen.size(), out.count());
  for (std::size_t i = 0; i < out.count(); ++i) EXPECT_EQ(out.value_at(out.node_time(i))[0], seen[i]);
}

TEST(History, HermiteReproducesCubics) {
  // x' = 3 t^2 integrates exactly under RK4, and cubic Hermite reproduces x = t^3.
  auto cubic = [](double t, std::span<const double>, std::span<const double>, std::span<double> dx) { dx[0] = 3 * t * t; };
  IntegrateOptions opt;
  opt.retain_all = true;
  const auto out = integrate(cubic, HistoryTrajectory::constant({0.0}), 2.0, 0.1, 1.0, opt);
  for (double t : {0.03, 0.77, 1.234, 1.999}) EXPECT_NEAR(out.value_at(t)[0], t * t * t, 1e-12);
}

TEST(Integrate, ReducedStateStaysInUnitDisc) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 12; ++trial) {
    const SystemParams p(3, 0.1, 0.5 + 4.0 * u(rng), 0.2 + 3.0 * u(rng));
    const double amp = u(rng);
    const double w = 6.0 * u(rng) - 3.0;
    const double ph = 6.0 * u(rng);
    auto hist = HistoryTrajectory::from_function(2, 0.0, [=](double t, std::span<double> out) {
      out[0] = amp * std::cos(w * t + ph);
      out[1] = amp * std::sin(w * t + ph);
    });
    const auto run = run_reduced(p, hist, 60.0);
    EXPECT_LE(run.max_abs, 1.0 + 1e-6) << "k = " << p.k() << " tau = " << p.tau();
  }
}

TEST(Integrate, BitwiseDeterministic) {
  const SystemParams p(3, 0.1, 2.5, 1);
  const auto a = run_reduced(p, Complex(0.3, 0.2), 50.0);
  const auto b = run_reduced(p, Complex(0.3, 0.2), 50.0);
  ASSERT_EQ(a.trace.values.size(), b.trace.values.size());
  for (std::size_t i = 0; i < a.trace.values.size(); ++i) EXPECT_EQ(a.trace.values[i], b.trace.values[i]);
}

TEST(Integrate, ContinuationMatchesSingleRun) {
  auto hist = HistoryTrajectory::from_function(1, 0.0, [](double t, std::span<double> out) { out[0] = std::cos(t); });
  const auto whole = integrate(sine_feedback, hist, 20.0, 0.05, 1.0);
  const auto half = integrate(sine_feedback, hist, 10.0, 0.05, 1.0);
  const auto rest = integrate(sine_feedback, half, 20.0, 0.05, 1.0);
  EXPECT_EQ(whole.back()[0], rest.back()[0]);
  EXPECT_THROW(integrate(sine_feedback, half, 20.0, 0.025, 1.0), InvalidParameter);
}

TEST(History, TailWindowShiftsTime) {
  auto hist = HistoryTrajectory::from_function(1, 0.0, [](double t, std::span<double> out) { out[0] = std::cos(t); });
  IntegrateOptions opt;
  opt.keep_window = 3.0;
  const auto out = integrate(sine_feedback, hist, 10.0, 0.05, 1.0, opt);
  const auto tail = out.tail_window(3.0);
  EXPECT_EQ(tail.t0(), 0.0);
  EXPECT_EQ(tail.back()[0], out.back()[0]);
  // Restarting from the window must track continuing the original run.
  const auto a = integrate(sine_feedback, out, 15.0, 0.05, 1.0);
  const auto b = integrate(sine_feedback, tail, 5.0, 0.05, 1.0);
  EXPECT_NEAR(a.back()[0], b.back()[0], 1e-12);
  EXPECT_THROW(out.tail_window(50.0), HistoryRangeError);
}
