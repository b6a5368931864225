#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace sthawkes;
using namespace testing_support;

namespace {

ModelSpec bivariate() {
  ModelSpec m(2);
  m.background[0].mu0 = 2e-4;
  m.background[1].mu0 = 1e-4;
  m.kernels.set(0, 0, g1(0.3, 8, 4));
  m.kernels.set(1, 1, g1(0.2, 15, 5));
  m.kernels.set(0, 1, g2(0.25, 5, 4, 10, 0));
  m.kernels.set(1, 0, g2(0.1, 20, 5, -10, 0));
  return m;
}

double mean_count(const ModelSpec& m, SimMethod method, int reps, double w, double T) {
  double s = 0.0;
  for (int r = 0; r < reps; ++r) {
    SimConfig cfg;
    cfg.model = m;
    cfg.window = SpatialWindow::rectangle(0, 0, w, w);
    cfg.T = T;
    cfg.seed = 100 + static_cast<std::uint64_t>(r);
    cfg.method = method;
    cfg.projection = Projection(0, 0);
    s += static_cast<double>(simulate(cfg).size());
  }
  return s / reps;
}

}  // namespace

TEST(Simulation, SameSeedSameCatalog) {
  const auto a = simulate_on_rect(bivariate(), 100, 100, 200, 5);
  const auto b = simulate_on_rect(bivariate(), 100, 100, 200, 5);
  ASSERT_EQ(a.size(), b.size());
  EXPECT_EQ(a.content_hash(), b.content_hash());
  const auto c = simulate_on_rect(bivariate(), 100, 100, 200, 6);
  EXPECT_NE(a.content_hash(), c.content_hash());
}

TEST(Simulation, ZeroBackgroundIsEmpty) {
  auto m = bivariate();
  m.background[0].mu0 = 0;
  m.background[1].mu0 = 0;
  EXPECT_EQ(simulate_on_rect(m, 100, 100, 200, 5).size(), 0u);
}

TEST(Simulation, EventsInsideWindowAndSorted) {
  const auto c = simulate_on_rect(bivariate(), 100, 100, 200, 9);
  ASSERT_GT(c.size(), 0u);
  double last = 0.0;
  for (const auto& e : c.events()) {
    EXPECT_TRUE(c.window().contains(e.location()));
    EXPECT_GE(e.t, last);
    EXPECT_LT(e.t, 200.0);
    last = e.t;
  }
}

TEST(Simulation, PoissonCountMatchesRate) {
  ModelSpec m(1);
  m.background[0].mu0 = 1e-3;
  const double expected = 1e-3 * 100 * 100 * 50;
  const double mean = mean_count(m, SimMethod::branching, 40, 100, 50);
  EXPECT_NEAR(mean, expected, 4 * std::sqrt(expected / 40));
}

TEST(Simulation, BranchingAndThinningAgreeOnMeanCount) {
  const auto m = univariate(2e-4, g1(0.5, 5, 3));
  const double a = mean_count(m, SimMethod::branching, 40, 100, 200);
  const double b = mean_count(m, SimMethod::thinning, 40, 100, 200);
  // stationary mean: mu |W| T / (1 - alpha) less edge losses
  EXPECT_NEAR(a, b, 0.1 * a);
  EXPECT_LT(a, 2e-4 * 100 * 100 * 200 / 0.5 * 1.05);
  EXPECT_GT(a, 2e-4 * 100 * 100 * 200 * 1.5);
}

TEST(Simulation, UnstableModelRejected) {
  auto m = bivariate();
  m.kernels.at(0, 0)->p.alpha = 0.9;
  m.kernels.at(0, 1)->p.alpha = 0.9;
  m.kernels.at(1, 0)->p.alpha = 0.9;
  SimConfig cfg;
  cfg.model = m;
  cfg.window = SpatialWindow::rectangle(0, 0, 10, 10);
  cfg.T = 10;
  EXPECT_THROW(simulate(cfg), std::domain_error);
}

TEST(Simulation, ShiftedCrossKernelMovesOffspring) {
  ModelSpec m(2);
  m.background[0].mu0 = 2e-4;
  m.kernels.set(0, 1, g2(0.6, 2, 3, 40, -25));
  const auto c = simulate_on_rect(m, 400, 400, 300, 3, EdgePolicy::none);
  const auto h = lag_summary(c, 0, 1);
  ASSERT_GT(h.n_pairs, 0u);
  double sx = 0, sy = 0;
  int n = 0;
  for (const auto& e : c.events()) {
    if (e.mark != 1) continue;
    double best = INFINITY;
    const EventRecord* parent = nullptr;
    for (const auto& p : c.events()) {
      if (p.mark != 0 || p.t >= e.t) continue;
      const double d = std::hypot(e.x - p.x - 40, e.y - p.y + 25);
      if (d < best) {
        best = d;
        parent = &p;
      }
    }
    if (parent && best < 10) {
      sx += e.x - parent->x;
      sy += e.y - parent->y;
      ++n;
    }
  }
  ASSERT_GT(n, 20);
  EXPECT_NEAR(sx / n, 40, 2.0);
  EXPECT_NEAR(sy / n, -25, 2.0);
}
