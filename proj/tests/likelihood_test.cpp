#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "support.hpp"

using namespace sthawkes;
using namespace testing_support;

namespace {

LikelihoodOptions exact() {
  LikelihoodOptions o;
  o.truncate = false;
  return o;
}

ModelSpec bivariate_shifted() {
  ModelSpec m(2);
  m.background[0].mu0 = 2e-4;
  m.background[1].mu0 = 1e-4;
  m.kernels.set(0, 0, g1(0.3, 8, 6));
  m.kernels.set(1, 1, g1(0.2, 15, 9));
  m.kernels.set(0, 1, g2(0.25, 5, 7, 12, -4));
  m.kernels.set(1, 0, g2(0.1, 20, 5, -12, 4));
  return m;
}

EventCatalog shifted(const EventCatalog& c, double dx, double dy, double dt) {
  std::vector<EventRecord> ev = c.events();
  for (auto& e : ev) {
    e.x += dx;
    e.y += dy;
    e.t += dt;
  }
  const auto& b = c.window().bbox();
  return EventCatalog(std::move(ev), c.n_marks(), c.T() + dt,
                      SpatialWindow::rectangle(b.x0 + dx, b.y0 + dy, b.x1 + dx, b.y1 + dy), c.projection());
}

}  // namespace

TEST(Likelihood, MatchesBruteForceReference) {
  const auto c = random_catalog(50, 2, 100, 80, 60, 11);
  const auto m = bivariate_shifted();
  const QuadratureGrid g(c.window(), 0, c.T(), 100, 20);
  const auto rep = log_likelihood(c, m, g, exact());
  const double ref = naive_loglik(c, m);
  EXPECT_TRUE(rep.finite);
  EXPECT_NEAR(rep.loglik, ref, 1e-9 * std::abs(ref));
}

TEST(Likelihood, MatchesReferenceOnSimulatedCatalog) {
  const auto m = univariate(5e-4, g1(0.5, 10, 4));
  const auto c = simulate_on_rect(m, 60, 60, 200, 3);
  ASSERT_GT(c.size(), 50u);
  const QuadratureGrid g(c.window(), 0, c.T(), 36, 40);
  const double ref = naive_loglik(c, m);
  EXPECT_NEAR(log_likelihood(c, m, g, exact()).loglik, ref, 1e-9 * std::abs(ref));
  // truncated evaluation differs only by the dropped tail
  EXPECT_NEAR(log_likelihood(c, m, g).loglik, ref, 1e-6 * std::abs(ref));
}

TEST(Likelihood, PoissonClosedForm) {
  const auto c = random_catalog(120, 1, 50, 40, 30, 2);
  ModelSpec m(1);
  m.background[0].mu0 = 0.003;
  const QuadratureGrid g(c.window(), 0, c.T(), 20, 3);
  const auto rep = log_likelihood(c, m, g, exact());
  EXPECT_NEAR(rep.loglik, 120 * std::log(0.003) - 0.003 * 50 * 40 * 30, 1e-9);
  EXPECT_NEAR(rep.components[0].background, 0.003 * 50 * 40 * 30, 1e-9);
  EXPECT_EQ(rep.components[0].marginal, 0.0);
  EXPECT_EQ(rep.components[0].cross, 0.0);
}

TEST(Likelihood, ProfiledLevelMatchesClosedForm) {
  const auto c = random_catalog(120, 1, 50, 40, 30, 2);
  ModelSpec m(1);
  m.profiled[0] = true;
  const QuadratureGrid g(c.window(), 0, c.T(), 20, 3);
  const auto rep = log_likelihood(c, m, g, exact());
  const double mu = 120.0 / (50 * 40 * 30);
  EXPECT_NEAR(rep.mu0[0], mu, 1e-12);
  EXPECT_NEAR(rep.loglik, 120 * std::log(mu) - 120, 1e-9);
}

TEST(Likelihood, ComponentsSumToIntegral) {
  const auto c = random_catalog(80, 2, 100, 80, 60, 5);
  const auto m = bivariate_shifted();
  const QuadratureGrid g(c.window(), 0, c.T(), 100, 20);
  const auto rep = log_likelihood(c, m, g);
  double total = 0.0;
  for (const auto& k : rep.components) total += k.total();
  EXPECT_NEAR(total, rep.integral_term, 1e-10 * rep.integral_term);
  EXPECT_NEAR(rep.loglik, rep.event_term - rep.integral_term, 1e-9 * std::abs(rep.loglik));
}

TEST(Likelihood, NoCrossKernelsGivesZeroCross) {
  const auto c = random_catalog(80, 2, 100, 80, 60, 5);
  auto m = bivariate_shifted();
  m.kernels.at(0, 1).reset();
  m.kernels.at(1, 0).reset();
  const QuadratureGrid g(c.window(), 0, c.T(), 100, 20);
  const auto rep = log_likelihood(c, m, g);
  EXPECT_EQ(rep.components[0].cross, 0.0);
  EXPECT_EQ(rep.components[1].cross, 0.0);
  EXPECT_GT(rep.components[0].marginal, 0.0);
}

TEST(Likelihood, DailySeriesSumsToTotals) {
  const auto c = random_catalog(80, 2, 100, 80, 30.5, 8);
  const auto m = bivariate_shifted();
  const LikelihoodEvaluator ev(c, QuadratureGrid(c.window(), 0, c.T(), 100, 20));
  const auto totals = expected_counts(ev, m);
  const auto daily = expected_daily_series(ev, m);
  ASSERT_EQ(daily.values[0].size(), 31u);
  for (int k = 0; k < 2; ++k) {
    double b = 0, mg = 0, cr = 0;
    for (const auto& d : daily.values[static_cast<std::size_t>(k)]) {
      b += d.background;
      mg += d.marginal;
      cr += d.cross;
    }
    EXPECT_NEAR(b, totals[static_cast<std::size_t>(k)].background, 1e-9);
    EXPECT_NEAR(mg, totals[static_cast<std::size_t>(k)].marginal, 1e-9);
    EXPECT_NEAR(cr, totals[static_cast<std::size_t>(k)].cross, 1e-9);
  }
}

TEST(Likelihood, SingleSourceDailyDecay) {
  std::vector<EventRecord> ev(1);
  ev[0].x = 500;
  ev[0].y = 500;
  ev[0].t = 0.0;
  const EventCatalog c(ev, 1, 10, SpatialWindow::rectangle(0, 0, 1000, 1000), Projection(0, 0));
  const auto m = univariate(0.0, g1(0.4, 3, 5));
  const LikelihoodEvaluator le(c, QuadratureGrid(c.window(), 0, 10, 100, 10), nullptr, exact());
  const auto daily = expected_daily_series(le, m);
  for (int d = 0; d < 10; ++d) {
    const double want = 0.4 * (std::exp(-d / 3.0) - std::exp(-(d + 1) / 3.0));
    EXPECT_NEAR(daily.values[0][static_cast<std::size_t>(d)].marginal, want, 1e-10);
  }
}

TEST(Likelihood, TranslationInvariance) {
  const auto c = random_catalog(60, 2, 100, 80, 60, 9);
  const auto m = bivariate_shifted();
  const auto moved = shifted(c, 250, -40, 0);
  const double a = log_likelihood(c, m, QuadratureGrid(c.window(), 0, c.T(), 100, 20), exact()).loglik;
  const double b = log_likelihood(moved, m, QuadratureGrid(moved.window(), 0, moved.T(), 100, 20), exact()).loglik;
  EXPECT_NEAR(a, b, 1e-9 * std::abs(a));
}

TEST(Likelihood, NonPositiveIntensityGivesSentinel) {
  const auto c = random_catalog(20, 1, 50, 50, 10, 1);
  ModelSpec m(1);
  m.background[0].mu0 = 0.0;
  const auto rep = log_likelihood(c, m, QuadratureGrid(c.window(), 0, c.T(), 25, 5));
  EXPECT_FALSE(rep.finite);
  EXPECT_EQ(rep.objective(), -INFINITY);
}

TEST(Likelihood, ConditionalIntensityAddsKernels) {
  const auto c = random_catalog(30, 1, 50, 50, 10, 4);
  const auto m = univariate(0.01, g1(0.5, 2, 3));
  const Point s{25, 25};
  EXPECT_NEAR(conditional_intensity(0, s, 10, c, m), 0.01 + kernel_sum(0, s, 10, c, m.kernels), 1e-15);
}

TEST(Holdout, EmptyTestWindow) {
  const auto train = random_catalog(30, 1, 50, 50, 10, 4);
  const EventCatalog test({}, 1, 10, train.window(), train.projection());
  const auto m = univariate(0.01, g1(0.5, 2, 3));
  const auto rep = holdout_log_likelihood(train, test, m, QuadratureGrid(train.window(), 10, 10, 25, 1));
  EXPECT_EQ(rep.loglik, 0.0);
}

TEST(Holdout, PoissonClosedForm) {
  const auto train = random_catalog(30, 1, 50, 50, 10, 4);
  auto late = random_catalog(40, 1, 50, 50, 5, 6);
  late = shifted(late, 0, 0, 10);
  ModelSpec m(1);
  m.background[0].mu0 = 0.002;
  const auto rep = holdout_log_likelihood(train, late, m, QuadratureGrid(train.window(), 10, 15, 25, 2));
  EXPECT_NEAR(rep.loglik, 40 * std::log(0.002) - 0.002 * 2500 * 5, 1e-9);
}

TEST(Holdout, HistoryConditioningRaisesIntensity) {
  const auto m = univariate(2e-4, g1(0.6, 20, 5));
  const auto full = simulate_on_rect(m, 60, 60, 400, 12);
  std::vector<EventRecord> a, b;
  for (const auto& e : full.events()) (e.t < 300 ? a : b).push_back(e);
  const EventCatalog train(a, 1, 300, full.window(), full.projection());
  const EventCatalog test(b, 1, 400, full.window(), full.projection());
  const QuadratureGrid g(full.window(), 300, 400, 36, 20);
  const auto with = holdout_log_likelihood(train, test, m, g, true, exact());
  const auto without = holdout_log_likelihood(train, test, m, g, false, exact());
  EXPECT_GT(with.integral_term, without.integral_term);
  const double ref = naive_loglik(full, m) - naive_loglik(train, m);
  EXPECT_NEAR(with.loglik, ref, 1e-9 * std::abs(ref));
  EXPECT_THROW(holdout_log_likelihood(test, train, m, g), std::domain_error);
}
