#include <gtest/gtest.h>

#include "support.hpp"

using namespace sthawkes;
using namespace testing_support;

TEST(Serialize, ModelRoundTrip) {
  ModelSpec m(2);
  m.background[0].mu0 = 2e-4;
  m.background[1].variant = BackgroundVariant::time_linear;
  m.background[1].mu0 = 1e-4;
  m.background[1].mu1 = 3e-5;
  m.background[1].time_scale = 365;
  m.profiled[0] = true;
  m.kernels.set(0, 0, g1(0.3, 8, 4));
  m.kernels.set(0, 1, g2(0.25, 5, 4, 10, -3));
  auto k = g3(0.1, 20, 5, -10, 3, 0.4);
  k.p.temporal = TemporalFamily::half_normal;
  m.kernels.set(1, 0, k);

  const auto j = to_json(m);
  const auto back = model_from_json(j);
  EXPECT_EQ(to_json(back), j);
  EXPECT_TRUE(back.is_profiled(0));
  EXPECT_FALSE(back.kernels.at(1, 1).has_value());
  EXPECT_EQ(back.kernels.at(1, 0)->variant, KernelVariant::nonseparable);
  EXPECT_EQ(back.kernels.at(1, 0)->p.temporal, TemporalFamily::half_normal);
  EXPECT_DOUBLE_EQ(back.kernels.at(0, 1)->p.xi, -3);
  EXPECT_DOUBLE_EQ(back.background[1].mu1, 3e-5);

  const auto c = random_catalog(60, 2, 100, 100, 50, 1);
  const QuadratureGrid g(c.window(), 0, c.T(), 25, 10);
  EXPECT_EQ(log_likelihood(c, m, g).loglik, log_likelihood(c, back, g).loglik);
}

TEST(Serialize, FitRoundTrip) {
  const auto c = random_catalog(300, 1, 50, 50, 20, 4);
  const QuadratureGrid g(c.window(), 0, c.T(), 25, 4);
  const LikelihoodEvaluator ev(c, g);
  const auto f = fit(make_preset("poisson-const", preset_context(c, g)), ev);
  const auto j = to_json(f);
  const auto back = fit_from_json(j);
  EXPECT_EQ(back.loglik, f.loglik);
  EXPECT_EQ(back.catalog_hash, f.catalog_hash);
  EXPECT_EQ(back["mu"].value, f["mu"].value);
  EXPECT_EQ(*back["mu"].se, *f["mu"].se);
  EXPECT_EQ(to_json(back), j);
}

TEST(Serialize, NonFiniteBecomesNull) {
  LikelihoodReport r;
  r.finite = false;
  r.loglik = -INFINITY;
  const auto j = to_json(r);
  EXPECT_TRUE(j.at("loglik").is_null());
}

TEST(Serialize, UnknownEnumRejected) {
  auto j = to_json(univariate(1e-3, g1(0.3, 8, 4)));
  const std::string text = j.dump();
  auto pos = text.find("\"g1\"");
  ASSERT_NE(pos, std::string::npos);
  std::string bad = text;
  bad.replace(pos, 4, "\"g7\"");
  EXPECT_ANY_THROW(model_from_json(nlohmann::json::parse(bad)));
}
