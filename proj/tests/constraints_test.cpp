#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "support.hpp"

using namespace sthawkes;
using namespace testing_support;

namespace {

double eigen_radius(const Matrix2& a) {
  Eigen::Matrix2d m;
  m << a[0][0], a[0][1], a[1][0], a[1][1];
  return m.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

TEST(SpectralRadius, Examples) {
  EXPECT_NEAR(spectral_radius(Matrix2{{{0.5, 0.3}, {0.2, 0.4}}}), 0.7, 1e-15);
  EXPECT_DOUBLE_EQ(spectral_radius(Matrix2{{{0.2, 0}, {0, -0.6}}}), 0.6);
  EXPECT_DOUBLE_EQ(spectral_radius(Matrix2{{{0, 0}, {0, 0}}}), 0.0);
  // complex pair: eigenvalues 0.3 +- 0.4i
  EXPECT_NEAR(spectral_radius(Matrix2{{{0.3, -0.4}, {0.4, 0.3}}}), 0.5, 1e-15);
}

TEST(SpectralRadius, GeneralMatrixUsesEigen) {
  const std::vector<std::vector<double>> a{{0.2, 0.1, 0.0}, {0.0, 0.3, 0.1}, {0.1, 0.0, 0.4}};
  Eigen::Matrix3d m;
  m << 0.2, 0.1, 0.0, 0.0, 0.3, 0.1, 0.1, 0.0, 0.4;
  EXPECT_NEAR(spectral_radius(a), m.eigenvalues().cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Branching, ThetaZeroIsTriangular) {
  const auto r = build_branching_matrix({0.0, 0.6, 0.2, 0.3});
  EXPECT_DOUBLE_EQ(r.alphas.alpha_b, 0.6);
  EXPECT_DOUBLE_EQ(r.alphas.alpha_f, 0.2);
  EXPECT_DOUBLE_EQ(r.alphas.alpha_bf, 0.3);
  EXPECT_DOUBLE_EQ(r.alphas.alpha_fb, 0.0);
  EXPECT_DOUBLE_EQ(r.radius, 0.6);
  EXPECT_TRUE(r.accepted);
}

TEST(Branching, NoAsymmetryGivesEqualCrossTerms) {
  const auto r = build_branching_matrix({0.4, 0.7, 0.1, 0.0});
  EXPECT_NEAR(r.alphas.alpha_bf, r.alphas.alpha_fb, 1e-16);
  EXPECT_NEAR(r.radius, 0.7, 1e-14);
}

TEST(Branching, PiOverSixExample) {
  const double th = std::numbers::pi / 6;
  const auto r = build_branching_matrix({th, 0.8, 0.3, 0.1});
  const double c = std::cos(th), s = std::sin(th);
  EXPECT_NEAR(r.alphas.alpha_b, 0.8 * c * c + 0.3 * s * s, 1e-15);
  EXPECT_NEAR(r.alphas.alpha_f, 0.8 * s * s + 0.3 * c * c, 1e-15);
  EXPECT_NEAR(r.alphas.alpha_fb, 0.5 * s * c, 1e-15);
  EXPECT_NEAR(r.alphas.alpha_bf, 0.5 * s * c + 0.1, 1e-15);
  const double tr = r.alphas.alpha_b + r.alphas.alpha_f;
  const double det = r.alphas.alpha_b * r.alphas.alpha_f - r.alphas.alpha_bf * r.alphas.alpha_fb;
  const double root = 0.5 * (tr + std::sqrt(tr * tr - 4 * det));
  EXPECT_NEAR(r.radius, root, 1e-14);
  EXPECT_LT(r.radius, 1.0);
  EXPECT_GE(r.alphas.alpha_bf, r.alphas.alpha_fb);
}

TEST(Branching, InvalidBlocksRejected) {
  EXPECT_THROW(build_branching_matrix({2.0, 0.5, 0.2, 0.1}), std::invalid_argument);
  EXPECT_THROW(build_branching_matrix({0.0, 0.2, 0.5, 0.1}), std::invalid_argument);
  EXPECT_THROW(build_branching_matrix({0.0, 0.8, 0.2, 0.3}), std::invalid_argument);
}

TEST(Branching, AcceptMatchesEigenSolver) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 2000; ++i) {
    BranchingBlock b;
    b.theta = (u(rng) - 0.5) * std::numbers::pi;
    b.lambda_b = u(rng);
    b.lambda_f = b.lambda_b * u(rng);
    b.b = (1 - b.lambda_b) * u(rng);
    const auto r = build_branching_matrix(b);
    const double ref = eigen_radius(r.alphas.matrix());
    EXPECT_EQ(r.accepted, ref < 1.0);
    EXPECT_NEAR(r.radius, ref, 1e-12);
  }
}

TEST(Branching, InverseRecoversBlock) {
  const BranchingBlock b{0.9, 0.55, 0.2, 0.15};
  const auto back = branching_block_from(build_branching_matrix(b).alphas);
  EXPECT_NEAR(back.theta, b.theta, 1e-12);
  EXPECT_NEAR(back.lambda_b, b.lambda_b, 1e-12);
  EXPECT_NEAR(back.lambda_f, b.lambda_f, 1e-12);
  EXPECT_NEAR(back.b, b.b, 1e-12);
}

TEST(Transforms, ScalarExamples) {
  const TransformLayer t(2, {{TransformKind::log, {0}}, {TransformKind::logit, {1}, 0.0, 1.0}});
  const std::vector<double> z{0.0, 0.0};
  const auto x = t.from_unconstrained(z);
  EXPECT_DOUBLE_EQ(x[0], 1.0);
  EXPECT_DOUBLE_EQ(x[1], 0.5);
  const std::vector<double> bad{NAN, 0.0};
  EXPECT_THROW(t.from_unconstrained(bad), std::domain_error);
  const std::vector<double> neg{-1.0, 0.5};
  EXPECT_THROW(t.to_unconstrained(neg), std::domain_error);
}

TEST(Transforms, RoundTripOnPresetLayouts) {
  const auto c = random_catalog(50, 2, 100, 100, 100, 1);
  const QuadratureGrid g(c.window(), 0, c.T(), 25, 5);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0, 1.5);
  for (const char* name : {"m2-3", "m2-5", "m2-6"}) {
    const auto tmpl = make_preset(name, preset_context(c, g));
    for (int i = 0; i < 1000 / 3; ++i) {
      std::vector<double> z(tmpl.dim());
      for (auto& v : z) v = n(rng);
      const auto x = tmpl.transform.from_unconstrained(z);
      const auto z2 = tmpl.transform.to_unconstrained(x);
      const auto x2 = tmpl.transform.from_unconstrained(z2);
      for (std::size_t k = 0; k < x.size(); ++k) EXPECT_NEAR(x2[k], x[k], 1e-12 * std::max(1.0, std::abs(x[k])));
      const auto m = tmpl.instantiate(x);
      EXPECT_LT(spectral_radius(m.kernels.productivity()), 1.0);
      EXPECT_NO_THROW(m.validate());
    }
  }
}

TEST(Transforms, NonstationaryRangeKeepsPhiPositive) {
  const TransformLayer t(2, {{TransformKind::nonstationary_range, {0, 1}, 0, 1, 1, 0.2, 0.9}});
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0, 3);
  for (int i = 0; i < 500; ++i) {
    const std::vector<double> z{n(rng), n(rng)};
    const auto x = t.from_unconstrained(z);
    EXPECT_GT(x[0] + x[1] * 0.2, 0.0);
    EXPECT_GT(x[0] + x[1] * 0.9, 0.0);
    const auto z2 = t.to_unconstrained(x);
    EXPECT_NEAR(z2[0], z[0], 1e-9);
    EXPECT_NEAR(z2[1], z[1], 1e-9);
  }
}

TEST(Transforms, NearBoundFlag) {
  const TransformLayer t(1, {{TransformKind::logit, {0}, 0.0, 1.0}});
  const std::vector<double> edge{0.99995}, inner{0.5};
  EXPECT_TRUE(t.near_bound(edge)[0]);
  EXPECT_FALSE(t.near_bound(inner)[0]);
}
