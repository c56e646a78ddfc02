#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "dcar/error.hpp"
#include "dcar/gmm.hpp"
#include "dcar/log.hpp"
#include "support/generators.hpp"

using namespace dcar;
using dcar::testing::Gen;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

FrameMatrix sample_gaussian(Gen& gen, const VectorXd& mean, const MatrixXd& cov, int m) {
  const MatrixXd l = cov.llt().matrixL();
  FrameMatrix f{"g", (l * gen.gaussian(mean.size(), m)).colwise() + mean};
  return f;
}

void expect_monotone(const GmmFit& fit) {
  for (std::size_t i = 1; i < fit.log_likelihood.size(); ++i) {
    EXPECT_GE(fit.log_likelihood[i], fit.log_likelihood[i - 1] - 1e-9)
        << "iteration " << i << " of " << fit.log_likelihood.size();
  }
}

}  // namespace

TEST(FitTrackGmm, SingleComponentRecoversPlantedGaussian) {
  Gen gen(71);
  VectorXd mu(3);
  mu << 1.0, -2.0, 0.5;
  MatrixXd sigma(3, 3);
  sigma << 2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.5;
  const FrameMatrix f = sample_gaussian(gen, mu, sigma, 2000);
  const GmmFit fit = fit_track_gmm(f, 1, 5);
  ASSERT_EQ(fit.model.components.size(), 1u);
  const auto& c = fit.model.components[0];
  EXPECT_EQ(c.weight, 1.0);
  EXPECT_LT((c.mean - mu).norm(), 0.1);
  EXPECT_LT((c.covariance.matrix() - sigma).norm(), 0.15);
  expect_monotone(fit);
}

TEST(FitTrackGmm, TwoSeparatedClusters) {
  Gen gen(72);
  VectorXd a = VectorXd::Zero(2);
  VectorXd b = VectorXd::Constant(2, 10.0);
  const FrameMatrix fa = sample_gaussian(gen, a, MatrixXd::Identity(2, 2), 600);
  const FrameMatrix fb = sample_gaussian(gen, b, MatrixXd::Identity(2, 2), 400);
  FrameMatrix f{"two", MatrixXd(2, 1000)};
  f.columns << fa.columns, fb.columns;
  const GmmFit fit = fit_track_gmm(f, 2, 9);
  ASSERT_EQ(fit.model.components.size(), 2u);
  auto comps = fit.model.components;
  if (comps[0].mean.sum() > comps[1].mean.sum()) std::swap(comps[0], comps[1]);
  EXPECT_LT((comps[0].mean - a).norm(), 0.1);
  EXPECT_LT((comps[1].mean - b).norm(), 0.1);
  EXPECT_NEAR(comps[0].weight, 0.6, 0.05);
  EXPECT_NEAR(comps[1].weight, 0.4, 0.05);
  expect_monotone(fit);
}

TEST(FitTrackGmm, MonotoneAndSpdOnRandomRuns) {
  Gen gen(73);
  for (int trial = 0; trial < 20; ++trial) {
    const auto d = gen.integer(1, 5);
    const int p = gen.integer(1, 6);
    const int m = gen.integer(20, 300);
    MatrixXd x(d, m);
    for (int j = 0; j < m; ++j) {
      x.col(j) = gen.vector(d) + VectorXd::Constant(d, 4.0 * gen.integer(0, 2));
    }
    const GmmFit fit = fit_track_gmm(FrameMatrix{"r", x}, p, static_cast<std::uint64_t>(trial));
    expect_monotone(fit);
    EXPECT_NO_THROW(fit.model.validate());
    for (const auto& c : fit.model.components) EXPECT_GT(c.covariance.min_eigenvalue(), 0.0);
  }
}

TEST(FitTrackGmm, DeterministicForFixedSeed) {
  Gen gen(74);
  const FrameMatrix f{"det", gen.gaussian(4, 150)};
  const GmmFit a = fit_track_gmm(f, 3, 42);
  const GmmFit b = fit_track_gmm(f, 3, 42);
  std::ostringstream sa;
  std::ostringstream sb;
  write_gmm(sa, a.model, "x");
  write_gmm(sb, b.model, "x");
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(FitTrackGmm, ClampsComponentsOnShortTracks) {
  Gen gen(75);
  std::vector<std::string> warnings;
  ScopedWarningSink sink([&](std::string_view w) { warnings.emplace_back(w); });
  const GmmFit fit = fit_track_gmm(FrameMatrix{"short", gen.gaussian(2, 3)}, 5, 1);
  EXPECT_EQ(fit.model.components.size(), 3u);
  EXPECT_FALSE(warnings.empty());
}

TEST(FitTrackGmm, DegenerateFramesStaySpd) {
  // Repeated identical frames: the ridge keeps every covariance SPD.
  const FrameMatrix f{"flat", MatrixXd::Constant(3, 50, 2.0)};
  const GmmFit fit = fit_track_gmm(f, 2, 3);
  for (const auto& c : fit.model.components) EXPECT_GT(c.covariance.min_eigenvalue(), 0.0);
}

TEST(LogLikelihood, StandardNormalAtOrigin) {
  TrackGmm g;
  g.track_id = "n";
  g.components.push_back(
      GaussianComponent{1.0, VectorXd::Zero(2), SpdMatrix(MatrixXd::Identity(2, 2))});
  const FrameMatrix one{"o", MatrixXd::Zero(2, 1)};
  EXPECT_NEAR(log_likelihood(g, one), std::log(1.0 / (2.0 * std::numbers::pi)), 1e-14);
  const FrameMatrix two{"o", MatrixXd::Zero(2, 2)};
  EXPECT_NEAR(log_likelihood(g, two), 2.0 * std::log(1.0 / (2.0 * std::numbers::pi)), 1e-14);
  EXPECT_THROW(log_likelihood(g, FrameMatrix{"x", MatrixXd::Zero(3, 1)}), Error);
}

TEST(PoolComponents, CountsOrderAndLabels) {
  Gen gen(76);
  std::vector<TrackGmm> models;
  for (int t = 0; t < 3; ++t) {
    TrackGmm g;
    g.track_id = "t" + std::to_string(t);
    g.components = {gen.component(2, 0.5), gen.component(2, 0.5)};
    models.push_back(g);
  }
  const std::vector<int> labels{2, 0, 2};
  const auto pooled = pool_components(models, labels);
  ASSERT_EQ(pooled.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(pooled[i].track_id, "t" + std::to_string(i / 2));
    EXPECT_EQ(pooled[i].label, labels[i / 2]);
    EXPECT_EQ(pooled[i].component.mean, models[i / 2].components[i % 2].mean);
  }
  const std::vector<int> short_labels{0};
  EXPECT_THROW(pool_components(models, short_labels), Error);
}

TEST(GmmFormat, RoundTripIsByteIdentical) {
  Gen gen(77);
  TrackGmm g;
  g.track_id = "abc";
  g.components = {gen.component(3, 0.25), gen.component(3, 0.75)};
  std::ostringstream first;
  write_gmm(first, g, "dog");
  write_gmm(first, g, "cat");
  std::istringstream in(first.str());
  const auto blocks = read_gmm_blocks(in);
  ASSERT_EQ(blocks.size(), 2u);
  EXPECT_EQ(blocks[0].label, "dog");
  EXPECT_EQ(blocks[1].label, "cat");
  std::ostringstream second;
  for (const auto& b : blocks) write_gmm(second, b.gmm, b.label);
  EXPECT_EQ(first.str(), second.str());
}

TEST(GmmFormat, RejectsBadWeights) {
  std::istringstream in("gmm-v1 t l 1 2\n0.5\n0\n1\n0.6\n1\n1\n");
  EXPECT_THROW(read_gmm_blocks(in), DataError);
}
