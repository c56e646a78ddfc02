#include <gtest/gtest.h>

#include <cmath>

#include "dcar/embedding_objective.hpp"
#include "support/generators.hpp"

using namespace dcar;
using dcar::testing::Gen;
using Eigen::MatrixXd;

namespace {

struct Instance {
  std::vector<GaussianComponent> comps;
  AffinityGraph graph;
  MatrixXd w;
  double lambda;
};

Instance random_instance(Gen& gen) {
  Instance in;
  const auto d = gen.integer(2, 8);
  const auto r = gen.integer(1, std::min(3, static_cast<int>(d) - 1));
  const int n = gen.integer(2, 6);
  in.comps = gen.components(n, d);
  in.graph = gen.affinity(n, 0.8);
  in.w = gen.orthonormal(d, r);
  in.lambda = gen.uniform(0.1, 2.0);
  return in;
}

MatrixXd central_differences(const EmbeddingObjective& f, const MatrixXd& w, double h) {
  MatrixXd g(w.rows(), w.cols());
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      MatrixXd plus = w;
      MatrixXd minus = w;
      plus(i, j) += h;
      minus(i, j) -= h;
      g(i, j) = (f.value(plus) - f.value(minus)) / (2 * h);
    }
  }
  return g;
}

}  // namespace

TEST(Objective, ZeroAffinityGivesZero) {
  Gen gen(101);
  const auto comps = gen.components(5, 4);
  const AffinityGraph empty = empty_affinity(5);
  const Embedding w(gen.orthonormal(4, 2));
  EXPECT_EQ(objective(w, comps, empty, 1.0), 0.0);
  EXPECT_EQ(euclidean_gradient(w, comps, empty, 1.0).norm(), 0.0);
}

TEST(Objective, MatchesIndependentEvaluation) {
  Gen gen(102);
  for (int trial = 0; trial < 20; ++trial) {
    Instance in = random_instance(gen);
    const double got = objective(Embedding(in.w), in.comps, in.graph, in.lambda);
    const double want =
        dcar::testing::oracle_objective(in.w, in.comps, in.graph.signed_matrix(), in.lambda);
    EXPECT_NEAR(got, want, 1e-9 * (1 + std::abs(want)));
    // Full-dimensional identity embedding: objective on the raw components.
    const auto d = in.w.rows();
    const MatrixXd id = MatrixXd::Identity(d, d);
    EXPECT_NEAR(objective(Embedding::identity(d), in.comps, in.graph, in.lambda),
                dcar::testing::oracle_objective(id, in.comps, in.graph.signed_matrix(), in.lambda),
                1e-9 * (1 + std::abs(want)));
  }
}

TEST(Objective, RotationInvariant) {
  Gen gen(103);
  for (int trial = 0; trial < 10; ++trial) {
    Instance in = random_instance(gen);
    const EmbeddingObjective f(in.comps, in.graph, in.lambda);
    const double base = f.value(in.w);
    for (int k = 0; k < 20; ++k) {
      const MatrixXd rot = gen.orthonormal(in.w.cols(), in.w.cols());
      EXPECT_NEAR(f.value(in.w * rot), base, 1e-8);
    }
  }
}

TEST(Gradient, MatchesCentralDifferences) {
  Gen gen(104);
  for (int trial = 0; trial < 25; ++trial) {
    Instance in = random_instance(gen);
    const EmbeddingObjective f(in.comps, in.graph, in.lambda);
    const MatrixXd g = f.euclidean_gradient(in.w);
    const MatrixXd fd = central_differences(f, in.w, 1e-6);
    EXPECT_LT((g - fd).norm(), 1e-5 * std::max(1.0, fd.norm())) << "trial " << trial;
  }
}

TEST(Gradient, ValueAndGradientAgree) {
  Gen gen(105);
  Instance in = random_instance(gen);
  const EmbeddingObjective f(in.comps, in.graph, in.lambda);
  const auto [v, g] = f.value_and_gradient(in.w);
  EXPECT_EQ(v, f.value(in.w));
  EXPECT_EQ(g, f.euclidean_gradient(in.w));
}

TEST(Gradient, MeanTermOnlyTwoComponents) {
  Gen gen(106);
  const SpdMatrix shared(gen.spd(4));
  std::vector<GaussianComponent> comps{{1.0, gen.vector(4), shared}, {1.0, gen.vector(4), shared}};
  AffinityGraph g = empty_affinity(2);
  g.within(0, 1) = g.within(1, 0) = 1;
  const MatrixXd w = gen.orthonormal(4, 2);
  const double lambda = 0.7;
  const Eigen::VectorXd delta = comps[0].mean - comps[1].mean;
  // F = 2 lambda |W^T delta|^2 over both orderings, so dF/dW = 4 lambda delta delta^T W.
  const MatrixXd expected = 4.0 * lambda * delta * delta.transpose() * w;
  EXPECT_LT((euclidean_gradient(Embedding(w), comps, g, lambda) - expected).norm(), 1e-10);
  EXPECT_NEAR(objective(Embedding(w), comps, g, lambda),
              2.0 * lambda * (w.transpose() * delta).squaredNorm(), 1e-12);
}

TEST(Gradient, CommutingFormExactForOneColumn) {
  Gen gen(107);
  for (int trial = 0; trial < 10; ++trial) {
    auto comps = gen.components(5, 5);
    const AffinityGraph g = gen.affinity(5);
    const Embedding w(gen.orthonormal(5, 1));
    const MatrixXd exact = euclidean_gradient(w, comps, g, 1.0, GradientForm::kExact);
    const MatrixXd comm = euclidean_gradient(w, comps, g, 1.0, GradientForm::kCommuting);
    EXPECT_LT((exact - comm).norm(), 1e-10 * (1 + exact.norm()));
  }
}

TEST(LogFrechet, MatchesDifferenceQuotient) {
  Gen gen(108);
  const MatrixXd a = gen.spd(4, 50.0);
  MatrixXd e = gen.gaussian(4, 4);
  e = 0.5 * (e + e.transpose());
  const SpdMatrix s(a);
  const MatrixXd l = log_frechet_derivative(s.eigenvalues(), s.eigenvectors(), e);
  const double h = 1e-6;
  const MatrixXd fd = (dcar::testing::oracle_log(a + h * e) - dcar::testing::oracle_log(a - h * e)) /
                      (2 * h);
  EXPECT_LT((l - fd).norm(), 1e-6 * (1 + fd.norm()));
}
