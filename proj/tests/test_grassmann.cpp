#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "dcar/error.hpp"
#include "dcar/grassmann.hpp"
#include "support/generators.hpp"

using namespace dcar;
using dcar::testing::Gen;
using Eigen::MatrixXd;

namespace {

TangentVector random_tangent(Gen& gen, const Embedding& w, double scale = 1.0) {
  return project_to_tangent(w, scale * gen.gaussian(w.ambient_dim(), w.reduced_dim()));
}

Embedding circle_start() {
  MatrixXd w(2, 1);
  w << 1, 0;
  return Embedding(w);
}

TangentVector circle_direction() {
  MatrixXd h(2, 1);
  h << 0, 1;
  return TangentVector{h};
}

}  // namespace

TEST(EmbeddingType, RejectsNonOrthonormal) {
  EXPECT_THROW(Embedding(MatrixXd::Ones(3, 1)), Error);
  EXPECT_NO_THROW(Embedding(MatrixXd::Identity(3, 2)));
}

TEST(EmbeddingType, RandomIsOrthonormalAndSeeded) {
  const Embedding a = Embedding::random(7, 3, 5);
  const Embedding b = Embedding::random(7, 3, 5);
  EXPECT_LT(a.orthonormality_error(), 1e-12);
  EXPECT_EQ(a.matrix(), b.matrix());
}

TEST(ProjectToTangent, NormalPartRemoved) {
  Gen gen(91);
  const Embedding w(gen.orthonormal(6, 2));
  EXPECT_LT(project_to_tangent(w, w.matrix()).norm(), 1e-14);
  const TangentVector d = random_tangent(gen, w);
  EXPECT_LT((w.matrix().transpose() * d.direction).norm(), 1e-10);
  EXPECT_LT((project_to_tangent(w, d.direction).direction - d.direction).norm(), 1e-12);
}

TEST(Geodesic, StartsAtBasePoint) {
  Gen gen(92);
  const Embedding w(gen.orthonormal(5, 2));
  const TangentVector h = random_tangent(gen, w);
  EXPECT_EQ(geodesic(w, h, 0.0).matrix(), w.matrix());
  EXPECT_EQ(geodesic(w, TangentVector{MatrixXd::Zero(5, 2)}, 0.7).matrix(), w.matrix());
}

TEST(Geodesic, CircleCase) {
  const Embedding w = circle_start();
  const TangentVector h = circle_direction();
  for (double t : {0.1, 0.5, 1.0, 1.5, 2.0}) {
    const MatrixXd p = geodesic(w, h, t).matrix();
    EXPECT_NEAR(p(0, 0), std::cos(t), 1e-10);
    EXPECT_NEAR(p(1, 0), std::sin(t), 1e-10);
    const MatrixXd dh = transport_search_direction(w, h, t).direction;
    EXPECT_NEAR(dh(0, 0), -std::sin(t), 1e-10);
    EXPECT_NEAR(dh(1, 0), std::cos(t), 1e-10);
  }
}

TEST(Geodesic, StaysOrthonormal) {
  Gen gen(93);
  for (int trial = 0; trial < 30; ++trial) {
    const auto d = gen.integer(2, 9);
    const auto r = gen.integer(1, static_cast<int>(d) - 1);
    const Embedding w(gen.orthonormal(d, r));
    const TangentVector h = random_tangent(gen, w, 2.0);
    const Embedding p = geodesic(w, h, gen.uniform(0.0, 2.0));
    EXPECT_LT((p.matrix().transpose() * p.matrix() - MatrixXd::Identity(r, r)).norm(), 1e-10);
  }
}

TEST(Transport, IdentityAtZero) {
  Gen gen(94);
  const Embedding w(gen.orthonormal(6, 3));
  const TangentVector h = random_tangent(gen, w);
  const TangentVector d = random_tangent(gen, w);
  EXPECT_LT((transport_search_direction(w, h, 0.0).direction - h.direction).norm(), 1e-12);
  EXPECT_LT((transport_gradient(w, d, h, 0.0).direction - d.direction).norm(), 1e-12);
}

TEST(Transport, TangentIsometricAndPairingPreserving) {
  Gen gen(95);
  for (int trial = 0; trial < 30; ++trial) {
    const auto d = gen.integer(3, 9);
    const auto r = gen.integer(1, std::min(3, static_cast<int>(d) - 1));
    const Embedding w(gen.orthonormal(d, r));
    const TangentVector h = random_tangent(gen, w);
    const TangentVector g = random_tangent(gen, w);
    const double t = gen.uniform(0.0, 1.5);
    const GeodesicStep step(w, h);
    const MatrixXd wt = step.point(t).matrix();
    const TangentVector dh = step.transport_direction(t);
    const TangentVector dg = step.transport_tangent(g, t);
    EXPECT_LT((wt.transpose() * dh.direction).norm(), 1e-7);
    EXPECT_LT((wt.transpose() * dg.direction).norm(), 1e-7);
    EXPECT_NEAR(dh.norm(), h.norm(), 1e-9);
    EXPECT_NEAR(inner(dg.direction, dh.direction), inner(g.direction, h.direction), 1e-8);
  }
}

TEST(Transport, ComplementOfUUnchanged) {
  Gen gen(96);
  const Embedding w(gen.orthonormal(6, 1));
  const TangentVector h = random_tangent(gen, w);
  // A tangent direction orthogonal to h (U is h normalized for r = 1).
  MatrixXd g = project_to_tangent(w, gen.gaussian(6, 1)).direction;
  g -= h.direction * (inner(h.direction, g) / h.direction.squaredNorm());
  const TangentVector moved = transport_gradient(w, TangentVector{g}, h, 0.8);
  EXPECT_LT((moved.direction - g).norm(), 1e-12);
}

TEST(CgStepSize, HandCases) {
  auto s = [](double v) { return TangentVector{MatrixXd::Constant(1, 1, v)}; };
  EXPECT_DOUBLE_EQ(cg_step_size(s(3), s(1), s(2)), 1.5);
  EXPECT_DOUBLE_EQ(cg_step_size(s(3), s(3), s(2)), 0.0);
  EXPECT_DOUBLE_EQ(cg_step_size(s(3), s(0), s(2)), 9.0 / 4.0);
  EXPECT_DOUBLE_EQ(cg_step_size(s(3), s(1), s(0)), 0.0);
}

TEST(ReduceComponent, IdentityAndCoordinateSelection) {
  Gen gen(97);
  const GaussianComponent g = gen.component(4, 0.3);
  const GaussianComponent same = reduce_component(Embedding::identity(4), g);
  EXPECT_EQ(same.mean, g.mean);
  EXPECT_EQ(same.covariance.matrix(), g.covariance.matrix());
  EXPECT_EQ(same.weight, 0.3);
  const GaussianComponent sub = reduce_component(Embedding(MatrixXd::Identity(4, 2)), g);
  EXPECT_EQ(sub.mean, g.mean.head(2));
  EXPECT_EQ(sub.covariance.matrix(), g.covariance.matrix().topLeftCorner(2, 2));
}

TEST(ReduceComponent, InterlacingAndSpdOnRandomPairs) {
  Gen gen(98);
  for (int trial = 0; trial < 200; ++trial) {
    const auto d = gen.integer(2, 8);
    const auto r = gen.integer(1, static_cast<int>(d) - 1);
    const GaussianComponent g{1.0, gen.vector(d), SpdMatrix(gen.spd(d, 1e4))};
    const GaussianComponent red = reduce_component(Embedding(gen.orthonormal(d, r)), g);
    EXPECT_GT(red.covariance.min_eigenvalue(), 0.0);
    const double lo = g.covariance.eigenvalues().minCoeff();
    const double hi = g.covariance.eigenvalues().maxCoeff();
    EXPECT_GE(red.covariance.eigenvalues().minCoeff(), lo * (1 - 1e-10));
    EXPECT_LE(red.covariance.eigenvalues().maxCoeff(), hi * (1 + 1e-10));
  }
}

TEST(PrincipalAngles, KnownCases) {
  const MatrixXd e = MatrixXd::Identity(4, 2);
  EXPECT_LT(principal_angles(e, e).maxCoeff(), 1e-7);
  MatrixXd f = MatrixXd::Zero(4, 2);
  f(0, 0) = 1;
  f(2, 1) = 1;
  const auto a = principal_angles(e, f);
  EXPECT_NEAR(a(0), 0.0, 1e-7);
  EXPECT_NEAR(a(1), M_PI / 2, 1e-7);
}

TEST(EmbeddingFormat, RoundTripIsByteIdentical) {
  Gen gen(99);
  const Embedding w(gen.orthonormal(7, 3));
  std::ostringstream first;
  write_embedding(first, w);
  std::istringstream in(first.str());
  const Embedding back = read_embedding(in);
  EXPECT_EQ(back.matrix(), w.matrix());
  std::ostringstream second;
  write_embedding(second, back);
  EXPECT_EQ(first.str(), second.str());
  std::istringstream bad("emb-v1 2 1\n1\n1\n");
  EXPECT_THROW(read_embedding(bad), DataError);
}
