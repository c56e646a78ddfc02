#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>

#include "dcar/gmm.hpp"

namespace dcar {

/// A d x r matrix with orthonormal columns, representing a point on the
/// Grassmannian G(r, d).
class Embedding {
 public:
  Embedding() = default;
  /// Throws NumericalError if ||W^T W - I||_F exceeds `tolerance`.
  explicit Embedding(Eigen::MatrixXd w, double tolerance = 1e-10);

  static Embedding identity(Eigen::Index d);
  /// Orthonormal factor (thin QR, positive R diagonal) of an arbitrary
  /// full-column-rank matrix.
  static Embedding orthonormalize(const Eigen::MatrixXd& m);
  /// Orthonormal factor of a seeded standard-normal d x r matrix.
  static Embedding random(Eigen::Index d, Eigen::Index r, std::uint64_t seed);
  /// Top-r principal directions of the pooled component means and
  /// log-covariances (deterministic alternative to `random`).
  static Embedding principal(std::span<const GaussianComponent> components, Eigen::Index r);

  Eigen::Index ambient_dim() const { return w_.rows(); }
  Eigen::Index reduced_dim() const { return w_.cols(); }
  const Eigen::MatrixXd& matrix() const { return w_; }
  double orthonormality_error() const;

 private:
  Eigen::MatrixXd w_;
};

/// A d x r matrix in the horizontal space at a base point (W^T V = 0).
struct TangentVector {
  Eigen::MatrixXd direction;

  double norm() const { return direction.norm(); }
};

/// <A, B> = Tr(A^T B).
inline double inner(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a.array() * b.array()).sum();
}

/// D = G - W W^T G.
TangentVector project_to_tangent(const Embedding& w, const Eigen::MatrixXd& g);

/// Geodesic from W along H with the compact SVD H = U diag(s) V^T cached, plus
/// the parallel transports along it.
class GeodesicStep {
 public:
  GeodesicStep(const Embedding& w, const TangentVector& h);

  /// W(t) = W V cos(s t) V^T + U sin(s t) V^T. Columns are re-orthonormalized
  /// only if rounding drift exceeds 1e-12.
  Embedding point(double t) const;
  /// Transport of H itself: (-W V sin(s t) + U cos(s t)) diag(s) V^T.
  TangentVector transport_direction(double t) const;
  /// Transport of a tangent D: D - (W V sin(s t) + U (I - cos(s t))) U^T D.
  TangentVector transport_tangent(const TangentVector& d, double t) const;

  double max_singular_value() const { return singular_.size() ? singular_.maxCoeff() : 0.0; }
  const Eigen::MatrixXd& u() const { return u_; }
  const Eigen::VectorXd& singular_values() const { return singular_; }
  const Eigen::MatrixXd& v() const { return v_; }

 private:
  Eigen::MatrixXd w_;
  Eigen::MatrixXd u_;
  Eigen::VectorXd singular_;
  Eigen::MatrixXd v_;
  Eigen::MatrixXd wv_;
};

Embedding geodesic(const Embedding& w, const TangentVector& h, double t);
TangentVector transport_search_direction(const Embedding& w, const TangentVector& h,
                                         double t);
TangentVector transport_gradient(const Embedding& w, const TangentVector& d,
                                 const TangentVector& h, double t);

/// gamma = <D_new - tD_old, D_new> / <D_old, D_old>; 0 when D_old vanishes.
double cg_step_size(const TangentVector& d_new, const TangentVector& transported_d_old,
                    const TangentVector& d_old);

/// mu -> W^T mu, Sigma -> W^T Sigma W (symmetrized); weight unchanged.
GaussianComponent reduce_component(const Embedding& w, const GaussianComponent& g);

/// Principal angles (radians, ascending) between the column spans of two
/// orthonormal matrices with the same number of rows.
Eigen::VectorXd principal_angles(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// "emb-v1": `emb-v1 <d> <r>` then d rows of r reals.
void write_embedding(std::ostream& out, const Embedding& w);
Embedding read_embedding(std::istream& in, const std::string& source = "<stream>");
void save_embedding(const std::filesystem::path& path, const Embedding& w);
Embedding load_embedding(const std::filesystem::path& path);

}  // namespace dcar
