#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dcar {

/// Real symmetric matrix. The input is symmetrized as (M + M^T) / 2 on
/// construction, so the stored entries are exactly symmetric.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Eigen::MatrixXd& m);

  Eigen::Index dim() const { return m_.rows(); }
  const Eigen::MatrixXd& matrix() const { return m_; }

 private:
  Eigen::MatrixXd m_;
};

/// Symmetric positive-definite matrix. Construction performs (and caches) a
/// symmetric eigendecomposition and rejects any input whose smallest
/// eigenvalue is not strictly positive.
class SpdMatrix {
 public:
  SpdMatrix() = default;
  explicit SpdMatrix(const Eigen::MatrixXd& m);
  explicit SpdMatrix(const SymMatrix& m) : SpdMatrix(m.matrix()) {}

  Eigen::Index dim() const { return m_.rows(); }
  const Eigen::MatrixXd& matrix() const { return m_; }
  /// Ascending eigenvalues.
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const Eigen::MatrixXd& eigenvectors() const { return eigenvectors_; }
  double min_eigenvalue() const { return eigenvalues_(0); }
  double log_determinant() const;

 private:
  Eigen::MatrixXd m_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
};

/// Returns m + epsilon * I, rejecting the result if it is still not SPD.
SpdMatrix regularize_spd(const SymMatrix& m, double epsilon);

/// Scale-aware jitter: 1e-6 * trace(m) / dim, floored at 1e-10.
double default_regularization(const SymMatrix& m);

/// Principal matrix logarithm U diag(ln l) U^T.
SymMatrix sym_log(const SpdMatrix& m);
/// Matrix exponential of a symmetric matrix.
SpdMatrix sym_exp(const SymMatrix& m);

/// Frobenius norm of sym_log(a) - sym_log(b).
double lem_distance(const SpdMatrix& a, const SpdMatrix& b);
/// ||log(a^{-1/2} b a^{-1/2})||_F, via the generalized eigenproblem b v = l a v.
double airm_distance(const SpdMatrix& a, const SpdMatrix& b);
/// ln det((a + b) / 2) - (ln det a + ln det b) / 2.
double stein_divergence(const SpdMatrix& a, const SpdMatrix& b);

enum class SpdMetric { kLogEuclidean, kAffineInvariant, kStein };

std::string_view metric_name(SpdMetric metric);
SpdMetric parse_metric(std::string_view name);

double spd_distance(SpdMetric metric, const SpdMatrix& a, const SpdMatrix& b);

/// Dense symmetric matrix of pairwise distances under `metric`.
Eigen::MatrixXd pairwise_distances(std::span<const SpdMatrix> covariances,
                                   SpdMetric metric);

/// Neighbor purity PC(k): for every item, the fraction of its k nearest
/// neighbors (itself excluded, ties broken by lower index) sharing its label,
/// averaged over all items.
double pc_purity(std::span<const SpdMatrix> covariances,
                 std::span<const int> labels, SpdMetric metric, int k);

/// PC(k) for every k in `ks`, reusing one distance matrix.
std::vector<double> pc_purity_curve(std::span<const SpdMatrix> covariances,
                                    std::span<const int> labels,
                                    SpdMetric metric, std::span<const int> ks);

}  // namespace dcar
