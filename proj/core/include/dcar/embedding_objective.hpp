#pragma once

#include <Eigen/Dense>

#include <span>
#include <utility>
#include <vector>

#include "dcar/affinity.hpp"
#include "dcar/grassmann.hpp"

namespace dcar {

enum class GradientForm {
  /// Differentiates the matrix logarithm through its Frechet derivative
  /// (Daleckii-Krein divided differences). Exact for any W.
  kExact,
  /// 4 (S_i W (W^T S_i W)^{-1} - S_j W (W^T S_j W)^{-1}) (log_i - log_j) per
  /// pair. Exact only when the reduced covariances commute with the log
  /// differences, e.g. r = 1.
  kCommuting,
};

/// F(W) = sum_{i,j} A_ij (lambda ||W^T (mu_i - mu_j)||^2
///                        + ||log(W^T S_i W) - log(W^T S_j W)||_F^2).
///
/// Only pairs with A_ij != 0 are stored; the mean term is folded into the
/// d x d matrix M = sum_{i,j} A_ij (mu_i - mu_j)(mu_i - mu_j)^T so that it
/// costs lambda * tr(W^T M W).
class EmbeddingObjective {
 public:
  EmbeddingObjective(std::span<const GaussianComponent> components,
                     const AffinityGraph& affinity, double lambda,
                     GradientForm form = GradientForm::kExact);

  double value(const Eigen::MatrixXd& w) const;
  Eigen::MatrixXd euclidean_gradient(const Eigen::MatrixXd& w) const;
  /// Same value bits as value(w).
  std::pair<double, Eigen::MatrixXd> value_and_gradient(const Eigen::MatrixXd& w) const;

  Eigen::Index ambient_dim() const { return mean_scatter_.rows(); }
  std::size_t edge_count() const { return edges_.size(); }
  double lambda() const { return lambda_; }

 private:
  struct Edge {
    int i;
    int j;
    double weight;  // A_ij, stored once for i < j
  };
  struct Reduced {
    Eigen::MatrixXd log;           // log(W^T S W)
    Eigen::VectorXd eigenvalues;   // of W^T S W
    Eigen::MatrixXd eigenvectors;
  };

  std::vector<Reduced> reduce_all(const Eigen::MatrixXd& w) const;
  double value_from(const Eigen::MatrixXd& w, const std::vector<Reduced>& reduced) const;

  std::vector<Eigen::MatrixXd> covariances_;
  std::vector<Edge> edges_;
  std::vector<int> active_;  // components touched by at least one edge
  Eigen::MatrixXd mean_scatter_;
  double lambda_;
  GradientForm form_;
};

double objective(const Embedding& w, std::span<const GaussianComponent> components,
                 const AffinityGraph& affinity, double lambda);

Eigen::MatrixXd euclidean_gradient(const Embedding& w,
                                   std::span<const GaussianComponent> components,
                                   const AffinityGraph& affinity, double lambda,
                                   GradientForm form = GradientForm::kExact);

/// Frechet derivative of the matrix logarithm at Q diag(l) Q^T applied to a
/// symmetric direction E: Q (F o (Q^T E Q)) Q^T with F_kl the divided
/// differences of log.
Eigen::MatrixXd log_frechet_derivative(const Eigen::VectorXd& eigenvalues,
                                       const Eigen::MatrixXd& eigenvectors,
                                       const Eigen::MatrixXd& direction);

}  // namespace dcar
