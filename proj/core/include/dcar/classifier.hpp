#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

#include "dcar/features.hpp"
#include "dcar/grassmann.hpp"

namespace dcar {

/// N x L one-hot label matrix.
Eigen::MatrixXd label_matrix(std::span<const int> labels, int event_count);

struct KernelParams {
  double lambda = 1.0;
  double sigma_mean = 1.0;
  double sigma_cov = 1.0;
  double alpha = 1.0;

  void validate() const;
};

/// Precomputed per-component kernel inputs (mean and log-covariance).
struct KernelPoint {
  Eigen::VectorXd mean;
  Eigen::MatrixXd log_cov;  // empty for plain vectors

  static KernelPoint from_component(const GaussianComponent& g);
  static KernelPoint from_vector(const Eigen::VectorXd& v);
};

/// lambda * exp(-|mu_i - mu_j|^2 / (2 s_mu^2)) + exp(-|log S_i - log S_j|_F^2 / (2 s_S^2)).
/// For plain vectors (no covariance) only the first term's Gaussian is used,
/// without the lambda factor.
double kernel_value(const KernelPoint& a, const KernelPoint& b, const KernelParams& params);
double kernel_value(const GaussianComponent& a, const GaussianComponent& b,
                    const KernelParams& params);

/// Median pairwise mean distance and log-covariance distance (floored at
/// 1e-12); used as default kernel bandwidths.
std::pair<double, double> median_kernel_bandwidths(std::span<const KernelPoint> points);

Eigen::MatrixXd kernel_matrix(std::span<const KernelPoint> points, const KernelParams& params);

struct KrrSolution {
  Eigen::MatrixXd coefficients;  // (K + alpha I)^{-1} Y
  double alpha = 0.0;            // alpha actually used after retries
  double residual = 0.0;         // ||(K + alpha I) C - Y||_F
};

/// Solves (K + alpha I) C = Y by Cholesky with one step of iterative
/// refinement. If the factorization fails alpha is multiplied by 10, up to
/// three times.
KrrSolution solve_krr(const Eigen::MatrixXd& kernel, const Eigen::MatrixXd& targets,
                      double alpha);

/// KRR classifier over kernel points (reduced GMM components or vectors).
struct KrrModel {
  KernelParams params;
  int event_count = 0;
  std::vector<KernelPoint> points;
  std::vector<int> labels;
  Eigen::MatrixXd coefficients;  // N x L

  /// 1 x N kernel row for each query (P x N).
  Eigen::MatrixXd kernel_rows(std::span<const KernelPoint> queries) const;
};

KrrModel train_krr(std::vector<KernelPoint> points, std::vector<int> labels, int event_count,
                   const KernelParams& params);

/// Per-component event memberships M (P x L) and voting weights.
struct MembershipMatrix {
  Eigen::MatrixXd scores;
  Eigen::VectorXd weights;
};

MembershipMatrix predict_membership(const KrrModel& model,
                                    std::span<const KernelPoint> queries,
                                    const Eigen::VectorXd& weights);

/// sum_p w_p M_p, the per-event track score.
Eigen::VectorXd vote_scores(const MembershipMatrix& m);
/// argmax of vote_scores, ties to the lowest event index.
int vote(const MembershipMatrix& m);

/// Per-dimension mean followed by per-dimension population variance.
Eigen::VectorXd mv_vector(const FrameMatrix& frames);

}  // namespace dcar
