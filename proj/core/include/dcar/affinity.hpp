#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <span>
#include <vector>

#include "dcar/gmm.hpp"

namespace dcar {

enum class BandwidthMode {
  /// sigma_i = distance to the k-th nearest neighbor; pairs use sigma_i * sigma_j.
  kSelfTuning,
  /// One global sigma per term: the median pairwise distance.
  kGlobalMedian,
};

struct ComponentBandwidths {
  Eigen::VectorXd mean;  // per component (all equal in global mode)
  Eigen::VectorXd cov;
};

/// Squared distances between components: euclidean on means, log-Euclidean
/// on covariances.
struct PairwiseDistances {
  Eigen::MatrixXd mean_sq;
  Eigen::MatrixXd cov_sq;
};

PairwiseDistances component_distances(std::span<const GaussianComponent> components);

/// lambda * exp(-dmu^2 / (2 bw_mu)) + exp(-dSigma^2 / (2 bw_Sigma)), where the
/// bandwidth arguments are squared scales (sigma^2 or sigma_i * sigma_j).
double heat_similarity(double lambda, double mean_dist_sq, double cov_dist_sq,
                       double mean_bandwidth_sq, double cov_bandwidth_sq);

/// Heat-kernel similarity of two components with global bandwidths.
double component_similarity(const GaussianComponent& a, const GaussianComponent& b,
                            double lambda, double sigma_mean, double sigma_cov);

/// Per-component self-tuning scales: distance to the `neighbor`-th nearest
/// neighbor, floored at 1e-12. Falls back to the global median pairwise
/// distance (with a warning) when there are not more than `neighbor` components.
ComponentBandwidths self_tuning_bandwidths(const PairwiseDistances& distances,
                                           int neighbor = 7);
ComponentBandwidths self_tuning_bandwidths(std::span<const GaussianComponent> components,
                                           int neighbor = 7);
ComponentBandwidths median_bandwidths(const PairwiseDistances& distances);

/// Dense N x N similarity matrix (diagonal included).
Eigen::MatrixXd similarity_matrix(const PairwiseDistances& distances,
                                  const ComponentBandwidths& bandwidths, double lambda);

struct AffinityOptions {
  int within_neighbors = 5;
  int between_neighbors = 5;
  double lambda = 1.0;
  BandwidthMode bandwidth = BandwidthMode::kSelfTuning;
  int self_tuning_neighbor = 7;
  /// Skip components of the same source track as within-class neighbors.
  bool exclude_same_track = false;
};

/// Signed label-aware neighbor graph A = S_w - S_b.
struct AffinityGraph {
  Eigen::MatrixXi within;   // S_w, binary, symmetric
  Eigen::MatrixXi between;  // S_b, binary, symmetric
  ComponentBandwidths bandwidths;
  AffinityOptions options;

  Eigen::Index size() const { return within.rows(); }
  Eigen::MatrixXd signed_matrix() const { return (within - between).cast<double>(); }
  /// Checks symmetry, binary entries, disjoint supports and a zero diagonal.
  void validate() const;
};

AffinityGraph build_affinity(std::span<const LabeledComponent> components,
                             const AffinityOptions& options = {});

/// Zero graph over n components (fixed point of the embedding optimizer).
AffinityGraph empty_affinity(Eigen::Index n);

/// Dense text dump of A for inspection: `affinity-v1 <N>` then N rows.
void write_affinity_text(std::ostream& out, const AffinityGraph& graph);

}  // namespace dcar
