#include "dcar/affinity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "dcar/error.hpp"
#include "dcar/log.hpp"

namespace dcar {
namespace {

constexpr double kBandwidthFloor = 1e-12;

double median_offdiagonal(const Eigen::MatrixXd& dist_sq) {
  std::vector<double> values;
  for (Eigen::Index i = 0; i < dist_sq.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < dist_sq.cols(); ++j) {
      values.push_back(std::sqrt(dist_sq(i, j)));
    }
  }
  if (values.empty()) return kBandwidthFloor;
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  double med = *mid;
  if (values.size() % 2 == 0) {
    med = 0.5 * (med + *std::max_element(values.begin(), mid));
  }
  return std::max(med, kBandwidthFloor);
}

Eigen::VectorXd kth_neighbor_distance(const Eigen::MatrixXd& dist_sq, int neighbor) {
  const Eigen::Index n = dist_sq.rows();
  Eigen::VectorXd out(n);
  std::vector<double> row;
  for (Eigen::Index i = 0; i < n; ++i) {
    row.clear();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) row.push_back(dist_sq(i, j));
    }
    auto nth = row.begin() + (neighbor - 1);
    std::nth_element(row.begin(), nth, row.end());
    out(i) = std::max(std::sqrt(*nth), kBandwidthFloor);
  }
  return out;
}

// Candidates ordered by descending similarity, ties by lower index.
std::vector<Eigen::Index> top_neighbors(const Eigen::MatrixXd& sim, Eigen::Index i,
                                        std::vector<Eigen::Index> candidates,
                                        int count) {
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return sim(i, a) > sim(i, b); });
  if (static_cast<int>(candidates.size()) > count) {
    candidates.resize(static_cast<std::size_t>(count));
  }
  return candidates;
}

}  // namespace

PairwiseDistances component_distances(std::span<const GaussianComponent> components) {
  const auto n = static_cast<Eigen::Index>(components.size());
  std::vector<Eigen::MatrixXd> logs;
  logs.reserve(components.size());
  for (const auto& c : components) {
    if (c.dim() != components.front().dim()) {
      throw UsageError("component dimensions disagree");
    }
    logs.push_back(sym_log(c.covariance).matrix());
  }
  PairwiseDistances d{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      d.mean_sq(i, j) = d.mean_sq(j, i) =
          (components[static_cast<std::size_t>(i)].mean -
           components[static_cast<std::size_t>(j)].mean)
              .squaredNorm();
      d.cov_sq(i, j) = d.cov_sq(j, i) =
          (logs[static_cast<std::size_t>(i)] - logs[static_cast<std::size_t>(j)])
              .squaredNorm();
    }
  }
  return d;
}

double heat_similarity(double lambda, double mean_dist_sq, double cov_dist_sq,
                       double mean_bandwidth_sq, double cov_bandwidth_sq) {
  return lambda * std::exp(-mean_dist_sq / (2.0 * mean_bandwidth_sq)) +
         std::exp(-cov_dist_sq / (2.0 * cov_bandwidth_sq));
}

double component_similarity(const GaussianComponent& a, const GaussianComponent& b,
                            double lambda, double sigma_mean, double sigma_cov) {
  if (a.dim() != b.dim()) throw UsageError("component_similarity: dimension mismatch");
  if (!(sigma_mean > 0.0 && sigma_cov > 0.0)) {
    throw UsageError("component_similarity: bandwidths must be positive");
  }
  const double dmu = (a.mean - b.mean).squaredNorm();
  const double dsig = std::pow(lem_distance(a.covariance, b.covariance), 2);
  return heat_similarity(lambda, dmu, dsig, sigma_mean * sigma_mean, sigma_cov * sigma_cov);
}

ComponentBandwidths median_bandwidths(const PairwiseDistances& distances) {
  const Eigen::Index n = distances.mean_sq.rows();
  return ComponentBandwidths{
      Eigen::VectorXd::Constant(n, median_offdiagonal(distances.mean_sq)),
      Eigen::VectorXd::Constant(n, median_offdiagonal(distances.cov_sq))};
}

ComponentBandwidths self_tuning_bandwidths(const PairwiseDistances& distances,
                                           int neighbor) {
  if (neighbor < 1) throw UsageError("self-tuning neighbor index must be >= 1");
  const Eigen::Index n = distances.mean_sq.rows();
  if (n <= neighbor) {
    warn("only " + std::to_string(n) + " components; using the median pairwise "
         "distance as a global bandwidth instead of self-tuning");
    return median_bandwidths(distances);
  }
  return ComponentBandwidths{kth_neighbor_distance(distances.mean_sq, neighbor),
                             kth_neighbor_distance(distances.cov_sq, neighbor)};
}

ComponentBandwidths self_tuning_bandwidths(std::span<const GaussianComponent> components,
                                           int neighbor) {
  return self_tuning_bandwidths(component_distances(components), neighbor);
}

Eigen::MatrixXd similarity_matrix(const PairwiseDistances& distances,
                                  const ComponentBandwidths& bandwidths, double lambda) {
  const Eigen::Index n = distances.mean_sq.rows();
  Eigen::MatrixXd sim(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      sim(i, j) = heat_similarity(lambda, distances.mean_sq(i, j), distances.cov_sq(i, j),
                                  bandwidths.mean(i) * bandwidths.mean(j),
                                  bandwidths.cov(i) * bandwidths.cov(j));
    }
  }
  return sim;
}

void AffinityGraph::validate() const {
  const Eigen::Index n = size();
  if (between.rows() != n || between.cols() != n || within.cols() != n) {
    throw NumericalError("affinity graph: inconsistent shapes");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (within(i, i) != 0 || between(i, i) != 0) {
      throw NumericalError("affinity graph: nonzero diagonal");
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      const int w = within(i, j);
      const int b = between(i, j);
      if ((w != 0 && w != 1) || (b != 0 && b != 1) || (w == 1 && b == 1) ||
          w != within(j, i) || b != between(j, i)) {
        throw NumericalError("affinity graph: invariant violated at (" +
                             std::to_string(i) + ", " + std::to_string(j) + ")");
      }
    }
  }
}

AffinityGraph build_affinity(std::span<const LabeledComponent> components,
                             const AffinityOptions& options) {
  const auto n = static_cast<Eigen::Index>(components.size());
  if (options.within_neighbors < 1 || options.between_neighbors < 1) {
    throw UsageError("affinity neighbor counts must be >= 1");
  }
  if (!(options.lambda > 0.0)) throw UsageError("affinity lambda must be positive");
  {
    std::vector<int> labels;
    for (const auto& c : components) labels.push_back(c.label);
    std::sort(labels.begin(), labels.end());
    if (std::unique(labels.begin(), labels.end()) - labels.begin() < 2) {
      warn("affinity graph built from a single label: no between-class edges");
    }
  }

  std::vector<GaussianComponent> plain;
  plain.reserve(components.size());
  for (const auto& c : components) plain.push_back(c.component);
  const PairwiseDistances dist = component_distances(plain);

  AffinityGraph g;
  g.options = options;
  g.bandwidths = options.bandwidth == BandwidthMode::kSelfTuning
                     ? self_tuning_bandwidths(dist, options.self_tuning_neighbor)
                     : median_bandwidths(dist);
  const Eigen::MatrixXd sim = similarity_matrix(dist, g.bandwidths, options.lambda);

  g.within = Eigen::MatrixXi::Zero(n, n);
  g.between = Eigen::MatrixXi::Zero(n, n);
  int short_within = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& ci = components[static_cast<std::size_t>(i)];
    std::vector<Eigen::Index> same;
    std::vector<Eigen::Index> other;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto& cj = components[static_cast<std::size_t>(j)];
      if (cj.label == ci.label) {
        if (!(options.exclude_same_track && cj.track_id == ci.track_id)) same.push_back(j);
      } else {
        other.push_back(j);
      }
    }
    if (static_cast<int>(same.size()) < options.within_neighbors) ++short_within;
    for (Eigen::Index j : top_neighbors(sim, i, std::move(same), options.within_neighbors)) {
      g.within(i, j) = g.within(j, i) = 1;
    }
    for (Eigen::Index j : top_neighbors(sim, i, std::move(other), options.between_neighbors)) {
      g.between(i, j) = g.between(j, i) = 1;
    }
  }
  if (short_within > 0) {
    warn(std::to_string(short_within) + " component(s) have fewer than " +
         std::to_string(options.within_neighbors) + " same-label candidates");
  }
  g.validate();
  return g;
}

AffinityGraph empty_affinity(Eigen::Index n) {
  AffinityGraph g;
  g.within = Eigen::MatrixXi::Zero(n, n);
  g.between = Eigen::MatrixXi::Zero(n, n);
  g.bandwidths = ComponentBandwidths{Eigen::VectorXd::Ones(n), Eigen::VectorXd::Ones(n)};
  return g;
}

void write_affinity_text(std::ostream& out, const AffinityGraph& graph) {
  const Eigen::MatrixXi a = graph.within - graph.between;
  out << "affinity-v1 " << a.rows() << '\n';
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (j > 0) out << ' ';
      out << a(i, j);
    }
    out << '\n';
  }
}

}  // namespace dcar
