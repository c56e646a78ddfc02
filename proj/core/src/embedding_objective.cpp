#include "dcar/embedding_objective.hpp"

#include <cmath>

#include "dcar/error.hpp"

namespace dcar {
namespace {

// (log a - log b) / (a - b), continuous at a == b.
double log_divided_difference(double a, double b) {
  const double x = a / b - 1.0;
  if (std::abs(x) < 1e-6) return (1.0 - x / 2.0 + x * x / 3.0) / b;
  return (std::log(a) - std::log(b)) / (a - b);
}

}  // namespace

Eigen::MatrixXd log_frechet_derivative(const Eigen::VectorXd& eigenvalues,
                                       const Eigen::MatrixXd& eigenvectors,
                                       const Eigen::MatrixXd& direction) {
  const Eigen::Index r = eigenvalues.size();
  Eigen::MatrixXd inner = eigenvectors.transpose() * direction * eigenvectors;
  for (Eigen::Index k = 0; k < r; ++k) {
    for (Eigen::Index l = 0; l < r; ++l) {
      inner(k, l) *= log_divided_difference(eigenvalues(k), eigenvalues(l));
    }
  }
  return eigenvectors * inner * eigenvectors.transpose();
}

EmbeddingObjective::EmbeddingObjective(std::span<const GaussianComponent> components,
                                       const AffinityGraph& affinity, double lambda,
                                       GradientForm form)
    : lambda_(lambda), form_(form) {
  const auto n = static_cast<Eigen::Index>(components.size());
  if (n == 0) throw UsageError("embedding objective: no components");
  if (affinity.size() != n) {
    throw UsageError("embedding objective: affinity graph has " +
                     std::to_string(affinity.size()) + " nodes for " + std::to_string(n) +
                     " components");
  }
  if (!(lambda > 0.0)) throw UsageError("embedding objective: lambda must be positive");
  const Eigen::Index d = components.front().dim();
  covariances_.reserve(components.size());
  for (const auto& c : components) {
    if (c.dim() != d) throw UsageError("embedding objective: mixed component dimensions");
    covariances_.push_back(c.covariance.matrix());
  }
  mean_scatter_ = Eigen::MatrixXd::Zero(d, d);
  std::vector<bool> touched(components.size(), false);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const int a = affinity.within(i, j) - affinity.between(i, j);
      if (a == 0) continue;
      edges_.push_back(Edge{static_cast<int>(i), static_cast<int>(j), static_cast<double>(a)});
      touched[static_cast<std::size_t>(i)] = touched[static_cast<std::size_t>(j)] = true;
      const Eigen::VectorXd delta = components[static_cast<std::size_t>(i)].mean -
                                    components[static_cast<std::size_t>(j)].mean;
      // Both orderings (i, j) and (j, i) contribute.
      mean_scatter_.noalias() += (2.0 * a) * delta * delta.transpose();
    }
  }
  for (std::size_t i = 0; i < touched.size(); ++i) {
    if (touched[i]) active_.push_back(static_cast<int>(i));
  }
}

std::vector<EmbeddingObjective::Reduced> EmbeddingObjective::reduce_all(
    const Eigen::MatrixXd& w) const {
  if (w.rows() != ambient_dim()) {
    throw UsageError("embedding objective: W has " + std::to_string(w.rows()) +
                     " rows, expected " + std::to_string(ambient_dim()));
  }
  std::vector<Reduced> reduced(covariances_.size());
  for (int i : active_) {
    const SpdMatrix s(w.transpose() * covariances_[static_cast<std::size_t>(i)] * w);
    Reduced& red = reduced[static_cast<std::size_t>(i)];
    red.eigenvalues = s.eigenvalues();
    red.eigenvectors = s.eigenvectors();
    red.log = sym_log(s).matrix();
  }
  return reduced;
}

double EmbeddingObjective::value_from(const Eigen::MatrixXd& w,
                                      const std::vector<Reduced>& reduced) const {
  double cov_term = 0.0;
  for (const Edge& e : edges_) {
    cov_term += e.weight * (reduced[static_cast<std::size_t>(e.i)].log -
                            reduced[static_cast<std::size_t>(e.j)].log)
                               .squaredNorm();
  }
  const double mean_term = (w.transpose() * mean_scatter_ * w).trace();
  const double value = lambda_ * mean_term + 2.0 * cov_term;
  if (!std::isfinite(value)) throw NumericalError("embedding objective is not finite");
  return value;
}

double EmbeddingObjective::value(const Eigen::MatrixXd& w) const {
  return value_from(w, reduce_all(w));
}

std::pair<double, Eigen::MatrixXd> EmbeddingObjective::value_and_gradient(
    const Eigen::MatrixXd& w) const {
  const auto reduced = reduce_all(w);
  const double value = value_from(w, reduced);
  const Eigen::Index r = w.cols();

  // B_i = sum_j A_ij (log_i - log_j).
  std::vector<Eigen::MatrixXd> b(covariances_.size());
  for (int i : active_) b[static_cast<std::size_t>(i)] = Eigen::MatrixXd::Zero(r, r);
  for (const Edge& e : edges_) {
    const Eigen::MatrixXd diff =
        reduced[static_cast<std::size_t>(e.i)].log - reduced[static_cast<std::size_t>(e.j)].log;
    b[static_cast<std::size_t>(e.i)] += e.weight * diff;
    b[static_cast<std::size_t>(e.j)] -= e.weight * diff;
  }

  Eigen::MatrixXd grad = (2.0 * lambda_) * (mean_scatter_ * w);
  for (int i : active_) {
    const auto idx = static_cast<std::size_t>(i);
    const Reduced& red = reduced[idx];
    Eigen::MatrixXd e;
    if (form_ == GradientForm::kExact) {
      e = log_frechet_derivative(red.eigenvalues, red.eigenvectors, b[idx]);
    } else {
      e = red.eigenvectors * red.eigenvalues.cwiseInverse().asDiagonal() *
          red.eigenvectors.transpose() * b[idx];
    }
    grad.noalias() += 8.0 * covariances_[idx] * w * e;
  }
  return {value, std::move(grad)};
}

Eigen::MatrixXd EmbeddingObjective::euclidean_gradient(const Eigen::MatrixXd& w) const {
  return value_and_gradient(w).second;
}

double objective(const Embedding& w, std::span<const GaussianComponent> components,
                 const AffinityGraph& affinity, double lambda) {
  return EmbeddingObjective(components, affinity, lambda).value(w.matrix());
}

Eigen::MatrixXd euclidean_gradient(const Embedding& w,
                                   std::span<const GaussianComponent> components,
                                   const AffinityGraph& affinity, double lambda,
                                   GradientForm form) {
  return EmbeddingObjective(components, affinity, lambda, form)
      .euclidean_gradient(w.matrix());
}

}  // namespace dcar
