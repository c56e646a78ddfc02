#include "dcar/classifier.hpp"

#include <algorithm>
#include <cmath>

#include "dcar/error.hpp"
#include "dcar/log.hpp"

namespace dcar {
namespace {

double median_of(std::vector<double> values) {
  if (values.empty()) return 1e-12;
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  double med = *mid;
  if (values.size() % 2 == 0) med = 0.5 * (med + *std::max_element(values.begin(), mid));
  return std::max(med, 1e-12);
}

}  // namespace

Eigen::MatrixXd label_matrix(std::span<const int> labels, int event_count) {
  if (event_count < 2) throw UsageError("label matrix needs at least two events");
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()),
                                            event_count);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= event_count) {
      throw DataError("label " + std::to_string(labels[i]) + " outside the event catalog");
    }
    y(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  }
  return y;
}

void KernelParams::validate() const {
  if (!(lambda > 0.0 && sigma_mean > 0.0 && sigma_cov > 0.0 && alpha > 0.0)) {
    throw UsageError("kernel parameters must all be positive");
  }
}

KernelPoint KernelPoint::from_component(const GaussianComponent& g) {
  return KernelPoint{g.mean, sym_log(g.covariance).matrix()};
}

KernelPoint KernelPoint::from_vector(const Eigen::VectorXd& v) {
  return KernelPoint{v, Eigen::MatrixXd()};
}

double kernel_value(const KernelPoint& a, const KernelPoint& b, const KernelParams& params) {
  if (a.mean.size() != b.mean.size() || a.log_cov.rows() != b.log_cov.rows()) {
    throw UsageError("kernel_value: dimension mismatch");
  }
  const double mean_term =
      std::exp(-(a.mean - b.mean).squaredNorm() / (2.0 * params.sigma_mean * params.sigma_mean));
  if (a.log_cov.size() == 0) return mean_term;
  const double cov_term = std::exp(-(a.log_cov - b.log_cov).squaredNorm() /
                                   (2.0 * params.sigma_cov * params.sigma_cov));
  return params.lambda * mean_term + cov_term;
}

double kernel_value(const GaussianComponent& a, const GaussianComponent& b,
                    const KernelParams& params) {
  return kernel_value(KernelPoint::from_component(a), KernelPoint::from_component(b), params);
}

std::pair<double, double> median_kernel_bandwidths(std::span<const KernelPoint> points) {
  std::vector<double> mean_d;
  std::vector<double> cov_d;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      mean_d.push_back((points[i].mean - points[j].mean).norm());
      if (points[i].log_cov.size() != 0) {
        cov_d.push_back((points[i].log_cov - points[j].log_cov).norm());
      }
    }
  }
  return {median_of(std::move(mean_d)), median_of(std::move(cov_d))};
}

Eigen::MatrixXd kernel_matrix(std::span<const KernelPoint> points, const KernelParams& params) {
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = kernel_value(points[static_cast<std::size_t>(i)],
                           points[static_cast<std::size_t>(i)], params);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      k(i, j) = k(j, i) = kernel_value(points[static_cast<std::size_t>(i)],
                                       points[static_cast<std::size_t>(j)], params);
    }
  }
  return k;
}

KrrSolution solve_krr(const Eigen::MatrixXd& kernel, const Eigen::MatrixXd& targets,
                      double alpha) {
  if (kernel.rows() != kernel.cols() || kernel.rows() != targets.rows()) {
    throw UsageError("solve_krr: shape mismatch");
  }
  if (!(alpha > 0.0)) throw UsageError("solve_krr: alpha must be positive");
  const Eigen::Index n = kernel.rows();
  double a = alpha;
  for (int attempt = 0; attempt <= 3; ++attempt, a *= 10.0) {
    Eigen::MatrixXd system = kernel;
    system.diagonal().array() += a;
    Eigen::LLT<Eigen::MatrixXd> llt(system);
    if (llt.info() != Eigen::Success) {
      if (attempt < 3) {
        warn("KRR factorization failed with alpha=" + std::to_string(a) +
             "; retrying with a larger ridge");
      }
      continue;
    }
    KrrSolution sol;
    sol.alpha = a;
    sol.coefficients = llt.solve(targets);
    const Eigen::MatrixXd residual = targets - system * sol.coefficients;
    sol.coefficients += llt.solve(residual);
    sol.residual = (system * sol.coefficients - targets).norm();
    if (!sol.coefficients.allFinite()) continue;
    return sol;
  }
  throw NumericalError("KRR: (K + alpha I) could not be factorized for N=" +
                       std::to_string(n) + " starting from alpha=" + std::to_string(alpha));
}

Eigen::MatrixXd KrrModel::kernel_rows(std::span<const KernelPoint> queries) const {
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(queries.size()),
                       static_cast<Eigen::Index>(points.size()));
  for (std::size_t p = 0; p < queries.size(); ++p) {
    if (!points.empty() && queries[p].mean.size() != points.front().mean.size()) {
      throw DataError("query dimension " + std::to_string(queries[p].mean.size()) +
                      " does not match the model's " +
                      std::to_string(points.front().mean.size()));
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
      rows(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(i)) =
          kernel_value(queries[p], points[i], params);
    }
  }
  return rows;
}

KrrModel train_krr(std::vector<KernelPoint> points, std::vector<int> labels, int event_count,
                   const KernelParams& params) {
  params.validate();
  if (points.size() != labels.size()) throw UsageError("train_krr: label count mismatch");
  if (points.size() < static_cast<std::size_t>(event_count)) {
    throw DataError("train_krr: fewer training items than events");
  }
  KrrModel model;
  model.event_count = event_count;
  model.params = params;
  const Eigen::MatrixXd y = label_matrix(labels, event_count);
  const Eigen::MatrixXd k = kernel_matrix(points, params);
  const KrrSolution sol = solve_krr(k, y, params.alpha);
  model.params.alpha = sol.alpha;
  model.coefficients = sol.coefficients;
  model.points = std::move(points);
  model.labels = std::move(labels);
  return model;
}

MembershipMatrix predict_membership(const KrrModel& model,
                                    std::span<const KernelPoint> queries,
                                    const Eigen::VectorXd& weights) {
  if (static_cast<Eigen::Index>(queries.size()) != weights.size()) {
    throw UsageError("predict_membership: one weight per component is required");
  }
  return MembershipMatrix{model.kernel_rows(queries) * model.coefficients, weights};
}

Eigen::VectorXd vote_scores(const MembershipMatrix& m) {
  if (m.scores.rows() == 0) throw UsageError("vote: empty membership matrix");
  return m.scores.transpose() * m.weights;
}

int vote(const MembershipMatrix& m) {
  const Eigen::VectorXd s = vote_scores(m);
  int best = 0;
  for (Eigen::Index j = 1; j < s.size(); ++j) {
    if (s(j) > s(best)) best = static_cast<int>(j);
  }
  return best;
}

Eigen::VectorXd mv_vector(const FrameMatrix& frames) {
  if (frames.frame_count() < 2) {
    throw DataError("mv-vector needs at least two frames (track '" + frames.track_id + "')");
  }
  const Eigen::VectorXd mean = frames.columns.rowwise().mean();
  const Eigen::VectorXd var =
      (frames.columns.colwise() - mean).array().square().rowwise().mean();
  Eigen::VectorXd out(2 * mean.size());
  out << mean, var;
  return out;
}

}  // namespace dcar
