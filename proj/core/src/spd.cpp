#include "dcar/spd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "dcar/error.hpp"

namespace dcar {
namespace {

void require_square(const Eigen::MatrixXd& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    std::ostringstream os;
    os << what << ": expected a nonempty square matrix, got " << m.rows()
       << "x" << m.cols();
    throw UsageError(os.str());
  }
  if (!m.allFinite()) {
    throw NumericalError(std::string(what) + ": matrix has non-finite entries");
  }
}

void require_same_dim(const SpdMatrix& a, const SpdMatrix& b) {
  if (a.dim() != b.dim()) {
    throw UsageError("SPD dimension mismatch: " + std::to_string(a.dim()) +
                     " vs " + std::to_string(b.dim()));
  }
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

}  // namespace

SymMatrix::SymMatrix(const Eigen::MatrixXd& m) {
  require_square(m, "SymMatrix");
  m_ = symmetrized(m);
}

SpdMatrix::SpdMatrix(const Eigen::MatrixXd& m) {
  require_square(m, "SpdMatrix");
  m_ = symmetrized(m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m_);
  if (es.info() != Eigen::Success) {
    throw NumericalError("SpdMatrix: eigendecomposition failed");
  }
  eigenvalues_ = es.eigenvalues();
  eigenvectors_ = es.eigenvectors();
  if (!(eigenvalues_(0) > 0.0)) {
    std::ostringstream os;
    os.precision(17);
    os << "matrix is not positive definite: smallest eigenvalue "
       << eigenvalues_(0);
    throw NumericalError(os.str());
  }
}

double SpdMatrix::log_determinant() const {
  return eigenvalues_.array().log().sum();
}

SpdMatrix regularize_spd(const SymMatrix& m, double epsilon) {
  if (!(epsilon > 0.0)) {
    throw UsageError("regularize_spd: epsilon must be positive");
  }
  Eigen::MatrixXd r = m.matrix();
  r.diagonal().array() += epsilon;
  try {
    return SpdMatrix(r);
  } catch (const NumericalError& e) {
    throw NumericalError(std::string("regularize_spd: ") + e.what());
  }
}

double default_regularization(const SymMatrix& m) {
  const double scale = m.matrix().trace() / static_cast<double>(m.dim());
  return std::max(1e-6 * scale, 1e-10);
}

SymMatrix sym_log(const SpdMatrix& m) {
  const Eigen::MatrixXd& u = m.eigenvectors();
  return SymMatrix(u * m.eigenvalues().array().log().matrix().asDiagonal() *
                   u.transpose());
}

SpdMatrix sym_exp(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.matrix());
  if (es.info() != Eigen::Success) {
    throw NumericalError("sym_exp: eigendecomposition failed");
  }
  const Eigen::MatrixXd& u = es.eigenvectors();
  return SpdMatrix(u * es.eigenvalues().array().exp().matrix().asDiagonal() *
                   u.transpose());
}

double lem_distance(const SpdMatrix& a, const SpdMatrix& b) {
  require_same_dim(a, b);
  return (sym_log(a).matrix() - sym_log(b).matrix()).norm();
}

double airm_distance(const SpdMatrix& a, const SpdMatrix& b) {
  require_same_dim(a, b);
  // The eigenvalues of a^{-1/2} b a^{-1/2} are those of the pencil (b, a).
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(
      b.matrix(), a.matrix(), Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  if (ges.info() != Eigen::Success) {
    throw NumericalError("airm_distance: generalized eigensolver failed");
  }
  const Eigen::VectorXd& ev = ges.eigenvalues();
  if (!(ev.minCoeff() > 0.0)) {
    throw NumericalError("airm_distance: non-positive generalized eigenvalue");
  }
  return std::sqrt(ev.array().log().square().sum());
}

double stein_divergence(const SpdMatrix& a, const SpdMatrix& b) {
  require_same_dim(a, b);
  Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (a.matrix() + b.matrix()));
  if (llt.info() != Eigen::Success) {
    throw NumericalError("stein_divergence: midpoint is not SPD");
  }
  const double logdet_mid =
      2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double value =
      logdet_mid - 0.5 * (a.log_determinant() + b.log_determinant());
  // Rounding can leave a tiny negative value when a == b.
  return std::max(value, 0.0);
}

std::string_view metric_name(SpdMetric metric) {
  switch (metric) {
    case SpdMetric::kLogEuclidean:
      return "lem";
    case SpdMetric::kAffineInvariant:
      return "airm";
    case SpdMetric::kStein:
      return "stein";
  }
  return "unknown";
}

SpdMetric parse_metric(std::string_view name) {
  if (name == "lem") return SpdMetric::kLogEuclidean;
  if (name == "airm") return SpdMetric::kAffineInvariant;
  if (name == "stein") return SpdMetric::kStein;
  throw UsageError("unknown SPD metric '" + std::string(name) + "'");
}

double spd_distance(SpdMetric metric, const SpdMatrix& a, const SpdMatrix& b) {
  switch (metric) {
    case SpdMetric::kLogEuclidean:
      return lem_distance(a, b);
    case SpdMetric::kAffineInvariant:
      return airm_distance(a, b);
    case SpdMetric::kStein:
      return stein_divergence(a, b);
  }
  throw UsageError("unknown SPD metric");
}

Eigen::MatrixXd pairwise_distances(std::span<const SpdMatrix> covariances,
                                   SpdMetric metric) {
  const auto n = static_cast<Eigen::Index>(covariances.size());
  Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(n, n);
  if (metric == SpdMetric::kLogEuclidean) {
    std::vector<Eigen::MatrixXd> logs;
    logs.reserve(covariances.size());
    for (const auto& c : covariances) logs.push_back(sym_log(c).matrix());
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        if (logs[i].rows() != logs[j].rows()) {
          throw UsageError("SPD dimension mismatch in pairwise_distances");
        }
        dist(i, j) = dist(j, i) = (logs[i] - logs[j]).norm();
      }
    }
    return dist;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      dist(i, j) = dist(j, i) = spd_distance(metric, covariances[i], covariances[j]);
    }
  }
  return dist;
}

namespace {

void check_purity_inputs(std::span<const SpdMatrix> covariances,
                         std::span<const int> labels, int k) {
  if (covariances.size() != labels.size()) {
    throw UsageError("pc_purity: covariance and label counts differ");
  }
  const auto n = static_cast<int>(covariances.size());
  if (k < 1 || k >= n) {
    throw UsageError("pc_purity: k must satisfy 1 <= k < N (k=" +
                     std::to_string(k) + ", N=" + std::to_string(n) + ")");
  }
  std::set<int> distinct(labels.begin(), labels.end());
  if (distinct.size() < 2) {
    throw UsageError("pc_purity: at least two labels are required");
  }
}

// For each row, indices of the other items ordered by (distance, index).
std::vector<std::vector<int>> neighbor_orders(const Eigen::MatrixXd& dist) {
  const auto n = static_cast<int>(dist.rows());
  std::vector<std::vector<int>> orders(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& order = orders[static_cast<std::size_t>(i)];
    order.reserve(static_cast<std::size_t>(n - 1));
    for (int j = 0; j < n; ++j) {
      if (j != i) order.push_back(j);
    }
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return dist(i, a) < dist(i, b);
    });
  }
  return orders;
}

double purity_at(const std::vector<std::vector<int>>& orders,
                 std::span<const int> labels, int k) {
  double total = 0.0;
  for (std::size_t i = 0; i < orders.size(); ++i) {
    int same = 0;
    for (int q = 0; q < k; ++q) {
      if (labels[static_cast<std::size_t>(orders[i][static_cast<std::size_t>(q)])] ==
          labels[i]) {
        ++same;
      }
    }
    total += static_cast<double>(same) / k;
  }
  return total / static_cast<double>(orders.size());
}

}  // namespace

double pc_purity(std::span<const SpdMatrix> covariances,
                 std::span<const int> labels, SpdMetric metric, int k) {
  check_purity_inputs(covariances, labels, k);
  const auto orders = neighbor_orders(pairwise_distances(covariances, metric));
  return purity_at(orders, labels, k);
}

std::vector<double> pc_purity_curve(std::span<const SpdMatrix> covariances,
                                    std::span<const int> labels,
                                    SpdMetric metric, std::span<const int> ks) {
  for (int k : ks) check_purity_inputs(covariances, labels, k);
  const auto orders = neighbor_orders(pairwise_distances(covariances, metric));
  std::vector<double> out;
  out.reserve(ks.size());
  for (int k : ks) out.push_back(purity_at(orders, labels, k));
  return out;
}

}  // namespace dcar
