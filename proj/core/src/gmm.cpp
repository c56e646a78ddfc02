#include "dcar/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "dcar/error.hpp"
#include "dcar/log.hpp"
#include "dcar/text_io.hpp"

namespace dcar {
namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct Parameters {
  Eigen::VectorXd weights;
  Eigen::MatrixXd means;                 // d x P
  std::vector<Eigen::MatrixXd> covs;     // P of d x d
};

// Per-frame, per-component log(w_p N(x_j)) as an m x P matrix.
Eigen::MatrixXd weighted_log_densities(const Eigen::MatrixXd& x, const Parameters& p) {
  const Eigen::Index d = x.rows();
  const Eigen::Index m = x.cols();
  const auto k = static_cast<Eigen::Index>(p.covs.size());
  const double log2pi = std::log(2.0 * std::numbers::pi);
  Eigen::MatrixXd out(m, k);
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::LLT<Eigen::MatrixXd> llt(p.covs[static_cast<std::size_t>(c)]);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("EM: covariance lost positive definiteness");
    }
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    const Eigen::MatrixXd z = llt.matrixL().solve(x.colwise() - p.means.col(c));
    const Eigen::VectorXd maha = z.colwise().squaredNorm().transpose();
    out.col(c) = (std::log(p.weights(c)) - 0.5 * (d * log2pi + logdet)) -
                 0.5 * maha.array();
  }
  return out;
}

// Row-wise log-sum-exp.
Eigen::VectorXd log_sum_exp_rows(const Eigen::MatrixXd& a) {
  Eigen::VectorXd out(a.rows());
  for (Eigen::Index j = 0; j < a.rows(); ++j) {
    const double hi = a.row(j).maxCoeff();
    out(j) = hi + std::log((a.row(j).array() - hi).exp().sum());
  }
  return out;
}

Eigen::MatrixXd scatter(const Eigen::MatrixXd& x, const Eigen::VectorXd& mean,
                        const Eigen::VectorXd& resp, double mass) {
  const Eigen::MatrixXd centered = x.colwise() - mean;
  const Eigen::MatrixXd s = (centered * resp.asDiagonal() * centered.transpose()) / mass;
  return 0.5 * (s + s.transpose());
}

Eigen::MatrixXd data_covariance(const Eigen::MatrixXd& x) {
  const Eigen::VectorXd mean = x.rowwise().mean();
  const Eigen::MatrixXd centered = x.colwise() - mean;
  const Eigen::MatrixXd s = centered * centered.transpose() / static_cast<double>(x.cols());
  return 0.5 * (s + s.transpose());
}

// k-means++ centers (indices into the frames), chosen with D^2 sampling.
std::vector<Eigen::Index> kmeanspp(const Eigen::MatrixXd& x, int k, std::mt19937_64& rng) {
  const Eigen::Index m = x.cols();
  std::vector<Eigen::Index> centers;
  centers.push_back(std::min<Eigen::Index>(
      m - 1, static_cast<Eigen::Index>(uniform01(rng) * static_cast<double>(m))));
  Eigen::VectorXd d2 = (x.colwise() - x.col(centers[0])).colwise().squaredNorm().transpose();
  while (static_cast<int>(centers.size()) < k) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double target = uniform01(rng) * total;
      pick = m - 1;
      for (Eigen::Index j = 0; j < m; ++j) {
        target -= d2(j);
        if (target < 0.0) {
          pick = j;
          break;
        }
      }
    } else {
      // All frames coincide with a center; fall back to distinct indices.
      pick = static_cast<Eigen::Index>(centers.size()) % m;
    }
    centers.push_back(pick);
    const Eigen::VectorXd nd2 =
        (x.colwise() - x.col(pick)).colwise().squaredNorm().transpose();
    d2 = d2.cwiseMin(nd2);
  }
  return centers;
}

}  // namespace

void GaussianComponent::validate() const {
  if (!(weight > 0.0 && weight <= 1.0)) {
    throw DataError("component weight " + std::to_string(weight) + " outside (0, 1]");
  }
  if (mean.size() != covariance.dim()) {
    throw DataError("component mean/covariance dimensions disagree");
  }
}

void TrackGmm::validate() const {
  if (components.empty()) throw DataError("GMM '" + track_id + "' has no components");
  double total = 0.0;
  for (const auto& c : components) {
    c.validate();
    if (c.dim() != dim()) {
      throw DataError("GMM '" + track_id + "' mixes component dimensions");
    }
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw DataError("GMM '" + track_id + "' weights sum to " + text::format_real(total));
  }
}

GmmFit fit_track_gmm(const FrameMatrix& frames, int components, std::uint64_t seed,
                     const EmConfig& config) {
  frames.validate();
  if (components < 1) throw UsageError("GMM component count must be >= 1");
  const Eigen::MatrixXd& x = frames.columns;
  const Eigen::Index d = x.rows();
  const Eigen::Index m = x.cols();
  int k = components;
  if (m < k) {
    warn("track '" + frames.track_id + "' has " + std::to_string(m) +
         " frames; clamping GMM components from " + std::to_string(k) + " to " +
         std::to_string(m));
    k = static_cast<int>(m);
  }

  const Eigen::MatrixXd data_cov = data_covariance(x);
  const double epsilon = std::max(1e-6 * data_cov.trace() / static_cast<double>(d), 1e-10);
  const Eigen::MatrixXd ridge = epsilon * Eigen::MatrixXd::Identity(d, d);

  std::mt19937_64 rng(seed);
  Parameters p;
  p.weights.resize(k);
  p.means.resize(d, k);
  p.covs.assign(static_cast<std::size_t>(k), data_cov + ridge);
  // Unregularized scatter per component; covs[i] == raw[i] + epsilon * I.
  std::vector<Eigen::MatrixXd> raw(static_cast<std::size_t>(k), data_cov);

  // Seeding, then one hard-assignment M-step.
  {
    const auto centers = kmeanspp(x, k, rng);
    Eigen::MatrixXd c(d, k);
    for (int i = 0; i < k; ++i) c.col(i) = x.col(centers[static_cast<std::size_t>(i)]);
    Eigen::MatrixXd hard = Eigen::MatrixXd::Zero(m, k);
    for (Eigen::Index j = 0; j < m; ++j) {
      Eigen::Index best = 0;
      (c.colwise() - x.col(j)).colwise().squaredNorm().minCoeff(&best);
      hard(j, best) = 1.0;
    }
    for (int i = 0; i < k; ++i) {
      const double mass = hard.col(i).sum();
      if (mass > 0.0) {
        p.weights(i) = mass / static_cast<double>(m);
        p.means.col(i) = x * hard.col(i) / mass;
        raw[static_cast<std::size_t>(i)] = scatter(x, p.means.col(i), hard.col(i), mass);
        p.covs[static_cast<std::size_t>(i)] = raw[static_cast<std::size_t>(i)] + ridge;
      } else {
        p.weights(i) = 1.0 / static_cast<double>(m);
        p.means.col(i) = c.col(i);
      }
    }
    p.weights /= p.weights.sum();
  }

  GmmFit fit;
  double previous = -std::numeric_limits<double>::infinity();
  for (int iter = 0;; ++iter) {
    const Eigen::MatrixXd logp = weighted_log_densities(x, p);
    const Eigen::VectorXd frame_ll = log_sum_exp_rows(logp);
    const double ll = frame_ll.sum();
    if (!std::isfinite(ll)) {
      throw NumericalError("EM: non-finite log-likelihood on track '" +
                           frames.track_id + "'");
    }
    fit.log_likelihood.push_back(ll);
    if (iter > 0 && std::abs(ll - previous) <= config.relative_tolerance * std::abs(previous)) {
      fit.converged = true;
      break;
    }
    if (iter >= config.max_iterations) break;
    previous = ll;
    fit.iterations = iter + 1;

    const Eigen::MatrixXd resp = (logp.colwise() - frame_ll).array().exp().matrix();
    const Eigen::VectorXd mass = resp.colwise().sum().transpose();
    for (int i = 0; i < k; ++i) {
      if (mass(i) < config.collapse_fraction * static_cast<double>(m)) {
        Eigen::Index worst = 0;
        frame_ll.minCoeff(&worst);
        p.means.col(i) = x.col(worst);
        raw[static_cast<std::size_t>(i)] = data_cov;
        p.covs[static_cast<std::size_t>(i)] = data_cov + ridge;
        p.weights(i) = 1.0 / static_cast<double>(m);
        ++fit.reseeds;
        continue;
      }
      p.weights(i) = mass(i) / static_cast<double>(m);
      p.means.col(i) = x * resp.col(i) / mass(i);
      raw[static_cast<std::size_t>(i)] = scatter(x, p.means.col(i), resp.col(i), mass(i));
      p.covs[static_cast<std::size_t>(i)] = raw[static_cast<std::size_t>(i)] + ridge;
    }
    p.weights /= p.weights.sum();
  }

  fit.model.track_id = frames.track_id;
  fit.model.components.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    GaussianComponent g;
    g.weight = p.weights(i);
    g.mean = p.means.col(i);
    g.covariance = regularize_spd(SymMatrix(raw[static_cast<std::size_t>(i)]), epsilon);
    fit.model.components.push_back(std::move(g));
  }
  return fit;
}

double log_likelihood(const TrackGmm& gmm, const FrameMatrix& frames) {
  gmm.validate();
  if (gmm.dim() != frames.dim()) {
    throw UsageError("log_likelihood: GMM dimension " + std::to_string(gmm.dim()) +
                     " vs frame dimension " + std::to_string(frames.dim()));
  }
  Parameters p;
  const auto k = static_cast<Eigen::Index>(gmm.components.size());
  p.weights.resize(k);
  p.means.resize(gmm.dim(), k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto& c = gmm.components[static_cast<std::size_t>(i)];
    p.weights(i) = c.weight;
    p.means.col(i) = c.mean;
    p.covs.push_back(c.covariance.matrix());
  }
  return log_sum_exp_rows(weighted_log_densities(frames.columns, p)).sum();
}

std::vector<LabeledComponent> pool_components(std::span<const TrackGmm> models,
                                              std::span<const int> labels) {
  if (models.empty()) throw UsageError("pool_components: no models");
  if (models.size() != labels.size()) {
    throw DataError("pool_components: every track needs exactly one label");
  }
  std::vector<LabeledComponent> pooled;
  for (std::size_t t = 0; t < models.size(); ++t) {
    if (labels[t] < 0) {
      throw DataError("pool_components: track '" + models[t].track_id + "' has no label");
    }
    for (const auto& c : models[t].components) {
      pooled.push_back(LabeledComponent{c, labels[t], models[t].track_id});
    }
  }
  return pooled;
}

void write_gmm(std::ostream& out, const TrackGmm& gmm, const std::string& label) {
  out << "gmm-v1 " << gmm.track_id << ' ' << label << ' ' << gmm.dim() << ' '
      << gmm.components.size() << '\n';
  for (const auto& c : gmm.components) {
    out << text::format_real(c.weight) << '\n';
    text::write_row(out, c.mean);
    for (Eigen::Index r = 0; r < c.dim(); ++r) {
      text::write_row(out, c.covariance.matrix().row(r).transpose());
    }
  }
}

std::vector<LabeledTrackGmm> read_gmm_blocks(std::istream& in, const std::string& source) {
  text::LineReader reader(in, source);
  std::vector<LabeledTrackGmm> blocks;
  std::vector<std::string> header;
  while (reader.try_tokens(header)) {
    if (header.size() != 5 || header[0] != "gmm-v1") {
      reader.fail("expected header 'gmm-v1 <track_id> <label> <d> <P>'");
    }
    LabeledTrackGmm block;
    block.gmm.track_id = header[1];
    block.label = header[2];
    const auto d = text::parse_integer(header[3]);
    const auto count = text::parse_integer(header[4]);
    if (d < 1 || count < 1) reader.fail("dimensions must be positive");
    for (long long c = 0; c < count; ++c) {
      GaussianComponent g;
      g.weight = reader.real_row(1)(0);
      g.mean = reader.real_row(d);
      Eigen::MatrixXd cov(d, d);
      for (long long r = 0; r < d; ++r) cov.row(r) = reader.real_row(d).transpose();
      try {
        g.covariance = SpdMatrix(cov);
      } catch (const NumericalError& e) {
        reader.fail(e.what());
      }
      block.gmm.components.push_back(std::move(g));
    }
    try {
      block.gmm.validate();
    } catch (const DataError& e) {
      reader.fail(e.what());
    }
    blocks.push_back(std::move(block));
  }
  return blocks;
}

std::vector<LabeledTrackGmm> load_gmm_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_gmm_blocks(in, path.string());
}

}  // namespace dcar
