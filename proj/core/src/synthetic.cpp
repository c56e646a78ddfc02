#include "dcar/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "dcar/error.hpp"
#include "dcar/spd.hpp"

namespace dcar {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd gaussian_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = n(rng);
  }
  return m;
}

MatrixXd random_orthogonal(Index d, std::mt19937_64& rng) {
  return Embedding::orthonormalize(gaussian_matrix(d, d, rng)).matrix();
}

VectorXd random_unit(Index d, std::mt19937_64& rng) {
  VectorXd v = gaussian_matrix(d, 1, rng).col(0);
  return v / v.norm();
}

std::string padded(int value, int width) {
  std::string s = std::to_string(value);
  return std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(s.size()))),
                     '0') +
         s;
}

int digits(int n) { return n < 10 ? 1 : 1 + digits(n / 10); }

}  // namespace

void SyntheticSpec::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw UsageError("invalid synthetic spec: " + what);
  };
  need(events >= 2, "events must be >= 2");
  need(train_per_event >= 1 && test_per_event >= 0, "track counts out of range");
  need(frames >= 2, "frames must be >= 2");
  need(planted_dim >= 1 && planted_dim < dim, "need 1 <= planted_dim < dim");
  need(clusters_per_event >= 1, "clusters_per_event must be >= 1");
  need(separation >= 0.0 && noise > 0.0 && nuisance >= 0.0,
       "separation and nuisance must be >= 0 and noise > 0");
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const Index d = spec.dim;
  const Index q = spec.planted_dim;
  const MatrixXd basis = random_orthogonal(d, rng);
  const MatrixXd planted = basis.leftCols(q);
  const MatrixXd complement = basis.rightCols(d - q);

  // Each planted coordinate takes one of L evenly spaced levels per event,
  // assigned by a cyclic shift, so every pair of events differs in every
  // planted coordinate both in mean and in log-variance.
  const double span = spec.separation * spec.noise;
  const double strength = std::min(1.0, spec.separation / 5.0);
  auto level = [&](int l, Index k, int shift) {
    if (spec.events == 1) return 0.0;
    const int idx = static_cast<int>((l + shift * k) % spec.events);
    return static_cast<double>(idx) / (spec.events - 1) - 0.5;
  };

  struct Cluster {
    VectorXd mean;     // planted coordinates
    MatrixXd factor;   // covariance square root, planted coordinates
  };
  std::vector<std::vector<Cluster>> clusters(static_cast<std::size_t>(spec.events));
  for (int l = 0; l < spec.events; ++l) {
    VectorXd centre(q), log_var(q);
    for (Index k = 0; k < q; ++k) {
      centre(k) = span * level(l, k, 1);
      log_var(k) = 2.0 * strength * level(l, k + 1, 2);
    }
    const MatrixXd factor = spec.noise * (0.5 * log_var).array().exp().matrix().asDiagonal();
    for (int c = 0; c < spec.clusters_per_event; ++c) {
      const VectorXd offset = 0.1 * span * random_unit(q, rng);
      clusters[static_cast<std::size_t>(l)].push_back(Cluster{centre + offset, factor});
    }
  }

  SyntheticData data;
  data.subspace = Embedding(planted, 1e-8);
  const int width = digits(std::max(1, spec.events - 1));
  const int track_width = digits(std::max(spec.train_per_event, spec.test_per_event));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (Split split : {Split::kTrain, Split::kTest}) {
    const int per_event = split == Split::kTrain ? spec.train_per_event : spec.test_per_event;
    for (int l = 0; l < spec.events; ++l) {
      const std::string label = "ev" + padded(l, width);
      const auto& cl = clusters[static_cast<std::size_t>(l)];
      for (int t = 0; t < per_event; ++t) {
        const std::string id = label + "_" + split_name(split) + "_" + padded(t, track_width);
        const VectorXd offset = spec.nuisance * spec.noise * gaussian_matrix(d - q, 1, rng).col(0);
        const double nuisance_sd =
            spec.noise * std::exp(0.5 * spec.nuisance * std::log(2.0) * (2.0 * uniform(rng) - 1.0));
        VectorXd mix(static_cast<Index>(cl.size()));
        for (Index c = 0; c < mix.size(); ++c) mix(c) = 0.5 + uniform(rng);
        mix /= mix.sum();
        FrameMatrix fm;
        fm.track_id = id;
        fm.columns.resize(d, spec.frames);
        for (int f = 0; f < spec.frames; ++f) {
          double u = uniform(rng);
          std::size_t c = 0;
          while (c + 1 < cl.size() && u >= mix(static_cast<Index>(c))) {
            u -= mix(static_cast<Index>(c));
            ++c;
          }
          VectorXd zp(q);
          for (Index i = 0; i < q; ++i) zp(i) = normal(rng);
          VectorXd zn(d - q);
          for (Index i = 0; i < d - q; ++i) zn(i) = normal(rng);
          fm.columns.col(f) = planted * (cl[c].mean + cl[c].factor * zp) +
                              complement * (offset + nuisance_sd * zn);
        }
        data.entries.push_back(
            ManifestEntry{id, std::filesystem::path("frames") / (id + ".frames"), label, split});
        data.tracks.push_back(std::move(fm));
      }
    }
  }
  return data;
}

void write_synthetic(const SyntheticData& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "frames");
  for (std::size_t i = 0; i < data.tracks.size(); ++i) {
    save_frames(dir / data.entries[i].path, data.tracks[i]);
  }
  std::ofstream out(dir / "manifest.csv");
  if (!out) throw DataError("cannot write " + (dir / "manifest.csv").string());
  write_manifest(out, data.entries);
  save_embedding(dir / "subspace.emb", data.subspace);
}

void ComponentSpec::validate() const {
  if (events < 2 || per_event < 1 || dim < 1 || subspace_dim < 1 || subspace_dim > dim ||
      strength < 0.0 || noise < 0.0) {
    throw UsageError("invalid component spec");
  }
}

std::vector<LabeledTrackGmm> generate_components(const ComponentSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const Index d = spec.dim;
  std::vector<MatrixXd> bases;
  for (int l = 0; l < spec.events; ++l) {
    bases.push_back(random_orthogonal(d, rng).leftCols(spec.subspace_dim));
  }
  const int width = digits(std::max(1, spec.events - 1));
  std::vector<LabeledTrackGmm> out;
  for (int l = 0; l < spec.events; ++l) {
    const std::string label = "ev" + padded(l, width);
    const MatrixXd& u = bases[static_cast<std::size_t>(l)];
    for (int i = 0; i < spec.per_event; ++i) {
      const MatrixXd g = gaussian_matrix(d, d, rng);
      const MatrixXd log_cov =
          spec.strength * u * u.transpose() + spec.noise * 0.5 * (g + g.transpose());
      GaussianComponent comp{1.0, gaussian_matrix(d, 1, rng).col(0),
                             sym_exp(SymMatrix(log_cov))};
      TrackGmm gmm;
      gmm.track_id = label + "_c" + padded(i, digits(spec.per_event));
      gmm.components.push_back(std::move(comp));
      out.push_back(LabeledTrackGmm{std::move(gmm), label});
    }
  }
  return out;
}

}  // namespace dcar
