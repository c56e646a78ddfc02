#include "dcar/features.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <vector>

#include "dcar/error.hpp"
#include "dcar/text_io.hpp"

namespace dcar {
namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Eigen::Index next_pow2(Eigen::Index n) {
  Eigen::Index p = 1;
  while (p < n) p <<= 1;
  return p;
}

// filters x (nfft/2 + 1) triangular weights on the continuous mel scale.
Eigen::MatrixXd mel_filterbank(int filters, Eigen::Index nfft, int sample_rate) {
  const Eigen::Index bins = nfft / 2 + 1;
  const double top = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(static_cast<std::size_t>(filters) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(top * static_cast<double>(i) / (filters + 1));
  }
  Eigen::MatrixXd bank = Eigen::MatrixXd::Zero(filters, bins);
  for (int m = 0; m < filters; ++m) {
    const double lo = edges[static_cast<std::size_t>(m)];
    const double mid = edges[static_cast<std::size_t>(m) + 1];
    const double hi = edges[static_cast<std::size_t>(m) + 2];
    for (Eigen::Index k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(nfft);
      if (f > lo && f < mid) {
        bank(m, k) = (f - lo) / (mid - lo);
      } else if (f >= mid && f < hi) {
        bank(m, k) = (hi - f) / (hi - mid);
      }
    }
  }
  return bank;
}

// Orthonormal DCT-II, first `keep` rows.
Eigen::MatrixXd dct_matrix(int keep, int size) {
  Eigen::MatrixXd dct(keep, size);
  for (int n = 0; n < keep; ++n) {
    const double scale = n == 0 ? std::sqrt(1.0 / size) : std::sqrt(2.0 / size);
    for (int m = 0; m < size; ++m) {
      dct(n, m) = scale * std::cos(std::numbers::pi * n * (m + 0.5) / size);
    }
  }
  return dct;
}

}  // namespace

void FrameMatrix::validate() const {
  if (columns.rows() == 0 || columns.cols() == 0) {
    throw DataError("track '" + track_id + "': empty feature matrix");
  }
  if (!columns.allFinite()) {
    throw DataError("track '" + track_id + "': non-finite feature values");
  }
}

FrameLayout frame_layout(std::size_t sample_count, int sample_rate) {
  if (sample_rate <= 0) throw DataError("sample rate must be positive");
  FrameLayout layout;
  layout.window = static_cast<Eigen::Index>(std::lround(0.1 * sample_rate));
  layout.hop = std::max<Eigen::Index>(1, std::lround(0.01 * sample_rate));
  const auto n = static_cast<Eigen::Index>(sample_count);
  if (layout.window < 1 || n < layout.window) {
    throw DataError("track shorter than one 100 ms analysis window (" +
                    std::to_string(n) + " samples, need " +
                    std::to_string(layout.window) + ")");
  }
  layout.count = (n - layout.window) / layout.hop + 1;
  return layout;
}

Eigen::MatrixXd frame_signal(const AudioTrack& track) {
  track.validate();
  const FrameLayout layout = frame_layout(track.samples.size(), track.sample_rate);
  Eigen::VectorXd window(layout.window);
  if (layout.window == 1) {
    window(0) = 1.0;
  } else {
    for (Eigen::Index i = 0; i < layout.window; ++i) {
      window(i) = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i /
                                         static_cast<double>(layout.window - 1));
    }
  }
  Eigen::MatrixXd frames(layout.window, layout.count);
  for (Eigen::Index j = 0; j < layout.count; ++j) {
    const Eigen::Index start = j * layout.hop;
    for (Eigen::Index i = 0; i < layout.window; ++i) {
      frames(i, j) = track.samples[static_cast<std::size_t>(start + i)] * window(i);
    }
  }
  return frames;
}

Eigen::MatrixXd mfcc(const Eigen::MatrixXd& frames, int sample_rate,
                     const MfccOptions& options) {
  if (frames.cols() == 0 || frames.rows() == 0) {
    throw UsageError("mfcc: no frames");
  }
  if (options.coefficients < 1 || options.coefficients > options.filters) {
    throw UsageError("mfcc: coefficient count must lie in [1, filters]");
  }
  const Eigen::Index nfft = next_pow2(frames.rows());
  const Eigen::Index bins = nfft / 2 + 1;
  const Eigen::MatrixXd bank = mel_filterbank(options.filters, nfft, sample_rate);
  const Eigen::MatrixXd dct = dct_matrix(options.coefficients, options.filters);

  Eigen::FFT<double> fft;
  std::vector<double> buffer(static_cast<std::size_t>(nfft));
  std::vector<std::complex<double>> spectrum;
  Eigen::VectorXd power(bins);
  Eigen::MatrixXd out(options.coefficients, frames.cols());
  for (Eigen::Index j = 0; j < frames.cols(); ++j) {
    std::fill(buffer.begin(), buffer.end(), 0.0);
    for (Eigen::Index i = 0; i < frames.rows(); ++i) {
      buffer[static_cast<std::size_t>(i)] = frames(i, j);
    }
    fft.fwd(spectrum, buffer);
    for (Eigen::Index k = 0; k < bins; ++k) {
      power(k) = std::norm(spectrum[static_cast<std::size_t>(k)]) /
                 static_cast<double>(nfft);
    }
    Eigen::VectorXd energies = bank * power;
    for (Eigen::Index m = 0; m < energies.size(); ++m) {
      energies(m) = std::log(std::max(energies(m), options.log_floor));
    }
    out.col(j) = dct * energies;
  }
  return out;
}

Eigen::MatrixXd regression_deltas(const Eigen::MatrixXd& base, int half_window) {
  if (half_window < 1) throw UsageError("delta half-window must be >= 1");
  const Eigen::Index m = base.cols();
  double denom = 0.0;
  for (int n = 1; n <= half_window; ++n) denom += 2.0 * n * n;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(base.rows(), m);
  auto clamp_col = [m](Eigen::Index t) {
    return std::clamp<Eigen::Index>(t, 0, m - 1);
  };
  for (Eigen::Index t = 0; t < m; ++t) {
    for (int n = 1; n <= half_window; ++n) {
      out.col(t) += n * (base.col(clamp_col(t + n)) - base.col(clamp_col(t - n)));
    }
  }
  return out / denom;
}

Eigen::MatrixXd append_deltas(const Eigen::MatrixXd& base, int half_window) {
  if (base.cols() < 1) throw UsageError("append_deltas: no frames");
  const Eigen::MatrixXd d1 = regression_deltas(base, half_window);
  const Eigen::MatrixXd d2 = regression_deltas(d1, half_window);
  Eigen::MatrixXd out(3 * base.rows(), base.cols());
  out << base, d1, d2;
  return out;
}

FrameMatrix extract_features(const AudioTrack& track, const MfccOptions& options) {
  FrameMatrix fm;
  fm.track_id = track.track_id;
  fm.columns = append_deltas(mfcc(frame_signal(track), track.sample_rate, options));
  fm.validate();
  return fm;
}

Eigen::MatrixXd PcaProjection::apply(const Eigen::MatrixXd& frames) const {
  if (frames.rows() != input_dim()) {
    throw DataError("PCA projection expects " + std::to_string(input_dim()) +
                    "-dimensional frames, got " + std::to_string(frames.rows()));
  }
  return basis.transpose() * (frames.colwise() - mean);
}

FrameMatrix PcaProjection::apply(const FrameMatrix& frames) const {
  return FrameMatrix{frames.track_id, apply(frames.columns)};
}

PcaProjection pca_fit(const Eigen::MatrixXd& frames, Eigen::Index r) {
  const Eigen::Index d = frames.rows();
  if (r < 1 || r > d) {
    throw UsageError("pca_fit: target dimension " + std::to_string(r) +
                     " outside [1, " + std::to_string(d) + "]");
  }
  if (frames.cols() <= d) {
    throw DataError("pca_fit: need more frames than dimensions");
  }
  PcaProjection pca;
  pca.mean = frames.rowwise().mean();
  const Eigen::MatrixXd centered = frames.colwise() - pca.mean;
  const Eigen::MatrixXd cov =
      centered * centered.transpose() / static_cast<double>(frames.cols());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  const double total = es.eigenvalues().sum();
  if (!(total > 0.0)) throw DataError("pca_fit: input has zero variance");
  // Eigenvalues ascend; take the last r columns in descending order.
  pca.basis = es.eigenvectors().rightCols(r).rowwise().reverse();
  // Deterministic sign: largest-magnitude entry of each direction is positive.
  for (Eigen::Index c = 0; c < r; ++c) {
    Eigen::Index arg = 0;
    pca.basis.col(c).cwiseAbs().maxCoeff(&arg);
    if (pca.basis(arg, c) < 0) pca.basis.col(c) *= -1.0;
  }
  pca.explained_variance_ratio = es.eigenvalues().tail(r).sum() / total;
  return pca;
}

void write_frames(std::ostream& out, const FrameMatrix& frames) {
  out << "frames-v1 " << frames.track_id << ' ' << frames.dim() << ' '
      << frames.frame_count() << '\n';
  for (Eigen::Index j = 0; j < frames.frame_count(); ++j) {
    text::write_row(out, frames.columns.col(j));
  }
}

FrameMatrix read_frames(std::istream& in, const std::string& source) {
  text::LineReader reader(in, source);
  auto header = reader.tokens();
  if (header.size() != 4 || header[0] != "frames-v1") {
    reader.fail("expected header 'frames-v1 <track_id> <d> <m>'");
  }
  FrameMatrix fm;
  fm.track_id = header[1];
  const auto d = text::parse_integer(header[2]);
  const auto m = text::parse_integer(header[3]);
  if (d < 1 || m < 1) reader.fail("dimensions must be positive");
  fm.columns.resize(d, m);
  for (long long j = 0; j < m; ++j) fm.columns.col(j) = reader.real_row(d);
  fm.validate();
  return fm;
}

void save_frames(const std::filesystem::path& path, const FrameMatrix& frames) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_frames(out, frames);
  if (!out) throw DataError("failed writing " + path.string());
}

FrameMatrix load_frames(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_frames(in, path.string());
}

}  // namespace dcar
