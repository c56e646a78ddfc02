#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <string>

#include "dcar/wav.hpp"

namespace dcar {

/// Per-frame acoustic features of one track: column j is frame j.
struct FrameMatrix {
  std::string track_id;
  Eigen::MatrixXd columns;  // d x m

  Eigen::Index dim() const { return columns.rows(); }
  Eigen::Index frame_count() const { return columns.cols(); }

  /// Throws DataError on empty or non-finite content.
  void validate() const;
};

struct FrameLayout {
  Eigen::Index window = 0;
  Eigen::Index hop = 0;
  Eigen::Index count = 0;
};

/// 100 ms window, 10 ms hop (both rounded to whole samples).
FrameLayout frame_layout(std::size_t sample_count, int sample_rate);

/// Hamming-weighted frames, one per column (window x count).
Eigen::MatrixXd frame_signal(const AudioTrack& track);

struct MfccOptions {
  int coefficients = 20;
  int filters = 40;
  double log_floor = 1e-10;
};

/// Power spectrum -> mel filterbank -> log -> orthonormal DCT-II; keeps the
/// first `coefficients` cepstra (c0 included). Returns coefficients x m.
Eigen::MatrixXd mfcc(const Eigen::MatrixXd& frames, int sample_rate,
                     const MfccOptions& options = {});

/// Regression deltas with half-window `half_window` and replicated edges.
Eigen::MatrixXd regression_deltas(const Eigen::MatrixXd& base, int half_window = 2);

/// Stacks base, first-order and second-order deltas (3b x m).
Eigen::MatrixXd append_deltas(const Eigen::MatrixXd& base, int half_window = 2);

/// Full front end: 20 MFCC + deltas + delta-deltas = 60 x m.
FrameMatrix extract_features(const AudioTrack& track, const MfccOptions& options = {});

/// Frame-level PCA fitted on pooled training frames.
struct PcaProjection {
  Eigen::VectorXd mean;   // d
  Eigen::MatrixXd basis;  // d x r, orthonormal columns
  double explained_variance_ratio = 0.0;

  Eigen::Index input_dim() const { return basis.rows(); }
  Eigen::Index output_dim() const { return basis.cols(); }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& frames) const;
  FrameMatrix apply(const FrameMatrix& frames) const;
};

/// Top-r principal directions of the mean-centered frames (d x M, M > d).
PcaProjection pca_fit(const Eigen::MatrixXd& frames, Eigen::Index r);

/// "frames-v1" text format: `frames-v1 <track_id> <d> <m>` then m rows of d reals.
void write_frames(std::ostream& out, const FrameMatrix& frames);
FrameMatrix read_frames(std::istream& in, const std::string& source = "<stream>");
void save_frames(const std::filesystem::path& path, const FrameMatrix& frames);
FrameMatrix load_frames(const std::filesystem::path& path);

}  // namespace dcar
