#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dcar/features.hpp"
#include "dcar/spd.hpp"

namespace dcar {

struct GaussianComponent {
  double weight = 1.0;
  Eigen::VectorXd mean;
  SpdMatrix covariance;

  Eigen::Index dim() const { return mean.size(); }
  /// Weight in (0, 1] and mean/covariance dimensions agree.
  void validate() const;
};

struct TrackGmm {
  std::string track_id;
  std::vector<GaussianComponent> components;

  Eigen::Index dim() const {
    return components.empty() ? 0 : components.front().dim();
  }
  /// Weights sum to one (1e-9) and all components share one dimension.
  void validate() const;
};

/// A component tagged with the event label (catalog index) of its track.
struct LabeledComponent {
  GaussianComponent component;
  int label = -1;
  std::string track_id;
};

struct EmConfig {
  int max_iterations = 200;
  double relative_tolerance = 1e-6;
  /// A component whose responsibility mass falls below this fraction of the
  /// frame count is re-seeded at the worst-explained frame.
  double collapse_fraction = 1e-6;
};

struct GmmFit {
  TrackGmm model;
  /// Log-likelihood of the initial model followed by one entry per EM step;
  /// the last entry belongs to the returned model.
  std::vector<double> log_likelihood;
  int iterations = 0;
  bool converged = false;
  int reseeds = 0;
};

/// Full-covariance EM with k-means++ seeding. P is clamped to the frame count
/// (with a warning) for very short tracks.
GmmFit fit_track_gmm(const FrameMatrix& frames, int components, std::uint64_t seed,
                     const EmConfig& config = {});

/// Sum over frames of ln sum_p w_p N(x; mu_p, Sigma_p).
double log_likelihood(const TrackGmm& gmm, const FrameMatrix& frames);

/// Concatenates the components of every track (track order, then component
/// order) tagged with the track's label.
std::vector<LabeledComponent> pool_components(std::span<const TrackGmm> models,
                                              std::span<const int> labels);

/// One track block of a "gmm-v1" file.
struct LabeledTrackGmm {
  TrackGmm gmm;
  std::string label;
};

/// `gmm-v1 <track_id> <label> <d> <P>`, then per component a weight line, a
/// mean line and d covariance rows. Files may hold any number of blocks.
void write_gmm(std::ostream& out, const TrackGmm& gmm, const std::string& label);
std::vector<LabeledTrackGmm> read_gmm_blocks(std::istream& in,
                                             const std::string& source = "<stream>");
std::vector<LabeledTrackGmm> load_gmm_file(const std::filesystem::path& path);

}  // namespace dcar
