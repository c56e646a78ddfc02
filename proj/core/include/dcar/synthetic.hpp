#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dcar/features.hpp"
#include "dcar/gmm.hpp"
#include "dcar/grassmann.hpp"
#include "dcar/manifest.hpp"

namespace dcar {

/// Frame-level synthetic data. Each event owns `clusters_per_event` Gaussian
/// clusters living in a planted subspace, where every coordinate separates
/// every pair of events in mean and variance. The orthogonal complement is
/// label-free noise; `nuisance` > 0 adds per-track offsets and variance
/// scales there. With `separation` = 0 the events are indistinguishable.
struct SyntheticSpec {
  int events = 3;
  int train_per_event = 30;
  int test_per_event = 10;
  int frames = 200;
  int dim = 12;
  int planted_dim = 4;
  int clusters_per_event = 2;
  double separation = 5.0;  // distance between event centres, in units of noise
  double noise = 1.0;       // frame noise standard deviation
  double nuisance = 0.0;    // per-track complement offsets and variance scales, in noise units
  std::uint64_t seed = 3;

  void validate() const;
};

struct SyntheticData {
  std::vector<FrameMatrix> tracks;
  std::vector<ManifestEntry> entries;  // paths relative: frames/<track_id>.frames
  Embedding subspace;                  // d x planted_dim basis of the planted subspace
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// Writes frames/<id>.frames, manifest.csv and subspace.emb under `dir`.
void write_synthetic(const SyntheticData& data, const std::filesystem::path& dir);

/// Labeled SPD components whose log-covariances are separated by event:
/// log S = strength * U_l U_l^T + noise * G with U_l an event-specific random
/// q-dimensional basis and G a random symmetric matrix per component.
struct ComponentSpec {
  int events = 3;
  int per_event = 20;
  int dim = 6;
  int subspace_dim = 2;
  double strength = 2.0;
  double noise = 0.3;
  std::uint64_t seed = 5;

  void validate() const;
};

/// One single-component TrackGmm per item, labeled "ev<l>".
std::vector<LabeledTrackGmm> generate_components(const ComponentSpec& spec);

}  // namespace dcar
