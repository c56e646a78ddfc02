#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dcar/classifier.hpp"
#include "dcar/config.hpp"
#include "dcar/features.hpp"
#include "dcar/gmm.hpp"
#include "dcar/grassmann.hpp"

namespace dcar {

/// Everything needed to classify new tracks from their frames.
struct TrainedModel {
  Representation representation = Representation::kDcar;
  std::vector<std::string> events;
  int components = 0;  // GMM components per track; 0 for mv-vector
  std::uint64_t gmm_seed = 0;
  EmConfig em;
  std::optional<PcaProjection> pca;
  std::optional<Embedding> embedding;  // absent for mv-vector
  std::vector<std::string> item_tracks;  // source track of each kernel point
  KrrModel krr;

  /// Feature dimension the model expects from frame files.
  Eigen::Index input_dim() const;
};

/// "model-v1" text format: header, key lines, optional pca block, optional
/// emb-v1 block, kernel points, coefficient matrix, `end`.
void write_model(std::ostream& out, const TrainedModel& model);
TrainedModel read_model(std::istream& in, const std::string& source = "<stream>");
void save_model(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace dcar
