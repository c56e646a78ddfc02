#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dcar/config.hpp"
#include "dcar/eval.hpp"
#include "dcar/manifest.hpp"
#include "dcar/model_io.hpp"
#include "dcar/optimizer.hpp"
#include "dcar/synthetic.hpp"

namespace dcar {

/// Frames for each entry: frames-v1 files are loaded, .wav files are
/// converted on the fly. Order follows `entries`.
std::vector<FrameMatrix> load_track_frames(std::span<const ManifestEntry> entries,
                                           const MfccOptions& mfcc, int jobs);

/// Per-track GMMs seeded with gmm_seed ^ fnv1a(track_id).
std::vector<TrackGmm> fit_track_gmms(std::span<const FrameMatrix> frames, int components,
                                     std::uint64_t gmm_seed, const EmConfig& em, int jobs);

struct TrainOutput {
  TrainedModel model;
  std::optional<EmbeddingResult> embedding;  // DCAR runs only
};

/// Fits the representation selected in `config` and the KRR classifier.
/// `labels` index into `events`.
TrainOutput train_model(std::span<const FrameMatrix> frames, std::span<const int> labels,
                        const std::vector<std::string>& events, const ExperimentConfig& config);

struct TrackPrediction {
  int predicted = 0;
  Eigen::VectorXd scores;
};

TrackPrediction predict_track(const TrainedModel& model, const FrameMatrix& frames);
std::vector<TrackPrediction> predict_tracks(const TrainedModel& model,
                                            std::span<const FrameMatrix> frames, int jobs);

struct ExtractSummary {
  int written = 0;
  int cached = 0;
  std::vector<std::pair<std::string, std::string>> failures;  // track_id, reason
};

/// Writes <out_dir>/<track_id>.frames for each manifest entry plus a
/// features manifest <out_dir>/manifest.csv listing the tracks that succeeded.
ExtractSummary cmd_extract(const std::filesystem::path& manifest,
                           const std::filesystem::path& out_dir, const ExperimentConfig& config,
                           bool force);

/// Trains on the manifest's train split; writes the model and, for DCAR, the
/// optimizer trace CSV.
TrainOutput cmd_train(const std::filesystem::path& manifest,
                      const std::filesystem::path& model_out,
                      const std::optional<std::filesystem::path>& trace_out,
                      const ExperimentConfig& config);

PredictionFile cmd_predict(const std::filesystem::path& model_path,
                           const std::filesystem::path& manifest,
                           const std::filesystem::path& out, Split split, int jobs,
                           const MfccOptions& mfcc = {});

struct PairComparison {
  std::string method_a;
  std::string method_b;
  long a_only = 0;  // A right, B wrong
  long b_only = 0;
  double p_value = 1.0;
  int outcome = 0;  // +1 A significantly better, -1 worse, 0 tie
};

struct EvalOutput {
  std::vector<NamedReport> reports;
  std::vector<PairComparison> comparisons;
  WinTieLoss first_vs_rest;  // first method against each other method
};

/// Metrics per prediction file; pairwise McNemar tests when two or more
/// files are given. Files must list the same track ids.
EvalOutput cmd_eval(std::span<const std::filesystem::path> predictions,
                    std::span<const std::string> names, double level);
void write_comparisons_csv(std::ostream& out, std::span<const PairComparison> comparisons);

void cmd_synth(const SyntheticSpec& spec, const std::filesystem::path& out_dir);

/// CSV `metric,k,pc` for LEM, AIRM and Stein over `ks`, using every component
/// in the given gmm-v1 files.
void cmd_metric_compare(std::span<const std::filesystem::path> component_files,
                        std::span<const int> ks, std::ostream& csv);

/// Grid search by stratified cross-validation on the train split. Writes one
/// CSV row per grid point when `scores_out` is set.
CvResult cmd_tune(const std::filesystem::path& manifest, const ExperimentConfig& config,
                  const std::optional<std::filesystem::path>& scores_out);

/// `config` with P, r, lambda and alpha replaced by `point`.
ExperimentConfig apply_parameters(ExperimentConfig config, const ParameterPoint& point);

}  // namespace dcar
