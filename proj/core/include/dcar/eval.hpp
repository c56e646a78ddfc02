#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace dcar {

struct EventCounts {
  long tp = 0;
  long fp = 0;
  long tn = 0;
  long fn = 0;
};

/// One-vs-rest counts per event over all test tracks.
struct ConfusionCounts {
  std::vector<EventCounts> events;
  long total = 0;
};

ConfusionCounts confusion(std::span<const int> predicted, std::span<const int> truth,
                          int event_count);

struct MetricReport {
  double accuracy = 0.0;
  Eigen::VectorXd fscore;
  Eigen::VectorXd false_alarm_rate;
  Eigen::VectorXd miss_rate;
  double mean_fscore = 0.0;
  double mean_false_alarm_rate = 0.0;
  double mean_miss_rate = 0.0;
};

/// Accuracy = sum TP / t; FScore, FAR and MissRate per event and their
/// unweighted mean over events. An undefined ratio (empty denominator) counts
/// as 0 and raises a warning.
MetricReport metrics(const ConfusionCounts& counts);

/// Exact two-tailed binomial McNemar test on discordant counts b and c.
double mcnemar_exact(long b, long c);

/// b = A right and B wrong, c = A wrong and B right.
double mcnemar(std::span<const int> pred_a, std::span<const int> pred_b,
               std::span<const int> truth);

struct PairedPredictions {
  std::vector<int> method_a;
  std::vector<int> method_b;
  std::vector<int> truth;
};

struct WinTieLoss {
  int wins = 0;
  int ties = 0;
  int losses = 0;
};

/// Counts tasks where A is significantly better / not different / worse than
/// B by McNemar at `level`.
WinTieLoss win_tie_loss(std::span<const PairedPredictions> tasks, double level = 0.05);

struct ParameterPoint {
  int components = 1;  // P
  int reduced_dim = 1; // r
  double lambda = 1.0;
  double alpha = 1.0;
};

struct GridOptions {
  int min_components = 1;
  int max_components = 10;
  int reduced_dim_step = 5;
  int max_reduced_dim = 60;
  std::vector<double> lambdas{1e-2, 1e-1, 1.0, 1e1, 1e2};
  std::vector<double> alphas{1e-3, 1e-2, 1e-1, 1.0, 1e1};
};

/// P in [min, max]; r from L in steps of 5 up to min(max_reduced_dim, d - 1);
/// every lambda and alpha.
std::vector<ParameterPoint> parameter_grid(int event_count, int ambient_dim,
                                           const GridOptions& options = {});

/// Stratified fold index per track. Classes are shuffled with `seed` and dealt
/// round-robin. If some class has fewer tracks than `folds`, the fold count is
/// reduced to that class size (with a warning); the effective count is
/// returned through `effective_folds`.
std::vector<int> stratified_folds(std::span<const int> labels, int folds, std::uint64_t seed,
                                  int* effective_folds = nullptr);

struct CvScore {
  ParameterPoint point;
  std::vector<double> fold_accuracy;
  double mean_accuracy = 0.0;
};

struct CvResult {
  ParameterPoint best;
  std::vector<CvScore> scores;
  int folds = 0;
};

/// Accuracy of a configuration trained on `train` and scored on `validation`
/// (indices into the track list).
using FoldScorer = std::function<double(const std::vector<std::size_t>& train,
                                        const std::vector<std::size_t>& validation,
                                        const ParameterPoint& point)>;

/// Highest mean fold accuracy wins; ties go to smaller r, then smaller P, then
/// smaller lambda, then smaller alpha.
CvResult cross_validate(std::span<const int> labels, std::span<const ParameterPoint> grid,
                        int folds, std::uint64_t seed, const FoldScorer& scorer);

/// One line of a "pred-v1" file.
struct PredictionRecord {
  std::string track_id;
  std::string truth;
  std::string predicted;
  Eigen::VectorXd scores;  // one per event
};

/// `pred-v1 <L> <event_1> ... <event_L>`, then one
/// `track_id true_label predicted_label score_1..score_L` line per track.
struct PredictionFile {
  std::vector<std::string> events;
  std::vector<PredictionRecord> records;

  /// Label indices of the truth and prediction columns.
  std::vector<int> truth_indices() const;
  std::vector<int> predicted_indices() const;
};

void write_predictions(std::ostream& out, const PredictionFile& file);
PredictionFile read_predictions(std::istream& in, const std::string& source = "<stream>");
void save_predictions(const std::filesystem::path& path, const PredictionFile& file);
PredictionFile load_predictions(const std::filesystem::path& path);

struct NamedReport {
  std::string method;
  MetricReport report;
};

/// Header `method,event,accuracy,fscore,far,miss_rate`. Each method gets an
/// `all` row with the means, then one row per event (accuracy left empty).
void write_report_csv(std::ostream& out, std::span<const NamedReport> reports,
                      std::span<const std::string> events);
void write_report_table(std::ostream& out, std::span<const NamedReport> reports);

/// Published results on the ten-event YLI-MED task and the binary pairwise
/// study, kept for comparison only; they cannot be reproduced without the
/// original audio.
namespace reference {
inline constexpr double kTenEventAccuracyMvVector = 0.3907;
inline constexpr double kTenEventAccuracyIVector = 0.4640;
inline constexpr double kTenEventAccuracyGmm = 0.4923;
inline constexpr double kTenEventAccuracyDcar = 0.5321;
inline constexpr double kBinaryAccuracyDcar = 0.8293;
inline constexpr double kBinaryAccuracyIVector = 0.7489;
inline constexpr WinTieLoss kDcarVsIVectorAt005{35, 7, 3};
inline constexpr WinTieLoss kDcarVsIVectorAt001{40, 2, 3};
}  // namespace reference

}  // namespace dcar
