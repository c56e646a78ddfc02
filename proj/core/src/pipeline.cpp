#include "dcar/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>

#include "dcar/error.hpp"
#include "dcar/log.hpp"
#include "dcar/parallel.hpp"
#include "dcar/spd.hpp"
#include "dcar/text_io.hpp"
#include "dcar/wav.hpp"

namespace dcar {
namespace fs = std::filesystem;
namespace {

using Eigen::Index;

// Prefixes any library error with the stage that raised it, keeping its type
// so that the CLI maps it to the right exit code.
template <typename Fn>
auto stage(const std::string& name, Fn fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const UsageError& e) {
    throw UsageError(name + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(name + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(name + ": " + e.what());
  }
}

std::uint64_t track_seed(std::uint64_t gmm_seed, const std::string& track_id) {
  return gmm_seed ^ text::fnv1a(track_id);
}

struct PreparedFrames {
  std::optional<PcaProjection> pca;
  std::vector<FrameMatrix> frames;
};

Index common_dim(std::span<const FrameMatrix> frames) {
  if (frames.empty()) throw DataError("no training tracks");
  const Index d = frames.front().dim();
  for (const auto& f : frames) {
    if (f.dim() != d) {
      throw DataError("track '" + f.track_id + "' has dimension " + std::to_string(f.dim()) +
                      ", expected " + std::to_string(d));
    }
  }
  return d;
}

// Fits PCA on the frames selected by `fit_on` (all when empty) and projects
// every track.
PreparedFrames prepare_frames(std::span<const FrameMatrix> frames, int pca_dim,
                              std::span<const std::size_t> fit_on = {}) {
  PreparedFrames out;
  const Index d = common_dim(frames);
  if (pca_dim <= 0) {
    out.frames.assign(frames.begin(), frames.end());
    return out;
  }
  std::vector<std::size_t> idx(fit_on.begin(), fit_on.end());
  if (idx.empty()) {
    for (std::size_t i = 0; i < frames.size(); ++i) idx.push_back(i);
  }
  Index total = 0;
  for (auto i : idx) total += frames[i].frame_count();
  Eigen::MatrixXd pooled(d, total);
  Index col = 0;
  for (auto i : idx) {
    pooled.middleCols(col, frames[i].frame_count()) = frames[i].columns;
    col += frames[i].frame_count();
  }
  out.pca = pca_fit(pooled, pca_dim);
  for (const auto& f : frames) out.frames.push_back(out.pca->apply(f));
  return out;
}

// Reduced, labeled kernel points ready for KRR.
struct PointSet {
  std::optional<EmbeddingResult> embedding_result;
  std::optional<Embedding> embedding;
  std::vector<KernelPoint> points;
  std::vector<int> labels;
  std::vector<std::string> tracks;
};

PointSet mv_points(std::span<const FrameMatrix> frames, std::span<const int> labels) {
  PointSet out;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    out.points.push_back(KernelPoint::from_vector(mv_vector(frames[i])));
    out.labels.push_back(labels[i]);
    out.tracks.push_back(frames[i].track_id);
  }
  return out;
}

PointSet gmm_points(std::span<const TrackGmm> gmms, std::span<const int> labels,
                    const ExperimentConfig& config) {
  PointSet out;
  const auto pooled = stage("pool", [&] { return pool_components(gmms, labels); });
  std::vector<GaussianComponent> comps;
  for (const auto& c : pooled) comps.push_back(c.component);
  const Index d = comps.front().dim();
  if (config.representation == Representation::kDcar) {
    Index r = config.reduced_dim;
    if (r >= d) {
      warn("reduced_dim " + std::to_string(r) + " clamped to " + std::to_string(d - 1) +
           " (feature dimension " + std::to_string(d) + ")");
      r = d - 1;
    }
    AffinityOptions aff = config.affinity;
    aff.lambda = config.lambda;
    const AffinityGraph graph = stage("affinity", [&] { return build_affinity(pooled, aff); });
    OptimizerConfig opt = config.optimizer;
    opt.lambda = config.lambda;
    opt.seed = config.seeds.init;
    out.embedding_result =
        stage("embedding", [&] { return learn_embedding(comps, graph, r, opt); });
    out.embedding = out.embedding_result->embedding;
  } else {
    out.embedding = Embedding::identity(d);
  }
  for (const auto& c : pooled) {
    out.points.push_back(KernelPoint::from_component(reduce_component(*out.embedding, c.component)));
    out.labels.push_back(c.label);
    out.tracks.push_back(c.track_id);
  }
  return out;
}

TrainedModel finish_model(const PointSet& set, const std::vector<std::string>& events,
                          const ExperimentConfig& config, std::optional<PcaProjection> pca) {
  TrainedModel m;
  m.representation = config.representation;
  m.events = events;
  m.components = config.representation == Representation::kMvVector ? 0 : config.components;
  m.gmm_seed = config.seeds.gmm;
  m.em = config.em;
  m.pca = std::move(pca);
  m.embedding = set.embedding;
  m.item_tracks = set.tracks;
  KernelParams params{config.lambda, config.sigma_mean, config.sigma_cov, config.alpha};
  if (params.sigma_mean == 0.0 || params.sigma_cov == 0.0) {
    const auto [sm, sc] = median_kernel_bandwidths(set.points);
    if (params.sigma_mean == 0.0) params.sigma_mean = sm;
    if (params.sigma_cov == 0.0) {
      params.sigma_cov = config.representation == Representation::kMvVector ? 1.0 : sc;
    }
  }
  m.krr = stage("classifier", [&] {
    return train_krr(set.points, set.labels, static_cast<int>(events.size()), params);
  });
  return m;
}

TrackPrediction predict_points(const TrainedModel& model, std::span<const KernelPoint> points,
                               const Eigen::VectorXd& weights) {
  const MembershipMatrix mm = predict_membership(model.krr, points, weights);
  return TrackPrediction{vote(mm), vote_scores(mm)};
}

TrackPrediction predict_gmm(const TrainedModel& model, const TrackGmm& gmm) {
  std::vector<KernelPoint> points;
  Eigen::VectorXd weights(static_cast<Index>(gmm.components.size()));
  for (std::size_t p = 0; p < gmm.components.size(); ++p) {
    points.push_back(KernelPoint::from_component(reduce_component(*model.embedding, gmm.components[p])));
    weights(static_cast<Index>(p)) = gmm.components[p].weight;
  }
  return predict_points(model, points, weights);
}

std::vector<int> manifest_labels(const Manifest& manifest, std::span<const ManifestEntry> entries) {
  std::vector<int> labels;
  for (const auto& e : entries) labels.push_back(manifest.event_index(e.label));
  return labels;
}

}  // namespace

std::vector<FrameMatrix> load_track_frames(std::span<const ManifestEntry> entries,
                                           const MfccOptions& mfcc, int jobs) {
  return parallel_map(entries.size(), jobs, [&](std::size_t i) {
    const auto& e = entries[i];
    FrameMatrix f;
    if (e.path.extension() == ".wav") {
      f = extract_features(read_wav(e.path, e.track_id), mfcc);
    } else {
      f = load_frames(e.path);
    }
    if (f.track_id != e.track_id) {
      warn("frames file " + e.path.string() + " names track '" + f.track_id +
           "'; using manifest id '" + e.track_id + "'");
      f.track_id = e.track_id;
    }
    return f;
  });
}

std::vector<TrackGmm> fit_track_gmms(std::span<const FrameMatrix> frames, int components,
                                     std::uint64_t gmm_seed, const EmConfig& em, int jobs) {
  return parallel_map(frames.size(), jobs, [&](std::size_t i) {
    return fit_track_gmm(frames[i], components, track_seed(gmm_seed, frames[i].track_id), em)
        .model;
  });
}

TrainOutput train_model(std::span<const FrameMatrix> frames, std::span<const int> labels,
                        const std::vector<std::string>& events, const ExperimentConfig& config) {
  config.validate();
  if (frames.size() != labels.size()) throw UsageError("train: one label per track required");
  if (events.size() < 2) throw DataError("train: at least two events are required");
  for (std::size_t l = 0; l < events.size(); ++l) {
    if (std::find(labels.begin(), labels.end(), static_cast<int>(l)) == labels.end()) {
      warn("event '" + events[l] + "' has no training tracks");
    }
  }
  PreparedFrames prepared =
      stage("pca", [&] { return prepare_frames(frames, config.pca_dim); });
  PointSet set;
  if (config.representation == Representation::kMvVector) {
    set = stage("mv-vector", [&] { return mv_points(prepared.frames, labels); });
  } else {
    const auto gmms = stage("gmm", [&] {
      return fit_track_gmms(prepared.frames, config.components, config.seeds.gmm, config.em,
                            config.jobs);
    });
    set = gmm_points(gmms, labels, config);
  }
  TrainOutput out;
  out.model = finish_model(set, events, config, std::move(prepared.pca));
  out.embedding = std::move(set.embedding_result);
  return out;
}

TrackPrediction predict_track(const TrainedModel& model, const FrameMatrix& frames) {
  if (frames.dim() != model.input_dim()) {
    throw DataError("track '" + frames.track_id + "' has dimension " +
                    std::to_string(frames.dim()) + " but the model expects " +
                    std::to_string(model.input_dim()));
  }
  const FrameMatrix projected = model.pca ? model.pca->apply(frames) : frames;
  if (model.representation == Representation::kMvVector) {
    const std::vector<KernelPoint> point{KernelPoint::from_vector(mv_vector(projected))};
    return predict_points(model, point, Eigen::VectorXd::Ones(1));
  }
  const TrackGmm gmm =
      fit_track_gmm(projected, model.components, track_seed(model.gmm_seed, frames.track_id),
                    model.em)
          .model;
  return predict_gmm(model, gmm);
}

std::vector<TrackPrediction> predict_tracks(const TrainedModel& model,
                                            std::span<const FrameMatrix> frames, int jobs) {
  return parallel_map(frames.size(), jobs,
                      [&](std::size_t i) { return predict_track(model, frames[i]); });
}

ExtractSummary cmd_extract(const fs::path& manifest_path, const fs::path& out_dir,
                           const ExperimentConfig& config, bool force) {
  const Manifest manifest = load_manifest(manifest_path);
  fs::create_directories(out_dir);
  const auto& entries = manifest.entries();
  enum class Outcome { kWritten, kCached, kFailed };
  struct Result {
    Outcome outcome = Outcome::kFailed;
    std::string reason;
  };
  const auto results = parallel_map(entries.size(), config.jobs, [&](std::size_t i) {
    const auto& e = entries[i];
    const fs::path target = out_dir / (e.track_id + ".frames");
    if (!force && fs::exists(target)) return Result{Outcome::kCached, {}};
    try {
      const FrameMatrix f = extract_features(read_wav(e.path, e.track_id), config.mfcc);
      save_frames(target, f);
      return Result{Outcome::kWritten, {}};
    } catch (const Error& err) {
      return Result{Outcome::kFailed, err.what()};
    }
  });
  ExtractSummary summary;
  std::vector<ManifestEntry> ok;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    switch (results[i].outcome) {
      case Outcome::kWritten:
        ++summary.written;
        break;
      case Outcome::kCached:
        ++summary.cached;
        break;
      case Outcome::kFailed:
        summary.failures.emplace_back(entries[i].track_id, results[i].reason);
        continue;
    }
    ManifestEntry e = entries[i];
    e.path = e.track_id + ".frames";
    ok.push_back(std::move(e));
  }
  std::ofstream out(out_dir / "manifest.csv");
  if (!out) throw DataError("cannot write " + (out_dir / "manifest.csv").string());
  write_manifest(out, ok);
  return summary;
}

TrainOutput cmd_train(const fs::path& manifest_path, const fs::path& model_out,
                      const std::optional<fs::path>& trace_out, const ExperimentConfig& config) {
  const Manifest manifest = load_manifest(manifest_path);
  const auto entries = manifest.split(Split::kTrain);
  if (entries.empty()) throw DataError("manifest has no training tracks");
  const auto frames =
      stage("load", [&] { return load_track_frames(entries, config.mfcc, config.jobs); });
  const auto labels = manifest_labels(manifest, entries);
  TrainOutput out = train_model(frames, labels, manifest.events(), config);
  save_model(model_out, out.model);
  if (trace_out && out.embedding) {
    std::ofstream t(*trace_out);
    if (!t) throw DataError("cannot write " + trace_out->string());
    out.embedding->trace.write_csv(t);
  }
  return out;
}

PredictionFile cmd_predict(const fs::path& model_path, const fs::path& manifest_path,
                           const fs::path& out, Split split, int jobs, const MfccOptions& mfcc) {
  const TrainedModel model = load_model(model_path);
  const Manifest manifest = load_manifest(manifest_path);
  const auto entries = manifest.split(split);
  PredictionFile file;
  file.events = model.events;
  if (entries.empty()) {
    warn("manifest has no " + split_name(split) + " tracks; writing an empty prediction file");
  }
  for (const auto& e : entries) {
    if (std::find(model.events.begin(), model.events.end(), e.label) == model.events.end()) {
      throw DataError("track '" + e.track_id + "' has label '" + e.label +
                      "' which the model does not know");
    }
  }
  const auto frames = stage("load", [&] { return load_track_frames(entries, mfcc, jobs); });
  const auto preds = stage("predict", [&] { return predict_tracks(model, frames, jobs); });
  for (std::size_t i = 0; i < entries.size(); ++i) {
    file.records.push_back(PredictionRecord{entries[i].track_id, entries[i].label,
                                            model.events[static_cast<std::size_t>(preds[i].predicted)],
                                            preds[i].scores});
  }
  save_predictions(out, file);
  return file;
}

EvalOutput cmd_eval(std::span<const fs::path> predictions, std::span<const std::string> names,
                    double level) {
  if (predictions.empty()) throw UsageError("eval needs at least one prediction file");
  if (names.size() != predictions.size()) throw UsageError("eval: one name per file required");
  std::vector<PredictionFile> files;
  for (const auto& p : predictions) files.push_back(load_predictions(p));
  const PredictionFile& ref = files.front();
  if (ref.records.empty()) throw DataError(predictions[0].string() + ": no predictions");
  const auto truth = ref.truth_indices();
  std::vector<std::vector<int>> predicted;
  for (std::size_t f = 0; f < files.size(); ++f) {
    const auto& file = files[f];
    if (file.events != ref.events) {
      throw DataError(predictions[f].string() + ": event list differs from " +
                      predictions[0].string());
    }
    if (file.records.size() != ref.records.size()) {
      throw DataError(predictions[f].string() + ": track count differs from " +
                      predictions[0].string());
    }
    std::map<std::string, const PredictionRecord*> by_id;
    for (const auto& r : file.records) by_id[r.track_id] = &r;
    std::vector<int> pred;
    for (const auto& r : ref.records) {
      auto it = by_id.find(r.track_id);
      if (it == by_id.end()) {
        throw DataError(predictions[f].string() + ": missing track '" + r.track_id + "'");
      }
      if (it->second->truth != r.truth) {
        throw DataError(predictions[f].string() + ": track '" + r.track_id +
                        "' has a different true label");
      }
      pred.push_back(static_cast<int>(
          std::find(ref.events.begin(), ref.events.end(), it->second->predicted) -
          ref.events.begin()));
    }
    predicted.push_back(std::move(pred));
  }
  EvalOutput out;
  const int l = static_cast<int>(ref.events.size());
  for (std::size_t f = 0; f < files.size(); ++f) {
    out.reports.push_back(NamedReport{names[f], metrics(confusion(predicted[f], truth, l))});
  }
  for (std::size_t a = 0; a < files.size(); ++a) {
    for (std::size_t b = a + 1; b < files.size(); ++b) {
      PairComparison c{names[a], names[b], 0, 0, 1.0, 0};
      for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool a_ok = predicted[a][i] == truth[i];
        const bool b_ok = predicted[b][i] == truth[i];
        c.a_only += a_ok && !b_ok;
        c.b_only += !a_ok && b_ok;
      }
      c.p_value = mcnemar_exact(c.a_only, c.b_only);
      if (c.p_value < level) c.outcome = c.a_only > c.b_only ? 1 : -1;
      if (a == 0) {
        if (c.outcome > 0) {
          ++out.first_vs_rest.wins;
        } else if (c.outcome < 0) {
          ++out.first_vs_rest.losses;
        } else {
          ++out.first_vs_rest.ties;
        }
      }
      out.comparisons.push_back(std::move(c));
    }
  }
  return out;
}

void write_comparisons_csv(std::ostream& out, std::span<const PairComparison> comparisons) {
  out << "method_a,method_b,a_only,b_only,p_value,outcome\n";
  for (const auto& c : comparisons) {
    out << c.method_a << ',' << c.method_b << ',' << c.a_only << ',' << c.b_only << ','
        << text::format_real(c.p_value) << ','
        << (c.outcome > 0 ? "win" : c.outcome < 0 ? "loss" : "tie") << '\n';
  }
}

void cmd_synth(const SyntheticSpec& spec, const fs::path& out_dir) {
  write_synthetic(generate_synthetic(spec), out_dir);
}

void cmd_metric_compare(std::span<const fs::path> component_files, std::span<const int> ks,
                        std::ostream& csv) {
  std::vector<LabeledTrackGmm> blocks;
  for (const auto& p : component_files) {
    auto b = load_gmm_file(p);
    blocks.insert(blocks.end(), std::make_move_iterator(b.begin()),
                  std::make_move_iterator(b.end()));
  }
  std::vector<std::string> catalog;
  for (const auto& b : blocks) catalog.push_back(b.label);
  std::sort(catalog.begin(), catalog.end());
  catalog.erase(std::unique(catalog.begin(), catalog.end()), catalog.end());
  std::vector<SpdMatrix> covs;
  std::vector<int> labels;
  for (const auto& b : blocks) {
    const int label = static_cast<int>(
        std::lower_bound(catalog.begin(), catalog.end(), b.label) - catalog.begin());
    for (const auto& c : b.gmm.components) {
      covs.push_back(c.covariance);
      labels.push_back(label);
    }
  }
  csv << "metric,k,pc\n";
  for (SpdMetric metric :
       {SpdMetric::kLogEuclidean, SpdMetric::kAffineInvariant, SpdMetric::kStein}) {
    const auto curve = pc_purity_curve(covs, labels, metric, ks);
    for (std::size_t i = 0; i < ks.size(); ++i) {
      csv << metric_name(metric) << ',' << ks[i] << ',' << text::format_real(curve[i]) << '\n';
    }
  }
}

ExperimentConfig apply_parameters(ExperimentConfig config, const ParameterPoint& point) {
  config.components = point.components;
  config.reduced_dim = point.reduced_dim;
  config.lambda = point.lambda;
  config.alpha = point.alpha;
  return config;
}

CvResult cmd_tune(const fs::path& manifest_path, const ExperimentConfig& config,
                  const std::optional<fs::path>& scores_out) {
  const Manifest manifest = load_manifest(manifest_path);
  const auto entries = manifest.split(Split::kTrain);
  if (entries.empty()) throw DataError("manifest has no training tracks");
  const auto frames =
      stage("load", [&] { return load_track_frames(entries, config.mfcc, config.jobs); });
  const auto labels = manifest_labels(manifest, entries);
  const auto& events = manifest.events();
  const Index d = config.pca_dim > 0 ? config.pca_dim : common_dim(frames);
  const auto grid =
      parameter_grid(static_cast<int>(events.size()), static_cast<int>(d), config.grid);
  if (grid.empty()) throw UsageError("tune: parameter grid is empty for this data");

  // Per fold, keep the projected frames, GMMs per component count, and the
  // last reduced point set: alpha varies fastest in the grid, so consecutive
  // points reuse the embedding.
  struct FoldCache {
    std::optional<PreparedFrames> prepared;
    std::map<int, std::vector<TrackGmm>> gmms;
    std::optional<std::tuple<int, int, double>> key;
    PointSet points;
  };
  std::map<std::vector<std::size_t>, FoldCache> caches;

  auto scorer = [&](const std::vector<std::size_t>& train, const std::vector<std::size_t>& valid,
                    const ParameterPoint& point) {
    const ExperimentConfig cfg = apply_parameters(config, point);
    FoldCache& cache = caches[valid];
    if (!cache.prepared) cache.prepared = prepare_frames(frames, cfg.pca_dim, train);
    const auto& all = cache.prepared->frames;
    std::vector<int> train_labels;
    for (auto i : train) train_labels.push_back(labels[i]);
    TrainedModel model;
    if (cfg.representation == Representation::kMvVector) {
      std::vector<FrameMatrix> subset;
      for (auto i : train) subset.push_back(all[i]);
      model = finish_model(mv_points(subset, train_labels), events, cfg, cache.prepared->pca);
    } else {
      auto it = cache.gmms.find(cfg.components);
      if (it == cache.gmms.end()) {
        it = cache.gmms
                 .emplace(cfg.components, fit_track_gmms(all, cfg.components, cfg.seeds.gmm,
                                                         cfg.em, cfg.jobs))
                 .first;
      }
      const std::tuple<int, int, double> key{point.components, point.reduced_dim, point.lambda};
      if (!cache.key || *cache.key != key) {
        std::vector<TrackGmm> subset;
        for (auto i : train) subset.push_back(it->second[i]);
        cache.points = gmm_points(subset, train_labels, cfg);
        cache.key = key;
      }
      model = finish_model(cache.points, events, cfg, cache.prepared->pca);
    }
    long correct = 0;
    for (auto i : valid) {
      const TrackPrediction p = cfg.representation == Representation::kMvVector
                                    ? predict_track(model, frames[i])
                                    : predict_gmm(model, cache.gmms.at(cfg.components)[i]);
      correct += p.predicted == labels[i];
    }
    return static_cast<double>(correct) / static_cast<double>(valid.size());
  };
  CvResult result = cross_validate(labels, grid, config.folds, config.seeds.cv, scorer);
  if (scores_out) {
    std::ofstream out(*scores_out);
    if (!out) throw DataError("cannot write " + scores_out->string());
    out << "components,reduced_dim,lambda,alpha,mean_accuracy";
    for (int f = 0; f < result.folds; ++f) out << ",fold" << f + 1;
    out << '\n';
    for (const auto& s : result.scores) {
      out << s.point.components << ',' << s.point.reduced_dim << ','
          << text::format_real(s.point.lambda) << ',' << text::format_real(s.point.alpha) << ','
          << text::format_real(s.mean_accuracy);
      for (double a : s.fold_accuracy) out << ',' << text::format_real(a);
      out << '\n';
    }
  }
  return result;
}

}  // namespace dcar
