// dcar: command-line front end for feature extraction, training, prediction,
// evaluation, synthetic data, metric comparison and tuning.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "dcar/error.hpp"
#include "dcar/pipeline.hpp"
#include "dcar/text_io.hpp"

namespace {

namespace fs = std::filesystem;

struct GlobalOptions {
  std::string config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed_gmm, seed_init, seed_synth, seed_cv;
  std::optional<int> jobs;
};

dcar::ExperimentConfig make_config(const GlobalOptions& g) {
  std::vector<std::string> overrides = g.overrides;
  auto seed = [&](const std::optional<std::uint64_t>& v, const char* key) {
    if (v) overrides.push_back(std::string("seeds.") + key + "=" + std::to_string(*v));
  };
  seed(g.seed_gmm, "gmm_seed");
  seed(g.seed_init, "init_seed");
  seed(g.seed_synth, "synth_seed");
  seed(g.seed_cv, "cv_seed");
  if (g.jobs) overrides.push_back("run.jobs=" + std::to_string(*g.jobs));
  return g.config.empty() ? dcar::default_config(overrides)
                          : dcar::load_config(g.config, overrides);
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw dcar::DataError("cannot write " + path.string());
  out << content;
}

std::vector<int> parse_k_range(const std::string& spec) {
  std::vector<int> ks;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const auto dash = part.find('-');
    if (dash == std::string::npos) {
      ks.push_back(static_cast<int>(dcar::text::parse_integer(part)));
    } else {
      const auto lo = dcar::text::parse_integer(part.substr(0, dash));
      const auto hi = dcar::text::parse_integer(part.substr(dash + 1));
      if (hi < lo) throw dcar::UsageError("empty k range '" + part + "'");
      for (auto k = lo; k <= hi; ++k) ks.push_back(static_cast<int>(k));
    }
  }
  if (ks.empty()) throw dcar::UsageError("no k values given");
  return ks;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discriminative GMM-component audio representation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--set", g.overrides, "Override a configuration key (section.key=value)")
      ->take_all();
  app.add_option("--seed-gmm", g.seed_gmm, "Seed for per-track GMM fitting");
  app.add_option("--seed-init", g.seed_init, "Seed for the embedding initialization");
  app.add_option("--seed-synth", g.seed_synth, "Seed for synthetic data");
  app.add_option("--seed-cv", g.seed_cv, "Seed for cross-validation folds");
  app.add_option("--jobs", g.jobs, "Worker threads for per-track stages")
      ->check(CLI::PositiveNumber);

  // extract
  auto* extract = app.add_subcommand("extract", "Compute MFCC frame features from WAV files");
  std::string ex_manifest, ex_out;
  bool ex_force = false;
  extract->add_option("--manifest", ex_manifest, "Audio manifest CSV")->required();
  extract->add_option("--out", ex_out, "Output directory for frames-v1 files")->required();
  extract->add_flag("--force", ex_force, "Recompute tracks that are already extracted");

  // train
  auto* train = app.add_subcommand("train", "Fit the representation and classifier");
  std::string tr_manifest, tr_model, tr_trace;
  train->add_option("--manifest", tr_manifest, "Features manifest CSV")->required();
  train->add_option("--model", tr_model, "Output model-v1 file")->required();
  train->add_option("--trace", tr_trace, "Optimizer trace CSV (DCAR only)");

  // predict
  auto* predict = app.add_subcommand("predict", "Classify tracks with a trained model");
  std::string pr_model, pr_manifest, pr_out, pr_split = "test";
  predict->add_option("--model", pr_model, "model-v1 file")->required();
  predict->add_option("--manifest", pr_manifest, "Features manifest CSV")->required();
  predict->add_option("--out", pr_out, "Output pred-v1 file")->required();
  predict->add_option("--split", pr_split, "Manifest split to classify")
      ->check(CLI::IsMember({"train", "test"}));

  // eval
  auto* eval = app.add_subcommand("eval", "Metrics and significance tests for predictions");
  std::vector<std::string> ev_files, ev_names;
  std::string ev_report, ev_pairs;
  double ev_level = 0.05;
  eval->add_option("predictions", ev_files, "pred-v1 files")->required()->check(CLI::ExistingFile);
  eval->add_option("--name", ev_names, "Method name per file (default: file stem)");
  eval->add_option("--report", ev_report, "Write the metric report as CSV");
  eval->add_option("--comparisons", ev_pairs, "Write pairwise McNemar results as CSV");
  eval->add_option("--level", ev_level, "Significance level")->check(CLI::Range(0.0, 1.0));

  // synth
  auto* synth = app.add_subcommand("synth", "Generate synthetic frames or components");
  dcar::SyntheticSpec sy;
  dcar::ComponentSpec sc;
  std::string sy_out, sy_kind = "frames";
  synth->add_option("--out", sy_out, "Output directory")->required();
  synth->add_option("--kind", sy_kind, "frames (manifest + frames-v1) or components (gmm-v1)")
      ->check(CLI::IsMember({"frames", "components"}));
  synth->add_option("--events", sy.events, "Number of events");
  synth->add_option("--train-per-event", sy.train_per_event, "Training tracks per event");
  synth->add_option("--test-per-event", sy.test_per_event, "Test tracks per event");
  synth->add_option("--frames", sy.frames, "Frames per track");
  synth->add_option("--dim", sy.dim, "Feature dimension");
  synth->add_option("--planted-dim", sy.planted_dim, "Dimension of the discriminative subspace");
  synth->add_option("--clusters", sy.clusters_per_event, "Clusters per event");
  synth->add_option("--separation", sy.separation, "Event separation in noise units");
  synth->add_option("--noise", sy.noise, "Frame noise standard deviation");
  synth->add_option("--nuisance", sy.nuisance, "Per-track nuisance offset spread");
  synth->add_option("--per-event", sc.per_event, "Components per event (components kind)");
  synth->add_option("--strength", sc.strength, "Log-covariance separation (components kind)");

  // metric-compare
  auto* mc = app.add_subcommand("metric-compare", "PC(k) neighbor purity for LEM, AIRM, Stein");
  std::vector<std::string> mc_files;
  std::string mc_k = "1-10", mc_out;
  mc->add_option("components", mc_files, "gmm-v1 files")->required()->check(CLI::ExistingFile);
  mc->add_option("--k", mc_k, "k values, e.g. 1-10 or 1,3,5");
  mc->add_option("--out", mc_out, "Output CSV (default: stdout)");

  // tune
  auto* tune = app.add_subcommand("tune", "Cross-validated grid search on the train split");
  std::string tu_manifest, tu_scores, tu_config_out;
  tune->add_option("--manifest", tu_manifest, "Features manifest CSV")->required();
  tune->add_option("--scores", tu_scores, "Write per-grid-point fold scores as CSV");
  tune->add_option("--out-config", tu_config_out, "Write the configuration with the best point");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const dcar::ExperimentConfig config = make_config(g);
    if (*extract) {
      const auto s = dcar::cmd_extract(ex_manifest, ex_out, config, ex_force);
      std::cout << s.written << " written, " << s.cached << " cached, " << s.failures.size()
                << " failed\n";
      for (const auto& [id, why] : s.failures) std::cerr << "failed: " << id << ": " << why << '\n';
      return s.failures.empty() ? 0 : 2;
    }
    if (*train) {
      std::optional<fs::path> trace;
      if (!tr_trace.empty()) trace = tr_trace;
      const auto out = dcar::cmd_train(tr_manifest, tr_model, trace, config);
      std::cout << "trained " << dcar::representation_name(out.model.representation) << " on "
                << out.model.krr.points.size() << " items, " << out.model.events.size()
                << " events\n";
      if (out.embedding) {
        const auto& e = out.embedding->trace.entries;
        std::cout << "embedding " << out.model.embedding->ambient_dim() << "x"
                  << out.model.embedding->reduced_dim() << ", " << e.size() - 1
                  << " iterations, F = " << dcar::text::format_real(e.back().objective) << '\n';
      }
      return 0;
    }
    if (*predict) {
      const auto split = pr_split == "train" ? dcar::Split::kTrain : dcar::Split::kTest;
      const auto file =
          dcar::cmd_predict(pr_model, pr_manifest, pr_out, split, config.jobs, config.mfcc);
      std::cout << file.records.size() << " tracks predicted\n";
      return 0;
    }
    if (*eval) {
      if (ev_names.empty()) {
        for (const auto& f : ev_files) ev_names.push_back(fs::path(f).stem().string());
      }
      const std::vector<fs::path> paths(ev_files.begin(), ev_files.end());
      const auto out = dcar::cmd_eval(paths, ev_names, ev_level);
      dcar::write_report_table(std::cout, out.reports);
      const auto& events = dcar::load_predictions(paths.front()).events;
      if (!ev_report.empty()) {
        std::ostringstream csv;
        dcar::write_report_csv(csv, out.reports, events);
        write_file(ev_report, csv.str());
      }
      if (!out.comparisons.empty()) {
        std::ostringstream csv;
        dcar::write_comparisons_csv(csv, out.comparisons);
        if (ev_pairs.empty()) {
          std::cout << '\n' << csv.str();
        } else {
          write_file(ev_pairs, csv.str());
        }
        std::cout << ev_names.front() << " vs rest (win-tie-loss): " << out.first_vs_rest.wins
                  << '-' << out.first_vs_rest.ties << '-' << out.first_vs_rest.losses << '\n';
      }
      return 0;
    }
    if (*synth) {
      if (sy_kind == "frames") {
        sy.seed = config.seeds.synth;
        dcar::cmd_synth(sy, sy_out);
        std::cout << "wrote " << sy.events * (sy.train_per_event + sy.test_per_event)
                  << " tracks to " << sy_out << '\n';
      } else {
        sc.events = sy.events;
        sc.dim = sy.dim;
        sc.subspace_dim = sy.planted_dim;
        sc.noise = synth->count("--noise") ? sy.noise : sc.noise;
        sc.seed = config.seeds.synth;
        fs::create_directories(sy_out);
        std::ostringstream os;
        for (const auto& b : dcar::generate_components(sc)) dcar::write_gmm(os, b.gmm, b.label);
        write_file(fs::path(sy_out) / "components.gmm", os.str());
        std::cout << "wrote " << sc.events * sc.per_event << " components to "
                  << (fs::path(sy_out) / "components.gmm").string() << '\n';
      }
      return 0;
    }
    if (*mc) {
      const auto ks = parse_k_range(mc_k);
      const std::vector<fs::path> paths(mc_files.begin(), mc_files.end());
      std::ostringstream csv;
      dcar::cmd_metric_compare(paths, ks, csv);
      if (mc_out.empty()) {
        std::cout << csv.str();
      } else {
        write_file(mc_out, csv.str());
      }
      return 0;
    }
    if (*tune) {
      std::optional<fs::path> scores;
      if (!tu_scores.empty()) scores = tu_scores;
      const auto result = dcar::cmd_tune(tu_manifest, config, scores);
      const auto& b = result.best;
      std::cout << "best: components=" << b.components << " reduced_dim=" << b.reduced_dim
                << " lambda=" << dcar::text::format_real(b.lambda)
                << " alpha=" << dcar::text::format_real(b.alpha) << " (" << result.folds
                << " folds)\n";
      if (!tu_config_out.empty()) {
        std::ostringstream ini;
        dcar::write_config(ini, dcar::apply_parameters(config, b));
        write_file(tu_config_out, ini.str());
      }
      return 0;
    }
  } catch (const dcar::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const dcar::DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const dcar::NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
