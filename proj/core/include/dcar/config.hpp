#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dcar/affinity.hpp"
#include "dcar/eval.hpp"
#include "dcar/features.hpp"
#include "dcar/gmm.hpp"
#include "dcar/optimizer.hpp"

namespace dcar {

enum class Representation { kDcar, kGmmBaseline, kMvVector };

std::string representation_name(Representation r);
Representation parse_representation(const std::string& name);

struct Seeds {
  std::uint64_t gmm = 1;
  std::uint64_t init = 2;
  std::uint64_t synth = 3;
  std::uint64_t cv = 4;
};

/// Every tunable of a run. Defaults follow the usual tuning ranges; all keys
/// can be overridden from the command line as `section.key=value`.
struct ExperimentConfig {
  Representation representation = Representation::kDcar;
  int components = 5;    // P
  int reduced_dim = 10;  // r, clamped to d - 1
  double lambda = 1.0;
  double alpha = 1.0;
  double sigma_mean = 0.0;  // kernel bandwidths; 0 selects the median rule
  double sigma_cov = 0.0;

  AffinityOptions affinity;
  EmConfig em;
  OptimizerConfig optimizer;  // lambda and seed are filled from the fields above

  MfccOptions mfcc;
  int pca_dim = 0;  // 0 disables frame-level PCA

  Seeds seeds;
  int folds = 5;
  GridOptions grid;
  int jobs = 1;

  void validate() const;
};

/// Parses INI text (sections model, affinity, gmm, optimizer, features, seeds,
/// tune, run) and then applies `overrides` in order. Unknown keys are errors.
ExperimentConfig parse_config(std::istream& in, const std::vector<std::string>& overrides = {},
                              const std::string& source = "<stream>");
ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides = {});
ExperimentConfig default_config(const std::vector<std::string>& overrides = {});

/// Writes the effective configuration in the same INI layout.
void write_config(std::ostream& out, const ExperimentConfig& config);

}  // namespace dcar
