#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "dcar/affinity.hpp"
#include "dcar/embedding_objective.hpp"
#include "dcar/error.hpp"
#include "dcar/grassmann.hpp"
#include "dcar/line_search.hpp"

namespace dcar {

enum class InitMode { kRandom, kPrincipal };

struct OptimizerConfig {
  double lambda = 1.0;
  int max_iterations = 100;
  /// Stop after `stall_iterations` consecutive relative objective changes
  /// below this value.
  double relative_tolerance = 1e-8;
  int stall_iterations = 3;
  /// Stop once the Riemannian gradient norm falls below this fraction of its
  /// initial value.
  double gradient_tolerance = 1e-6;
  /// Reset the search direction to the negative gradient every this many
  /// iterations; 0 means d * r.
  int restart_period = 0;
  InitMode init = InitMode::kRandom;
  std::uint64_t seed = 0;
  GradientForm gradient = GradientForm::kExact;
  LineSearchOptions line_search;
};

struct TraceEntry {
  int iteration = 0;
  double objective = 0.0;
  double step = 0.0;
  double gradient_norm = 0.0;
  bool restarted = false;
  double orthonormality_error = 0.0;
};

struct OptimizerTrace {
  std::vector<TraceEntry> entries;

  /// CSV with header `iter,F,t,grad_norm,restarted`.
  void write_csv(std::ostream& out) const;
};

enum class StopReason {
  kZeroGradient,
  kGradientTolerance,
  kObjectiveStalled,
  kNoDescent,
  kMaxIterations,
};

struct EmbeddingResult {
  Embedding embedding;
  OptimizerTrace trace;
  StopReason reason = StopReason::kMaxIterations;
};

/// Raised when the objective turns non-finite mid-run.
class OptimizationError : public NumericalError {
 public:
  OptimizationError(const std::string& what, int iteration, Eigen::MatrixXd last_good)
      : NumericalError(what), iteration_(iteration), last_good_(std::move(last_good)) {}
  int iteration() const { return iteration_; }
  const Eigen::MatrixXd& last_good() const { return last_good_; }

 private:
  int iteration_;
  Eigen::MatrixXd last_good_;
};

/// Conjugate gradient on G(r, d): geodesic line searches, parallel transport
/// of the previous direction and gradient, and a Polak-Ribiere type step from
/// the transported gradient. Restarts along -D on schedule, on loss of
/// descent, or when gamma < 0.
EmbeddingResult learn_embedding(std::span<const GaussianComponent> components,
                                const AffinityGraph& affinity, Eigen::Index r,
                                const OptimizerConfig& config,
                                std::optional<Embedding> initial = std::nullopt);

}  // namespace dcar
