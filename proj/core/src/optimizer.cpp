#include "dcar/optimizer.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "dcar/text_io.hpp"

namespace dcar {

void OptimizerTrace::write_csv(std::ostream& out) const {
  out << "iter,F,t,grad_norm,restarted\n";
  for (const auto& e : entries) {
    out << e.iteration << ',' << text::format_real(e.objective) << ','
        << text::format_real(e.step) << ',' << text::format_real(e.gradient_norm) << ','
        << (e.restarted ? 1 : 0) << '\n';
  }
}

EmbeddingResult learn_embedding(std::span<const GaussianComponent> components,
                                const AffinityGraph& affinity, Eigen::Index r,
                                const OptimizerConfig& config,
                                std::optional<Embedding> initial) {
  if (components.empty()) throw UsageError("learn_embedding: no components");
  const Eigen::Index d = components.front().dim();
  if (r < 1 || r >= d) {
    throw UsageError("learn_embedding: need 1 <= r < d (r=" + std::to_string(r) +
                     ", d=" + std::to_string(d) + ")");
  }
  if (config.max_iterations < 0 || !(config.relative_tolerance > 0.0)) {
    throw UsageError("learn_embedding: invalid stopping configuration");
  }
  const EmbeddingObjective problem(components, affinity, config.lambda, config.gradient);

  Embedding w = initial ? *initial
                        : (config.init == InitMode::kPrincipal
                               ? Embedding::principal(components, r)
                               : Embedding::random(d, r, config.seed));
  if (w.ambient_dim() != d || w.reduced_dim() != r) {
    throw UsageError("learn_embedding: initial embedding has the wrong shape");
  }
  const int restart_period =
      config.restart_period > 0 ? config.restart_period : static_cast<int>(d * r);

  auto evaluate = [&](const Embedding& at, int iteration) {
    try {
      return problem.value_and_gradient(at.matrix());
    } catch (const NumericalError& e) {
      throw OptimizationError(std::string("objective evaluation failed: ") + e.what(),
                              iteration, w.matrix());
    }
  };

  auto [f, g] = evaluate(w, 0);
  if (!std::isfinite(f)) {
    throw OptimizationError("non-finite objective at the initial point", 0, w.matrix());
  }
  TangentVector grad = project_to_tangent(w, g);
  const double initial_norm = grad.norm();

  EmbeddingResult result{w, {}, StopReason::kMaxIterations};
  result.trace.entries.push_back(
      TraceEntry{0, f, 0.0, initial_norm, true, w.orthonormality_error()});
  if (initial_norm == 0.0) {
    result.reason = StopReason::kZeroGradient;
    return result;
  }

  TangentVector dir{-grad.direction};
  int since_restart = 0;
  int stalled = 0;
  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    bool restarted = false;
    double slope = inner(grad.direction, dir.direction);
    if (!(slope < 0.0)) {
      dir.direction = -grad.direction;
      slope = -grad.norm() * grad.norm();
      restarted = true;
    }

    GeodesicStep step(w, dir);
    const Embedding* base = &w;
    auto phi = [&](double t) {
      try {
        return problem.value(step.point(t).matrix());
      } catch (const NumericalError&) {
        return std::numeric_limits<double>::infinity();
      }
    };
    auto t_max = [&] { return std::numbers::pi / (2.0 * step.max_singular_value()); };
    LineSearchResult ls = minimize_on_interval(phi, f, t_max(), slope, config.line_search);
    if (!ls.improved && !restarted) {
      dir.direction = -grad.direction;
      slope = -grad.norm() * grad.norm();
      restarted = true;
      step = GeodesicStep(*base, dir);
      ls = minimize_on_interval(phi, f, t_max(), slope, config.line_search);
    }
    if (!ls.improved) {
      result.reason = StopReason::kNoDescent;
      break;
    }

    Embedding next = step.point(ls.step);
    const TangentVector moved_dir = step.transport_direction(ls.step);
    const TangentVector moved_grad = step.transport_tangent(grad, ls.step);

    auto [f_next, g_next] = evaluate(next, iter);
    if (!std::isfinite(f_next)) {
      throw OptimizationError("non-finite objective at iteration " + std::to_string(iter),
                              iter, w.matrix());
    }
    TangentVector grad_next = project_to_tangent(next, g_next);

    ++since_restart;
    if (restarted) since_restart = 0;
    const double gamma = cg_step_size(grad_next, moved_grad, grad);
    if (gamma < 0.0 || since_restart >= restart_period) {
      dir.direction = -grad_next.direction;
      if (since_restart >= restart_period) since_restart = 0;
    } else {
      // Re-project: transports are tangent only up to rounding.
      dir = project_to_tangent(next, -grad_next.direction + gamma * moved_dir.direction);
    }

    const double change = std::abs(f - f_next) / std::max(std::abs(f), 1e-300);
    w = std::move(next);
    f = f_next;
    grad = std::move(grad_next);
    result.trace.entries.push_back(
        TraceEntry{iter, f, ls.step, grad.norm(), restarted, w.orthonormality_error()});

    if (grad.norm() <= config.gradient_tolerance * initial_norm) {
      result.reason = StopReason::kGradientTolerance;
      break;
    }
    stalled = change < config.relative_tolerance ? stalled + 1 : 0;
    if (stalled >= config.stall_iterations) {
      result.reason = StopReason::kObjectiveStalled;
      break;
    }
  }
  result.embedding = w;
  return result;
}

}  // namespace dcar
