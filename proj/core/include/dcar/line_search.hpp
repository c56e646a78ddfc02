#pragma once

#include <functional>

#include "dcar/grassmann.hpp"

namespace dcar {

struct LineSearchOptions {
  /// Golden-section stops once the bracket is narrower than this fraction of
  /// the search interval.
  double bracket_tolerance = 1e-6;
  int max_golden_iterations = 80;
  double armijo_constant = 1e-4;
  int max_backtracks = 40;
};

struct LineSearchResult {
  double step = 0.0;
  double value = 0.0;
  /// False when no evaluated step decreased the objective; the step is then 0
  /// and the caller should restart along the negative gradient.
  bool improved = false;
  int evaluations = 0;
};

/// Minimizes phi on [0, t_max]: golden-section search (the interval end point
/// is also a candidate), then Armijo backtracking from t_max if the best
/// candidate does not decrease phi below phi(0) = `value_at_zero`. `slope` is
/// phi'(0), used by the Armijo test; pass 0 to require plain decrease.
LineSearchResult minimize_on_interval(const std::function<double(double)>& phi,
                                      double value_at_zero, double t_max, double slope,
                                      const LineSearchOptions& options = {});

/// Step along the geodesic from W in direction H minimizing `objective`,
/// searched on the first quarter-period [0, pi / (2 s_max)] where s_max is the
/// largest singular value of H.
LineSearchResult line_search(const Embedding& w, const TangentVector& h,
                             const std::function<double(const Embedding&)>& objective,
                             double slope = 0.0, const LineSearchOptions& options = {});

}  // namespace dcar
