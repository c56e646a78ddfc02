#include "dcar/line_search.hpp"

#include <cmath>
#include <numbers>

#include "dcar/error.hpp"

namespace dcar {

LineSearchResult minimize_on_interval(const std::function<double(double)>& phi,
                                      double value_at_zero, double t_max, double slope,
                                      const LineSearchOptions& options) {
  LineSearchResult result;
  result.value = value_at_zero;
  if (!(t_max > 0.0) || !std::isfinite(t_max)) return result;

  auto eval = [&](double t) {
    ++result.evaluations;
    return phi(t);
  };

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0;
  double b = t_max;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = eval(c);
  double fd = eval(d);
  for (int it = 0; it < options.max_golden_iterations &&
                   (b - a) > options.bracket_tolerance * t_max;
       ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = eval(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = eval(d);
    }
  }
  double best_t = fc <= fd ? c : d;
  double best_f = std::min(fc, fd);
  // A monotone slice pushes the bracket against t_max; evaluate the end itself.
  if (t_max - b <= options.bracket_tolerance * t_max) {
    const double fend = eval(t_max);
    if (fend <= best_f) {
      best_t = t_max;
      best_f = fend;
    }
  }
  if (std::isfinite(best_f) && best_f < value_at_zero) {
    result.step = best_t;
    result.value = best_f;
    result.improved = true;
    return result;
  }

  double t = t_max;
  for (int k = 0; k < options.max_backtracks; ++k) {
    t *= 0.5;
    const double ft = eval(t);
    if (std::isfinite(ft) && ft < value_at_zero &&
        ft <= value_at_zero + options.armijo_constant * t * std::min(slope, 0.0)) {
      result.step = t;
      result.value = ft;
      result.improved = true;
      return result;
    }
  }
  return result;
}

LineSearchResult line_search(const Embedding& w, const TangentVector& h,
                             const std::function<double(const Embedding&)>& objective,
                             double slope, const LineSearchOptions& options) {
  const double f0 = objective(w);
  const GeodesicStep step(w, h);
  const double smax = step.max_singular_value();
  if (!(smax > 0.0)) {
    LineSearchResult none;
    none.value = f0;
    return none;
  }
  const double t_max = std::numbers::pi / (2.0 * smax);
  return minimize_on_interval([&](double t) { return objective(step.point(t)); }, f0,
                              t_max, slope, options);
}

}  // namespace dcar
