#include "tweezer/nelder_mead.hpp"

#include "tweezer/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tweezer {

namespace {

struct Budget {};  // thrown internally when the evaluation budget runs out

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& objective,
                             std::vector<double> x0, const NelderMeadOptions& options) {
  const std::size_t dim = x0.size();
  if (dim == 0) throw ConfigError("nelder_mead needs at least one coordinate");
  if (options.initial_step.size() != dim) throw DimensionError("one initial step per coordinate required");
  if (options.max_evaluations < 1) throw ConfigError("evaluation budget must be positive");

  NelderMeadResult result;
  result.x = x0;
  result.value = HUGE_VAL;
  std::vector<double> best_history;

  auto eval = [&](const std::vector<double>& x) {
    if (result.evaluations >= options.max_evaluations) throw Budget{};
    double f = objective(x);
    if (!std::isfinite(f)) f = HUGE_VAL;
    ++result.evaluations;
    if (f < result.value) {
      result.value = f;
      result.x = x;
    }
    best_history.push_back(result.value);
    return f;
  };
  auto stalled = [&] {
    const auto n = static_cast<int>(best_history.size());
    if (n <= options.stall_window) return false;
    const double then = best_history[static_cast<std::size_t>(n - 1 - options.stall_window)];
    const double now = best_history.back();
    return then - now <= options.stall_relative * std::abs(then);
  };

  std::vector<std::vector<double>> simplex(dim + 1, x0);
  std::vector<double> values(dim + 1);
  try {
    values[0] = eval(simplex[0]);
    for (std::size_t i = 0; i < dim; ++i) {
      simplex[i + 1][i] += options.initial_step[i];
      values[i + 1] = eval(simplex[i + 1]);
    }

    std::vector<std::size_t> order(dim + 1);
    std::vector<double> centroid(dim), trial(dim), trial2(dim);
    auto along = [&](double t, std::vector<double>& out, std::size_t worst) {
      for (std::size_t k = 0; k < dim; ++k) out[k] = centroid[k] + t * (simplex[worst][k] - centroid[k]);
    };

    for (;;) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
      const std::size_t best = order.front();
      const std::size_t worst = order.back();
      const std::size_t second = order[dim - 1];

      double diameter = 0.0;
      for (std::size_t v = 0; v <= dim; ++v)
        for (std::size_t k = 0; k < dim; ++k)
          diameter = std::max(diameter, std::abs(simplex[v][k] - simplex[best][k]));
      if (diameter < options.x_tolerance) {
        result.stop_reason = "simplex collapsed";
        break;
      }
      if (stalled()) {
        result.stop_reason = "stalled";
        break;
      }

      std::fill(centroid.begin(), centroid.end(), 0.0);
      for (std::size_t v = 0; v <= dim; ++v)
        if (v != worst)
          for (std::size_t k = 0; k < dim; ++k) centroid[k] += simplex[v][k] / static_cast<double>(dim);

      along(-1.0, trial, worst);
      const double fr = eval(trial);
      if (fr < values[best]) {
        along(-2.0, trial2, worst);
        const double fe = eval(trial2);
        if (fe < fr) {
          simplex[worst] = trial2;
          values[worst] = fe;
        } else {
          simplex[worst] = trial;
          values[worst] = fr;
        }
        continue;
      }
      if (fr < values[second]) {
        simplex[worst] = trial;
        values[worst] = fr;
        continue;
      }
      // contraction, outside if the reflection beat the worst point
      const bool outside = fr < values[worst];
      along(outside ? -0.5 : 0.5, trial2, worst);
      const double fc = eval(trial2);
      if (fc < (outside ? fr : values[worst])) {
        simplex[worst] = trial2;
        values[worst] = fc;
        continue;
      }
      for (std::size_t v = 0; v <= dim; ++v) {
        if (v == best) continue;
        for (std::size_t k = 0; k < dim; ++k) simplex[v][k] = simplex[best][k] + 0.5 * (simplex[v][k] - simplex[best][k]);
        values[v] = eval(simplex[v]);
      }
    }
  } catch (const Budget&) {
    result.stop_reason = "budget exhausted";
  }
  return result;
}

}  // namespace tweezer
