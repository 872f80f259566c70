#pragma once

#include <functional>
#include <string>
#include <vector>

namespace tweezer {

struct NelderMeadOptions {
  std::vector<double> initial_step;  // per coordinate; the simplex is x0 plus each step
  int max_evaluations = 1000;
  /// Stop when the best value improved by less than stall_relative (relative) over
  /// the last stall_window evaluations.
  double stall_relative = 1e-4;
  int stall_window = 50;
  /// Stop when the simplex has collapsed to this diameter.
  double x_tolerance = 1e-10;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int evaluations = 0;
  std::string stop_reason;
};

/// Downhill simplex minimization with the standard coefficients
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& objective,
                             std::vector<double> x0, const NelderMeadOptions& options);

}  // namespace tweezer
