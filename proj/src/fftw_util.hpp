#pragma once

#include <mutex>

namespace tweezer::detail {

/// Serializes FFTW planner calls, which are not thread safe.
std::mutex& fftw_planner_mutex();

}  // namespace tweezer::detail
