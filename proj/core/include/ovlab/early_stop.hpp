#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ovlab {

// Causal moving average: position i averages the last min(i + 1, window)
// values. Output has the same length as the input.
std::vector<double> moving_average(std::span<const double> series, std::size_t window);

enum class StopMode { kMinimize, kMaximize };

struct EarlyStopConfig {
  std::size_t window = 10;
  std::size_t patience = 10;
  StopMode mode = StopMode::kMinimize;
};

// Positions are 0-based indices into the series.
struct StopPoint {
  std::size_t best_epoch = 0;
  std::size_t stop_epoch = 0;
};

// Smooths, then tracks the running best (strict improvement only, so ties keep
// the earlier position). Stops at the first position where `patience`
// consecutive positions have passed without a new best; otherwise at the end.
StopPoint find_stop_epoch(std::span<const double> series, const EarlyStopConfig& cfg);

}  // namespace ovlab
