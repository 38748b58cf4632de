#include "ovlab/early_stop.hpp"

#include "ovlab/error.hpp"

namespace ovlab {

std::vector<double> moving_average(std::span<const double> series, std::size_t window) {
  if (window == 0) throw InvalidArgument("moving-average window must be >= 1");
  if (series.empty()) throw InvalidArgument("moving average of an empty series");
  std::vector<double> out(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    const std::size_t first = i + 1 >= window ? i + 1 - window : 0;
    double s = 0.0;
    for (std::size_t j = first; j <= i; ++j) s += series[j];
    out[i] = s / static_cast<double>(i + 1 - first);
  }
  return out;
}

StopPoint find_stop_epoch(std::span<const double> series, const EarlyStopConfig& cfg) {
  if (cfg.patience == 0) throw InvalidArgument("patience must be >= 1");
  const auto smoothed = moving_average(series, cfg.window);
  const bool minimize = cfg.mode == StopMode::kMinimize;

  StopPoint p;
  double best = smoothed[0];
  std::size_t since_best = 0;
  for (std::size_t i = 1; i < smoothed.size(); ++i) {
    const bool improved = minimize ? smoothed[i] < best : smoothed[i] > best;
    if (improved) {
      best = smoothed[i];
      p.best_epoch = i;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      p.stop_epoch = i;
      return p;
    }
  }
  p.stop_epoch = smoothed.size() - 1;
  return p;
}

}  // namespace ovlab
