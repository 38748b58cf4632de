#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ovlab/dataset.hpp"
#include "ovlab/loss_decomp.hpp"
#include "ovlab/nn.hpp"
#include "ovlab/ov_metric.hpp"
#include "ovlab/optimizer.hpp"

namespace ovlab {

struct RunConfig {
  MlpSpec arch;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double momentum = 0.0;
  std::size_t epochs = 1;
  std::size_t batch_size = 128;
  NoiseSpec label_noise;
  std::size_t ov_batches = 10;
  std::size_t ov_batch_size = 0;  // 0 means "same as batch_size"
  std::size_t ov_samples = 1000;
  // When set, OV candidates come from a fresh plain-SGD optimizer with this
  // learning rate instead of a snapshot of the live optimizer.
  std::optional<double> ov_probe_lr;
  bool measure_ov = true;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t effective_ov_batch_size() const { return ov_batch_size ? ov_batch_size : batch_size; }
};

struct TraceRow {
  std::size_t epoch = 0;
  double train_ce = 0.0;
  // Test metrics are absent when the dataset has no test split.
  std::optional<double> test_ce;
  std::optional<double> test_mse;
  std::optional<double> test_zo;
  std::optional<double> test_acc;
  // Absent when OV measurement is disabled for the run.
  std::optional<double> ov;
  std::optional<double> v_g;
  std::optional<double> bias;
  std::optional<double> variance;

  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

struct Trace {
  std::vector<TraceRow> rows;

  std::vector<double> column(std::optional<double> TraceRow::*field) const;
  friend bool operator==(const Trace&, const Trace&) = default;
};

// Mean test losses of one model (probabilities = softmax of logits).
struct TestMetrics {
  double ce = 0.0;
  double mse = 0.0;
  double zo = 0.0;
};
TestMetrics evaluate_test(const Model& model, const TestSplit& test);

// OV and gradient variance for one model at one point in training. Reads
// only the training split.
struct OvMeasurement {
  OvEstimate ov;
  GradVarEstimate grad_var;
};
OvMeasurement measure_ov(const Model& model, const OptimizerState& live_opt,
                         const TrainSplit& train, const Matrix& ov_inputs, const RunConfig& cfg,
                         std::uint64_t batch_seed);

// Owns one training run: model, optimizer, and the seeded shuffle stream.
class Trainer {
 public:
  // Label noise from cfg is NOT applied here; callers pass the split the
  // model should see.
  Trainer(TrainSplit train, const RunConfig& cfg, std::uint64_t init_seed);

  void run_epoch();
  std::size_t epochs_done() const { return epoch_; }
  const Model& model() const { return model_; }
  const OptimizerState& optimizer() const { return opt_; }
  const TrainSplit& train() const { return train_; }
  double train_ce() const;

 private:
  TrainSplit train_;
  RunConfig cfg_;
  Model model_;
  OptimizerState opt_;
  std::uint64_t shuffle_seed_;
  std::size_t epoch_ = 0;
};

// Applies cfg.label_noise to the training labels, trains for cfg.epochs and
// records one row per epoch (epochs numbered from 1). OV uses only training
// data.
Trace train_with_trace(const Dataset& data, const RunConfig& cfg);

// K members trained in lockstep on subsets of the (noised) training split.
// Each row holds member means of train/test losses and OV, plus the bias and
// variance of `kind`; the test column of `kind` is the expected loss.
Trace ensemble_trace(const Dataset& data, const RunConfig& cfg, std::size_t k, double frac,
                     LossKind kind);

// Same, with explicit member subsets and init seeds (one per member).
Trace ensemble_trace(const Dataset& data, const RunConfig& cfg,
                     std::span<const std::vector<std::size_t>> subsets,
                     std::span<const std::uint64_t> member_seeds, LossKind kind);

struct WidthRow {
  std::size_t width = 0;
  double final_test_acc = 0.0;
  double final_ov = 0.0;
  friend bool operator==(const WidthRow&, const WidthRow&) = default;
};

struct WidthSweepResult {
  std::vector<WidthRow> rows;
  double r = 0.0;  // pearson_r(final_ov, final_test_acc)
};

inline constexpr double kDefaultProbeLr = 1e-3;

// Replaces every hidden layer of base_cfg.arch with `width` units for each
// entry of widths. OV uses the plain-SGD probe (base_cfg.ov_probe_lr or 1e-3).
// Throws ZeroVariance when r is undefined.
WidthSweepResult width_sweep(const Dataset& data, const RunConfig& base_cfg,
                             std::span<const std::size_t> widths);

// Same rows, without the correlation.
std::vector<WidthRow> width_sweep_rows(const Dataset& data, const RunConfig& base_cfg,
                                       std::span<const std::size_t> widths);

}  // namespace ovlab
