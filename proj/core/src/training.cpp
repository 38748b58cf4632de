#include "ovlab/training.hpp"

#include <algorithm>
#include <string>

#include "ovlab/error.hpp"
#include "ovlab/rng.hpp"
#include "ovlab/stats.hpp"

namespace ovlab {

namespace {

// Stream tags for derive_seed; one per independent use of randomness.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kOvSampleStream = 2;
constexpr std::uint64_t kShuffleStream = 3;
constexpr std::uint64_t kSubsampleStream = 4;
constexpr std::uint64_t kOvBatchStream = 1'000'000;
constexpr std::uint64_t kMemberStream = 2'000'000;

void check_arch_matches(const RunConfig& cfg, const Dataset& data) {
  if (cfg.arch.input_dim() != data.input_dim()) {
    throw DimensionError("architecture input size " + std::to_string(cfg.arch.input_dim()) +
                         " != data dimension " + std::to_string(data.input_dim()));
  }
  if (cfg.arch.class_count() != data.class_count) {
    throw DimensionError("architecture output size " + std::to_string(cfg.arch.class_count()) +
                         " != class count " + std::to_string(data.class_count));
  }
}

TrainSplit noisy_train(const Dataset& data, const NoiseSpec& noise) {
  TrainSplit train = data.train;
  train.t = inject_label_noise(data.train.t, noise);
  return train;
}

OptimizerState make_optimizer(const RunConfig& cfg, std::size_t n) {
  return cfg.optimizer == OptimizerKind::kSgd ? make_sgd(cfg.learning_rate, cfg.momentum, n)
                                              : make_adam(cfg.learning_rate, n);
}

Matrix ov_inputs_for(const TrainSplit& train, const RunConfig& cfg) {
  return ov_sample_inputs(train, cfg.ov_samples, derive_seed(cfg.seed, kOvSampleStream));
}

std::uint64_t ov_batch_seed(const RunConfig& cfg, std::size_t epoch) {
  return derive_seed(cfg.seed, kOvBatchStream + epoch);
}

}  // namespace

void RunConfig::validate() const {
  arch.validate();
  if (epochs == 0) throw InvalidArgument("epochs must be >= 1");
  if (batch_size == 0) throw InvalidArgument("batch size must be >= 1");
  if (!(learning_rate >= 0.0)) throw InvalidArgument("learning rate must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("momentum must be in [0, 1)");
  if (!(label_noise.fraction >= 0.0 && label_noise.fraction <= 1.0)) {
    throw InvalidArgument("label noise must be in [0, 1]");
  }
  if (measure_ov) {
    if (ov_batches < 2) throw InvalidArgument("OV needs at least 2 batches");
    if (ov_samples == 0) throw InvalidArgument("OV needs at least 1 sample");
    if (ov_probe_lr && !(*ov_probe_lr >= 0.0)) throw InvalidArgument("probe lr must be >= 0");
  }
}

std::vector<double> Trace::column(std::optional<double> TraceRow::*field) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    const auto& v = row.*field;
    if (!v) throw InvalidArgument("trace column has missing values");
    out.push_back(*v);
  }
  return out;
}

TestMetrics evaluate_test(const Model& model, const TestSplit& test) {
  if (test.size() == 0) throw InvalidArgument("empty test split");
  const Matrix probs = softmax(forward_logits(model, test.x));
  TestMetrics m;
  std::size_t errors = 0;
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    m.ce += eval_loss(LossKind::kCe, test.t.row(r), probs.row(r));
    m.mse += eval_loss(LossKind::kMse, test.t.row(r), probs.row(r));
    if (argmax(test.t.row(r)) != argmax(probs.row(r))) ++errors;
  }
  const double n = static_cast<double>(probs.rows());
  m.ce /= n;
  m.mse /= n;
  m.zo = static_cast<double>(errors) / n;
  return m;
}

OvMeasurement measure_ov(const Model& model, const OptimizerState& live_opt,
                         const TrainSplit& train, const Matrix& ov_inputs, const RunConfig& cfg,
                         std::uint64_t batch_seed) {
  const auto batches =
      draw_ov_batches(train, cfg.effective_ov_batch_size(), cfg.ov_batches, batch_seed);
  const OptimizerState probe =
      cfg.ov_probe_lr ? make_sgd(*cfg.ov_probe_lr, 0.0, model.size()) : live_opt;
  const CandidateUpdateSet cand = candidate_updates(model, probe, batches);
  return OvMeasurement{ov_mean(model, cand, ov_inputs), grad_variance(cand)};
}

Trainer::Trainer(TrainSplit train, const RunConfig& cfg, std::uint64_t init_seed)
    : train_(std::move(train)),
      cfg_(cfg),
      model_(init_model(cfg.arch, init_seed)),
      opt_(make_optimizer(cfg, model_.size())),
      shuffle_seed_(derive_seed(init_seed, kShuffleStream)) {
  cfg_.validate();
  if (train_.size() == 0) throw InsufficientData("empty training split");
}

void Trainer::run_epoch() {
  Rng rng(derive_seed(shuffle_seed_, epoch_));
  const auto order = rng.permutation(train_.size());
  for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
    const std::size_t len = std::min(cfg_.batch_size, order.size() - start);
    const Batch batch = train_.batch(std::span<const std::size_t>(order.data() + start, len));
    apply_step(opt_, model_, ce_grad(model_, batch));
  }
  ++epoch_;
}

double Trainer::train_ce() const { return ce_loss(model_, Batch{train_.x, train_.t}); }

Trace train_with_trace(const Dataset& data, const RunConfig& cfg) {
  data.validate();
  cfg.validate();
  check_arch_matches(cfg, data);

  Trainer trainer(noisy_train(data, cfg.label_noise), cfg, derive_seed(cfg.seed, kInitStream));
  Matrix ov_inputs;
  if (cfg.measure_ov) ov_inputs = ov_inputs_for(trainer.train(), cfg);

  Trace trace;
  trace.rows.reserve(cfg.epochs);
  for (std::size_t q = 1; q <= cfg.epochs; ++q) {
    trainer.run_epoch();
    TraceRow row;
    row.epoch = q;
    row.train_ce = trainer.train_ce();
    if (data.has_test()) {
      const TestMetrics m = evaluate_test(trainer.model(), data.test);
      row.test_ce = m.ce;
      row.test_mse = m.mse;
      row.test_zo = m.zo;
      row.test_acc = 1.0 - m.zo;
    }
    if (cfg.measure_ov) {
      const OvMeasurement ov = measure_ov(trainer.model(), trainer.optimizer(), trainer.train(),
                                          ov_inputs, cfg, ov_batch_seed(cfg, q));
      row.ov = ov.ov.value;
      row.v_g = ov.grad_var.v_g;
    }
    trace.rows.push_back(row);
  }
  return trace;
}

Trace ensemble_trace(const Dataset& data, const RunConfig& cfg,
                     std::span<const std::vector<std::size_t>> subsets,
                     std::span<const std::uint64_t> member_seeds, LossKind kind) {
  data.validate();
  cfg.validate();
  check_arch_matches(cfg, data);
  if (subsets.size() < 2) throw InvalidArgument("ensemble needs at least 2 members");
  if (member_seeds.size() != subsets.size()) {
    throw DimensionError("need one seed per ensemble member");
  }
  if (!data.has_test()) throw InvalidArgument("ensemble tracing needs a test split");

  const TrainSplit train = noisy_train(data, cfg.label_noise);
  std::vector<Trainer> members;
  std::vector<Matrix> ov_inputs;
  members.reserve(subsets.size());
  for (std::size_t j = 0; j < subsets.size(); ++j) {
    TrainSplit part;
    static_cast<LabeledSet&>(part) = LabeledSet{train.x.select_rows(subsets[j]),
                                                train.t.select_rows(subsets[j])};
    members.emplace_back(std::move(part), cfg, member_seeds[j]);
    if (cfg.measure_ov) ov_inputs.push_back(ov_inputs_for(members.back().train(), cfg));
  }

  const std::size_t n_test = data.test.size();
  const double inv_k = 1.0 / static_cast<double>(members.size());
  Trace trace;
  trace.rows.reserve(cfg.epochs);
  for (std::size_t q = 1; q <= cfg.epochs; ++q) {
    TraceRow row;
    row.epoch = q;
    row.train_ce = 0.0;
    TestMetrics mean_metrics;
    double ov_sum = 0.0;
    double vg_sum = 0.0;
    std::vector<LabeledEnsemble> samples(n_test);
    for (std::size_t i = 0; i < n_test; ++i) {
      auto t = data.test.t.row(i);
      samples[i].target.assign(t.begin(), t.end());
      samples[i].ensemble.outputs.reserve(members.size());
    }

    for (std::size_t j = 0; j < members.size(); ++j) {
      Trainer& m = members[j];
      m.run_epoch();
      row.train_ce += m.train_ce() * inv_k;
      const TestMetrics metrics = evaluate_test(m.model(), data.test);
      mean_metrics.ce += metrics.ce * inv_k;
      mean_metrics.mse += metrics.mse * inv_k;
      mean_metrics.zo += metrics.zo * inv_k;
      const Matrix probs = softmax(forward_logits(m.model(), data.test.x));
      for (std::size_t i = 0; i < n_test; ++i) {
        auto p = probs.row(i);
        samples[i].ensemble.outputs.emplace_back(p.begin(), p.end());
      }
      if (cfg.measure_ov) {
        const OvMeasurement ov =
            measure_ov(m.model(), m.optimizer(), m.train(), ov_inputs[j], cfg,
                       derive_seed(member_seeds[j], kOvBatchStream + q));
        ov_sum += ov.ov.value;
        vg_sum += ov.grad_var.v_g;
      }
    }

    const EnsembleTerms terms = ensemble_bias_variance(kind, samples);
    row.test_ce = mean_metrics.ce;
    row.test_mse = mean_metrics.mse;
    row.test_zo = mean_metrics.zo;
    row.test_acc = 1.0 - mean_metrics.zo;
    // The kind's own column is the expected loss computed by the decomposition.
    switch (kind) {
      case LossKind::kMse: row.test_mse = terms.expected_loss; break;
      case LossKind::kCe: row.test_ce = terms.expected_loss; break;
      case LossKind::kZo:
        row.test_zo = terms.expected_loss;
        row.test_acc = 1.0 - terms.expected_loss;
        break;
    }
    row.bias = terms.bias;
    row.variance = terms.variance;
    if (cfg.measure_ov) {
      row.ov = ov_sum * inv_k;
      row.v_g = vg_sum * inv_k;
    }
    trace.rows.push_back(row);
  }
  return trace;
}

Trace ensemble_trace(const Dataset& data, const RunConfig& cfg, std::size_t k, double frac,
                     LossKind kind) {
  if (k < 2) throw InvalidArgument("ensemble needs K >= 2");
  const auto subsets =
      subsample_train_sets(data.train.size(), k, frac, derive_seed(cfg.seed, kSubsampleStream));
  std::vector<std::uint64_t> seeds(k);
  for (std::size_t j = 0; j < k; ++j) seeds[j] = derive_seed(cfg.seed, kMemberStream + j);
  return ensemble_trace(data, cfg, subsets, seeds, kind);
}

std::vector<WidthRow> width_sweep_rows(const Dataset& data, const RunConfig& base_cfg,
                                       std::span<const std::size_t> widths) {
  if (widths.empty()) throw InvalidArgument("width sweep needs at least one width");
  if (!data.has_test()) throw InvalidArgument("width sweep needs a test split");
  data.validate();

  std::vector<WidthRow> rows;
  rows.reserve(widths.size());
  for (std::size_t width : widths) {
    if (width == 0) throw InvalidArgument("hidden width must be >= 1");
    RunConfig cfg = base_cfg;
    for (std::size_t l = 1; l + 1 < cfg.arch.layer_sizes.size(); ++l) {
      cfg.arch.layer_sizes[l] = width;
    }
    cfg.ov_probe_lr = base_cfg.ov_probe_lr.value_or(kDefaultProbeLr);
    cfg.measure_ov = true;
    cfg.validate();
    check_arch_matches(cfg, data);

    Trainer trainer(noisy_train(data, cfg.label_noise), cfg, derive_seed(cfg.seed, kInitStream));
    for (std::size_t q = 1; q <= cfg.epochs; ++q) trainer.run_epoch();
    const Matrix ov_inputs = ov_inputs_for(trainer.train(), cfg);
    const OvMeasurement ov = measure_ov(trainer.model(), trainer.optimizer(), trainer.train(),
                                        ov_inputs, cfg, ov_batch_seed(cfg, cfg.epochs));
    const TestMetrics metrics = evaluate_test(trainer.model(), data.test);
    rows.push_back(WidthRow{width, 1.0 - metrics.zo, ov.ov.value});
  }
  return rows;
}

WidthSweepResult width_sweep(const Dataset& data, const RunConfig& base_cfg,
                             std::span<const std::size_t> widths) {
  WidthSweepResult result;
  result.rows = width_sweep_rows(data, base_cfg, widths);
  std::vector<double> ov;
  std::vector<double> acc;
  for (const auto& row : result.rows) {
    ov.push_back(row.final_ov);
    acc.push_back(row.final_test_acc);
  }
  if (ov.size() < 2) throw ZeroVariance("width sweep: correlation undefined for a single width");
  result.r = pearson_r(ov, acc);
  return result;
}

}  // namespace ovlab
