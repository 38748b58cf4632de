#include "ovlab/ov_metric.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "ovlab/error.hpp"
#include "ovlab/rng.hpp"

namespace ovlab {

namespace {

void check_candidates(const Model& model, const CandidateUpdateSet& cand) {
  if (cand.size() < 2) {
    throw InvalidArgument("OV needs at least 2 candidate updates, got " +
                          std::to_string(cand.size()));
  }
  for (const auto& u : cand.updates) {
    if (u.delta.size() != model.size()) {
      throw DimensionError("candidate update length does not match model");
    }
  }
}

// Sum in ascending order so the result does not depend on input order.
double sorted_sum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

struct PointTerms {
  double numerator = 0.0;
  double denominator = 0.0;
};

// logits[b] is the c-vector of candidate b for one input.
PointTerms point_terms(const std::vector<std::span<const double>>& logits) {
  const std::size_t n_cand = logits.size();
  const std::size_t c = logits.front().size();
  std::vector<double> mean(c, 0.0);
  for (const auto& l : logits) {
    for (std::size_t k = 0; k < c; ++k) mean[k] += l[k];
  }
  const double inv = 1.0 / static_cast<double>(n_cand);
  for (double& v : mean) v *= inv;

  PointTerms terms;
  for (const auto& l : logits) {
    double dev = 0.0;
    double norm = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      const double d = l[k] - mean[k];
      dev += d * d;
      norm += l[k] * l[k];
    }
    terms.numerator += dev;
    terms.denominator += norm;
  }
  terms.numerator *= inv;
  terms.denominator *= inv;
  return terms;
}

std::vector<Matrix> candidate_logits(const Model& model, const CandidateUpdateSet& cand,
                                     const Matrix& xs) {
  std::vector<Matrix> out;
  out.reserve(cand.size());
  for (const auto& u : cand.updates) out.push_back(forward_logits(perturbed(model, u.delta), xs));
  return out;
}

std::vector<double> mean_update(const CandidateUpdateSet& cand) {
  const std::size_t n = cand.updates.front().delta.size();
  std::vector<double> mean(n, 0.0);
  for (const auto& u : cand.updates) {
    for (std::size_t i = 0; i < n; ++i) mean[i] += u.delta[i];
  }
  for (double& v : mean) v /= static_cast<double>(cand.size());
  return mean;
}

}  // namespace

std::vector<Batch> draw_ov_batches(const TrainSplit& train, std::size_t m, std::size_t n_batches,
                                   std::uint64_t seed) {
  if (m == 0) throw InvalidArgument("OV batch size must be positive");
  if (n_batches < 2) throw InvalidArgument("OV needs at least 2 batches");
  if (n_batches * m > train.size()) {
    throw InsufficientData("insufficient data: " + std::to_string(n_batches) + " batches of " +
                           std::to_string(m) + " need " + std::to_string(n_batches * m) +
                           " rows, training set has " + std::to_string(train.size()));
  }
  Rng rng(seed);
  const auto order = rng.permutation(train.size());
  std::vector<Batch> batches;
  batches.reserve(n_batches);
  for (std::size_t b = 0; b < n_batches; ++b) {
    std::span<const std::size_t> idx(order.data() + b * m, m);
    batches.push_back(train.batch(idx));
  }
  return batches;
}

Matrix ov_sample_inputs(const TrainSplit& train, std::size_t count, std::uint64_t seed) {
  if (train.size() == 0) throw InsufficientData("empty training set");
  Rng rng(seed);
  auto order = rng.permutation(train.size());
  order.resize(std::min(count, train.size()));
  std::sort(order.begin(), order.end());
  return train.x.select_rows(order);
}

CandidateUpdateSet candidate_updates(const Model& model, const OptimizerState& opt,
                                     std::span<const Batch> batches) {
  if (batches.empty()) throw InvalidArgument("candidate_updates needs at least one batch");
  CandidateUpdateSet cand;
  cand.source_batch_size = batches.front().x.rows();
  cand.optimizer_descriptor = opt.descriptor();
  cand.updates.reserve(batches.size());
  for (const auto& batch : batches) {
    cand.updates.push_back(preview_update(opt, ce_grad(model, batch)));
  }
  return cand;
}

double ov_point(const Model& model, const CandidateUpdateSet& cand, std::span<const double> x) {
  check_candidates(model, cand);
  const auto logits = candidate_logits(model, cand, row_matrix(x));
  std::vector<std::span<const double>> rows;
  for (const auto& l : logits) rows.push_back(l.row(0));
  const PointTerms terms = point_terms(rows);
  if (!(terms.denominator > kOvDenominatorFloor)) {
    throw UndefinedOv("OV undefined: candidate logits are all ~0");
  }
  return terms.numerator / terms.denominator;
}

OvEstimate ov_mean(const Model& model, const CandidateUpdateSet& cand, const Matrix& sample_xs) {
  check_candidates(model, cand);
  if (sample_xs.rows() == 0) throw InvalidArgument("ov_mean needs at least one sample");
  const auto logits = candidate_logits(model, cand, sample_xs);

  std::vector<double> ratios;
  std::vector<double> numerators;
  std::vector<double> denominators;
  std::vector<std::span<const double>> rows(cand.size());
  OvEstimate est;
  est.n_batches = cand.size();
  for (std::size_t r = 0; r < sample_xs.rows(); ++r) {
    for (std::size_t b = 0; b < cand.size(); ++b) rows[b] = logits[b].row(r);
    const PointTerms terms = point_terms(rows);
    if (!(terms.denominator > kOvDenominatorFloor)) {
      ++est.n_degenerate;
      continue;
    }
    ratios.push_back(terms.numerator / terms.denominator);
    numerators.push_back(terms.numerator);
    denominators.push_back(terms.denominator);
  }
  if (ratios.empty()) throw UndefinedOv("OV undefined: every sample has degenerate logits");

  const double n = static_cast<double>(ratios.size());
  est.n_samples = ratios.size();
  est.value = sorted_sum(std::move(ratios)) / n;
  est.numerator_mean = sorted_sum(std::move(numerators)) / n;
  est.denominator_mean = sorted_sum(std::move(denominators)) / n;
  return est;
}

GradVarEstimate grad_variance(const CandidateUpdateSet& cand) {
  if (cand.size() < 2) throw InvalidArgument("gradient variance needs at least 2 updates");
  const std::size_t n = cand.updates.front().delta.size();
  for (const auto& u : cand.updates) {
    if (u.delta.size() != n) throw DimensionError("candidate updates differ in length");
  }
  const auto mean = mean_update(cand);
  GradVarEstimate est;
  for (const auto& u : cand.updates) {
    double dev = 0.0;
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = u.delta[i] - mean[i];
      dev += d * d;
      norm += u.delta[i] * u.delta[i];
    }
    est.v_g += dev;
    est.mean_update_norm_sq += norm;
  }
  const double inv = 1.0 / static_cast<double>(cand.size());
  est.v_g *= inv;
  est.mean_update_norm_sq *= inv;
  for (double v : mean) est.norm_sq_of_mean_update += v * v;
  return est;
}

Jacobian logit_jacobian(const Model& model, std::span<const double> x, std::size_t cap) {
  if (model.size() > cap) {
    throw InvalidArgument("logit_jacobian: model has " + std::to_string(model.size()) +
                          " parameters, cap is " + std::to_string(cap));
  }
  const std::size_t c = model.spec().class_count();
  const Matrix input = row_matrix(x);
  Jacobian jac{model.size(), c, std::vector<double>(model.size() * c, 0.0)};
  for (std::size_t j = 0; j < c; ++j) {
    Matrix seed(1, c);
    seed(0, j) = 1.0;
    const Gradient g = backprop(model, input, seed);
    for (std::size_t p = 0; p < model.size(); ++p) jac.values[p * c + j] = g.values[p];
  }
  return jac;
}

double ov_first_order(const Model& model, const CandidateUpdateSet& cand,
                      std::span<const double> x, std::size_t cap) {
  check_candidates(model, cand);
  const Jacobian jac = logit_jacobian(model, x, cap);
  const Matrix f = forward_logits(model, row_matrix(x));
  double f_norm = 0.0;
  for (double v : f.row(0)) f_norm += v * v;
  if (!(f_norm > kOvDenominatorFloor)) {
    throw UndefinedOv("linearized OV undefined: logits at theta are ~0");
  }

  const auto mean = mean_update(cand);
  std::vector<double> projected(jac.classes);
  double total = 0.0;
  for (const auto& u : cand.updates) {
    std::fill(projected.begin(), projected.end(), 0.0);
    for (std::size_t p = 0; p < jac.params; ++p) {
      const double g = u.delta[p] - mean[p];
      if (g == 0.0) continue;
      for (std::size_t j = 0; j < jac.classes; ++j) projected[j] += jac(p, j) * g;
    }
    for (double v : projected) total += v * v;
  }
  return total / static_cast<double>(cand.size()) / f_norm;
}

}  // namespace ovlab
